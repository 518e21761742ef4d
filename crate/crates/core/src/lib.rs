//! Numerical laboratory for critical thresholds in one-dimensional hyperbolic
//! balance laws: pressureless Euler-Poisson, Euler-Poisson-alignment and
//! nonlocal/local relaxation systems.

// `!(x > 0.0)` rejects NaN along with the out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod characteristics;
pub mod detectors;
pub mod error;
pub mod eulerian;
pub mod grid;
pub mod harness;
pub mod kernels;
pub mod laws;
pub mod quadrature;
pub mod thresholds;

pub use error::{Error, Result};
