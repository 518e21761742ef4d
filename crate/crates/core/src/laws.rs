//! Local velocity laws `v = f(rho, u)` for the relaxation system.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

/// A smooth local law `f(rho, u)` with first derivatives.
///
/// The default derivatives are centred differences; implementors with closed
/// forms should override them.
pub trait LocalLaw: Send + Sync + fmt::Debug {
    fn f(&self, rho: f64, u: f64) -> f64;

    fn f_u(&self, rho: f64, u: f64) -> f64 {
        let h = 1e-6 * u.abs().max(1.0);
        (self.f(rho, u + h) - self.f(rho, u - h)) / (2.0 * h)
    }

    fn f_rho(&self, rho: f64, u: f64) -> f64 {
        let h = 1e-6 * rho.abs().max(1.0);
        (self.f(rho + h, u) - self.f(rho - h, u)) / (2.0 * h)
    }

    /// False when `f` depends on the velocity only.
    fn depends_on_rho(&self) -> bool {
        true
    }
}

/// `f = c0 + u*U + uu*U^2 + rho*R + rhorho*R^2 + rhou*R*U`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PolynomialLaw {
    pub c0: f64,
    pub u: f64,
    pub uu: f64,
    pub rho: f64,
    pub rhorho: f64,
    pub rhou: f64,
}

impl PolynomialLaw {
    /// `f(u) = c0 + slope * u`.
    pub fn affine_u(c0: f64, slope: f64) -> Self {
        Self { c0, u: slope, ..Default::default() }
    }
}

impl LocalLaw for PolynomialLaw {
    fn f(&self, r: f64, u: f64) -> f64 {
        self.c0 + self.u * u + self.uu * u * u + self.rho * r + self.rhorho * r * r + self.rhou * r * u
    }

    fn f_u(&self, r: f64, u: f64) -> f64 {
        self.u + 2.0 * self.uu * u + self.rhou * r
    }

    fn f_rho(&self, r: f64, u: f64) -> f64 {
        self.rho + 2.0 * self.rhorho * r + self.rhou * u
    }

    fn depends_on_rho(&self) -> bool {
        self.rho != 0.0 || self.rhorho != 0.0 || self.rhou != 0.0
    }
}

/// Closure law depending on the velocity only.
#[derive(Clone)]
pub struct VelocityFn(pub Arc<dyn Fn(f64) -> f64 + Send + Sync>);

impl VelocityFn {
    pub fn new(f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        Self(Arc::new(f))
    }
}

impl fmt::Debug for VelocityFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("VelocityFn")
    }
}

impl LocalLaw for VelocityFn {
    fn f(&self, _rho: f64, u: f64) -> f64 {
        (self.0)(u)
    }

    fn f_rho(&self, _rho: f64, _u: f64) -> f64 {
        0.0
    }

    fn depends_on_rho(&self) -> bool {
        false
    }
}
