//! Grid solvers: the alignment system on the torus and the relaxation systems
//! on a truncated line, together with the `e = u_x + rho` diagnostic.

mod epa;
mod poisson;
mod relax;
mod scheme;

pub use epa::solve_epa;
pub use poisson::{poisson_periodic, PoissonSolver, MEAN_TOL};
pub use relax::{solve_relax, solve_relax_local, solve_relax_nonlocal, RelaxLaw};

use serde::Serialize;

use crate::characteristics::Termination;
use crate::grid::GridField;
use crate::kernels::ConvolutionMethod;

pub const DEFAULT_LINE_N: usize = 1024;
pub const DEFAULT_TORUS_N: usize = 512;
pub const DEFAULT_CFL: f64 = 0.4;
/// Default guard on the gradient witness of field solvers.
pub const DEFAULT_GRADIENT_GUARD: f64 = 1e6;

/// Time-stepping controls shared by the grid solvers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridOptions {
    pub cfl: f64,
    /// Fixed time step; `None` picks `cfl` times the transport and source limits each step.
    pub dt: Option<f64>,
    /// Spacing of stored snapshots; `None` keeps only the first and last.
    pub snapshot_interval: Option<f64>,
    pub gradient_guard: f64,
    /// EPA only: stop once `max|u_x| h` exceeds this fraction of the velocity range.
    pub resolution_guard: Option<f64>,
    /// Relaxation only: stop once a negative `min e` climbs back towards zero.
    pub recovery_guard: bool,
    pub max_steps: Option<usize>,
    pub convolution: ConvolutionMethod,
    /// Line solvers: reject windows the initial perturbation can leave before the horizon.
    pub check_window: bool,
}

impl Default for GridOptions {
    fn default() -> Self {
        Self {
            cfl: DEFAULT_CFL,
            dt: None,
            snapshot_interval: None,
            gradient_guard: DEFAULT_GRADIENT_GUARD,
            resolution_guard: Some(0.2),
            recovery_guard: true,
            max_steps: None,
            convolution: ConvolutionMethod::Direct,
            check_window: true,
        }
    }
}

/// Extra per-snapshot fields of local-law relaxation runs.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalDiagnostics {
    /// Density of the transformed `(rho, e)` pair.
    pub rho_diag: GridField,
    /// `inf |f - u|`
    pub hyperbolicity_margin: f64,
    /// `sup f_u`
    pub max_f_u: f64,
    /// Density bound with `rho0 |f(u0) - u0|` taken at the characteristic foot.
    pub bound_char: Option<GridField>,
    /// Density bound with the supremum of `rho0 |f(u0) - u0|` over the line.
    pub bound_sup: Option<GridField>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub t: f64,
    pub rho: GridField,
    pub u: GridField,
    /// Alignment: `G - psi * rho`. Relaxation: the evolved `e`.
    pub e: GridField,
    /// Alignment: `G`. Relaxation: `u_x + rho` from centred differences.
    pub aux: GridField,
    /// Alignment: `max |u_x - (G - psi * rho)|`. Relaxation: `max |e - aux|`.
    pub relation_residual: f64,
    pub local: Option<LocalDiagnostics>,
}

/// Scalar summary recorded after every accepted step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SeriesPoint {
    pub t: f64,
    /// Gradient witness `max |u_x|`.
    pub max_grad: f64,
    pub x_at_max: f64,
    pub min_rho: f64,
    pub max_rho: f64,
    /// `sum rho dx`, plus the outflow ledger on the line.
    pub mass: f64,
    pub min_e: f64,
    pub max_e: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FieldTimeline {
    pub snapshots: Vec<Snapshot>,
    pub series: Vec<SeriesPoint>,
    pub termination: Termination,
    pub warnings: Vec<String>,
    pub steps: usize,
}

impl FieldTimeline {
    pub fn horizon_reached(&self) -> bool {
        matches!(self.termination, Termination::Completed { .. })
    }

    /// Largest `|mass(t) - mass(0)|` over the series.
    pub fn mass_drift(&self) -> f64 {
        let m0 = self.series.first().map_or(0.0, |p| p.mass);
        self.series.iter().fold(0.0, |d, p| d.max((p.mass - m0).abs()))
    }

    fn warn(&mut self, msg: String) {
        if !self.warnings.contains(&msg) {
            self.warnings.push(msg);
        }
    }
}
