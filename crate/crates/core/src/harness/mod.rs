//! Configuration-driven runs, threshold reports, phase-diagram sweeps and
//! the closed-form convergence study behind the `ct-lab` command.

mod config;
mod convergence;
mod families;
mod run;
mod sweep;

pub use config::{
    Axis, ExperimentConfig, GridSpec, InitialSpec, KernelShape, KernelSpec, OutputSpec, RelaxKernelSpec, Solver,
    SweepSpec, SystemKind, TorusKernelSpec, VerifySpec,
};
pub use convergence::{verify_closed_form, write_convergence, ConvergenceRow, ConvergenceTable};
pub use families::{Family, FAMILY_VERSION};
pub use run::{
    initial_fields, run, simulate, theory, threshold_report, write_report_bundle, write_threshold_report, RunResult,
    RunSummary, RunTimeline, Theory, DENSITY_BOUND_TOL, EA_BOUND_FACTOR, M_BOUND_TOL,
};
pub use sweep::{phase_diagram, write_phase_diagram, AgreementStats, PhaseCell, PhaseDiagram};
