//! Integration along characteristics: the Euler-Poisson ODE pair (exact and
//! numerical) and the Euler-Poisson-alignment particle ensemble.

mod ensemble;
mod ep;

pub use ensemble::{
    integrate_epa_ensemble, EnsembleOptions, EnsembleRun, EnsembleSample, EpaEnsemble, Particle, ParticleSnapshot,
};
pub use ep::{ep_blowup_time, ep_closed_form, integrate_ep, integrate_ep_with, EpOptions, EpState};

use std::fmt;

use serde::Serialize;

/// Why a run stopped before its horizon.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum BreakdownReason {
    /// A state component exceeded the overflow guard.
    StateGuard,
    /// Step halving ran out of room without producing an acceptable step.
    StepRejection,
    /// Adjacent particles crossed.
    ParticleCrossing,
    /// The gradient witness exceeded its guard.
    GradientGuard,
    /// The velocity gradient collapsed onto a single grid cell.
    UnresolvedGradient,
}

impl fmt::Display for BreakdownReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            BreakdownReason::StateGuard => "state-guard",
            BreakdownReason::StepRejection => "step-rejection",
            BreakdownReason::ParticleCrossing => "particle-crossing",
            BreakdownReason::GradientGuard => "gradient-guard",
            BreakdownReason::UnresolvedGradient => "unresolved-gradient",
        };
        f.write_str(s)
    }
}

/// How a trajectory or timeline ended.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Termination {
    Completed {
        horizon: f64,
    },
    Blowup {
        t_est: f64,
        reason: BreakdownReason,
    },
    /// Stopped for a reason that says nothing about regularity (step budget,
    /// negative density, numerical failure).
    Aborted {
        t: f64,
        reason: String,
    },
}

impl Termination {
    pub fn end_time(&self) -> f64 {
        match self {
            Termination::Completed { horizon } => *horizon,
            Termination::Blowup { t_est, .. } => *t_est,
            Termination::Aborted { t, .. } => *t,
        }
    }
}

impl fmt::Display for Termination {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Termination::Completed { horizon } => write!(f, "completed at t = {horizon}"),
            Termination::Blowup { t_est, reason } => write!(f, "blowup ({reason}) at t = {t_est}"),
            Termination::Aborted { t, reason } => write!(f, "aborted at t = {t}: {reason}"),
        }
    }
}

/// Time series of states along a characteristic (or of ensemble summaries).
#[derive(Debug, Clone, PartialEq)]
pub struct CharTrajectory<S> {
    pub times: Vec<f64>,
    pub states: Vec<S>,
    pub termination: Termination,
}

impl<S> CharTrajectory<S> {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn last(&self) -> Option<(f64, &S)> {
        self.times.last().copied().zip(self.states.last())
    }
}

/// One classical fourth-order Runge-Kutta step for `y' = f(y)`.
pub(crate) fn rk4_step(y: &[f64], dt: f64, f: &mut dyn FnMut(&[f64], &mut [f64])) -> Vec<f64> {
    let n = y.len();
    let mut k1 = vec![0.0; n];
    let mut k2 = vec![0.0; n];
    let mut k3 = vec![0.0; n];
    let mut k4 = vec![0.0; n];
    let mut tmp = vec![0.0; n];
    f(y, &mut k1);
    for i in 0..n {
        tmp[i] = y[i] + 0.5 * dt * k1[i];
    }
    f(&tmp, &mut k2);
    for i in 0..n {
        tmp[i] = y[i] + 0.5 * dt * k2[i];
    }
    f(&tmp, &mut k3);
    for i in 0..n {
        tmp[i] = y[i] + dt * k3[i];
    }
    f(&tmp, &mut k4);
    (0..n).map(|i| y[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])).collect()
}
