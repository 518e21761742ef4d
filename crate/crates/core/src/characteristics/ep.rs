use serde::Serialize;

use super::{rk4_step, BreakdownReason, CharTrajectory, Termination};
use crate::thresholds::{ep_pointwise, Verdict};
use crate::{Error, Result};

/// Density and velocity gradient carried along one Euler-Poisson characteristic.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EpState {
    pub t: f64,
    pub rho: f64,
    pub g: f64,
}

/// Exact solution through `1/rho = t^2/2 + t g0/rho0 + 1/rho0` and
/// `g = rho (t + g0/rho0)`.
pub fn ep_closed_form(rho0: f64, g0: f64, t: f64) -> Result<EpState> {
    if !(rho0 > 0.0 && rho0.is_finite() && g0.is_finite()) {
        return Err(Error::InvalidParameter(format!("closed form needs rho0 > 0 and finite g0, got ({rho0}, {g0})")));
    }
    if !(t >= 0.0 && t.is_finite()) {
        return Err(Error::InvalidParameter(format!("closed form needs t >= 0, got {t}")));
    }
    let a = g0 / rho0;
    let q = 0.5 * t * t + t * a + 1.0 / rho0;
    if !(q > 0.0) {
        return Err(Error::PastBlowup { t, q });
    }
    let rho = 1.0 / q;
    Ok(EpState { t, rho, g: rho * (t + a) })
}

/// Smallest positive root of `q(t)`, or `None` when the data are subcritical.
///
/// The decision reuses the pointwise threshold test so both always agree;
/// `rho0 = 0` with `g0 < 0` blows up at `-1/g0` through `g' = -g^2`.
pub fn ep_blowup_time(rho0: f64, g0: f64) -> Option<f64> {
    match ep_pointwise(g0, rho0) {
        Verdict::Subcritical | Verdict::Unclassified => None,
        Verdict::Critical | Verdict::Supercritical => {
            if rho0 == 0.0 {
                return Some(-1.0 / g0);
            }
            let a = g0 / rho0;
            let disc = (a * a - 2.0 / rho0).max(0.0);
            // rationalised smaller root, free of cancellation
            Some((2.0 / rho0) / (-a + disc.sqrt()))
        }
    }
}

/// Step control for [`integrate_ep_with`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpOptions {
    /// Overflow guard on `|rho|` and `|g|`.
    pub guard: f64,
    /// Halvings allowed before step rejection counts as breakdown.
    pub max_halvings: u32,
    /// Largest accepted relative change of a component per step.
    pub max_rel_change: f64,
}

impl Default for EpOptions {
    fn default() -> Self {
        Self { guard: 1e12, max_halvings: 60, max_rel_change: 0.1 }
    }
}

pub fn integrate_ep(rho0: f64, g0: f64, horizon: f64, dt: f64) -> Result<CharTrajectory<EpState>> {
    integrate_ep_with(rho0, g0, horizon, dt, &EpOptions::default())
}

/// Fixed-step RK4 for `rho' = -rho g`, `g' = -g^2 + rho`. Rejected steps
/// halve `dt` for the rest of the run; the final step is shortened to land
/// on the horizon.
pub fn integrate_ep_with(
    rho0: f64,
    g0: f64,
    horizon: f64,
    dt: f64,
    opts: &EpOptions,
) -> Result<CharTrajectory<EpState>> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::InvalidStep(dt));
    }
    if !(rho0 > 0.0 && rho0.is_finite() && g0.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "EP integration needs rho0 > 0 and finite g0, got ({rho0}, {g0})"
        )));
    }
    if !(horizon >= 0.0 && horizon.is_finite()) {
        return Err(Error::InvalidParameter(format!("horizon must be >= 0, got {horizon}")));
    }
    let mut rhs = |y: &[f64], out: &mut [f64]| {
        out[0] = -y[0] * y[1];
        out[1] = -y[1] * y[1] + y[0];
    };
    let mut t = 0.0;
    let mut h = dt;
    let mut halvings = 0;
    let mut y = vec![rho0, g0];
    let mut times = vec![0.0];
    let mut states = vec![EpState { t: 0.0, rho: rho0, g: g0 }];
    let termination = loop {
        let remaining = horizon - t;
        if remaining <= 0.0 {
            break Termination::Completed { horizon };
        }
        let step = if remaining <= h * (1.0 + 1e-9) { remaining } else { h };
        let next = rk4_step(&y, step, &mut rhs);
        let acceptable = next[0] > 0.0
            && next.iter().all(|v| v.is_finite())
            && next.iter().zip(&y).all(|(n, o)| (n - o).abs() <= opts.max_rel_change * o.abs().max(1.0));
        if !acceptable {
            h *= 0.5;
            halvings += 1;
            if halvings > opts.max_halvings || t + h == t {
                break Termination::Blowup { t_est: t, reason: BreakdownReason::StepRejection };
            }
            continue;
        }
        t = if step == remaining { horizon } else { t + step };
        y = next;
        times.push(t);
        states.push(EpState { t, rho: y[0], g: y[1] });
        if y[0].abs() > opts.guard || y[1].abs() > opts.guard {
            break Termination::Blowup { t_est: t, reason: BreakdownReason::StateGuard };
        }
    };
    Ok(CharTrajectory { times, states, termination })
}
