use super::scheme::{extend, rusanov_fluxes, upwind_transport, Ghosts};
use super::{FieldTimeline, GridOptions, PoissonSolver, SeriesPoint, Snapshot};
use crate::characteristics::{BreakdownReason, Termination};
use crate::grid::{GridField, InitialFields};
use crate::kernels::{CirculantConvolver, TorusKernel};
use crate::thresholds::SystemParams;
use crate::{Error, Result};

/// Relative tolerance between the initial mass and the background `c`.
const MASS_TOL: f64 = 1e-10;
/// Densities below this are reported before clipping.
const NEGATIVE_TOL: f64 = 1e-10;

struct EpaGrid {
    h: f64,
    k: f64,
    conv: CirculantConvolver,
    poisson: PoissonSolver,
}

#[derive(Clone)]
struct State {
    rho: Vec<f64>,
    g: Vec<f64>,
    u: Vec<f64>,
}

impl EpaGrid {
    fn rhs(&self, s: &State) -> State {
        let n = s.rho.len();
        let rho = extend(&s.rho, &Ghosts::Periodic);
        let g = extend(&s.g, &Ghosts::Periodic);
        let u = extend(&s.u, &Ghosts::Periodic);
        let f_rho = rusanov_fluxes(&rho, &u, |q, w| q * w, |_, w| w);
        let f_g = rusanov_fluxes(&g, &u, |q, w| q * w, |_, w| w);
        let transport = upwind_transport(&u, &s.u, self.h);
        let conv_rho = self.conv.apply(&s.rho);
        let momentum: Vec<f64> = s.rho.iter().zip(&s.u).map(|(r, v)| r * v).collect();
        let conv_mom = self.conv.apply(&momentum);
        let phi_x = if self.k != 0.0 {
            let mean = s.rho.iter().sum::<f64>() / n as f64;
            let src: Vec<f64> = s.rho.iter().map(|r| r - mean).collect();
            self.poisson.field(&src)
        } else {
            vec![0.0; n]
        };
        let c = s.rho.iter().sum::<f64>() * self.h;
        let mut out = State { rho: vec![0.0; n], g: vec![0.0; n], u: vec![0.0; n] };
        for i in 0..n {
            out.rho[i] = -(f_rho[i + 1] - f_rho[i]) / self.h;
            out.g[i] = -(f_g[i + 1] - f_g[i]) / self.h + self.k * (s.rho[i] - c);
            out.u[i] = -transport[i] - self.k * phi_x[i] + conv_mom[i] - s.u[i] * conv_rho[i];
        }
        out
    }

    fn derived(&self, s: &State) -> (Vec<f64>, Vec<f64>) {
        let conv = self.conv.apply(&s.rho);
        let e: Vec<f64> = s.g.iter().zip(&conv).map(|(g, c)| g - c).collect();
        let n = s.u.len();
        let ux: Vec<f64> = (0..n).map(|i| (s.u[(i + 1) % n] - s.u[(i + n - 1) % n]) / (2.0 * self.h)).collect();
        (e, ux)
    }

    fn series_point(&self, t: f64, s: &State, x: &dyn Fn(usize) -> f64) -> SeriesPoint {
        let (e, ux) = self.derived(s);
        let (imax, max_grad) =
            ux.iter().enumerate().fold((0, 0.0), |b, (i, v)| if v.abs() > b.1 { (i, v.abs()) } else { b });
        SeriesPoint {
            t,
            max_grad,
            x_at_max: x(imax),
            min_rho: s.rho.iter().copied().fold(f64::INFINITY, f64::min),
            max_rho: s.rho.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            mass: s.rho.iter().sum::<f64>() * self.h,
            min_e: e.iter().copied().fold(f64::INFINITY, f64::min),
            max_e: e.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        }
    }

    fn snapshot(&self, t: f64, s: &State, template: &GridField) -> Snapshot {
        let (e, ux) = self.derived(s);
        let residual = ux.iter().zip(&e).fold(0.0, |m: f64, (a, b)| m.max((a - b).abs()));
        Snapshot {
            t,
            rho: template.with_values(s.rho.clone()),
            u: template.with_values(s.u.clone()),
            e: template.with_values(e),
            aux: template.with_values(s.g.clone()),
            relation_residual: residual,
            local: None,
        }
    }

    fn rates(&self, s: &State) -> (f64, f64) {
        let (e, _) = self.derived(s);
        let speed = s.u.iter().fold(0.0, |m: f64, v| m.max(v.abs()));
        let max_rho = s.rho.iter().fold(0.0, |m: f64, v| m.max(*v));
        let align = self.conv.mass() * max_rho;
        let rate = e.iter().fold(0.0, |m: f64, v| m.max(v.abs())) + align + (self.k.abs() * max_rho).sqrt();
        (speed, rate)
    }
}

/// Finite-volume solve of the alignment system on the torus. `rho` and `G`
/// are conserved with Rusanov fluxes, `u` follows the momentum equation in
/// primitive form; SSP-RK2 in time.
pub fn solve_epa(
    init: &InitialFields,
    kernel: &TorusKernel,
    params: SystemParams,
    horizon: f64,
    opts: &GridOptions,
) -> Result<FieldTimeline> {
    init.check()?;
    let (rho0, u0, u0x) = (&init.rho, &init.u, &init.ux);
    if !rho0.is_torus() {
        return Err(Error::DomainMismatch("alignment solver needs torus fields".into()));
    }
    let mass = rho0.integral();
    if (mass - params.c).abs() > MASS_TOL * params.c {
        return Err(Error::MassMismatch { expected: params.c, actual: mass });
    }
    validate_options(opts, horizon)?;
    let n = rho0.n();
    let solver = EpaGrid {
        h: rho0.dx(),
        k: params.k,
        conv: CirculantConvolver::new(kernel, n, opts.convolution)?,
        poisson: PoissonSolver::new(n),
    };
    let conv0 = solver.conv.apply(rho0.values());
    let mut s = State {
        rho: rho0.values().to_vec(),
        g: u0x.values().iter().zip(&conv0).map(|(a, b)| a + b).collect(),
        u: u0.values().to_vec(),
    };
    let x = |i: usize| rho0.x(i);
    let mut tl = FieldTimeline {
        snapshots: vec![solver.snapshot(0.0, &s, rho0)],
        series: vec![solver.series_point(0.0, &s, &x)],
        termination: Termination::Completed { horizon },
        warnings: Vec::new(),
        steps: 0,
    };
    let mut t = 0.0;
    let mut next_snap = opts.snapshot_interval.unwrap_or(f64::INFINITY);
    tl.termination = loop {
        let remaining = horizon - t;
        if remaining <= 0.0 {
            break Termination::Completed { horizon };
        }
        if opts.max_steps.is_some_and(|m| tl.steps >= m) {
            break Termination::Aborted { t, reason: "step budget exhausted".into() };
        }
        let (speed, rate) = solver.rates(&s);
        let limit = solver.h / speed.max(1e-300);
        let dt = match opts.dt {
            Some(dt) => {
                if dt * speed > solver.h {
                    return Err(Error::CflViolation { dt, limit });
                }
                dt
            }
            None => opts.cfl * limit.min(1.0 / rate.max(1e-300)),
        };
        let last = remaining <= dt * (1.0 + 1e-9);
        let dt = if last { remaining } else { dt };
        let k1 = solver.rhs(&s);
        let s1 = axpy(&s, dt, &k1);
        let k2 = solver.rhs(&s1);
        let s2 = axpy(&s1, dt, &k2);
        s = average(&s, &s2);
        if let Some((i, v)) = s.rho.iter().copied().enumerate().find(|(_, v)| *v < 0.0) {
            if v < -NEGATIVE_TOL {
                tl.warn(format!("negative density {v:e} at x = {} clipped", rho0.x(i)));
            }
            for r in &mut s.rho {
                *r = r.max(0.0);
            }
        }
        tl.steps += 1;
        t = if last { horizon } else { t + dt };
        let point = solver.series_point(t, &s, &x);
        tl.series.push(point);
        if !s.rho.iter().chain(&s.g).chain(&s.u).all(|v| v.is_finite()) {
            break Termination::Aborted { t, reason: "non-finite state".into() };
        }
        if t >= next_snap && !last {
            tl.snapshots.push(solver.snapshot(t, &s, rho0));
            while next_snap <= t {
                next_snap += opts.snapshot_interval.unwrap_or(f64::INFINITY);
            }
        }
        if point.max_grad > opts.gradient_guard {
            break Termination::Blowup { t_est: t, reason: BreakdownReason::GradientGuard };
        }
        if let Some(frac) = opts.resolution_guard {
            let (lo, hi) = s.u.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(*v), b.max(*v)));
            if point.max_grad * solver.h > frac * (hi - lo) && hi - lo > 0.0 {
                break Termination::Blowup { t_est: t, reason: BreakdownReason::UnresolvedGradient };
            }
        }
    };
    let end = tl.termination.end_time();
    if tl.snapshots.last().map(|s| s.t) != Some(end) {
        tl.snapshots.push(solver.snapshot(end, &s, rho0));
    }
    Ok(tl)
}

pub(super) fn validate_options(opts: &GridOptions, horizon: f64) -> Result<()> {
    if !(opts.cfl > 0.0 && opts.cfl < 1.0) {
        return Err(Error::InvalidParameter(format!("cfl must lie in (0, 1), got {}", opts.cfl)));
    }
    if let Some(dt) = opts.dt {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::InvalidStep(dt));
        }
    }
    if !(horizon >= 0.0 && horizon.is_finite()) {
        return Err(Error::InvalidParameter(format!("horizon must be >= 0, got {horizon}")));
    }
    if let Some(iv) = opts.snapshot_interval {
        if !(iv > 0.0) {
            return Err(Error::InvalidParameter(format!("snapshot interval must be positive, got {iv}")));
        }
    }
    Ok(())
}

fn axpy(s: &State, dt: f64, k: &State) -> State {
    let f = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x + dt * y).collect();
    State { rho: f(&s.rho, &k.rho), g: f(&s.g, &k.g), u: f(&s.u, &k.u) }
}

fn average(a: &State, b: &State) -> State {
    let f = |x: &[f64], y: &[f64]| x.iter().zip(y).map(|(p, q)| 0.5 * (p + q)).collect();
    State { rho: f(&a.rho, &b.rho), g: f(&a.g, &b.g), u: f(&a.u, &b.u) }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Domain;
    use crate::kernels::{BoundedKernel, Profile};
    use std::f64::consts::PI;

    fn kernel(n: usize) -> TorusKernel {
        TorusKernel::Bounded(BoundedKernel::new(Profile::Cosine { mean: 1.75, amplitude: 0.25 }, n).unwrap())
    }

    #[test]
    fn steady_state_is_preserved() {
        let n = 64;
        let rho = GridField::from_fn(Domain::Torus, n, |_| 1.0);
        let u = GridField::from_fn(Domain::Torus, n, |_| 0.2);
        let init = InitialFields { ux: rho.zeros_like(), rho, u };
        let opts = GridOptions { dt: Some(1e-3), ..Default::default() };
        let tl = solve_epa(&init, &kernel(n), SystemParams::new(0.5, 1.0).unwrap(), 0.1, &opts).unwrap();
        assert!(tl.horizon_reached());
        let last = tl.snapshots.last().unwrap();
        let g0 = tl.snapshots[0].aux.values()[0];
        for i in 0..n {
            assert!((last.rho.values()[i] - 1.0).abs() < 1e-12);
            assert!((last.aux.values()[i] - g0).abs() < 1e-12);
            assert!((last.u.values()[i] - 0.2).abs() < 1e-12);
        }
        assert!(tl.mass_drift() < 1e-13);
    }

    #[test]
    fn mass_is_conserved_for_perturbed_data() {
        let n = 128;
        let rho = GridField::from_fn(Domain::Torus, n, |x| 1.0 + 0.1 * (2.0 * PI * x).sin());
        let u = GridField::from_fn(Domain::Torus, n, |x| 0.1 * (2.0 * PI * x).cos());
        let ux = GridField::from_fn(Domain::Torus, n, |x| -0.2 * PI * (2.0 * PI * x).sin());
        let c = rho.integral();
        let init = InitialFields { rho, u, ux };
        let tl =
            solve_epa(&init, &kernel(n), SystemParams::new(0.5, c).unwrap(), 0.5, &GridOptions::default()).unwrap();
        assert!(tl.horizon_reached());
        assert!(tl.mass_drift() < 1e-12, "{}", tl.mass_drift());
        assert!(tl.snapshots.last().unwrap().relation_residual < 0.05);
    }

    #[test]
    fn oversized_fixed_step_is_a_cfl_violation() {
        let n = 32;
        let rho = GridField::from_fn(Domain::Torus, n, |_| 1.0);
        let u = GridField::from_fn(Domain::Torus, n, |_| 1.0);
        let opts = GridOptions { dt: Some(0.5), ..Default::default() };
        let init = InitialFields { ux: rho.zeros_like(), rho, u };
        let err = solve_epa(&init, &kernel(n), SystemParams::new(0.5, 1.0).unwrap(), 1.0, &opts);
        assert!(matches!(err, Err(Error::CflViolation { .. })));
    }
}
