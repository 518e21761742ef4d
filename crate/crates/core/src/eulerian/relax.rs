use std::sync::Arc;

use super::epa::validate_options;
use super::scheme::{extend, rusanov_fluxes, upwind_transport, Ghosts};
use super::{FieldTimeline, GridOptions, LocalDiagnostics, SeriesPoint, Snapshot};
use crate::characteristics::{BreakdownReason, Termination};
use crate::grid::{Domain, GridField, InitialFields};
use crate::kernels::RelaxKernel;
use crate::laws::LocalLaw;
use crate::thresholds::density_bound_from_product;
use crate::{Error, Result};

const NEGATIVE_TOL: f64 = 1e-10;
/// Relative deviation from the far field that counts as "perturbed".
const FAR_FIELD_TOL: f64 = 1e-10;
/// Deviation at the outermost cells that flags a boundary hit afterwards.
const BOUNDARY_TOL: f64 = 1e-8;
/// Fraction of its running minimum that `min e` may climb back to before the
/// run counts as unresolved.
pub const RECOVERY_FRACTION: f64 = 0.5;
/// The running minimum is only watched below this level.
pub const RECOVERY_FLOOR: f64 = 1e-3;

/// Along characteristics `e' = -e (e - rho) <= -e^2`, so once negative the
/// exact `min e` never increases. A grid solution whose minimum climbs back
/// has lost the collapsing valley below the cell size.
struct MinimumWatch {
    running: f64,
    at: f64,
}

impl MinimumWatch {
    fn new() -> Self {
        Self { running: f64::INFINITY, at: 0.0 }
    }

    /// Returns false once the minimum has recovered past the allowed fraction.
    fn update(&mut self, t: f64, min_e: f64) -> bool {
        if min_e <= self.running {
            self.running = min_e;
            self.at = t;
            return true;
        }
        !(self.running < -RECOVERY_FLOOR && min_e > RECOVERY_FRACTION * self.running)
    }
}

/// Velocity closure of the relaxation system.
#[derive(Debug, Clone)]
pub enum RelaxLaw {
    /// `v = Q * u`
    Nonlocal(RelaxKernel),
    /// `v = f(rho, u)`
    Local(Arc<dyn LocalLaw>),
}

/// Evolved fields. `rd`, `s` and `p` are used by local laws only: the density
/// of the transformed pair, the initial velocity at the foot of the
/// `dx/dt = f` characteristic, and `rho0 |f(u0) - u0|` at that foot.
#[derive(Clone)]
struct State {
    rho: Vec<f64>,
    u: Vec<f64>,
    e: Vec<f64>,
    rd: Vec<f64>,
    s: Vec<f64>,
    p: Vec<f64>,
    /// far-field velocity (left, right); constant unless a local law drives it
    u_far: (f64, f64),
}

struct Far {
    rho: (f64, f64),
    e: (f64, f64),
    s: (f64, f64),
    p: (f64, f64),
}

struct Relax<'a> {
    h: f64,
    law: &'a RelaxLaw,
    weights: Vec<f64>,
    radius_cells: usize,
    far: Far,
}

struct Rhs {
    d: State,
    flux_in: f64,
    flux_out: f64,
}

impl Relax<'_> {
    fn local(&self) -> Option<&dyn LocalLaw> {
        match self.law {
            RelaxLaw::Local(f) => Some(f.as_ref()),
            RelaxLaw::Nonlocal(_) => None,
        }
    }

    /// `Q * u` on interior cells plus two ghosts per side.
    fn nonlocal_velocity(&self, s: &State) -> Vec<f64> {
        let n = s.u.len() as isize;
        let m = self.radius_cells as isize;
        let at = |i: isize| {
            if i < 0 {
                s.u_far.0
            } else if i >= n {
                s.u_far.1
            } else {
                s.u[i as usize]
            }
        };
        (-2..n + 2).map(|i| self.weights.iter().enumerate().map(|(j, w)| w * at(i + j as isize - m)).sum()).collect()
    }

    fn rhs(&self, s: &State) -> Rhs {
        let n = s.rho.len();
        let h = self.h;
        let ghost = |pair: (f64, f64)| Ghosts::Constant { left: pair.0, right: pair.1 };
        let rho = extend(&s.rho, &ghost(self.far.rho));
        let u = extend(&s.u, &ghost(s.u_far));
        let e = extend(&s.e, &ghost(self.far.e));
        let mut d = State {
            rho: vec![0.0; n],
            u: vec![0.0; n],
            e: vec![0.0; n],
            rd: Vec::new(),
            s: Vec::new(),
            p: Vec::new(),
            u_far: (0.0, 0.0),
        };
        let tu = upwind_transport(&u, &s.u, h);
        let te = upwind_transport(&e, &s.u, h);
        let flux = match self.law {
            RelaxLaw::Nonlocal(_) => {
                let v = self.nonlocal_velocity(s);
                let f = rusanov_fluxes(&rho, &v, |q, w| q * w, |_, w| w);
                for i in 0..n {
                    d.u[i] = -tu[i] + s.rho[i] * (v[i + 2] - s.u[i]);
                    d.e[i] = -te[i] - s.e[i] * (s.e[i] - s.rho[i]);
                }
                f
            }
            RelaxLaw::Local(law) => {
                let law = law.as_ref();
                let f = rusanov_fluxes(&rho, &u, |r, v| r * law.f(r, v), |r, v| law.f(r, v) + r * law.f_rho(r, v));
                let rd = extend(&s.rd, &ghost(self.far.rho));
                let sx = extend(&s.s, &ghost(self.far.s));
                let px = extend(&s.p, &ghost(self.far.p));
                let speed_d: Vec<f64> =
                    (0..n).map(|i| law.f(s.rd[i], s.u[i]) + s.rd[i] * law.f_rho(s.rd[i], s.u[i])).collect();
                let speed_f: Vec<f64> = (0..n).map(|i| law.f(s.rho[i], s.u[i])).collect();
                let trd = upwind_transport(&rd, &speed_d, h);
                let ts = upwind_transport(&sx, &speed_f, h);
                let tp = upwind_transport(&px, &speed_f, h);
                d.rd = vec![0.0; n];
                d.s = vec![0.0; n];
                d.p = vec![0.0; n];
                for i in 0..n {
                    let (r, v, ev, rdi) = (s.rho[i], s.u[i], s.e[i], s.rd[i]);
                    d.u[i] = -tu[i] + r * (law.f(r, v) - v);
                    d.e[i] = -te[i] - ev * (ev - rdi);
                    d.rd[i] = -trd[i] + law.f_u(rdi, v) * rdi * (rdi - ev);
                    d.s[i] = -ts[i];
                    d.p[i] = -tp[i];
                }
                let drift = |r: f64, v: f64| r * (law.f(r, v) - v);
                d.u_far = (drift(self.far.rho.0, s.u_far.0), drift(self.far.rho.1, s.u_far.1));
                f
            }
        };
        for i in 0..n {
            d.rho[i] = -(flux[i + 1] - flux[i]) / h;
        }
        Rhs { d, flux_in: flux[0], flux_out: flux[n] }
    }

    /// Largest transport speed, largest source rate and `sup f_u`.
    fn rates(&self, s: &State) -> (f64, f64, f64) {
        let n = s.rho.len();
        let mut speed: f64 = 0.0;
        let mut rate: f64 = 0.0;
        let mut max_fu = f64::NEG_INFINITY;
        match self.law {
            RelaxLaw::Nonlocal(_) => {
                let v = self.nonlocal_velocity(s);
                for i in 0..n {
                    speed = speed.max(s.u[i].abs()).max(v[i + 2].abs());
                    rate = rate.max(s.rho[i]).max((2.0 * s.e[i] - s.rho[i]).abs());
                }
            }
            RelaxLaw::Local(law) => {
                for i in 0..n {
                    let (r, v) = (s.rho[i], s.u[i]);
                    let fu = law.f_u(r, v);
                    max_fu = max_fu.max(fu);
                    speed = speed
                        .max(v.abs())
                        .max(law.f(r, v).abs())
                        .max((law.f(r, v) + r * law.f_rho(r, v)).abs())
                        .max((law.f(s.rd[i], v) + s.rd[i] * law.f_rho(s.rd[i], v)).abs());
                    rate = rate
                        .max(r * (1.0 - fu).abs())
                        .max((2.0 * s.e[i] - s.rd[i]).abs())
                        .max(fu.abs() * (2.0 * s.rd[i] - s.e[i]).abs());
                }
            }
        }
        (speed, rate, max_fu)
    }

    fn series_point(&self, t: f64, s: &State, mass: f64, grid: &GridField) -> SeriesPoint {
        let density = if self.local().is_some() { &s.rd } else { &s.rho };
        let mut p = SeriesPoint {
            t,
            max_grad: 0.0,
            x_at_max: grid.x(0),
            min_rho: f64::INFINITY,
            max_rho: f64::NEG_INFINITY,
            mass,
            min_e: f64::INFINITY,
            max_e: f64::NEG_INFINITY,
        };
        for i in 0..s.rho.len() {
            let ux = (s.e[i] - density[i]).abs();
            if ux > p.max_grad || ux.is_nan() {
                p.max_grad = ux;
                p.x_at_max = grid.x(i);
            }
            p.min_rho = p.min_rho.min(s.rho[i]);
            p.max_rho = p.max_rho.max(s.rho[i]);
            p.min_e = p.min_e.min(s.e[i]);
            p.max_e = p.max_e.max(s.e[i]);
        }
        p
    }

    fn snapshot(&self, t: f64, s: &State, grid: &GridField, sup_p: f64, warnings: &mut Vec<String>) -> Snapshot {
        let rho = grid.with_values(s.rho.clone());
        let u = grid.with_values(s.u.clone());
        let aux = u.derivative().zip_map(&rho, |a, b| a + b);
        let residual = s.e.iter().zip(aux.values()).fold(0.0, |m: f64, (a, b)| m.max((a - b).abs()));
        let local = self.local().map(|law| {
            let n = s.rho.len();
            let mut margin = f64::INFINITY;
            let mut max_fu = f64::NEG_INFINITY;
            for i in 0..n {
                margin = margin.min((law.f(s.rho[i], s.u[i]) - s.u[i]).abs());
                max_fu = max_fu.max(law.f_u(s.rho[i], s.u[i]));
            }
            let (bound_char, bound_sup) = if law.depends_on_rho() {
                (None, None)
            } else {
                let f = |v: f64| law.f(0.0, v);
                let mut failed = false;
                let mut eval = |product: f64, u0: f64, v: f64| {
                    density_bound_from_product(&f, product, u0, v).unwrap_or_else(|_| {
                        failed = true;
                        f64::NAN
                    })
                };
                let bc: Vec<f64> = (0..n).map(|i| eval(s.p[i], s.s[i], s.u[i])).collect();
                let bs: Vec<f64> = (0..n).map(|i| eval(sup_p, s.s[i], s.u[i])).collect();
                if failed {
                    push_unique(warnings, format!("density bound not evaluable at t = {t}: hyperbolicity degenerates"));
                }
                (Some(grid.with_values(bc)), Some(grid.with_values(bs)))
            };
            LocalDiagnostics {
                rho_diag: grid.with_values(s.rd.clone()),
                hyperbolicity_margin: margin,
                max_f_u: max_fu,
                bound_char,
                bound_sup,
            }
        });
        Snapshot { t, rho, u, e: grid.with_values(s.e.clone()), aux, relation_residual: residual, local }
    }
}

fn push_unique(warnings: &mut Vec<String>, msg: String) {
    if !warnings.contains(&msg) {
        warnings.push(msg);
    }
}

fn combine(a: &State, b: &State, wa: f64, wb: f64) -> State {
    let f = |x: &[f64], y: &[f64]| -> Vec<f64> { x.iter().zip(y).map(|(p, q)| wa * p + wb * q).collect() };
    State {
        rho: f(&a.rho, &b.rho),
        u: f(&a.u, &b.u),
        e: f(&a.e, &b.e),
        rd: f(&a.rd, &b.rd),
        s: f(&a.s, &b.s),
        p: f(&a.p, &b.p),
        u_far: (wa * a.u_far.0 + wb * b.u_far.0, wa * a.u_far.1 + wb * b.u_far.1),
    }
}

/// Relaxation system with `v = Q * u` on a truncated line.
pub fn solve_relax_nonlocal(
    init: &InitialFields,
    q: &RelaxKernel,
    horizon: f64,
    opts: &GridOptions,
) -> Result<FieldTimeline> {
    solve_relax(init, &RelaxLaw::Nonlocal(q.clone()), horizon, opts)
}

/// Relaxation system with a local law `v = f(rho, u)`, together with the
/// transformed `(rho, e)` pair, density bounds and hyperbolicity diagnostics.
pub fn solve_relax_local(
    init: &InitialFields,
    law: Arc<dyn LocalLaw>,
    horizon: f64,
    opts: &GridOptions,
) -> Result<FieldTimeline> {
    solve_relax(init, &RelaxLaw::Local(law), horizon, opts)
}

/// Shared driver. `rho` is conserved with Rusanov fluxes, `u` and the
/// diagnostic `e = u_x + rho` are upwinded in primitive form; SSP-RK2 in
/// time with the step limited by transport and by the source rates, so the
/// Riccati growth of `e` is resolved up to the gradient guard.
pub fn solve_relax(init: &InitialFields, law: &RelaxLaw, horizon: f64, opts: &GridOptions) -> Result<FieldTimeline> {
    init.check()?;
    let Domain::Line { half_width } = init.rho.domain() else {
        return Err(Error::DomainMismatch("relaxation solvers need line fields".into()));
    };
    validate_options(opts, horizon)?;
    let grid = &init.rho;
    let n = grid.n();
    if n < 8 {
        return Err(Error::InvalidParameter("line grid needs at least 8 cells".into()));
    }
    let h = grid.dx();
    let (weights, radius_cells) = match law {
        RelaxLaw::Nonlocal(q) => q.line_weights(h),
        RelaxLaw::Local(_) => (Vec::new(), 0),
    };
    let r0 = init.rho.values();
    let u0 = init.u.values();
    let e0: Vec<f64> = r0.iter().zip(init.ux.values()).map(|(r, ux)| r + ux).collect();
    let p0: Vec<f64> = match law {
        RelaxLaw::Local(f) => (0..n).map(|i| r0[i] * (f.f(r0[i], u0[i]) - u0[i]).abs()).collect(),
        RelaxLaw::Nonlocal(_) => vec![0.0; n],
    };
    let ends = |v: &[f64]| (v[0], v[n - 1]);
    let solver =
        Relax { h, law, weights, radius_cells, far: Far { rho: ends(r0), e: ends(&e0), s: ends(u0), p: ends(&p0) } };
    let local = matches!(law, RelaxLaw::Local(_));
    let mut s = State {
        rho: r0.to_vec(),
        u: u0.to_vec(),
        e: e0,
        rd: if local { r0.to_vec() } else { Vec::new() },
        s: if local { u0.to_vec() } else { Vec::new() },
        p: p0.clone(),
        u_far: ends(u0),
    };
    if !local {
        s.p = Vec::new();
    }
    let sup_p = p0.iter().fold(0.0, |m: f64, v| m.max(*v));

    let (speed0, _, _) = solver.rates(&s);
    if opts.check_window {
        let support = match law {
            RelaxLaw::Nonlocal(q) => q.support_radius(),
            RelaxLaw::Local(_) => 0.0,
        };
        let reach = perturbation_reach(grid, &init.u) + speed0 * horizon + support;
        if reach > half_width {
            return Err(Error::WindowTooSmall { required: reach, available: half_width });
        }
    }

    let mut warnings = Vec::new();
    let mut outflow = 0.0;
    let mass0 = grid.integral();
    let mut tl = FieldTimeline {
        snapshots: vec![solver.snapshot(0.0, &s, grid, sup_p, &mut warnings)],
        series: vec![solver.series_point(0.0, &s, mass0, grid)],
        termination: Termination::Completed { horizon },
        warnings: Vec::new(),
        steps: 0,
    };
    let mut t = 0.0;
    let mut watch = MinimumWatch::new();
    watch.update(0.0, tl.series[0].min_e);
    let mut next_snap = opts.snapshot_interval.unwrap_or(f64::INFINITY);
    tl.termination = loop {
        let remaining = horizon - t;
        if remaining <= 0.0 {
            break Termination::Completed { horizon };
        }
        if opts.max_steps.is_some_and(|m| tl.steps >= m) {
            break Termination::Aborted { t, reason: "step budget exhausted".into() };
        }
        let (speed, rate, max_fu) = solver.rates(&s);
        if max_fu > 0.0 {
            push_unique(&mut warnings, "f_u > 0 detected along the solution".into());
        }
        let limit = h / speed.max(1e-300);
        let dt = match opts.dt {
            Some(dt) => {
                if dt * speed > h {
                    return Err(Error::CflViolation { dt, limit });
                }
                dt.min(opts.cfl / rate.max(1e-300))
            }
            None => opts.cfl * limit.min(1.0 / rate.max(1e-300)),
        };
        let last = remaining <= dt * (1.0 + 1e-9);
        let dt = if last { remaining } else { dt };
        let k1 = solver.rhs(&s);
        let s1 = combine(&s, &k1.d, 1.0, dt);
        let k2 = solver.rhs(&s1);
        let s2 = combine(&s1, &k2.d, 1.0, dt);
        s = combine(&s, &s2, 0.5, 0.5);
        outflow += 0.5 * dt * ((k1.flux_out - k1.flux_in) + (k2.flux_out - k2.flux_in));
        if let Some((i, v)) = s.rho.iter().copied().enumerate().find(|(_, v)| *v < 0.0) {
            if v < -NEGATIVE_TOL {
                push_unique(&mut warnings, format!("negative density {v:e} at x = {} clipped", grid.x(i)));
            }
            for r in &mut s.rho {
                *r = r.max(0.0);
            }
        }
        tl.steps += 1;
        t = if last { horizon } else { t + dt };
        let mass = s.rho.iter().sum::<f64>() * h + outflow;
        let point = solver.series_point(t, &s, mass, grid);
        tl.series.push(point);
        let finite = [&s.rho, &s.u, &s.e].iter().all(|v| v.iter().all(|x| x.is_finite()));
        if !finite && point.max_grad.is_finite() {
            break Termination::Aborted { t, reason: "non-finite state".into() };
        }
        if point.max_grad > opts.gradient_guard || point.max_grad.is_nan() {
            break Termination::Blowup { t_est: t, reason: BreakdownReason::GradientGuard };
        }
        if opts.recovery_guard && !watch.update(t, point.min_e) {
            break Termination::Blowup { t_est: watch.at, reason: BreakdownReason::UnresolvedGradient };
        }
        if t >= next_snap && !last {
            let snap = solver.snapshot(t, &s, grid, sup_p, &mut warnings);
            flag_boundary(&snap, &solver.far, &s, &mut warnings);
            tl.snapshots.push(snap);
            while next_snap <= t {
                next_snap += opts.snapshot_interval.unwrap_or(f64::INFINITY);
            }
        }
    };
    let end = tl.termination.end_time();
    let snap = solver.snapshot(end, &s, grid, sup_p, &mut warnings);
    flag_boundary(&snap, &solver.far, &s, &mut warnings);
    if tl.snapshots.last().map(|s| s.t) == Some(end) {
        tl.snapshots.pop();
    }
    tl.snapshots.push(snap);
    for snap in &tl.snapshots {
        if let Some(l) = &snap.local {
            if l.hyperbolicity_margin <= 1e-12 {
                push_unique(
                    &mut warnings,
                    format!("strict hyperbolicity fails at t = {}: inf|f - u| = {:e}", snap.t, l.hyperbolicity_margin),
                );
            }
        }
    }
    tl.warnings = warnings;
    Ok(tl)
}

/// Largest `|x|` at which the initial data differ from their far-field values.
fn perturbation_reach(rho: &GridField, u: &GridField) -> f64 {
    let n = rho.n();
    let differs = |v: &[f64], i: usize, j: usize| (v[i] - v[j]).abs() > FAR_FIELD_TOL * (1.0 + v[j].abs());
    let (r, v) = (rho.values(), u.values());
    let first = (0..n).find(|&i| differs(r, i, 0) || differs(v, i, 0));
    let last = (0..n).rev().find(|&i| differs(r, i, n - 1) || differs(v, i, n - 1));
    match (first, last) {
        (Some(a), Some(b)) => rho.x(a).abs().max(rho.x(b).abs()),
        _ => 0.0,
    }
}

fn flag_boundary(snap: &Snapshot, far: &Far, s: &State, warnings: &mut Vec<String>) {
    let n = s.rho.len();
    let off = |v: f64, reference: f64| (v - reference).abs() > BOUNDARY_TOL * (1.0 + reference.abs());
    if off(s.rho[0], far.rho.0) || off(s.rho[n - 1], far.rho.1) || off(s.u[0], s.u_far.0) || off(s.u[n - 1], s.u_far.1)
    {
        push_unique(warnings, format!("perturbation reached the domain boundary by t = {}", snap.t));
    }
}
