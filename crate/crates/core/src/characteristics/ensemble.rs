use serde::Serialize;

use super::{rk4_step, BreakdownReason, CharTrajectory, Termination};
use crate::eulerian::PoissonSolver;
use crate::grid::{wrap, GridField};
use crate::kernels::TorusKernel;
use crate::thresholds::SystemParams;
use crate::{Error, Result};

/// Lagrangian particle carrying the characteristic variables.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Particle {
    /// Initial position (label).
    pub alpha: f64,
    /// Unwrapped position.
    pub x: f64,
    pub u: f64,
    pub rho: f64,
    /// `G = u_x + psi * rho`
    pub g: f64,
    pub mass: f64,
}

/// Particle discretisation of the alignment system on the torus.
#[derive(Debug, Clone)]
pub struct EpaEnsemble {
    particles: Vec<Particle>,
    params: SystemParams,
    kernel: TorusKernel,
    poisson_n: usize,
}

/// Relative tolerance between the summed particle masses and `c`.
pub const MASS_TOL: f64 = 1e-10;

impl EpaEnsemble {
    /// One particle per grid node; masses `rho0 * h`, `G0 = u0x + psi * rho0`
    /// evaluated with the particle sum so that uniform states are exact
    /// equilibria of the discrete system.
    pub fn from_fields(
        rho0: &GridField,
        u0: &GridField,
        u0x: &GridField,
        kernel: TorusKernel,
        params: SystemParams,
    ) -> Result<Self> {
        if !rho0.is_torus() || !rho0.same_grid(u0) || !rho0.same_grid(u0x) {
            return Err(Error::DomainMismatch("ensemble needs torus fields on one grid".into()));
        }
        if let Some((index, &value)) = rho0.values().iter().enumerate().find(|(_, v)| **v <= 0.0) {
            return Err(Error::NegativeDensity { index, value });
        }
        let h = rho0.dx();
        let particles = (0..rho0.n())
            .map(|i| Particle {
                alpha: rho0.x(i),
                x: rho0.x(i),
                u: u0.values()[i],
                rho: rho0.values()[i],
                g: 0.0,
                mass: rho0.values()[i] * h,
            })
            .collect();
        let mut ens = Self::from_particles(particles, kernel, params, rho0.n())?;
        let xs: Vec<f64> = ens.particles.iter().map(|p| p.x).collect();
        let rhos: Vec<f64> = ens.particles.iter().map(|p| p.rho).collect();
        let s = ens.convolution(&xs, &rhos);
        for (p, (si, ux)) in ens.particles.iter_mut().zip(s.iter().zip(u0x.values())) {
            p.g = ux + si;
        }
        Ok(ens)
    }

    /// Checks ordering and the mass balance `sum m = c`.
    pub fn from_particles(
        particles: Vec<Particle>,
        kernel: TorusKernel,
        params: SystemParams,
        poisson_n: usize,
    ) -> Result<Self> {
        if particles.len() < 3 {
            return Err(Error::InvalidParameter("ensemble needs at least three particles".into()));
        }
        if particles.windows(2).any(|w| w[1].alpha <= w[0].alpha)
            || particles[particles.len() - 1].alpha - particles[0].alpha >= 1.0
        {
            return Err(Error::InvalidParameter("particles must be sorted by label within one period".into()));
        }
        let total: f64 = particles.iter().map(|p| p.mass).sum();
        if (total - params.c).abs() > MASS_TOL * params.c {
            return Err(Error::MassMismatch { expected: params.c, actual: total });
        }
        if poisson_n < 4 {
            return Err(Error::InvalidParameter("Poisson grid needs at least four cells".into()));
        }
        Ok(Self { particles, params, kernel, poisson_n })
    }

    pub fn particles(&self) -> &[Particle] {
        &self.particles
    }

    pub fn params(&self) -> SystemParams {
        self.params
    }

    pub fn mass(&self) -> f64 {
        self.particles.iter().map(|p| p.mass).sum()
    }

    /// `(psi * rho)(x_i) = sum_j psi(x_i - x_j) m_j`; the self term uses the
    /// kernel's local integral over the particle's Lagrangian cell `m_i / rho_i`.
    pub fn convolution(&self, xs: &[f64], rhos: &[f64]) -> Vec<f64> {
        let n = xs.len();
        let mut s = vec![0.0; n];
        for i in 0..n {
            let mi = self.particles[i].mass;
            for j in i + 1..n {
                let w = self.kernel.eval(xs[i] - xs[j]);
                s[i] += w * self.particles[j].mass;
                s[j] += w * mi;
            }
        }
        for i in 0..n {
            s[i] += self.self_term(i, rhos[i]);
        }
        s
    }

    fn self_term(&self, i: usize, rho: f64) -> f64 {
        let m = self.particles[i].mass;
        match &self.kernel {
            TorusKernel::Bounded(_) => m * self.kernel.eval(0.0),
            TorusKernel::L1(_) => {
                let width = m / rho;
                // rho stays positive on accepted steps; trial stages may not
                if !(width > 0.0 && width.is_finite()) {
                    return f64::NAN;
                }
                m * self.kernel.local_mass(width).unwrap_or(f64::NAN) / width
            }
        }
    }

    fn state_vector(&self) -> Vec<f64> {
        let n = self.particles.len();
        let mut y = vec![0.0; 4 * n];
        for (i, p) in self.particles.iter().enumerate() {
            y[i] = p.x;
            y[n + i] = p.u;
            y[2 * n + i] = p.rho;
            y[3 * n + i] = p.g;
        }
        y
    }

    fn load(&mut self, y: &[f64]) {
        let n = self.particles.len();
        for (i, p) in self.particles.iter_mut().enumerate() {
            p.x = y[i];
            p.u = y[n + i];
            p.rho = y[2 * n + i];
            p.g = y[3 * n + i];
        }
    }

    /// `phi_x` at the particles: area-weighted deposit, spectral solve and
    /// interpolation with the same weights.
    fn electric_field(&self, solver: &PoissonSolver, xs: &[f64]) -> Vec<f64> {
        let np = self.poisson_n;
        let inv_h = np as f64;
        let mut density = vec![0.0; np];
        let cell = |x: f64| {
            let s = (wrap(x) + 0.5) * np as f64;
            let k = s.floor();
            let frac = s - k;
            let k = (k as usize) % np;
            (k, (k + 1) % np, frac)
        };
        for (p, &x) in self.particles.iter().zip(xs) {
            let (a, b, frac) = cell(x);
            density[a] += p.mass * (1.0 - frac) * inv_h;
            density[b] += p.mass * frac * inv_h;
        }
        let mean = density.iter().sum::<f64>() / np as f64;
        for d in &mut density {
            *d -= mean;
        }
        let field = solver.field(&density);
        xs.iter()
            .map(|&x| {
                let (a, b, frac) = cell(x);
                (1.0 - frac) * field[a] + frac * field[b]
            })
            .collect()
    }

    fn rhs(&self, solver: &PoissonSolver, y: &[f64], out: &mut [f64]) {
        let n = self.particles.len();
        let (xs, rest) = y.split_at(n);
        let (us, rest) = rest.split_at(n);
        let (rhos, gs) = rest.split_at(n);
        let k = self.params.k;
        let c = self.params.c;
        let mut s = vec![0.0; n];
        let mut align = vec![0.0; n];
        for i in 0..n {
            let mi = self.particles[i].mass;
            for j in i + 1..n {
                let w = self.kernel.eval(xs[i] - xs[j]);
                let mj = self.particles[j].mass;
                s[i] += w * mj;
                s[j] += w * mi;
                let du = us[j] - us[i];
                align[i] += w * mj * du;
                align[j] -= w * mi * du;
            }
        }
        let phi_x = if k != 0.0 { self.electric_field(solver, xs) } else { vec![0.0; n] };
        for i in 0..n {
            let si = s[i] + self.self_term(i, rhos[i]);
            let ux = gs[i] - si;
            out[i] = us[i];
            out[n + i] = -k * phi_x[i] + align[i];
            out[2 * n + i] = -rhos[i] * ux;
            out[3 * n + i] = -gs[i] * ux + k * (rhos[i] - c);
        }
    }

    fn crossed(&self, y: &[f64]) -> bool {
        let n = self.particles.len();
        y[..n].windows(2).any(|w| w[1] <= w[0]) || y[0] + 1.0 <= y[n - 1]
    }

    fn sample(&self) -> EnsembleSample {
        let n = self.particles.len();
        let xs: Vec<f64> = self.particles.iter().map(|p| p.x).collect();
        let rhos: Vec<f64> = self.particles.iter().map(|p| p.rho).collect();
        let s = self.convolution(&xs, &rhos);
        let mut out = EnsembleSample {
            max_grad: 0.0,
            x_at_max: wrap(xs[0]),
            min_rho: f64::INFINITY,
            max_rho: f64::NEG_INFINITY,
            min_g: f64::INFINITY,
            max_g: f64::NEG_INFINITY,
            momentum: 0.0,
            residual: 0.0,
        };
        for (i, p) in self.particles.iter().enumerate() {
            let ux = p.g - s[i];
            if ux.abs() > out.max_grad {
                out.max_grad = ux.abs();
                out.x_at_max = wrap(p.x);
            }
            out.min_rho = out.min_rho.min(p.rho);
            out.max_rho = out.max_rho.max(p.rho);
            out.min_g = out.min_g.min(p.g);
            out.max_g = out.max_g.max(p.g);
            out.momentum += p.mass * p.u;
            let (prev, next) = (&self.particles[(i + n - 1) % n], &self.particles[(i + 1) % n]);
            let x_prev = if i == 0 { prev.x - 1.0 } else { prev.x };
            let x_next = if i == n - 1 { next.x + 1.0 } else { next.x };
            let fd = (next.u - prev.u) / (x_next - x_prev);
            out.residual = out.residual.max((fd - ux).abs());
        }
        out
    }
}

/// Per-step summary of an ensemble.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EnsembleSample {
    /// `max |u_x|` with `u_x = G - psi * rho`.
    pub max_grad: f64,
    pub x_at_max: f64,
    pub min_rho: f64,
    pub max_rho: f64,
    pub min_g: f64,
    pub max_g: f64,
    /// `sum m u`
    pub momentum: f64,
    /// `max |u_x(FD across neighbours) - (G - psi * rho)|`
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ParticleSnapshot {
    pub t: f64,
    pub particles: Vec<Particle>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnsembleOptions {
    pub dt: f64,
    /// Spacing of full particle snapshots; `None` keeps only the first and last.
    pub snapshot_interval: Option<f64>,
    pub guard: f64,
    pub max_halvings: u32,
    pub max_rel_change: f64,
    /// Step budget; exhausting it aborts the run.
    pub max_steps: Option<usize>,
}

impl Default for EnsembleOptions {
    fn default() -> Self {
        Self { dt: 1e-3, snapshot_interval: None, guard: 1e12, max_halvings: 40, max_rel_change: 0.25, max_steps: None }
    }
}

#[derive(Debug, Clone)]
pub struct EnsembleRun {
    /// One sample per accepted step.
    pub trajectory: CharTrajectory<EnsembleSample>,
    pub snapshots: Vec<ParticleSnapshot>,
    pub mass: f64,
}

/// RK4 integration of the ensemble to `horizon`.
pub fn integrate_epa_ensemble(init: &EpaEnsemble, horizon: f64, opts: &EnsembleOptions) -> Result<EnsembleRun> {
    if !(opts.dt > 0.0 && opts.dt.is_finite()) {
        return Err(Error::InvalidStep(opts.dt));
    }
    if !(horizon >= 0.0 && horizon.is_finite()) {
        return Err(Error::InvalidParameter(format!("horizon must be >= 0, got {horizon}")));
    }
    let mut ens = init.clone();
    let n = ens.particles.len();
    let solver = PoissonSolver::new(ens.poisson_n);
    let mut y = ens.state_vector();
    let mut t = 0.0;
    let mut h = opts.dt;
    let mut halvings = 0;
    let mut steps = 0usize;
    let mut times = vec![0.0];
    let mut samples = vec![ens.sample()];
    let mut snapshots = vec![ParticleSnapshot { t: 0.0, particles: ens.particles.clone() }];
    let mut next_snap = opts.snapshot_interval.unwrap_or(f64::INFINITY);
    let termination = loop {
        let remaining = horizon - t;
        if remaining <= 0.0 {
            break Termination::Completed { horizon };
        }
        if opts.max_steps.is_some_and(|m| steps >= m) {
            break Termination::Aborted { t, reason: "step budget exhausted".into() };
        }
        let step = if remaining <= h * (1.0 + 1e-9) { remaining } else { h };
        let next = rk4_step(&y, step, &mut |s, out| ens.rhs(&solver, s, out));
        let crossed = ens.crossed(&next);
        let acceptable = !crossed
            && next.iter().all(|v| v.is_finite())
            && next[2 * n..3 * n].iter().all(|r| *r > 0.0)
            && next[2 * n..]
                .iter()
                .zip(&y[2 * n..])
                .all(|(a, b)| (a - b).abs() <= opts.max_rel_change * b.abs().max(1.0));
        if !acceptable {
            h *= 0.5;
            halvings += 1;
            if halvings > opts.max_halvings || t + h == t {
                let reason = if crossed { BreakdownReason::ParticleCrossing } else { BreakdownReason::StepRejection };
                break Termination::Blowup { t_est: t, reason };
            }
            continue;
        }
        steps += 1;
        t = if step == remaining { horizon } else { t + step };
        y = next;
        ens.load(&y);
        times.push(t);
        let sample = ens.sample();
        samples.push(sample);
        if t >= next_snap - 1e-9 * h && t < horizon {
            snapshots.push(ParticleSnapshot { t, particles: ens.particles.clone() });
            while next_snap <= t + 1e-9 * h {
                next_snap += opts.snapshot_interval.unwrap_or(f64::INFINITY);
            }
        }
        let big = |v: f64| v.abs() > opts.guard;
        if big(sample.max_rho) || big(sample.min_g) || big(sample.max_g) {
            break Termination::Blowup { t_est: t, reason: BreakdownReason::StateGuard };
        }
    };
    if snapshots.last().map(|s| s.t) != Some(t) {
        snapshots.push(ParticleSnapshot { t, particles: ens.particles.clone() });
    }
    Ok(EnsembleRun { trajectory: CharTrajectory { times, states: samples, termination }, snapshots, mass: ens.mass() })
}
