//! Spectral solver for `-phi_xx = rho - c` on the unit torus.

use std::f64::consts::PI;

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use crate::grid::GridField;
use crate::{Error, Result};

/// Largest tolerated mean of the source.
pub const MEAN_TOL: f64 = 1e-12;

/// Returns `phi_x` (zero mean) for a zero-mean source `rho - c`.
pub fn poisson_periodic(rho_minus_c: &GridField) -> Result<GridField> {
    if !rho_minus_c.is_torus() {
        return Err(Error::DomainMismatch("the Poisson solve needs a torus field".into()));
    }
    let mean = rho_minus_c.mean();
    let scale = rho_minus_c.max_abs().max(1.0);
    if mean.abs() > MEAN_TOL * scale {
        return Err(Error::NonzeroMean(mean));
    }
    Ok(rho_minus_c.with_values(PoissonSolver::new(rho_minus_c.n()).field(rho_minus_c.values())))
}

/// Reusable FFT plans for repeated solves on one grid size.
pub struct PoissonSolver {
    n: usize,
    forward: std::sync::Arc<dyn rustfft::Fft<f64>>,
    inverse: std::sync::Arc<dyn rustfft::Fft<f64>>,
}

impl std::fmt::Debug for PoissonSolver {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "PoissonSolver({})", self.n)
    }
}

impl PoissonSolver {
    pub fn new(n: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self { n, forward: planner.plan_fft_forward(n), inverse: planner.plan_fft_inverse(n) }
    }

    /// `phi_x` from the samples of `rho - c`. The mean mode is discarded and,
    /// for even `n`, so is the Nyquist mode (its derivative is not real).
    pub fn field(&self, source: &[f64]) -> Vec<f64> {
        let n = self.n;
        assert_eq!(source.len(), n);
        let mut buf: Vec<Complex<f64>> = source.iter().map(|&v| Complex::new(v, 0.0)).collect();
        self.forward.process(&mut buf);
        buf[0] = Complex::new(0.0, 0.0);
        for (m, b) in buf.iter_mut().enumerate().skip(1) {
            let k = if m <= n / 2 { m as f64 } else { m as f64 - n as f64 };
            if 2 * m == n {
                *b = Complex::new(0.0, 0.0);
                continue;
            }
            // -phi'' = f  =>  phi_x has symbol i f / kappa
            let kappa = 2.0 * PI * k;
            *b = Complex::new(0.0, 1.0) * *b / kappa;
        }
        self.inverse.process(&mut buf);
        // nodes start at x = -1/2, which only flips odd modes consistently in
        // both transforms, so no phase correction is needed
        buf.iter().map(|c| c.re / n as f64).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Domain;

    #[test]
    fn zero_source_gives_zero_field() {
        let out = poisson_periodic(&GridField::torus(vec![0.0; 32])).unwrap();
        assert!(out.values().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn cosine_source_matches_analytic_solution() {
        let src = GridField::from_fn(Domain::Torus, 64, |x| (2.0 * PI * x).cos());
        let out = poisson_periodic(&src).unwrap();
        for (i, v) in out.values().iter().enumerate() {
            let exact = -(2.0 * PI * out.x(i)).sin() / (2.0 * PI);
            assert!((v - exact).abs() < 1e-14, "{v} vs {exact}");
        }
    }

    #[test]
    fn nonzero_mean_is_rejected() {
        let src = GridField::torus(vec![1e-6; 16]);
        assert!(matches!(poisson_periodic(&src), Err(Error::NonzeroMean(_))));
        let line = GridField::line(1.0, vec![0.0; 16]);
        assert!(matches!(poisson_periodic(&line), Err(Error::DomainMismatch(_))));
    }
}
