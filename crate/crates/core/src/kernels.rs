//! Influence and relaxation kernels.
//!
//! Torus kernels (`psi`) come in two flavours: [`BoundedKernel`], sampled on the
//! shared torus grid with explicit `psi_min`/`psi_max`, and [`L1Kernel`], which
//! may be unbounded at the origin and carries the statistics `‖psi‖_L1` and
//! `gamma` (the tail integral of the decreasing rearrangement). Line kernels
//! (`Q`) used by the relaxation system are [`RelaxKernel`]s.
//!
//! Singular kernels never get sampled at the origin: the grid cell that
//! contains the singularity uses the profile's analytic local integral.

use std::f64::consts::PI;
use std::fmt;
use std::path::Path;
use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use crate::grid::{wrap, GridField};
use crate::quadrature::adaptive_simpson;
use crate::{Error, Result};

pub type Evaluator = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Shape of a kernel as a function of the displacement `x`.
#[derive(Clone)]
pub enum Profile {
    Constant {
        value: f64,
    },
    /// `height` on `|x| < half_width`, `height / 2` exactly at the edges.
    TopHat {
        height: f64,
        half_width: f64,
    },
    Triangle {
        peak: f64,
        half_width: f64,
    },
    /// `amplitude * exp(-|x| / scale)`
    Exponential {
        amplitude: f64,
        scale: f64,
    },
    /// `amplitude * exp(-x^2 / (2 width^2))`
    Gaussian {
        amplitude: f64,
        width: f64,
    },
    /// `mean + amplitude * cos(2 pi x)`, periodic on the torus.
    Cosine {
        mean: f64,
        amplitude: f64,
    },
    /// `amplitude * |x|^(-exponent)` with `0 < exponent < 1`.
    Power {
        amplitude: f64,
        exponent: f64,
    },
    /// Piecewise-linear table in `|x|` (ascending abscissae), zero past the last node.
    Tabulated {
        xs: Arc<[f64]>,
        values: Arc<[f64]>,
    },
    /// Arbitrary closure; `cell_mass(w)` must return the integral over `[-w/2, w/2]`
    /// when the closure is singular at the origin.
    Custom {
        eval: Evaluator,
        cell_mass: Option<Evaluator>,
    },
}

impl fmt::Debug for Profile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Profile::Constant { value } => write!(f, "Constant({value})"),
            Profile::TopHat { height, half_width } => write!(f, "TopHat({height}, {half_width})"),
            Profile::Triangle { peak, half_width } => write!(f, "Triangle({peak}, {half_width})"),
            Profile::Exponential { amplitude, scale } => write!(f, "Exponential({amplitude}, {scale})"),
            Profile::Gaussian { amplitude, width } => write!(f, "Gaussian({amplitude}, {width})"),
            Profile::Cosine { mean, amplitude } => write!(f, "Cosine({mean}, {amplitude})"),
            Profile::Power { amplitude, exponent } => write!(f, "Power({amplitude}, {exponent})"),
            Profile::Tabulated { xs, .. } => write!(f, "Tabulated({} nodes)", xs.len()),
            Profile::Custom { cell_mass, .. } => {
                write!(f, "Custom(cell_mass: {})", cell_mass.is_some())
            }
        }
    }
}

impl Profile {
    pub fn power(amplitude: f64, exponent: f64) -> Result<Self> {
        let p = Profile::Power { amplitude, exponent };
        p.validate()?;
        Ok(p)
    }

    pub fn custom(eval: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        Profile::Custom { eval: Arc::new(eval), cell_mass: None }
    }

    pub fn custom_singular(
        eval: impl Fn(f64) -> f64 + Send + Sync + 'static,
        cell_mass: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Profile::Custom { eval: Arc::new(eval), cell_mass: Some(Arc::new(cell_mass)) }
    }

    pub fn tabulated(xs: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        let p = Profile::Tabulated { xs: xs.into(), values: values.into() };
        p.validate()?;
        Ok(p)
    }

    /// Reads a two-column table `x,value` (an optional non-numeric header row is skipped).
    pub fn tabulated_from_csv(path: &Path) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new().has_headers(false).trim(csv::Trim::All).from_path(path)?;
        let mut xs = Vec::new();
        let mut values = Vec::new();
        for (line, record) in reader.records().enumerate() {
            let record = record?;
            let parse = |k: usize| record.get(k).and_then(|s| s.parse::<f64>().ok());
            match (parse(0), parse(1)) {
                (Some(x), Some(v)) => {
                    xs.push(x);
                    values.push(v);
                }
                _ if line == 0 => continue,
                _ => {
                    return Err(Error::InvalidKernel(format!(
                        "{}: line {}: expected two numeric columns",
                        path.display(),
                        line + 1
                    )))
                }
            }
        }
        Self::tabulated(xs, values)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidKernel(msg));
        match *self {
            Profile::Constant { value } if !(value >= 0.0 && value.is_finite()) => {
                bad(format!("constant value must be finite and >= 0, got {value}"))
            }
            Profile::TopHat { height, half_width } if !(height >= 0.0 && half_width > 0.0 && height.is_finite()) => {
                bad("tophat needs height >= 0 and half_width > 0".into())
            }
            Profile::Triangle { peak, half_width } if !(peak >= 0.0 && half_width > 0.0 && peak.is_finite()) => {
                bad("triangle needs peak >= 0 and half_width > 0".into())
            }
            Profile::Exponential { amplitude, scale } if !(amplitude >= 0.0 && scale > 0.0) => {
                bad("exponential needs amplitude >= 0 and scale > 0".into())
            }
            Profile::Gaussian { amplitude, width } if !(amplitude >= 0.0 && width > 0.0) => {
                bad("gaussian needs amplitude >= 0 and width > 0".into())
            }
            Profile::Cosine { mean, amplitude } if !(mean >= amplitude.abs()) => {
                bad("cosine kernel must stay nonnegative: mean >= |amplitude|".into())
            }
            Profile::Power { amplitude, exponent } if !(amplitude > 0.0 && exponent > 0.0 && exponent < 1.0) => {
                bad(format!("power kernel needs amplitude > 0 and 0 < p < 1, got p = {exponent}"))
            }
            Profile::Tabulated { ref xs, ref values } => {
                if xs.len() != values.len() || xs.len() < 2 {
                    return bad("tabulated kernel needs at least two (x, value) rows".into());
                }
                if xs[0] != 0.0 || xs.windows(2).any(|w| w[1] <= w[0]) {
                    return bad("tabulated abscissae must start at 0 and increase strictly".into());
                }
                if values.iter().any(|v| !(*v >= 0.0 && v.is_finite())) {
                    return bad("tabulated values must be finite and >= 0".into());
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        let r = x.abs();
        match self {
            Profile::Constant { value } => *value,
            Profile::TopHat { height, half_width } => {
                if r < *half_width {
                    *height
                } else if r == *half_width {
                    0.5 * height
                } else {
                    0.0
                }
            }
            Profile::Triangle { peak, half_width } => peak * (1.0 - r / half_width).max(0.0),
            Profile::Exponential { amplitude, scale } => amplitude * (-r / scale).exp(),
            Profile::Gaussian { amplitude, width } => amplitude * (-0.5 * (r / width).powi(2)).exp(),
            Profile::Cosine { mean, amplitude } => mean + amplitude * (2.0 * PI * x).cos(),
            Profile::Power { amplitude, exponent } => {
                if r == 0.0 {
                    f64::INFINITY
                } else {
                    amplitude * r.powf(-exponent)
                }
            }
            Profile::Tabulated { xs, values } => {
                let last = xs.len() - 1;
                if r > xs[last] {
                    return 0.0;
                }
                let k = xs.partition_point(|&xk| xk <= r).saturating_sub(1).min(last - 1);
                let t = (r - xs[k]) / (xs[k + 1] - xs[k]);
                (1.0 - t) * values[k] + t * values[k + 1]
            }
            Profile::Custom { eval, .. } => eval(x),
        }
    }

    /// Analytic integral over `[-width/2, width/2]`, when the profile supplies one.
    pub fn cell_mass(&self, width: f64) -> Option<f64> {
        match self {
            Profile::Power { amplitude, exponent } => {
                Some(2.0 * amplitude * (0.5 * width).powf(1.0 - exponent) / (1.0 - exponent))
            }
            Profile::Custom { cell_mass: Some(m), .. } => Some(m(width)),
            _ => None,
        }
    }

    pub fn is_singular(&self) -> bool {
        !self.eval(0.0).is_finite()
    }

    /// Integral over `[-width/2, width/2]`: analytic when available, otherwise
    /// the midpoint value times the width.
    pub fn local_mass(&self, width: f64) -> Result<f64> {
        if let Some(m) = self.cell_mass(width) {
            return if m.is_finite() && m >= 0.0 {
                Ok(m)
            } else {
                Err(Error::NonIntegrable(format!("local integral over width {width} is {m}")))
            };
        }
        let v = self.eval(0.0);
        if v.is_finite() {
            Ok(width * v)
        } else {
            Err(Error::NonIntegrable("kernel is singular at the origin and supplies no local integral".into()))
        }
    }
}

/// `‖psi‖_L1` and `gamma` of a torus kernel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct L1Stats {
    pub l1_norm: f64,
    pub gamma: f64,
}

/// Statistics consumed by the threshold formulas. `psi_min`/`psi_max` are
/// present only for bounded kernels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelStats {
    pub psi_min: Option<f64>,
    pub psi_max: Option<f64>,
    pub l1_norm: f64,
    pub gamma: f64,
}

impl KernelStats {
    /// Stats of a bounded kernel given only its bounds; the L1 statistics are
    /// filled with the values of the constant kernel at `psi_max`.
    pub fn bounded(psi_min: f64, psi_max: f64) -> Result<Self> {
        if !(psi_min >= 0.0 && psi_max >= psi_min && psi_max.is_finite()) {
            return Err(Error::InvalidKernel(format!(
                "bounded kernel needs 0 <= psi_min <= psi_max < inf, got [{psi_min}, {psi_max}]"
            )));
        }
        Ok(Self { psi_min: Some(psi_min), psi_max: Some(psi_max), l1_norm: psi_max, gamma: 0.5 * psi_max })
    }

    pub fn l1(l1_norm: f64, gamma: f64) -> Result<Self> {
        if !(l1_norm > 0.0 && l1_norm.is_finite()) {
            return Err(Error::InvalidKernel(format!("‖psi‖_L1 must be positive, got {l1_norm}")));
        }
        if !(gamma >= 0.0 && gamma <= 0.5 * l1_norm) {
            return Err(Error::InvalidKernel(format!(
                "gamma must lie in [0, ‖psi‖/2] = [0, {}], got {gamma}",
                0.5 * l1_norm
            )));
        }
        Ok(Self { psi_min: None, psi_max: None, l1_norm, gamma })
    }
}

/// Computes `‖psi‖_L1(T)` and `gamma = ∫_{1/2}^{1} psi*(s) ds` from `n_samples`
/// midpoint samples. The two cells touching the origin are replaced by the
/// profile's analytic local integral when one exists.
pub fn l1_stats(profile: &Profile, n_samples: usize) -> Result<L1Stats> {
    if n_samples < 8 || !n_samples.is_multiple_of(2) {
        return Err(Error::InvalidParameter(format!("l1_stats needs an even sample count >= 8, got {n_samples}")));
    }
    let n = n_samples;
    let h = 1.0 / n as f64;
    let mut values: Vec<f64> = (0..n).map(|j| profile.eval(-0.5 + (j as f64 + 0.5) * h)).collect();
    match profile.cell_mass(2.0 * h) {
        Some(m) if m.is_finite() && m >= 0.0 => {
            // the two cells share the mass evenly
            values[n / 2 - 1] = m / (2.0 * h);
            values[n / 2] = m / (2.0 * h);
        }
        Some(m) => {
            return Err(Error::NonIntegrable(format!("local integral at the origin is {m}")));
        }
        None => {
            if values.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonIntegrable("unbounded sample and no analytic local integral".into()));
            }
            check_refinement_converges(profile, n)?;
        }
    }
    if let Some(v) = values.iter().find(|v| !(**v >= 0.0 && v.is_finite())) {
        return Err(Error::InvalidKernel(format!("kernel sample {v} is negative or non-finite")));
    }
    Ok(stats_from_cell_values(values, h))
}

/// `‖psi‖` and `gamma` from per-cell values of equal width `h`.
fn stats_from_cell_values(mut values: Vec<f64>, h: f64) -> L1Stats {
    let l1_norm = values.iter().sum::<f64>() * h;
    values.sort_by(|a, b| b.total_cmp(a));
    let half = values.len() / 2;
    let gamma = values[half..].iter().sum::<f64>() * h;
    L1Stats { l1_norm, gamma }
}

/// Midpoint sums at n/4, n/2 and n must have shrinking increments; a
/// non-integrable singularity (e.g. 1/|x|) keeps adding a constant per
/// refinement.
fn check_refinement_converges(profile: &Profile, n: usize) -> Result<()> {
    let midpoint_sum = |m: usize| {
        let h = 1.0 / m as f64;
        (0..m).map(|j| profile.eval(-0.5 + (j as f64 + 0.5) * h)).sum::<f64>() * h
    };
    let s1 = midpoint_sum(n / 4);
    let s2 = midpoint_sum(n / 2);
    let s3 = midpoint_sum(n);
    let d1 = s2 - s1;
    let d2 = s3 - s2;
    if d1 > 0.0 && d2 > 0.985 * d1 && d2 > 1e-9 * s3.abs().max(1.0) {
        return Err(Error::NonIntegrable(format!(
            "midpoint sums keep growing under refinement ({s1:.6}, {s2:.6}, {s3:.6})"
        )));
    }
    Ok(())
}

/// Bounded influence function sampled on the torus grid.
#[derive(Debug, Clone)]
pub struct BoundedKernel {
    profile: Profile,
    samples: Vec<f64>,
    psi_min: f64,
    psi_max: f64,
}

impl BoundedKernel {
    /// Samples `profile` on the `n`-point torus grid (`n` a power of two).
    pub fn new(profile: Profile, n: usize) -> Result<Self> {
        profile.validate()?;
        if !n.is_power_of_two() || n < 4 {
            return Err(Error::InvalidParameter(format!("torus grids use a power-of-two size >= 4, got {n}")));
        }
        let field = GridField::from_fn(crate::grid::Domain::Torus, n, |x| profile.eval(x));
        let samples = field.into_values();
        if let Some(v) = samples.iter().find(|v| !(**v >= 0.0 && v.is_finite())) {
            return Err(Error::InvalidKernel(format!("bounded kernel sample {v} is negative or non-finite")));
        }
        let psi_min = samples.iter().copied().fold(f64::INFINITY, f64::min);
        let psi_max = samples.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let tol = 1e-12 * psi_max.max(1.0);
        for i in 0..n {
            let mirror = samples[(n - i) % n];
            if (samples[i] - mirror).abs() > tol {
                return Err(Error::InvalidKernel(format!(
                    "kernel is not symmetric: psi({}) = {} but psi(-x) = {mirror}",
                    -0.5 + i as f64 / n as f64,
                    samples[i]
                )));
            }
        }
        Ok(Self { profile, samples, psi_min, psi_max })
    }

    pub fn profile(&self) -> &Profile {
        &self.profile
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn n(&self) -> usize {
        self.samples.len()
    }

    pub fn psi_min(&self) -> f64 {
        self.psi_min
    }

    pub fn psi_max(&self) -> f64 {
        self.psi_max
    }

    pub fn l1_stats(&self) -> L1Stats {
        stats_from_cell_values(self.samples.clone(), 1.0 / self.n() as f64)
    }
}

/// Integrable (possibly singular) influence function on the torus.
#[derive(Debug, Clone)]
pub struct L1Kernel {
    profile: Profile,
    stats: L1Stats,
}

impl L1Kernel {
    pub fn new(profile: Profile, n_samples: usize) -> Result<Self> {
        profile.validate()?;
        let stats = l1_stats(&profile, n_samples)?;
        if !(stats.l1_norm > 0.0) {
            return Err(Error::InvalidKernel("L1 kernel has zero mass".into()));
        }
        Ok(Self { profile, stats })
    }

    pub fn profile(&self) -> &Profile {
        &self.profile
    }

    pub fn l1_norm(&self) -> f64 {
        self.stats.l1_norm
    }

    pub fn gamma(&self) -> f64 {
        self.stats.gamma
    }
}

/// Either flavour of torus influence function.
#[derive(Debug, Clone)]
pub enum TorusKernel {
    Bounded(BoundedKernel),
    L1(L1Kernel),
}

impl TorusKernel {
    pub fn profile(&self) -> &Profile {
        match self {
            TorusKernel::Bounded(k) => k.profile(),
            TorusKernel::L1(k) => k.profile(),
        }
    }

    /// `psi` at a torus displacement.
    #[inline]
    pub fn eval(&self, d: f64) -> f64 {
        self.profile().eval(wrap(d))
    }

    /// Integral of `psi` over `[-width/2, width/2]`.
    pub fn local_mass(&self, width: f64) -> Result<f64> {
        self.profile().local_mass(width)
    }

    pub fn stats(&self) -> KernelStats {
        match self {
            TorusKernel::Bounded(k) => {
                let s = k.l1_stats();
                KernelStats { psi_min: Some(k.psi_min), psi_max: Some(k.psi_max), l1_norm: s.l1_norm, gamma: s.gamma }
            }
            TorusKernel::L1(k) => KernelStats { psi_min: None, psi_max: None, l1_norm: k.l1_norm(), gamma: k.gamma() },
        }
    }

    /// Quadrature weights `w[m]` such that `(psi * rho)_i = sum_m w[m] rho_{i-m}`
    /// on the `n`-point torus grid.
    pub fn offset_weights(&self, n: usize) -> Result<Vec<f64>> {
        let h = 1.0 / n as f64;
        match self {
            TorusKernel::Bounded(k) => {
                if k.n() != n {
                    return Err(Error::DomainMismatch(format!("kernel sampled on {} points, field has {n}", k.n())));
                }
                Ok((0..n).map(|m| h * k.samples[(m + n / 2) % n]).collect())
            }
            TorusKernel::L1(k) => {
                let mut w: Vec<f64> = (0..n).map(|m| h * k.profile.eval(wrap(m as f64 * h))).collect();
                w[0] = k.profile.local_mass(h)?;
                Ok(w)
            }
        }
    }
}

/// How circulant convolutions are evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ConvolutionMethod {
    /// O(N^2) summation in fixed index order; the reference path.
    #[default]
    Direct,
    /// Circular FFT product.
    Fft,
}

struct FftPlan {
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    spectrum: Vec<Complex<f64>>,
}

/// Precomputed circulant convolution with a torus kernel.
pub struct CirculantConvolver {
    weights: Vec<f64>,
    fft: Option<FftPlan>,
}

impl fmt::Debug for CirculantConvolver {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CirculantConvolver").field("n", &self.weights.len()).field("fft", &self.fft.is_some()).finish()
    }
}

impl CirculantConvolver {
    pub fn new(kernel: &TorusKernel, n: usize, method: ConvolutionMethod) -> Result<Self> {
        Ok(Self::from_weights(kernel.offset_weights(n)?, method))
    }

    pub fn from_weights(weights: Vec<f64>, method: ConvolutionMethod) -> Self {
        let fft = match method {
            ConvolutionMethod::Direct => None,
            ConvolutionMethod::Fft => {
                let n = weights.len();
                let mut planner = FftPlanner::new();
                let forward = planner.plan_fft_forward(n);
                let inverse = planner.plan_fft_inverse(n);
                let mut spectrum: Vec<Complex<f64>> = weights.iter().map(|&w| Complex::new(w, 0.0)).collect();
                forward.process(&mut spectrum);
                Some(FftPlan { forward, inverse, spectrum })
            }
        };
        Self { weights, fft }
    }

    pub fn n(&self) -> usize {
        self.weights.len()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Total kernel mass seen by the grid, `sum_m w[m]`.
    pub fn mass(&self) -> f64 {
        self.weights.iter().sum()
    }

    pub fn apply(&self, input: &[f64]) -> Vec<f64> {
        assert_eq!(input.len(), self.n());
        match &self.fft {
            None => self.apply_direct(input),
            Some(plan) => {
                let n = self.n();
                let mut buf: Vec<Complex<f64>> = input.iter().map(|&v| Complex::new(v, 0.0)).collect();
                plan.forward.process(&mut buf);
                for (b, s) in buf.iter_mut().zip(&plan.spectrum) {
                    *b *= s;
                }
                plan.inverse.process(&mut buf);
                buf.iter().map(|c| c.re / n as f64).collect()
            }
        }
    }

    fn apply_direct(&self, input: &[f64]) -> Vec<f64> {
        let n = self.n();
        let w = &self.weights;
        (0..n)
            .map(|i| {
                let mut s = 0.0;
                for j in 0..=i {
                    s += w[i - j] * input[j];
                }
                for j in i + 1..n {
                    s += w[n + i - j] * input[j];
                }
                s
            })
            .collect()
    }
}

/// Quadrature approximation of `(psi * rho)(x_i) = ∫_T psi(x_i - y) rho(y) dy`
/// by direct summation.
pub fn periodic_convolve(kernel: &TorusKernel, rho: &GridField) -> Result<GridField> {
    if !rho.is_torus() {
        return Err(Error::DomainMismatch("periodic convolution needs a torus field".into()));
    }
    if let Some((index, &value)) = rho.values().iter().enumerate().find(|(_, v)| **v < 0.0) {
        return Err(Error::NegativeDensity { index, value });
    }
    let conv = CirculantConvolver::new(kernel, rho.n(), ConvolutionMethod::Direct)?;
    Ok(rho.with_values(conv.apply(rho.values())))
}

/// Relaxation kernel `Q` on the real line.
#[derive(Debug, Clone)]
pub struct RelaxKernel {
    profile: Profile,
    support_radius: f64,
    l1_norm: f64,
}

impl RelaxKernel {
    pub fn new(profile: Profile, support_radius: f64) -> Result<Self> {
        profile.validate()?;
        if !(support_radius > 0.0 && support_radius.is_finite()) {
            return Err(Error::InvalidParameter(format!("support radius must be positive, got {support_radius}")));
        }
        let f = |x: f64| profile.eval(x);
        let left = adaptive_simpson(&f, -support_radius, 0.0, 1e-13);
        let right = adaptive_simpson(&f, 0.0, support_radius, 1e-13);
        let l1_norm = left.value + right.value;
        if !l1_norm.is_finite() {
            return Err(Error::NonIntegrable("relaxation kernel mass is not finite".into()));
        }
        Ok(Self { profile, support_radius, l1_norm })
    }

    /// Unit-mass Gaussian with standard deviation `sigma`, truncated at `radius_sigmas * sigma`.
    pub fn gaussian(sigma: f64, radius_sigmas: f64) -> Result<Self> {
        let amplitude = 1.0 / (sigma * (2.0 * PI).sqrt());
        Self::new(Profile::Gaussian { amplitude, width: sigma }, radius_sigmas * sigma)
    }

    /// Unit-mass `exp(-|x|/scale) / (2 scale)` truncated at `radius`.
    pub fn exponential(scale: f64, radius: f64) -> Result<Self> {
        Self::new(Profile::Exponential { amplitude: 0.5 / scale, scale }, radius)
    }

    pub fn profile(&self) -> &Profile {
        &self.profile
    }

    pub fn support_radius(&self) -> f64 {
        self.support_radius
    }

    pub fn l1_norm(&self) -> f64 {
        self.l1_norm
    }

    /// Symmetric stencil for `(Q * u)_i = sum_j w_j u_{i + j - M}` on a line
    /// grid of spacing `dx`; the weights are renormalised to sum to one so
    /// constant states are reproduced exactly.
    pub fn line_weights(&self, dx: f64) -> (Vec<f64>, usize) {
        let m = (self.support_radius / dx).floor() as usize;
        let mut w: Vec<f64> = (0..=2 * m).map(|j| dx * self.profile.eval((j as f64 - m as f64) * dx)).collect();
        let total: f64 = w.iter().sum();
        for v in &mut w {
            *v /= total;
        }
        (w, m)
    }
}

/// Outcome of one kernel-hypothesis check.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Check {
    pub residual: f64,
    pub tolerance: f64,
    pub passed: bool,
}

impl Check {
    fn new(residual: f64, tolerance: f64) -> Self {
        Self { residual, tolerance, passed: residual <= tolerance }
    }
}

/// Symmetry, unit mass and monotone decay of a relaxation kernel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ValidationReport {
    pub symmetry: Check,
    pub unit_mass: Check,
    pub monotone_decay: Check,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.symmetry.passed && self.unit_mass.passed && self.monotone_decay.passed
    }
}

pub const SYMMETRY_TOL: f64 = 1e-12;
pub const UNIT_MASS_TOL: f64 = 1e-6;
pub const MONOTONE_TOL: f64 = 1e-12;

pub fn validate_relax_kernel(q: &RelaxKernel) -> ValidationReport {
    const PROBES: usize = 4000;
    let r = q.support_radius;
    let scale = q.profile.eval(0.0).abs().max(q.profile.eval(r / PROBES as f64).abs()).max(1e-300);
    let mut symmetry: f64 = 0.0;
    let mut increase: f64 = 0.0;
    let mut prev = q.profile.eval(0.0);
    for k in 1..=PROBES {
        let x = r * k as f64 / PROBES as f64;
        let right = q.profile.eval(x);
        let left = q.profile.eval(-x);
        symmetry = symmetry.max((right - left).abs() / scale);
        if prev.is_finite() {
            increase = increase.max((right - prev) / scale);
        }
        prev = right;
    }
    ValidationReport {
        symmetry: Check::new(symmetry, SYMMETRY_TOL),
        unit_mass: Check::new((q.l1_norm - 1.0).abs(), UNIT_MASS_TOL),
        monotone_decay: Check::new(increase.max(0.0), MONOTONE_TOL),
    }
}
