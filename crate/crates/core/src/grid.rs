//! Uniform one-dimensional grids: the periodic torus [-1/2, 1/2) and a
//! truncated line [-L, L] with constant far-field extension.

/// Spatial domain of a [`GridField`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Domain {
    /// Periodic torus [-1/2, 1/2); node `i` sits at `-1/2 + i/n`.
    Torus,
    /// Truncated line [-L, L] split into `n` cells; values live at cell centres.
    Line { half_width: f64 },
}

/// Wrap a displacement onto the torus interval [-1/2, 1/2).
#[inline]
pub fn wrap(x: f64) -> f64 {
    x - (x + 0.5).floor()
}

/// Uniformly sampled scalar field.
#[derive(Debug, Clone, PartialEq)]
pub struct GridField {
    domain: Domain,
    values: Vec<f64>,
}

impl GridField {
    pub fn new(domain: Domain, values: Vec<f64>) -> Self {
        assert!(!values.is_empty(), "grid field needs at least one sample");
        if let Domain::Line { half_width } = domain {
            assert!(half_width > 0.0, "line half-width must be positive");
        }
        Self { domain, values }
    }

    pub fn torus(values: Vec<f64>) -> Self {
        Self::new(Domain::Torus, values)
    }

    pub fn line(half_width: f64, values: Vec<f64>) -> Self {
        Self::new(Domain::Line { half_width }, values)
    }

    pub fn from_fn(domain: Domain, n: usize, f: impl Fn(f64) -> f64) -> Self {
        let probe = Self::new(domain, vec![0.0; n]);
        let values = (0..n).map(|i| f(probe.x(i))).collect();
        Self::new(domain, values)
    }

    pub fn zeros_like(&self) -> Self {
        Self::new(self.domain, vec![0.0; self.n()])
    }

    pub fn with_values(&self, values: Vec<f64>) -> Self {
        assert_eq!(values.len(), self.n());
        Self::new(self.domain, values)
    }

    pub fn domain(&self) -> Domain {
        self.domain
    }

    pub fn n(&self) -> usize {
        self.values.len()
    }

    pub fn is_torus(&self) -> bool {
        matches!(self.domain, Domain::Torus)
    }

    pub fn dx(&self) -> f64 {
        domain_dx(self.domain, self.n())
    }

    pub fn x(&self, i: usize) -> f64 {
        domain_x(self.domain, self.n(), i)
    }

    pub fn xs(&self) -> Vec<f64> {
        (0..self.n()).map(|i| self.x(i)).collect()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// True when both fields live on the same domain with the same resolution.
    pub fn same_grid(&self, other: &GridField) -> bool {
        self.domain == other.domain && self.n() == other.n()
    }

    /// Value at a possibly out-of-range index: torus indices wrap, line
    /// indices take the nearest boundary value (far-field extension).
    pub fn at(&self, i: isize) -> f64 {
        let n = self.n() as isize;
        match self.domain {
            Domain::Torus => self.values[i.rem_euclid(n) as usize],
            Domain::Line { .. } => self.values[i.clamp(0, n - 1) as usize],
        }
    }

    /// Rectangle-rule integral (exact trapezoid on the torus).
    pub fn integral(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.dx()
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.n() as f64
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Index and value of the smallest sample.
    pub fn argmin(&self) -> (usize, f64) {
        self.values
            .iter()
            .copied()
            .enumerate()
            .fold((0, f64::INFINITY), |best, (i, v)| if v < best.1 { (i, v) } else { best })
    }

    /// Second-order centred first derivative.
    pub fn derivative(&self) -> GridField {
        let h = self.dx();
        let values = (0..self.n() as isize).map(|i| (self.at(i + 1) - self.at(i - 1)) / (2.0 * h)).collect();
        self.with_values(values)
    }

    /// Second-order centred second derivative.
    pub fn second_derivative(&self) -> GridField {
        let h2 = self.dx() * self.dx();
        let values =
            (0..self.n() as isize).map(|i| (self.at(i + 1) - 2.0 * self.at(i) + self.at(i - 1)) / h2).collect();
        self.with_values(values)
    }

    pub fn zip_map(&self, other: &GridField, f: impl Fn(f64, f64) -> f64) -> GridField {
        assert!(self.same_grid(other));
        let values = self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect();
        self.with_values(values)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> GridField {
        self.with_values(self.values.iter().map(|&v| f(v)).collect())
    }

    /// Linear interpolation at an arbitrary position (torus positions wrap,
    /// line positions outside the grid take the far-field value).
    pub fn interpolate(&self, x: f64) -> f64 {
        let n = self.n();
        match self.domain {
            Domain::Torus => {
                let s = (wrap(x) + 0.5) * n as f64;
                let k = s.floor();
                let frac = s - k;
                let k = k as isize;
                (1.0 - frac) * self.at(k) + frac * self.at(k + 1)
            }
            Domain::Line { half_width } => {
                let s = (x + half_width) / self.dx() - 0.5;
                if s <= 0.0 {
                    return self.values[0];
                }
                if s >= (n - 1) as f64 {
                    return self.values[n - 1];
                }
                let k = s.floor();
                let frac = s - k;
                let k = k as usize;
                (1.0 - frac) * self.values[k] + frac * self.values[k + 1]
            }
        }
    }
}

pub(crate) fn domain_dx(domain: Domain, n: usize) -> f64 {
    match domain {
        Domain::Torus => 1.0 / n as f64,
        Domain::Line { half_width } => 2.0 * half_width / n as f64,
    }
}

pub(crate) fn domain_x(domain: Domain, n: usize, i: usize) -> f64 {
    match domain {
        Domain::Torus => -0.5 + i as f64 / n as f64,
        Domain::Line { half_width } => -half_width + (i as f64 + 0.5) * domain_dx(domain, n),
    }
}

/// Initial density and velocity sampled on a common grid, with the velocity
/// gradient supplied separately (analytic when the data family provides it).
#[derive(Debug, Clone)]
pub struct InitialFields {
    pub rho: GridField,
    pub u: GridField,
    pub ux: GridField,
}

impl InitialFields {
    /// Builds the triple, taking `u_x` from centred differences.
    pub fn from_rho_u(rho: GridField, u: GridField) -> Self {
        let ux = u.derivative();
        Self { rho, u, ux }
    }

    pub fn check(&self) -> crate::Result<()> {
        if !self.rho.same_grid(&self.u) || !self.rho.same_grid(&self.ux) {
            return Err(crate::Error::DomainMismatch(
                "initial density and velocity fields are sampled on different grids".into(),
            ));
        }
        if let Some((index, &value)) = self.rho.values().iter().enumerate().find(|(_, v)| **v < 0.0) {
            return Err(crate::Error::NegativeDensity { index, value });
        }
        Ok(())
    }
}
