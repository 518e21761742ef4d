//! Critical-threshold formulas and pointwise verdicts on initial data.
//!
//! Alignment regimes compare the kernel's spread against `lambda = 2 sqrt(k/c)`.
//! Both kernel flavours are reduced to a pair of effective bounds
//! `(s_lower, s_upper)`: `(psi_min, psi_max)` for bounded kernels and
//! `(2 gamma, 2 (‖psi‖ - gamma))` for L1 kernels, after which the regime split,
//! the `z` parameters and the admissibility right-hand sides are shared.

use std::f64::consts::PI;
use std::fmt;

use serde::Serialize;

use crate::grid::GridField;
use crate::kernels::KernelStats;
use crate::laws::LocalLaw;
use crate::quadrature::adaptive_simpson;
use crate::{Error, Result};

/// Forcing coefficient `k` and background `c` of the EPA system.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SystemParams {
    pub k: f64,
    pub c: f64,
}

impl SystemParams {
    pub fn new(k: f64, c: f64) -> Result<Self> {
        if !(c > 0.0 && c.is_finite() && k.is_finite()) {
            return Err(Error::InvalidParameter(format!("system needs finite k and c > 0, got k = {k}, c = {c}")));
        }
        Ok(Self { k, c })
    }

    /// `lambda = 2 sqrt(k / c)`, defined for `k > 0` only.
    pub fn lambda(&self) -> Option<f64> {
        (self.k > 0.0).then(|| 2.0 * (self.k / self.c).sqrt())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Flavor {
    Bounded,
    L1,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Regime {
    Weak,
    Strong,
    Medium,
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Regime::Weak => "weak",
            Regime::Strong => "strong",
            Regime::Medium => "medium",
        };
        f.write_str(s)
    }
}

/// Regime together with the values that decided it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RegimeLabel {
    pub regime: Regime,
    pub flavor: Flavor,
    pub lambda: f64,
    /// `psi_min` or `2 gamma`
    pub s_lower: f64,
    /// `psi_max` or `2 (‖psi‖ - gamma)`
    pub s_upper: f64,
}

fn effective_bounds(stats: &KernelStats, flavor: Flavor) -> Result<(f64, f64)> {
    match flavor {
        Flavor::Bounded => match (stats.psi_min, stats.psi_max) {
            (Some(lo), Some(hi)) => Ok((lo, hi)),
            _ => Err(Error::InvalidKernel("bounded-flavour thresholds need psi_min and psi_max".into())),
        },
        Flavor::L1 => Ok((2.0 * stats.gamma, 2.0 * (stats.l1_norm - stats.gamma))),
    }
}

fn require_lambda(params: &SystemParams) -> Result<f64> {
    params.lambda().ok_or(Error::RegimeUndefined(params.k))
}

pub fn classify_regime(stats: &KernelStats, params: &SystemParams, flavor: Flavor) -> Result<RegimeLabel> {
    let lambda = require_lambda(params)?;
    let (s_lower, s_upper) = effective_bounds(stats, flavor)?;
    let regime = if s_upper < lambda {
        Regime::Weak
    } else if s_lower >= lambda {
        Regime::Strong
    } else {
        Regime::Medium
    };
    Ok(RegimeLabel { regime, flavor, lambda, s_lower, s_upper })
}

/// `sqrt((lambda/s)^2 - 1)` as a tagged value: real, purely imaginary
/// (stored as the magnitude) or infinite.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "branch", content = "magnitude", rename_all = "lowercase")]
pub enum ZValue {
    Real(f64),
    Imag(f64),
    Infinite,
}

impl ZValue {
    pub fn from_ratio(lambda: f64, s: f64) -> Self {
        if s == 0.0 {
            return ZValue::Infinite;
        }
        let r = (lambda / s).powi(2) - 1.0;
        if r >= 0.0 {
            ZValue::Real(r.sqrt())
        } else {
            ZValue::Imag((-r).sqrt())
        }
    }

    /// `exp(-pi / z)` with the limits `z -> inf` (1) and `z -> 0+` (0);
    /// `None` on the imaginary branch.
    pub fn exp_neg_pi_over(self) -> Option<f64> {
        match self {
            ZValue::Real(z) if z == 0.0 => Some(0.0),
            ZValue::Real(z) => Some((-PI / z).exp()),
            ZValue::Infinite => Some(1.0),
            ZValue::Imag(_) => None,
        }
    }
}

impl fmt::Display for ZValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ZValue::Real(z) => write!(f, "{z}"),
            ZValue::Imag(y) => write!(f, "{y}i"),
            ZValue::Infinite => f.write_str("inf"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ZParams {
    pub z_hat: ZValue,
    pub z_tilde: ZValue,
}

pub fn z_params(stats: &KernelStats, params: &SystemParams, flavor: Flavor) -> Result<ZParams> {
    let lambda = require_lambda(params)?;
    let (lo, hi) = effective_bounds(stats, flavor)?;
    Ok(ZParams { z_hat: ZValue::from_ratio(lambda, hi), z_tilde: ZValue::from_ratio(lambda, lo) })
}

/// `arctan(z)/z` continued to the imaginary branch as `artanh(y)/y`.
pub fn branch_factor(z: ZValue) -> Result<f64> {
    match z {
        ZValue::Real(z) if z == 0.0 => Ok(1.0),
        ZValue::Real(z) => Ok(z.atan() / z),
        ZValue::Imag(y) if y == 0.0 => Ok(1.0),
        ZValue::Imag(y) if y < 1.0 => Ok(y.atanh() / y),
        ZValue::Imag(y) => Err(Error::BranchDivergence(y)),
        ZValue::Infinite => Ok(0.0),
    }
}

/// Margins of the structural condition `lhs < rhs` required in the weak and
/// medium regimes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Admissibility {
    pub lhs: f64,
    pub rhs: f64,
    pub admissible: bool,
    /// False when `z_tilde` sits on the imaginary branch and the condition
    /// cannot be evaluated without complex exponentials.
    pub evaluable: bool,
}

pub fn admissibility(
    stats: &KernelStats,
    params: &SystemParams,
    regime: Regime,
    flavor: Flavor,
) -> Result<Admissibility> {
    let lambda = require_lambda(params)?;
    if regime == Regime::Strong {
        return Ok(Admissibility { lhs: 0.0, rhs: f64::INFINITY, admissible: true, evaluable: true });
    }
    let lhs = match flavor {
        Flavor::Bounded => {
            let (lo, hi) = effective_bounds(stats, flavor)?;
            hi - lo
        }
        Flavor::L1 => 4.0 * (stats.l1_norm - 2.0 * stats.gamma),
    };
    let z = z_params(stats, params, flavor)?;
    let unclassified = Admissibility { lhs, rhs: f64::NAN, admissible: false, evaluable: false };
    let Some(e_tilde) = z.z_tilde.exp_neg_pi_over() else {
        return Ok(unclassified);
    };
    let growth = branch_factor(z.z_hat)?.exp();
    let rhs = match regime {
        Regime::Weak => {
            let Some(e_hat) = z.z_hat.exp_neg_pi_over() else {
                return Ok(unclassified);
            };
            growth * (1.0 - e_tilde * e_hat) / (2.0 * (1.0 + e_tilde)) * lambda
        }
        Regime::Medium => growth / (2.0 * (1.0 + e_tilde)) * lambda,
        Regime::Strong => unreachable!(),
    };
    Ok(Admissibility { lhs, rhs, admissible: lhs < rhs, evaluable: true })
}

/// Pointwise classification of initial data against a threshold.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum Verdict {
    Subcritical,
    Critical,
    Supercritical,
    Unclassified,
}

impl Verdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Subcritical => "subcritical",
            Verdict::Critical => "critical",
            Verdict::Supercritical => "supercritical",
            Verdict::Unclassified => "unclassified",
        }
    }

    /// Aggregates pointwise verdicts: any supercritical point makes the data
    /// supercritical; subcritical requires every point subcritical.
    pub fn combine(verdicts: impl IntoIterator<Item = Verdict>) -> Verdict {
        let mut worst = Verdict::Subcritical;
        let mut any_unclassified = false;
        for v in verdicts {
            match v {
                Verdict::Supercritical => return Verdict::Supercritical,
                Verdict::Critical => worst = Verdict::Critical,
                Verdict::Unclassified => any_unclassified = true,
                Verdict::Subcritical => {}
            }
        }
        if any_unclassified {
            Verdict::Unclassified
        } else {
            worst
        }
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Euler-Poisson threshold: the curve `g = -sqrt(2 rho)`.
pub fn ep_pointwise(g0: f64, rho0: f64) -> Verdict {
    if !(rho0 >= 0.0) || g0.is_nan() {
        return Verdict::Unclassified;
    }
    if rho0 == 0.0 {
        return if g0 >= 0.0 { Verdict::Subcritical } else { Verdict::Supercritical };
    }
    let curve = -(2.0 * rho0).sqrt();
    if g0 > curve {
        Verdict::Subcritical
    } else if g0 == curve {
        Verdict::Critical
    } else {
        Verdict::Supercritical
    }
}

/// Relaxation threshold: `u_0x + rho_0 >= 0`.
pub fn relax_pointwise(u0x: f64, rho0: f64) -> Verdict {
    if !(rho0 >= 0.0) || u0x.is_nan() {
        return Verdict::Unclassified;
    }
    if u0x + rho0 >= 0.0 {
        Verdict::Subcritical
    } else {
        Verdict::Supercritical
    }
}

/// Euler-alignment check `inf G_0 > 0`; failure guarantees nothing.
pub fn ea_global_check(g0: &GridField) -> Verdict {
    if g0.min() > 0.0 {
        Verdict::Subcritical
    } else {
        Verdict::Unclassified
    }
}

/// `rho0 |f(u0) - u0| / (exp(∫_{u0}^{u} dxi / (f(xi) - xi)) |f(u) - u|)`.
pub fn thm1_density_bound(f: &dyn Fn(f64) -> f64, u0: f64, rho0: f64, u: f64) -> Result<f64> {
    let gap0 = (f(u0) - u0).abs();
    density_bound_from_product(f, rho0 * gap0, u0, u)
}

/// Same bound with the numerator `rho0 |f(u0) - u0|` supplied directly
/// (e.g. its supremum over the line).
pub fn density_bound_from_product(f: &dyn Fn(f64) -> f64, product: f64, u0: f64, u: f64) -> Result<f64> {
    let gap = |xi: f64| f(xi) - xi;
    const SCAN: usize = 256;
    let g_start = gap(u0);
    if g_start == 0.0 {
        return Err(Error::HyperbolicityDegenerate(u0));
    }
    let step = (u - u0) / SCAN as f64;
    let mut crude = 0.0;
    let mut prev = 1.0 / g_start;
    for k in 1..=SCAN {
        let xi = u0 + step * k as f64;
        let g = gap(xi);
        if g == 0.0 || g.signum() != g_start.signum() || !g.is_finite() {
            return Err(Error::HyperbolicityDegenerate(xi));
        }
        crude += 0.5 * step * (prev + 1.0 / g);
        prev = 1.0 / g;
    }
    let integrand = |xi: f64| 1.0 / gap(xi);
    // relative tolerance: the integrand may be nearly singular when u approaches a zero of the gap
    let q = adaptive_simpson(&integrand, u0, u, 1e-11 * crude.abs().max(1e-3 * (u - u0).abs()).max(1e-300));
    if !q.converged {
        return Err(Error::HyperbolicityDegenerate(u));
    }
    Ok(product / (q.value.exp() * gap(u).abs()))
}

/// Tolerance for sign tests on finite-difference probes.
pub const SIDE_TOL: f64 = 1e-6;

/// Which of the two alternative side-condition sets hold on sampled data.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SideConditionReport {
    /// `u_0x + rho_0 >= 0` everywhere.
    pub base: bool,
    /// `(rho f)_rr >= 0, f_uu <= 0, rho_0x >= 0, u_0xx + rho_0x >= 0`
    pub set1: bool,
    /// the mirrored sign set
    pub set2: bool,
    pub rho_f_rr: (f64, f64),
    pub f_uu: (f64, f64),
    pub rho0x: (f64, f64),
    pub curvature: (f64, f64),
    pub min_e0: f64,
}

pub fn thm3_side_conditions(law: &dyn LocalLaw, rho0: &GridField, u0: &GridField) -> Result<SideConditionReport> {
    if !rho0.same_grid(u0) {
        return Err(Error::DomainMismatch("rho0 and u0 live on different grids".into()));
    }
    let rho_x = rho0.derivative();
    let u_x = u0.derivative();
    let u_xx = u0.second_derivative();
    let n = rho0.n();
    // far-field clamping distorts the outermost line cells
    let range = if rho0.is_torus() { 0..n } else { 1..n.saturating_sub(1) };
    if range.is_empty() {
        return Err(Error::InvalidParameter("side conditions need at least three samples".into()));
    }
    let minmax = |acc: (f64, f64), v: f64| (acc.0.min(v), acc.1.max(v));
    let empty = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut rfrr, mut fuu, mut rx, mut curv) = (empty, empty, empty, empty);
    let mut min_e0 = f64::INFINITY;
    for i in range {
        let (r, u) = (rho0.values()[i], u0.values()[i]);
        let dr = 1e-4 * r.abs().max(1.0);
        let du = 1e-4 * u.abs().max(1.0);
        let rf = |rr: f64| rr * law.f(rr, u);
        rfrr = minmax(rfrr, (rf(r + dr) - 2.0 * rf(r) + rf(r - dr)) / (dr * dr));
        fuu = minmax(fuu, (law.f(r, u + du) - 2.0 * law.f(r, u) + law.f(r, u - du)) / (du * du));
        rx = minmax(rx, rho_x.values()[i]);
        curv = minmax(curv, u_xx.values()[i] + rho_x.values()[i]);
        min_e0 = min_e0.min(u_x.values()[i] + r);
    }
    let set1 = rfrr.0 >= -SIDE_TOL && fuu.1 <= SIDE_TOL && rx.0 >= -SIDE_TOL && curv.0 >= -SIDE_TOL;
    let set2 = rfrr.1 <= SIDE_TOL && fuu.0 >= -SIDE_TOL && rx.1 <= SIDE_TOL && curv.1 <= SIDE_TOL;
    Ok(SideConditionReport {
        base: min_e0 >= -SIDE_TOL,
        set1,
        set2,
        rho_f_rr: rfrr,
        f_uu: fuu,
        rho0x: rx,
        curvature: curv,
        min_e0,
    })
}

/// Everything the threshold layer can say about one configuration.
#[derive(Debug, Clone, Serialize)]
pub struct ThresholdReport {
    pub system: String,
    pub regime: Option<RegimeLabel>,
    pub lambda: Option<f64>,
    pub z: Option<ZParams>,
    pub admissibility: Option<Admissibility>,
    pub global: Verdict,
    pub pointwise: Vec<(f64, Verdict)>,
    pub notes: Vec<String>,
}

impl ThresholdReport {
    /// `key=value` lines, one per field, in a fixed order.
    pub fn to_key_values(&self) -> String {
        let mut out = String::new();
        let mut put = |k: &str, v: String| {
            out.push_str(k);
            out.push('=');
            out.push_str(&v);
            out.push('\n');
        };
        put("system", self.system.clone());
        match &self.regime {
            Some(r) => {
                put("regime", r.regime.to_string());
                put("flavor", format!("{:?}", r.flavor).to_lowercase());
                put("s_lower", r.s_lower.to_string());
                put("s_upper", r.s_upper.to_string());
            }
            None => put("regime", "none".into()),
        }
        put("lambda", self.lambda.map_or("none".into(), |l| l.to_string()));
        if let Some(z) = &self.z {
            put("z_hat", z.z_hat.to_string());
            put("z_tilde", z.z_tilde.to_string());
        }
        if let Some(a) = &self.admissibility {
            put("lhs", a.lhs.to_string());
            put("rhs", a.rhs.to_string());
            put("admissible", if a.evaluable { a.admissible.to_string() } else { "unclassified".into() });
        }
        put("global_verdict", self.global.to_string());
        let count = |v: Verdict| self.pointwise.iter().filter(|p| p.1 == v).count();
        put("points", self.pointwise.len().to_string());
        for v in [Verdict::Subcritical, Verdict::Critical, Verdict::Supercritical, Verdict::Unclassified] {
            put(&format!("points_{v}"), count(v).to_string());
        }
        for (i, note) in self.notes.iter().enumerate() {
            put(&format!("note_{i}"), note.clone());
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params_for_lambda(lambda: f64) -> SystemParams {
        // lambda^2 c = 4k with c = 1
        SystemParams::new(lambda * lambda / 4.0, 1.0).unwrap()
    }

    #[test]
    fn bounded_regime_examples() {
        let p = params_for_lambda(2f64.sqrt());
        let weak = KernelStats::bounded(0.25, 0.75).unwrap();
        assert_eq!(classify_regime(&weak, &p, Flavor::Bounded).unwrap().regime, Regime::Weak);
        let strong = KernelStats::bounded(1.5, 2.0).unwrap();
        assert_eq!(classify_regime(&strong, &p, Flavor::Bounded).unwrap().regime, Regime::Strong);
        let medium = KernelStats::bounded(1.0, 2.0).unwrap();
        assert_eq!(classify_regime(&medium, &p, Flavor::Bounded).unwrap().regime, Regime::Medium);
    }

    #[test]
    fn l1_regime_examples() {
        let s = KernelStats::l1(2.0, 0.95).unwrap();
        let r = classify_regime(&s, &params_for_lambda(4.0), Flavor::L1).unwrap();
        assert_eq!(r.regime, Regime::Weak);
        let r = classify_regime(&s, &params_for_lambda(2f64.sqrt()), Flavor::L1).unwrap();
        assert_eq!(r.regime, Regime::Strong);
    }

    #[test]
    fn regimes_need_positive_k() {
        let s = KernelStats::bounded(0.1, 0.2).unwrap();
        let p = SystemParams::new(0.0, 1.0).unwrap();
        assert!(matches!(classify_regime(&s, &p, Flavor::Bounded), Err(Error::RegimeUndefined(_))));
    }

    #[test]
    fn branch_factor_limits_and_divergence() {
        assert_eq!(branch_factor(ZValue::Real(0.0)).unwrap(), 1.0);
        assert_eq!(branch_factor(ZValue::Infinite).unwrap(), 0.0);
        assert!(matches!(branch_factor(ZValue::Imag(1.0)), Err(Error::BranchDivergence(_))));
    }

    /// Maclaurin series of arctan(z)/z, an evaluation path independent of `atan`.
    fn atan_over_z_series(z: f64) -> f64 {
        // valid for |z| > 1 through arctan(z) = pi/2 - arctan(1/z)
        let series = |w: f64| (0..400).map(|k| (-1f64).powi(k) * w.powi(2 * k) / (2 * k + 1) as f64).sum::<f64>();
        if z.abs() <= 1.0 {
            series(z)
        } else {
            (PI / 2.0 - series(1.0 / z) / z) / z
        }
    }

    #[test]
    fn branch_factor_at_weak_example_z() {
        let z = ZValue::from_ratio(2f64.sqrt(), 0.75);
        let ZValue::Real(zh) = z else { panic!("expected real branch") };
        // high-precision value: 1.598610507770906513865...
        assert!((zh - 1.5986105077709065).abs() < 1e-14);
        let b = branch_factor(z).unwrap();
        assert!((b - atan_over_z_series(zh)).abs() < 1e-13);
        // frozen 40-digit value 0.63292869391980184356...
        assert!((b - 0.632_928_693_919_801_8).abs() < 1e-14);
    }

    #[test]
    fn weak_admissibility_matches_high_precision() {
        let p = params_for_lambda(2f64.sqrt());
        let s = KernelStats::bounded(0.25, 0.75).unwrap();
        let a = admissibility(&s, &p, Regime::Weak, Flavor::Bounded).unwrap();
        assert_eq!(a.lhs, 0.5);
        // 40-digit evaluation: 0.78113498521748768535...
        assert!((a.rhs - 0.781_134_985_217_487_7).abs() < 1e-13);
        assert!(a.admissible && a.evaluable);
    }

    #[test]
    fn medium_admissibility_uses_imaginary_branch() {
        let p = params_for_lambda(2f64.sqrt());
        let s = KernelStats::bounded(1.0, 2.0).unwrap();
        let a = admissibility(&s, &p, Regime::Medium, Flavor::Bounded).unwrap();
        // 40-digit evaluation: 2.35742668402120439594...
        assert!((a.rhs - 2.357_426_684_021_204_4).abs() < 1e-12);
        assert_eq!(a.lhs, 1.0);
        assert!(a.admissible);
    }

    #[test]
    fn l1_weak_admissibility() {
        let s = KernelStats::l1(2.0, 0.95).unwrap();
        let a = admissibility(&s, &params_for_lambda(4.0), Regime::Weak, Flavor::L1).unwrap();
        assert!((a.lhs - 0.4).abs() < 1e-14);
        // 40-digit evaluation: 3.08309188938413213748...
        assert!((a.rhs - 3.083_091_889_384_132).abs() < 1e-12);
    }

    #[test]
    fn constant_kernels_have_zero_oscillation() {
        let p = params_for_lambda(3.0);
        let s = KernelStats::bounded(1.0, 1.0).unwrap();
        let a = admissibility(&s, &p, Regime::Weak, Flavor::Bounded).unwrap();
        assert_eq!(a.lhs, 0.0);
        assert!(a.rhs > 0.0 && a.admissible);
        let s = KernelStats::l1(1.0, 0.5).unwrap();
        let a = admissibility(&s, &p, Regime::Weak, Flavor::L1).unwrap();
        assert_eq!(a.lhs, 0.0);
        assert!(a.admissible);
    }

    #[test]
    fn strong_regime_needs_no_condition() {
        let p = params_for_lambda(1.0);
        let s = KernelStats::bounded(1.5, 2.0).unwrap();
        let a = admissibility(&s, &p, Regime::Strong, Flavor::Bounded).unwrap();
        assert!(a.admissible);
        assert_eq!(a.lhs, 0.0);
    }

    #[test]
    fn imaginary_z_tilde_is_unclassified() {
        // forcing the weak formula onto strong-regime data puts z_tilde on the imaginary branch
        let p = params_for_lambda(1.0);
        let s = KernelStats::bounded(1.5, 2.0).unwrap();
        let a = admissibility(&s, &p, Regime::Medium, Flavor::Bounded).unwrap();
        assert!(!a.evaluable && !a.admissible);
    }

    #[test]
    fn ep_pointwise_examples() {
        assert_eq!(ep_pointwise(0.0, 1.0), Verdict::Subcritical);
        assert_eq!(ep_pointwise(-2.0, 2.0), Verdict::Critical);
        assert_eq!(ep_pointwise(-3.0, 2.0), Verdict::Supercritical);
        assert_eq!(ep_pointwise(0.0, 0.0), Verdict::Subcritical);
        assert_eq!(ep_pointwise(-0.1, 0.0), Verdict::Supercritical);
    }

    #[test]
    fn relax_pointwise_examples() {
        assert_eq!(relax_pointwise(-1.0, 2.0), Verdict::Subcritical);
        assert_eq!(relax_pointwise(-1.0, 1.0), Verdict::Subcritical);
        assert_eq!(relax_pointwise(-2.0, 1.0), Verdict::Supercritical);
    }

    #[test]
    fn ea_examples() {
        use crate::grid::Domain;
        assert_eq!(ea_global_check(&GridField::torus(vec![1.0; 8])), Verdict::Subcritical);
        let mut v = vec![1.0; 8];
        v[3] = 0.0;
        assert_eq!(ea_global_check(&GridField::torus(v)), Verdict::Unclassified);
        let g = GridField::from_fn(Domain::Torus, 64, |x| 0.1 + 0.05 * (2.0 * PI * x).sin());
        assert_eq!(ea_global_check(&g), Verdict::Subcritical);
    }

    #[test]
    fn density_bound_examples() {
        let f = |u: f64| u - 1.0;
        assert!((thm1_density_bound(&f, 0.3, 2.0, 0.3).unwrap() - 2.0).abs() < 1e-15);
        // closed form: rho0 * e^{u - u0}
        let b = thm1_density_bound(&f, 0.3, 2.0, 1.1).unwrap();
        assert!((b - 2.0 * (0.8f64).exp()).abs() < 1e-10);
        // f = -u, u0 = 1, u = 0.5: integral (1/2) ln 2, bound = sqrt(2) rho0
        let f = |u: f64| -u;
        let b = thm1_density_bound(&f, 1.0, 1.5, 0.5).unwrap();
        assert!((b - 1.5 * 2f64.sqrt()).abs() < 1e-10, "{b}");
    }

    #[test]
    fn density_bound_detects_degeneracy() {
        let f = |u: f64| -u;
        assert!(matches!(thm1_density_bound(&f, 1.0, 1.0, -0.5), Err(Error::HyperbolicityDegenerate(_))));
        let f = |u: f64| u;
        assert!(thm1_density_bound(&f, 1.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn side_conditions_examples() {
        use crate::grid::Domain;
        use crate::laws::PolynomialLaw;
        let d = Domain::Line { half_width: 1.0 };
        // linear f = -u, increasing rho0, u0 with u0xx + rho0x >= 0
        let law = PolynomialLaw::affine_u(0.0, -1.0);
        let rho0 = GridField::from_fn(d, 64, |x| 1.0 + 0.1 * x);
        let u0 = GridField::from_fn(d, 64, |x| 0.2 * x * x);
        let r = thm3_side_conditions(&law, &rho0, &u0).unwrap();
        assert!(r.set1 && r.base);
        assert!(r.rho_f_rr.0.abs() < 1e-6 && r.f_uu.1.abs() < 1e-6);

        // f = u^2 (f_uu > 0) with rho0x of both signs: neither set
        let law = PolynomialLaw { uu: 1.0, ..Default::default() };
        let rho0 = GridField::from_fn(d, 64, |x| 1.0 + 0.1 * (3.0 * x).sin());
        let r = thm3_side_conditions(&law, &rho0, &u0).unwrap();
        assert!(!r.set1 && !r.set2);

        // f = rho - u: (rho f)_rr = 2, f_uu = 0
        let law = PolynomialLaw { rho: 1.0, u: -1.0, ..Default::default() };
        let rho0 = GridField::from_fn(d, 64, |x| 1.0 + 0.1 * x);
        let convex = GridField::from_fn(d, 64, |x| 0.5 * x * x);
        let r = thm3_side_conditions(&law, &rho0, &convex).unwrap();
        assert!((r.rho_f_rr.0 - 2.0).abs() < 1e-5);
        assert!(r.set1);
        let concave = GridField::from_fn(d, 64, |x| -0.5 * x * x);
        let r = thm3_side_conditions(&law, &rho0, &concave).unwrap();
        assert!(!r.set1, "u0xx + rho0x = -0.9 < 0 must fail set 1");
    }

    #[test]
    fn report_key_values_are_stable() {
        let report = ThresholdReport {
            system: "ep".into(),
            regime: None,
            lambda: None,
            z: None,
            admissibility: None,
            global: Verdict::Subcritical,
            pointwise: vec![(0.0, Verdict::Subcritical)],
            notes: vec![],
        };
        let text = report.to_key_values();
        assert!(text.starts_with("system=ep\nregime=none\n"));
        assert!(text.contains("points_subcritical=1\n"));
    }
}
