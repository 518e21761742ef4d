//! Outcome classification, blowup-time fits and bound checks on finished runs.

use std::fmt;

use serde::Serialize;

use crate::characteristics::{CharTrajectory, EnsembleRun, EpState, Termination};
use crate::eulerian::FieldTimeline;
use crate::{Error, Result};

/// Snapshots used by the blowup fit.
pub const FIT_WINDOW: usize = 8;
/// Largest accepted relative RMS residual of the fit.
pub const FIT_QUALITY_MAX: f64 = 0.05;
/// Default guard for characteristic ODE states.
pub const STATE_GUARD: f64 = 1e12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum OutcomeKind {
    GlobalSmooth,
    Blowup,
    Indeterminate,
}

impl OutcomeKind {
    pub fn as_str(self) -> &'static str {
        match self {
            OutcomeKind::GlobalSmooth => "global-smooth",
            OutcomeKind::Blowup => "blowup",
            OutcomeKind::Indeterminate => "indeterminate",
        }
    }
}

impl fmt::Display for OutcomeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OutcomeDiagnostics {
    pub max_grad: f64,
    pub min_rho: f64,
    pub max_rho: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunOutcome {
    pub kind: OutcomeKind,
    /// Horizon reached (global runs) or end of the evidence (others).
    pub horizon: f64,
    pub t_c: Option<f64>,
    pub x_c: Option<f64>,
    pub quality: Option<f64>,
    pub diagnostics: OutcomeDiagnostics,
    /// `name=ok` or `name=violated` per checked bound.
    pub bound_flags: Vec<String>,
    pub note: String,
}

/// `(t, max|u_x|, location)` samples of any run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradientPoint {
    pub t: f64,
    pub m: f64,
    pub x: Option<f64>,
    pub min_rho: f64,
    pub max_rho: f64,
}

/// Borrowed view of the run types the detectors understand.
#[derive(Debug, Clone, Copy)]
pub enum TimelineRef<'a> {
    Ep(&'a CharTrajectory<EpState>),
    Ensemble(&'a EnsembleRun),
    Field(&'a FieldTimeline),
}

impl<'a> From<&'a CharTrajectory<EpState>> for TimelineRef<'a> {
    fn from(t: &'a CharTrajectory<EpState>) -> Self {
        TimelineRef::Ep(t)
    }
}

impl<'a> From<&'a EnsembleRun> for TimelineRef<'a> {
    fn from(t: &'a EnsembleRun) -> Self {
        TimelineRef::Ensemble(t)
    }
}

impl<'a> From<&'a FieldTimeline> for TimelineRef<'a> {
    fn from(t: &'a FieldTimeline) -> Self {
        TimelineRef::Field(t)
    }
}

impl<'a> TimelineRef<'a> {
    pub fn termination(self) -> &'a Termination {
        match self {
            TimelineRef::Ep(t) => &t.termination,
            TimelineRef::Ensemble(r) => &r.trajectory.termination,
            TimelineRef::Field(f) => &f.termination,
        }
    }

    pub fn gradient_series(self) -> Vec<GradientPoint> {
        match self {
            TimelineRef::Ep(t) => t
                .states
                .iter()
                .map(|s| GradientPoint { t: s.t, m: s.g.abs(), x: None, min_rho: s.rho, max_rho: s.rho })
                .collect(),
            TimelineRef::Ensemble(r) => r
                .trajectory
                .times
                .iter()
                .zip(&r.trajectory.states)
                .map(|(&t, s)| GradientPoint {
                    t,
                    m: s.max_grad,
                    x: Some(s.x_at_max),
                    min_rho: s.min_rho,
                    max_rho: s.max_rho,
                })
                .collect(),
            TimelineRef::Field(f) => f
                .series
                .iter()
                .map(|p| GradientPoint {
                    t: p.t,
                    m: p.max_grad,
                    x: Some(p.x_at_max),
                    min_rho: p.min_rho,
                    max_rho: p.max_rho,
                })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BlowupFit {
    pub t_c: f64,
    /// Slope `a` of `1/m = a (t_c - t)`.
    pub rate: f64,
    /// RMS residual of `1/m` relative to its range over the window.
    pub quality: f64,
}

/// Least-squares fit of `1/m_i = a (t_c - t_i)`.
pub fn fit_blowup_time(times: &[f64], m: &[f64]) -> Result<BlowupFit> {
    if times.len() != m.len() || times.len() < 3 {
        return Err(Error::TooFewSnapshots(times.len().min(m.len())));
    }
    if m.windows(2).any(|w| !(w[1] > w[0])) || times.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::NonMonotone);
    }
    let y: Vec<f64> = m.iter().map(|v| 1.0 / v).collect();
    let k = times.len() as f64;
    let tm = times.iter().sum::<f64>() / k;
    let ym = y.iter().sum::<f64>() / k;
    let (mut stt, mut sty) = (0.0, 0.0);
    for (t, v) in times.iter().zip(&y) {
        stt += (t - tm) * (t - tm);
        sty += (t - tm) * (v - ym);
    }
    let slope = sty / stt;
    let rms = (times.iter().zip(&y).map(|(t, v)| (v - ym - slope * (t - tm)).powi(2)).sum::<f64>() / k).sqrt();
    let range = y.iter().copied().fold(f64::NEG_INFINITY, f64::max) - y.iter().copied().fold(f64::INFINITY, f64::min);
    let quality = if range > 0.0 { rms / range } else { f64::INFINITY };
    // y = ym + slope (t - tm) vanishes at t_c
    let t_c = tm - ym / slope;
    Ok(BlowupFit { t_c, rate: -slope, quality })
}

/// Labels a finished run. `guard` is the gradient level a smooth run must stay below.
pub fn classify<'a>(timeline: impl Into<TimelineRef<'a>>, guard: f64) -> Result<RunOutcome> {
    let tl = timeline.into();
    let series = tl.gradient_series();
    if series.len() < 3 {
        return Err(Error::TooFewSnapshots(series.len()));
    }
    let diagnostics = OutcomeDiagnostics {
        max_grad: series.iter().fold(0.0, |a, p| a.max(p.m)),
        min_rho: series.iter().fold(f64::INFINITY, |a, p| a.min(p.min_rho)),
        max_rho: series.iter().fold(f64::NEG_INFINITY, |a, p| a.max(p.max_rho)),
    };
    let mut out = RunOutcome {
        kind: OutcomeKind::Indeterminate,
        horizon: tl.termination().end_time(),
        t_c: None,
        x_c: None,
        quality: None,
        diagnostics,
        bound_flags: Vec::new(),
        note: String::new(),
    };
    match tl.termination() {
        Termination::Completed { .. } => {
            if series.iter().all(|p| p.m.is_finite() && p.m < guard) {
                out.kind = OutcomeKind::GlobalSmooth;
            } else {
                out.note = "gradient exceeded the guard without terminating the run".into();
            }
        }
        Termination::Blowup { reason, t_est } => {
            // witness samples past the last resolved time say nothing about the blowup
            let resolved = series.iter().take_while(|p| p.t <= *t_est).count().max(3).min(series.len());
            let series = &series[..resolved];
            let window = &series[series.len().saturating_sub(FIT_WINDOW)..];
            let t: Vec<f64> = window.iter().map(|p| p.t).collect();
            let m: Vec<f64> = window.iter().map(|p| p.m).collect();
            match fit_blowup_time(&t, &m) {
                Ok(fit) => {
                    let t_last = t[t.len() - 1];
                    let span = t_last - t[0];
                    // the blowup time cannot be located more finely than the last step
                    let last_step = t_last - t[t.len() - 2];
                    // extrapolate at most twice the window or twice the time left at the last sample
                    let reach = (2.0 * span).max(2.0 / (fit.rate * m[m.len() - 1]));
                    out.quality = Some(fit.quality);
                    if fit.quality > FIT_QUALITY_MAX {
                        out.note = format!("{reason}: blowup fit rejected (quality {:.3e})", fit.quality);
                    } else if !(fit.rate > 0.0 && fit.t_c >= t_last - last_step && fit.t_c - t_last <= reach) {
                        out.note = format!("{reason}: inconsistent blowup time {}", fit.t_c);
                    } else {
                        out.kind = OutcomeKind::Blowup;
                        out.t_c = Some(fit.t_c);
                        out.x_c = window[window.len() - 1].x;
                        out.note = reason.to_string();
                    }
                }
                Err(e) => out.note = format!("{reason}: {e}"),
            }
        }
        Termination::Aborted { reason, .. } => out.note = reason.clone(),
    }
    Ok(out)
}

/// Analytic bounds that can be checked on a finished run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BoundSpec {
    /// `0 <= e <= upper` at every snapshot, with absolute slack `tol`.
    MBound { upper: f64, tol: f64 },
    /// `rho <= bound (1 + tol)`, using the characteristic-foot or the supremum numerator.
    DensityBound { tol: f64, sup: bool },
    /// `max|rho_x| <= C1 exp(C2 t) (1 + tol)` at every snapshot, with `C2 >= 0`
    /// the log-linear slope over the run and `C1` the smallest constant above the data.
    ExpEnvelope { tol: f64 },
    /// `rho` and `|G|` stay within `(1 + factor)` times their first-half
    /// maxima and `G` stays positive.
    EaUniform { factor: f64 },
}

impl BoundSpec {
    pub fn name(&self) -> &'static str {
        match self {
            BoundSpec::MBound { .. } => "m-bound",
            BoundSpec::DensityBound { sup: false, .. } => "density-bound-char",
            BoundSpec::DensityBound { sup: true, .. } => "density-bound-sup",
            BoundSpec::ExpEnvelope { .. } => "exp-envelope",
            BoundSpec::EaUniform { .. } => "ea-uniform",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundReport {
    pub name: String,
    pub satisfied: bool,
    /// One flag per checked snapshot (or sample).
    pub per_snapshot: Vec<bool>,
    /// Smallest margin; negative means violated.
    pub worst_margin: f64,
    pub worst_t: f64,
    pub worst_x: Option<f64>,
    pub detail: String,
}

impl BoundReport {
    fn new(name: &str) -> Self {
        Self {
            name: name.into(),
            satisfied: true,
            per_snapshot: Vec::new(),
            worst_margin: f64::INFINITY,
            worst_t: 0.0,
            worst_x: None,
            detail: String::new(),
        }
    }

    fn record(&mut self, ok: bool, margin: f64, t: f64, x: Option<f64>) {
        self.per_snapshot.push(ok);
        self.satisfied &= ok;
        if margin < self.worst_margin || margin.is_nan() {
            self.worst_margin = margin;
            self.worst_t = t;
            self.worst_x = x;
        }
    }
}

fn field<'a>(tl: TimelineRef<'a>, spec: &BoundSpec) -> Result<&'a FieldTimeline> {
    match tl {
        TimelineRef::Field(f) => Ok(f),
        _ => Err(Error::BoundNotApplicable(format!("{} needs a grid timeline", spec.name()))),
    }
}

pub fn check_bounds<'a>(timeline: impl Into<TimelineRef<'a>>, bounds: &[BoundSpec]) -> Result<Vec<BoundReport>> {
    let tl = timeline.into();
    bounds.iter().map(|b| check_bound(tl, b)).collect()
}

fn check_bound(tl: TimelineRef<'_>, spec: &BoundSpec) -> Result<BoundReport> {
    let mut rep = BoundReport::new(spec.name());
    match *spec {
        BoundSpec::MBound { upper, tol } => {
            let f = field(tl, spec)?;
            for s in &f.snapshots {
                let (imin, lo) = s.e.argmin();
                let (imax, hi) = s.e.values().iter().copied().enumerate().fold((0, f64::NEG_INFINITY), |b, (i, v)| {
                    if v > b.1 {
                        (i, v)
                    } else {
                        b
                    }
                });
                let (margin, x) = if lo < upper - hi { (lo, s.e.x(imin)) } else { (upper - hi, s.e.x(imax)) };
                rep.record(margin >= -tol, margin, s.t, Some(x));
            }
            rep.detail = format!("upper = {upper}");
        }
        BoundSpec::DensityBound { tol, sup } => {
            let f = field(tl, spec)?;
            let mut worst_ratio: f64 = 0.0;
            for s in &f.snapshots {
                let local = s
                    .local
                    .as_ref()
                    .ok_or_else(|| Error::BoundNotApplicable("density bound needs a local-law run".into()))?;
                if local.max_f_u > 0.0 {
                    return Err(Error::BoundNotApplicable(format!(
                        "density bound needs f_u <= 0, got {}",
                        local.max_f_u
                    )));
                }
                let bound = if sup { &local.bound_sup } else { &local.bound_char };
                let bound = bound
                    .as_ref()
                    .ok_or_else(|| Error::BoundNotApplicable("density bound needs a velocity-only law".into()))?;
                let mut margin = f64::INFINITY;
                let mut at = None;
                for (i, (&r, &b)) in s.rho.values().iter().zip(bound.values()).enumerate() {
                    // relative exceedance; NaN bounds count as violations
                    let m = if b.is_nan() { f64::NEG_INFINITY } else { 1.0 - r / b };
                    if m < margin {
                        margin = m;
                        at = Some(s.rho.x(i));
                    }
                }
                worst_ratio = worst_ratio.max(1.0 - margin);
                rep.record(margin >= -tol, margin, s.t, at);
            }
            rep.detail = format!("max rho/bound = {worst_ratio}");
        }
        BoundSpec::ExpEnvelope { tol } => {
            let f = field(tl, spec)?;
            let pts: Vec<(f64, f64)> = f.snapshots.iter().map(|s| (s.t, s.rho.derivative().max_abs())).collect();
            if pts.len() < 4 || pts.iter().any(|p| !(p.1 > 0.0)) {
                return Err(Error::BoundNotApplicable("envelope fit needs four snapshots with rho_x != 0".into()));
            }
            let (c1, c2) = envelope_fit(&pts);
            for &(t, v) in &pts {
                let env = c1 * (c2 * t).exp();
                let margin = 1.0 - v / env;
                // C1 comes from the same points, so allow rounding
                rep.record(margin >= -tol - 1e-12, margin, t, None);
            }
            rep.detail = format!("C1 = {c1}, C2 = {c2}");
        }
        BoundSpec::EaUniform { factor } => {
            let samples: Vec<(f64, f64, f64, f64)> = match tl {
                TimelineRef::Ensemble(r) => r
                    .trajectory
                    .times
                    .iter()
                    .zip(&r.trajectory.states)
                    .map(|(&t, s)| (t, s.max_rho, s.min_g, s.max_g))
                    .collect(),
                TimelineRef::Field(f) => {
                    f.snapshots.iter().map(|s| (s.t, s.rho.max(), s.aux.min(), s.aux.max())).collect()
                }
                TimelineRef::Ep(_) => return Err(Error::BoundNotApplicable("EA bounds need an alignment run".into())),
            };
            let half = samples.len() / 2;
            if half < 1 {
                return Err(Error::BoundNotApplicable("EA bounds need at least two samples".into()));
            }
            let rho_cap = (1.0 + factor) * samples[..half].iter().fold(0.0, |a: f64, s| a.max(s.1));
            let g_cap = (1.0 + factor) * samples[..half].iter().fold(0.0, |a: f64, s| a.max(s.2.abs()).max(s.3.abs()));
            for &(t, max_rho, min_g, max_g) in &samples[half..] {
                let margin = (1.0 - max_rho / rho_cap).min(1.0 - max_g.abs().max(min_g.abs()) / g_cap);
                let ok = margin >= 0.0 && min_g > 0.0;
                rep.record(ok, if min_g > 0.0 { margin } else { min_g.min(margin) }, t, None);
            }
            rep.detail = format!("rho <= {rho_cap}, |G| <= {g_cap}, G > 0");
        }
    }
    Ok(rep)
}

/// `C2 = max(0, slope of ln v)`, `C1` the smallest constant lying above every point.
fn envelope_fit(pts: &[(f64, f64)]) -> (f64, f64) {
    let k = pts.len() as f64;
    let tm = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let lm = pts.iter().map(|p| p.1.ln()).sum::<f64>() / k;
    let (mut stt, mut stl) = (0.0, 0.0);
    for &(t, v) in pts {
        stt += (t - tm) * (t - tm);
        stl += (t - tm) * (v.ln() - lm);
    }
    let c2 = if stt > 0.0 { (stl / stt).max(0.0) } else { 0.0 };
    let c1 = pts.iter().fold(0.0, |a: f64, &(t, v)| a.max(v * (-c2 * t).exp()));
    (c1, c2)
}

/// Applies bound reports to an outcome: every bound gets a flag, and a
/// violated bound turns a smooth verdict into an indeterminate one.
pub fn apply_bounds(outcome: &mut RunOutcome, reports: &[BoundReport]) {
    for r in reports {
        outcome.bound_flags.push(format!("{}={}", r.name, if r.satisfied { "ok" } else { "violated" }));
        if !r.satisfied && outcome.kind == OutcomeKind::GlobalSmooth {
            outcome.kind = OutcomeKind::Indeterminate;
            outcome.note = format!("{} violated (margin {:.3e} at t = {})", r.name, r.worst_margin, r.worst_t);
        }
    }
}

/// Writes outcome records with the columns
/// `run_id, kind, t_c, x_c, quality, bound_flags`; absent values are empty.
pub fn write_outcomes<W: std::io::Write>(w: W, rows: &[(String, RunOutcome)]) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["run_id", "kind", "t_c", "x_c", "quality", "bound_flags"])?;
    let opt = |v: Option<f64>| v.map_or(String::new(), |v| v.to_string());
    for (id, o) in rows {
        out.write_record([
            id.clone(),
            o.kind.to_string(),
            opt(o.t_c),
            opt(o.x_c),
            opt(o.quality),
            o.bound_flags.join(";"),
        ])?;
    }
    out.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::characteristics::integrate_ep;

    #[test]
    fn exact_model_recovers_blowup_time() {
        let t: Vec<f64> = (0..8).map(|i| 0.5 + 0.4 * i as f64 / 7.0).collect();
        let m: Vec<f64> = t.iter().map(|t| 1.0 / (1.0 - t)).collect();
        let fit = fit_blowup_time(&t, &m).unwrap();
        assert!((fit.t_c - 1.0).abs() < 1e-3);
        assert!(fit.quality < 1e-10);
    }

    #[test]
    fn irregular_series_is_rejected() {
        let t: Vec<f64> = (0..8).map(|i| i as f64).collect();
        let m = [1.0, 1.6, 1.62, 5.0, 5.1, 5.15, 9.0, 9.05];
        let fit = fit_blowup_time(&t, &m).unwrap();
        assert!(fit.quality > FIT_QUALITY_MAX, "{}", fit.quality);
        assert!(matches!(fit_blowup_time(&t, &[1.0, 2.0, 1.5, 3.0, 4.0, 5.0, 6.0, 7.0]), Err(Error::NonMonotone)));
    }

    #[test]
    fn ep_supercritical_characteristic_is_blowup() {
        let traj = integrate_ep(2.0, -3.0, 2.0, 1e-3).unwrap();
        let out = classify(&traj, STATE_GUARD).unwrap();
        assert_eq!(out.kind, OutcomeKind::Blowup, "{}", out.note);
        let exact = (3.0 - 5f64.sqrt()) / 2.0;
        assert!((out.t_c.unwrap() - exact).abs() < 0.02 * exact);
    }

    #[test]
    fn steady_characteristic_is_smooth() {
        let traj = integrate_ep(1.0, 2.0, 5.0, 1e-2).unwrap();
        assert_eq!(classify(&traj, STATE_GUARD).unwrap().kind, OutcomeKind::GlobalSmooth);
    }

    #[test]
    fn aborted_runs_are_indeterminate() {
        let mut traj = integrate_ep(1.0, 2.0, 1.0, 1e-2).unwrap();
        traj.termination = Termination::Aborted { t: 1.0, reason: "wall clock".into() };
        assert_eq!(classify(&traj, STATE_GUARD).unwrap().kind, OutcomeKind::Indeterminate);
        let short = integrate_ep(1.0, 2.0, 1e-2, 1e-2).unwrap();
        assert!(matches!(classify(&short, STATE_GUARD), Err(Error::TooFewSnapshots(2))));
    }

    #[test]
    fn violated_bound_downgrades_smooth_outcome() {
        let traj = integrate_ep(1.0, 2.0, 5.0, 1e-2).unwrap();
        let mut out = classify(&traj, STATE_GUARD).unwrap();
        let mut rep = BoundReport::new("m-bound");
        rep.record(true, 0.1, 0.0, None);
        rep.record(false, -0.5, 1.0, Some(0.25));
        apply_bounds(&mut out, &[rep.clone()]);
        assert_eq!(out.kind, OutcomeKind::Indeterminate);
        assert_eq!(out.bound_flags, vec!["m-bound=violated".to_string()]);
        assert_eq!((rep.worst_margin, rep.worst_t, rep.worst_x), (-0.5, 1.0, Some(0.25)));
    }

    #[test]
    fn outcome_rows_have_fixed_columns() {
        let traj = integrate_ep(2.0, -3.0, 2.0, 1e-3).unwrap();
        let mut out = classify(&traj, STATE_GUARD).unwrap();
        out.bound_flags = vec!["a=ok".into(), "b=violated".into()];
        let mut buf = Vec::new();
        write_outcomes(&mut buf, &[("r0".into(), out)]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("run_id,kind,t_c,x_c,quality,bound_flags"));
        let row: Vec<&str> = lines.next().unwrap().split(',').collect();
        assert_eq!((row[0], row[1], row[3], row[5]), ("r0", "blowup", "", "a=ok;b=violated"));
    }

    #[test]
    fn bounds_reject_wrong_timeline() {
        let traj = integrate_ep(1.0, 2.0, 1.0, 1e-2).unwrap();
        let err = check_bounds(&traj, &[BoundSpec::MBound { upper: 1.0, tol: 0.0 }]);
        assert!(matches!(err, Err(Error::BoundNotApplicable(_))));
    }

    fn bump_run(law: crate::laws::PolynomialLaw) -> crate::eulerian::FieldTimeline {
        use crate::grid::{Domain, GridField, InitialFields};
        let d = Domain::Line { half_width: 20.0 };
        let rho = GridField::from_fn(d, 256, |x| 1.0 + 0.3 * (-x * x).exp());
        let u = GridField::from_fn(d, 256, |x| 0.5 + 0.1 * (-x * x).exp());
        let opts = crate::eulerian::GridOptions { snapshot_interval: Some(0.5), ..Default::default() };
        crate::eulerian::solve_relax_local(&InitialFields::from_rho_u(rho, u), std::sync::Arc::new(law), 2.0, &opts)
            .unwrap()
    }

    #[test]
    fn envelope_covers_every_snapshot() {
        let tl = bump_run(crate::laws::PolynomialLaw::affine_u(0.0, -1.0));
        let rep = check_bounds(&tl, &[BoundSpec::ExpEnvelope { tol: 0.0 }]).unwrap();
        assert!(rep[0].satisfied, "{}", rep[0].detail);
        assert_eq!(rep[0].per_snapshot.len(), tl.snapshots.len());
    }

    #[test]
    fn density_bound_needs_nonincreasing_f() {
        let tl = bump_run(crate::laws::PolynomialLaw::affine_u(0.5, 1.0));
        let err = check_bounds(&tl, &[BoundSpec::DensityBound { tol: 0.05, sup: false }]);
        assert!(matches!(err, Err(Error::BoundNotApplicable(_))));
        let tl = bump_run(crate::laws::PolynomialLaw::affine_u(0.0, -1.0));
        assert!(check_bounds(&tl, &[BoundSpec::DensityBound { tol: 0.05, sup: false }]).unwrap()[0].satisfied);
    }
}
