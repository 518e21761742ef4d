//! Single runs: threshold report, simulation, outcome and artifacts.

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::Serialize;

use super::config::{ExperimentConfig, KernelSpec, Solver, SystemKind, TorusKernelSpec};
use crate::characteristics::{
    ep_blowup_time, integrate_ep, integrate_epa_ensemble, CharTrajectory, EnsembleOptions, EnsembleRun, EpState,
    EpaEnsemble, Termination,
};
use crate::detectors::{
    apply_bounds, check_bounds, classify, write_outcomes, BoundReport, BoundSpec, RunOutcome, TimelineRef, STATE_GUARD,
};
use crate::eulerian::{solve_epa, solve_relax, FieldTimeline, GridOptions, RelaxLaw};
use crate::grid::{GridField, InitialFields};
use crate::kernels::{periodic_convolve, validate_relax_kernel, TorusKernel};
use crate::laws::LocalLaw;
use crate::thresholds::{
    admissibility, classify_regime, ea_global_check, ep_pointwise, relax_pointwise, thm3_side_conditions, z_params,
    SystemParams, ThresholdReport, Verdict,
};
use crate::{Error, Result};

/// Slack on the `0 <= e <= M` check, relative to `max(1, M)`.
pub const M_BOUND_TOL: f64 = 1e-8;
/// Allowed relative excess of the density over its bound.
pub const DENSITY_BOUND_TOL: f64 = 0.05;
/// Growth allowed over the first-half maxima in the EA bound check.
pub const EA_BOUND_FACTOR: f64 = 0.1;

/// Theoretical side of a run: the verdict on its initial data, a signed
/// distance to the threshold and the predicted blowup time when known.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Theory {
    pub verdict: Verdict,
    /// `g0 + sqrt(2 rho0)` (ep), `min G0` (ea), `min e0` (relaxation); NaN otherwise.
    pub margin: f64,
    pub t_c: Option<f64>,
}

#[derive(Debug, Clone)]
pub enum RunTimeline {
    Ep(CharTrajectory<EpState>),
    Ensemble(EnsembleRun),
    Field(FieldTimeline),
}

impl RunTimeline {
    pub fn as_ref(&self) -> TimelineRef<'_> {
        match self {
            RunTimeline::Ep(t) => t.into(),
            RunTimeline::Ensemble(r) => r.into(),
            RunTimeline::Field(f) => f.into(),
        }
    }

    pub fn termination(&self) -> &Termination {
        self.as_ref().termination()
    }
}

#[derive(Debug, Clone)]
pub struct RunResult {
    pub outcome: RunOutcome,
    pub bounds: Vec<BoundReport>,
    pub theory: Theory,
    pub timeline: RunTimeline,
    pub warnings: Vec<String>,
}

fn point(cfg: &ExperimentConfig) -> (f64, f64) {
    (cfg.initial.params["rho0"], cfg.initial.params["g0"])
}

/// Initial fields of a spatial configuration.
pub fn initial_fields(cfg: &ExperimentConfig) -> Result<InitialFields> {
    cfg.initial.family.fields(&cfg.initial.params, cfg.grid.n, cfg.grid.half_width)
}

fn torus_kernel_spec(cfg: &ExperimentConfig) -> Result<&TorusKernelSpec> {
    match &cfg.kernel {
        Some(KernelSpec::Torus(k)) => Ok(k),
        _ => Err(Error::Config(format!("{} needs a torus kernel", cfg.system.as_str()))),
    }
}

fn local_law(cfg: &ExperimentConfig) -> Result<Arc<dyn LocalLaw>> {
    let law = cfg.law.ok_or_else(|| Error::Config("relax-local needs a law".into()))?;
    Ok(Arc::new(law))
}

fn relax_law(cfg: &ExperimentConfig) -> Result<RelaxLaw> {
    Ok(match (&cfg.system, &cfg.kernel) {
        (SystemKind::RelaxNonlocal, Some(KernelSpec::Relax(k))) => RelaxLaw::Nonlocal(k.build()?),
        (SystemKind::RelaxLocal, _) => RelaxLaw::Local(local_law(cfg)?),
        _ => return Err(Error::Config("relax-nonlocal needs a relaxation kernel".into())),
    })
}

fn e0_field(init: &InitialFields) -> GridField {
    init.ux.zip_map(&init.rho, |a, b| a + b)
}

/// Theoretical verdict without running anything.
pub fn theory(cfg: &ExperimentConfig) -> Result<Theory> {
    Ok(match cfg.system {
        SystemKind::Ep => {
            let (rho0, g0) = point(cfg);
            Theory { verdict: ep_pointwise(g0, rho0), margin: g0 + (2.0 * rho0).sqrt(), t_c: ep_blowup_time(rho0, g0) }
        }
        SystemKind::Epa => Theory { verdict: Verdict::Unclassified, margin: f64::NAN, t_c: None },
        SystemKind::Ea => {
            let init = initial_fields(cfg)?;
            let kernel = torus_kernel_spec(cfg)?.build(cfg.grid.n)?;
            let g0 = periodic_convolve(&kernel, &init.rho)?.zip_map(&init.ux, |s, ux| s + ux);
            Theory { verdict: ea_global_check(&g0), margin: g0.min(), t_c: None }
        }
        SystemKind::RelaxNonlocal | SystemKind::RelaxLocal => {
            let init = initial_fields(cfg)?;
            let verdict = Verdict::combine(
                init.ux.values().iter().zip(init.rho.values()).map(|(&ux, &r)| relax_pointwise(ux, r)),
            );
            Theory { verdict, margin: e0_field(&init).min(), t_c: None }
        }
    })
}

/// Threshold report for the configuration's system and initial data.
pub fn threshold_report(cfg: &ExperimentConfig) -> Result<ThresholdReport> {
    let mut report = ThresholdReport {
        system: cfg.system.as_str().to_string(),
        regime: None,
        lambda: None,
        z: None,
        admissibility: None,
        global: Verdict::Unclassified,
        pointwise: Vec::new(),
        notes: Vec::new(),
    };
    match cfg.system {
        SystemKind::Ep => {
            let (rho0, g0) = point(cfg);
            let v = ep_pointwise(g0, rho0);
            report.global = v;
            report.pointwise.push((0.0, v));
            if let Some(t) = ep_blowup_time(rho0, g0) {
                report.notes.push(format!("blowup time {t}"));
            }
        }
        SystemKind::Epa | SystemKind::Ea => {
            let init = initial_fields(cfg)?;
            let spec = torus_kernel_spec(cfg)?;
            let kernel = spec.build(cfg.grid.n)?;
            let c = init.rho.integral();
            let params = SystemParams::new(cfg.k, c)?;
            let stats = kernel.stats();
            report.notes.push(format!("c = {c}, ‖psi‖ = {}, gamma = {}", stats.l1_norm, stats.gamma));
            if cfg.system == SystemKind::Epa {
                let label = classify_regime(&stats, &params, spec.flavor)?;
                report.lambda = Some(label.lambda);
                report.z = Some(z_params(&stats, &params, spec.flavor)?);
                match admissibility(&stats, &params, label.regime, spec.flavor) {
                    Ok(a) => report.admissibility = Some(a),
                    Err(e) => report.notes.push(format!("admissibility not evaluable: {e}")),
                }
                report.regime = Some(label);
                report.pointwise = init.rho.xs().into_iter().map(|x| (x, Verdict::Unclassified)).collect();
                report.notes.push("subcritical sets have no closed form; use simulations to classify data".into());
            } else {
                let g0 = periodic_convolve(&kernel, &init.rho)?.zip_map(&init.ux, |s, ux| s + ux);
                report.global = ea_global_check(&g0);
                report.pointwise = (0..g0.n())
                    .map(|i| (g0.x(i), if g0.values()[i] > 0.0 { Verdict::Subcritical } else { Verdict::Unclassified }))
                    .collect();
                report.notes.push(format!("min G0 = {}", g0.min()));
            }
        }
        SystemKind::RelaxNonlocal | SystemKind::RelaxLocal => {
            let init = initial_fields(cfg)?;
            report.pointwise = (0..init.rho.n())
                .map(|i| (init.rho.x(i), relax_pointwise(init.ux.values()[i], init.rho.values()[i])))
                .collect();
            report.global = Verdict::combine(report.pointwise.iter().map(|p| p.1));
            report.notes.push(format!("min e0 = {}", e0_field(&init).min()));
            match relax_law(cfg)? {
                RelaxLaw::Nonlocal(q) => {
                    let v = validate_relax_kernel(&q);
                    report.notes.push(format!("kernel hypotheses {}", if v.passed() { "hold" } else { "fail" }));
                }
                RelaxLaw::Local(law) => {
                    let margin = init
                        .rho
                        .values()
                        .iter()
                        .zip(init.u.values())
                        .fold(f64::INFINITY, |m, (&r, &u)| m.min((law.f(r, u) - u).abs()));
                    report.notes.push(format!("hyperbolicity margin inf|f - u| = {margin}"));
                    let s = thm3_side_conditions(law.as_ref(), &init.rho, &init.u)?;
                    report
                        .notes
                        .push(format!("side conditions: base {}, first set {}, second set {}", s.base, s.set1, s.set2));
                }
            }
        }
    }
    Ok(report)
}

fn grid_options(cfg: &ExperimentConfig) -> GridOptions {
    GridOptions {
        cfl: cfg.grid.cfl,
        dt: cfg.grid.dt,
        snapshot_interval: cfg.output.snapshot_interval,
        gradient_guard: cfg.grid.gradient_guard,
        max_steps: cfg.grid.max_steps,
        convolution: cfg.grid.convolution,
        ..GridOptions::default()
    }
}

/// Runs the configured system and labels the outcome.
pub fn simulate(cfg: &ExperimentConfig) -> Result<RunResult> {
    let theory = theory(cfg)?;
    let mut bound_specs = Vec::new();
    let (timeline, guard) = match cfg.system {
        SystemKind::Ep => {
            let (rho0, g0) = point(cfg);
            let dt = cfg.grid.dt.unwrap_or(1e-3);
            (RunTimeline::Ep(integrate_ep(rho0, g0, cfg.horizon, dt)?), STATE_GUARD)
        }
        SystemKind::Epa | SystemKind::Ea => {
            let init = initial_fields(cfg)?;
            let kernel: TorusKernel = torus_kernel_spec(cfg)?.build(cfg.grid.n)?;
            let params = SystemParams::new(cfg.k, init.rho.integral())?;
            if cfg.system == SystemKind::Ea && theory.verdict == Verdict::Subcritical {
                bound_specs.push(BoundSpec::EaUniform { factor: EA_BOUND_FACTOR });
            }
            match cfg.grid.solver {
                Solver::Grid => {
                    let tl = solve_epa(&init, &kernel, params, cfg.horizon, &grid_options(cfg))?;
                    (RunTimeline::Field(tl), cfg.grid.gradient_guard)
                }
                Solver::Particles => {
                    let ens = EpaEnsemble::from_fields(&init.rho, &init.u, &init.ux, kernel, params)?;
                    let opts = EnsembleOptions {
                        dt: cfg.grid.dt.unwrap_or(1e-3),
                        snapshot_interval: cfg.output.snapshot_interval,
                        max_steps: cfg.grid.max_steps,
                        ..EnsembleOptions::default()
                    };
                    let guard = opts.guard;
                    (RunTimeline::Ensemble(integrate_epa_ensemble(&ens, cfg.horizon, &opts)?), guard)
                }
            }
        }
        SystemKind::RelaxNonlocal | SystemKind::RelaxLocal => {
            let init = initial_fields(cfg)?;
            let law = relax_law(cfg)?;
            let tl = solve_relax(&init, &law, cfg.horizon, &grid_options(cfg))?;
            if theory.verdict == Verdict::Subcritical {
                let e0 = e0_field(&init);
                let m = match &law {
                    RelaxLaw::Local(_) => init.rho.max().max(e0.max()),
                    RelaxLaw::Nonlocal(_) => tl.series.iter().fold(e0.max(), |m, p| m.max(p.max_rho)),
                };
                bound_specs.push(BoundSpec::MBound { upper: m, tol: M_BOUND_TOL * m.max(1.0) });
                if let RelaxLaw::Local(l) = &law {
                    if !l.depends_on_rho() {
                        bound_specs.push(BoundSpec::DensityBound { tol: DENSITY_BOUND_TOL, sup: false });
                        if tl.snapshots.len() >= 4 {
                            bound_specs.push(BoundSpec::ExpEnvelope { tol: 0.0 });
                        }
                    }
                }
            }
            (RunTimeline::Field(tl), cfg.grid.gradient_guard)
        }
    };
    let mut outcome = classify(timeline.as_ref(), guard)?;
    let mut bounds = Vec::new();
    for spec in bound_specs {
        match check_bounds(timeline.as_ref(), &[spec]) {
            Ok(mut r) => bounds.append(&mut r),
            Err(Error::BoundNotApplicable(_)) => {}
            Err(e) => return Err(e),
        }
    }
    apply_bounds(&mut outcome, &bounds);
    let warnings = match &timeline {
        RunTimeline::Field(f) => f.warnings.clone(),
        _ => Vec::new(),
    };
    Ok(RunResult { outcome, bounds, theory, timeline, warnings })
}

#[derive(Serialize)]
struct GridInfo {
    n: usize,
    dx: Option<f64>,
    cfl: f64,
    dt: Option<f64>,
}

#[derive(Serialize)]
struct RunManifest<'a> {
    tool: &'static str,
    version: &'static str,
    command: &'static str,
    scheme: &'static str,
    grid: GridInfo,
    config: &'a ExperimentConfig,
    termination: &'a Termination,
    steps: usize,
    outcome: &'a RunOutcome,
    theory: &'a Theory,
    bounds: &'a [BoundReport],
    warnings: &'a [String],
    files: Vec<String>,
}

fn scheme_name(cfg: &ExperimentConfig) -> &'static str {
    match (cfg.system, cfg.grid.solver) {
        (SystemKind::Ep, _) => "rk4-characteristic",
        (_, Solver::Particles) => "rk4-particle-ensemble",
        (SystemKind::Epa | SystemKind::Ea, _) => "muscl-minmod-rusanov-ssprk2-torus",
        _ => "muscl-minmod-rusanov-ssprk2-line",
    }
}

pub(crate) fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    Ok(())
}

pub(crate) fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

/// Writes `threshold_report.txt` and `pointwise.csv`.
pub fn write_threshold_report(report: &ThresholdReport, dir: &Path) -> Result<Vec<String>> {
    create_dir(dir)?;
    fs::write(dir.join("threshold_report.txt"), report.to_key_values())?;
    let mut w = csv::Writer::from_path(dir.join("pointwise.csv"))?;
    w.write_record(["x", "verdict"])?;
    for (x, v) in &report.pointwise {
        w.write_record([x.to_string(), v.to_string()])?;
    }
    w.flush()?;
    Ok(vec!["threshold_report.txt".into(), "pointwise.csv".into()])
}

#[derive(Serialize)]
struct ReportManifest<'a> {
    tool: &'static str,
    version: &'static str,
    command: &'static str,
    config: &'a ExperimentConfig,
    report: &'a ThresholdReport,
    files: [&'static str; 3],
}

/// Threshold report files plus a manifest, as emitted by `threshold-report`.
pub fn write_report_bundle(cfg: &ExperimentConfig, report: &ThresholdReport, dir: &Path) -> Result<()> {
    write_threshold_report(report, dir)?;
    let manifest = ReportManifest {
        tool: "ct-lab",
        version: env!("CARGO_PKG_VERSION"),
        command: "threshold-report",
        config: cfg,
        report,
        files: ["threshold_report.txt", "pointwise.csv", "manifest.json"],
    };
    write_json(&dir.join("manifest.json"), &manifest)
}

fn write_timeline(tl: &RunTimeline, dir: &Path, snapshots: bool) -> Result<Vec<String>> {
    let mut files = Vec::new();
    match tl {
        RunTimeline::Ep(t) => {
            let mut w = csv::Writer::from_path(dir.join("trajectory.csv"))?;
            w.write_record(["t", "rho", "g"])?;
            for s in &t.states {
                w.write_record([s.t.to_string(), s.rho.to_string(), s.g.to_string()])?;
            }
            w.flush()?;
            files.push("trajectory.csv".into());
        }
        RunTimeline::Ensemble(run) => {
            let mut w = csv::Writer::from_path(dir.join("trajectory.csv"))?;
            w.write_record(["t", "alpha", "x", "rho", "G", "u"])?;
            for snap in &run.snapshots {
                for p in &snap.particles {
                    w.write_record([snap.t, p.alpha, p.x, p.rho, p.g, p.u].map(|v| v.to_string()))?;
                }
            }
            w.flush()?;
            let mut w = csv::Writer::from_path(dir.join("series.csv"))?;
            w.write_record([
                "t", "max_grad", "x_at_max", "min_rho", "max_rho", "min_g", "max_g", "momentum", "residual",
            ])?;
            for (t, s) in run.trajectory.times.iter().zip(&run.trajectory.states) {
                w.write_record(
                    [*t, s.max_grad, s.x_at_max, s.min_rho, s.max_rho, s.min_g, s.max_g, s.momentum, s.residual]
                        .map(|v| v.to_string()),
                )?;
            }
            w.flush()?;
            files.extend(["trajectory.csv".into(), "series.csv".into()]);
        }
        RunTimeline::Field(f) => {
            let mut w = csv::Writer::from_path(dir.join("series.csv"))?;
            for p in &f.series {
                w.serialize(p)?;
            }
            w.flush()?;
            files.push("series.csv".into());
            if snapshots {
                let sdir = dir.join("snapshots");
                create_dir(&sdir)?;
                let mut index = csv::Writer::from_path(sdir.join("index.csv"))?;
                index.write_record(["file", "t", "relation_residual"])?;
                for (k, s) in f.snapshots.iter().enumerate() {
                    let name = format!("snapshot_{k:04}.csv");
                    let mut w = csv::Writer::from_path(sdir.join(&name))?;
                    w.write_record(["x", "rho", "u", "e", "aux"])?;
                    for i in 0..s.rho.n() {
                        w.write_record(
                            [s.rho.x(i), s.rho.values()[i], s.u.values()[i], s.e.values()[i], s.aux.values()[i]]
                                .map(|v| v.to_string()),
                        )?;
                    }
                    w.flush()?;
                    index.write_record([name.clone(), s.t.to_string(), s.relation_residual.to_string()])?;
                    files.push(format!("snapshots/{name}"));
                }
                index.flush()?;
                files.push("snapshots/index.csv".into());
            }
        }
    }
    Ok(files)
}

/// Summary returned by [`run`].
#[derive(Debug, Clone)]
pub struct RunSummary {
    pub dir: PathBuf,
    pub outcome: RunOutcome,
    pub report: ThresholdReport,
}

/// Simulates one configuration and writes every artifact into `dir`.
pub fn run(cfg: &ExperimentConfig, dir: &Path) -> Result<RunSummary> {
    let report = threshold_report(cfg)?;
    let result = simulate(cfg)?;
    create_dir(dir)?;
    let mut files = write_threshold_report(&report, dir)?;
    files.extend(write_timeline(&result.timeline, dir, cfg.output.snapshots)?);
    let outcomes = fs::File::create(dir.join("outcomes.csv"))?;
    write_outcomes(outcomes, &[("run".to_string(), result.outcome.clone())])?;
    files.push("outcomes.csv".into());
    let steps = match &result.timeline {
        RunTimeline::Field(f) => f.steps,
        RunTimeline::Ep(t) => t.len().saturating_sub(1),
        RunTimeline::Ensemble(r) => r.trajectory.len().saturating_sub(1),
    };
    let dx = match cfg.system {
        SystemKind::Ep => None,
        _ if cfg.initial.family.on_torus() => Some(1.0 / cfg.grid.n as f64),
        _ => Some(2.0 * cfg.grid.half_width / cfg.grid.n as f64),
    };
    files.extend(["warnings.txt".into(), "manifest.json".into()]);
    let manifest = RunManifest {
        tool: "ct-lab",
        version: env!("CARGO_PKG_VERSION"),
        command: "simulate",
        scheme: scheme_name(cfg),
        grid: GridInfo { n: cfg.grid.n, dx, cfl: cfg.grid.cfl, dt: cfg.grid.dt },
        config: cfg,
        termination: result.timeline.termination(),
        steps,
        outcome: &result.outcome,
        theory: &result.theory,
        bounds: &result.bounds,
        warnings: &result.warnings,
        files,
    };
    write_json(&dir.join("manifest.json"), &manifest)?;
    let mut log = String::new();
    for w in &result.warnings {
        log.push_str(w);
        log.push('\n');
    }
    fs::write(dir.join("warnings.txt"), log)?;
    Ok(RunSummary { dir: dir.to_path_buf(), outcome: result.outcome, report })
}
