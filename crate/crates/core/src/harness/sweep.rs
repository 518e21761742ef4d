//! Phase-diagram sweeps over one or two parameters.

use std::fs;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;

use super::config::{Axis, ExperimentConfig};
use super::run::{create_dir, simulate, theory, write_json, Theory};
use crate::detectors::{write_outcomes, OutcomeDiagnostics, OutcomeKind, RunOutcome};
use crate::thresholds::Verdict;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PhaseCell {
    /// Indices along the first and second axis (0 for a missing axis).
    pub i: usize,
    pub j: usize,
    pub values: Vec<f64>,
    pub outcome: RunOutcome,
    pub theory: Theory,
}

impl PhaseCell {
    /// Whether the empirical label agrees with the theory; `None` when the
    /// theory makes no sharp prediction or the run was indeterminate.
    pub fn agrees(&self) -> Option<bool> {
        let expected = match self.theory.verdict {
            Verdict::Subcritical => OutcomeKind::GlobalSmooth,
            Verdict::Supercritical => OutcomeKind::Blowup,
            Verdict::Critical | Verdict::Unclassified => return None,
        };
        match self.outcome.kind {
            OutcomeKind::Indeterminate => None,
            kind => Some(kind == expected),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct AgreementStats {
    pub cells: usize,
    pub indeterminate: usize,
    /// Cells with a sharp theoretical verdict and a determinate outcome.
    pub compared: usize,
    pub agree: usize,
    /// Disagreements in cells whose four neighbours share their theoretical verdict.
    pub disagree_off_boundary: usize,
    /// Compared cells with `|margin| > band`.
    pub outside_band: usize,
    pub agree_outside_band: usize,
    /// Largest relative error of fitted blowup times against the theory.
    pub max_t_c_rel_error: Option<f64>,
}

impl AgreementStats {
    pub fn agreement(&self) -> f64 {
        if self.compared == 0 {
            f64::NAN
        } else {
            self.agree as f64 / self.compared as f64
        }
    }

    pub fn agreement_outside_band(&self) -> f64 {
        if self.outside_band == 0 {
            f64::NAN
        } else {
            self.agree_outside_band as f64 / self.outside_band as f64
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PhaseDiagram {
    pub axes: Vec<Axis>,
    pub band: f64,
    /// Row-major in `(i, j)`.
    pub cells: Vec<PhaseCell>,
    pub stats: AgreementStats,
}

impl PhaseDiagram {
    pub fn cell(&self, i: usize, j: usize) -> &PhaseCell {
        let nj = self.axes.get(1).map_or(1, |a| a.count);
        &self.cells[i * nj + j]
    }
}

fn failed(cfg: &ExperimentConfig, note: String) -> RunOutcome {
    RunOutcome {
        kind: OutcomeKind::Indeterminate,
        horizon: cfg.horizon,
        t_c: None,
        x_c: None,
        quality: None,
        diagnostics: OutcomeDiagnostics { max_grad: f64::NAN, min_rho: f64::NAN, max_rho: f64::NAN },
        bound_flags: Vec::new(),
        note,
    }
}

fn run_cell(base: &ExperimentConfig, axes: &[Axis], i: usize, j: usize) -> PhaseCell {
    let mut values = vec![axes[0].values()[i]];
    if let Some(a) = axes.get(1) {
        values.push(a.values()[j]);
    }
    let unknown = Theory { verdict: Verdict::Unclassified, margin: f64::NAN, t_c: None };
    let cfg = axes.iter().zip(&values).try_fold(base.clone(), |c, (a, v)| c.with_param(&a.param, *v));
    let cfg = match cfg {
        Ok(c) => c,
        Err(e) => return PhaseCell { i, j, values, outcome: failed(base, e.to_string()), theory: unknown },
    };
    let theory = theory(&cfg).unwrap_or(unknown);
    let outcome = match catch_unwind(AssertUnwindSafe(|| simulate(&cfg))) {
        Ok(Ok(r)) => r.outcome,
        Ok(Err(e)) => failed(&cfg, e.to_string()),
        Err(_) => failed(&cfg, "cell panicked".into()),
    };
    PhaseCell { i, j, values, outcome, theory }
}

fn statistics(cells: &[PhaseCell], ni: usize, nj: usize, band: f64) -> AgreementStats {
    let mut s = AgreementStats { cells: cells.len(), ..Default::default() };
    let at = |i: usize, j: usize| &cells[i * nj + j];
    for c in cells {
        if c.outcome.kind == OutcomeKind::Indeterminate {
            s.indeterminate += 1;
        }
        if let (Some(t), Some(t_th)) = (c.outcome.t_c, c.theory.t_c) {
            if c.outcome.kind == OutcomeKind::Blowup {
                let err = (t - t_th).abs() / t_th;
                s.max_t_c_rel_error = Some(s.max_t_c_rel_error.map_or(err, |m: f64| m.max(err)));
            }
        }
        let Some(ok) = c.agrees() else { continue };
        s.compared += 1;
        s.agree += ok as usize;
        let mut neighbours = Vec::new();
        if c.i > 0 {
            neighbours.push(at(c.i - 1, c.j));
        }
        if c.i + 1 < ni {
            neighbours.push(at(c.i + 1, c.j));
        }
        if c.j > 0 {
            neighbours.push(at(c.i, c.j - 1));
        }
        if c.j + 1 < nj {
            neighbours.push(at(c.i, c.j + 1));
        }
        let on_boundary = neighbours.iter().any(|n| n.theory.verdict != c.theory.verdict);
        if !ok && !on_boundary {
            s.disagree_off_boundary += 1;
        }
        if c.theory.margin.abs() > band {
            s.outside_band += 1;
            s.agree_outside_band += ok as usize;
        }
    }
    s
}

/// Runs every cell on a pool of `jobs` workers. Cells are labelled in
/// row-major order whatever the pool size, and failing cells become
/// indeterminate without stopping the sweep.
pub fn phase_diagram(cfg: &ExperimentConfig, jobs: Option<usize>) -> Result<PhaseDiagram> {
    let sweep = cfg.sweep.as_ref().ok_or_else(|| Error::Config("phase-diagram needs a [sweep] section".into()))?;
    let axes = sweep.axes.clone();
    let ni = axes[0].count;
    let nj = axes.get(1).map_or(1, |a| a.count);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.unwrap_or(sweep.jobs).max(1))
        .build()
        .map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))?;
    let indices: Vec<(usize, usize)> = (0..ni).flat_map(|i| (0..nj).map(move |j| (i, j))).collect();
    let cells: Vec<PhaseCell> = pool.install(|| indices.par_iter().map(|&(i, j)| run_cell(cfg, &axes, i, j)).collect());
    let stats = statistics(&cells, ni, nj, sweep.band);
    Ok(PhaseDiagram { axes, band: sweep.band, cells, stats })
}

#[derive(Serialize)]
struct SweepManifest<'a> {
    tool: &'static str,
    version: &'static str,
    command: &'static str,
    config: &'a ExperimentConfig,
    axes: &'a [Axis],
    stats: &'a AgreementStats,
    agreement: f64,
    agreement_outside_band: f64,
    files: [&'static str; 3],
}

/// Writes `phase_diagram.csv`, `outcomes.csv` and `manifest.json`.
pub fn write_phase_diagram(cfg: &ExperimentConfig, pd: &PhaseDiagram, dir: &Path) -> Result<()> {
    create_dir(dir)?;
    let mut w = csv::Writer::from_path(dir.join("phase_diagram.csv"))?;
    let mut header = vec!["cell".to_string(), "i".into(), "j".into()];
    header.extend(pd.axes.iter().map(|a| a.param.clone()));
    header.extend(
        ["kind", "theory", "agrees", "margin", "t_c", "t_c_theory", "x_c", "quality", "bound_flags", "note"]
            .map(String::from),
    );
    w.write_record(&header)?;
    let opt = |v: Option<f64>| v.map_or(String::new(), |v| v.to_string());
    for (k, c) in pd.cells.iter().enumerate() {
        let mut row = vec![k.to_string(), c.i.to_string(), c.j.to_string()];
        row.extend(c.values.iter().map(|v| v.to_string()));
        row.extend([
            c.outcome.kind.to_string(),
            c.theory.verdict.to_string(),
            c.agrees().map_or(String::new(), |a| a.to_string()),
            c.theory.margin.to_string(),
            opt(c.outcome.t_c),
            opt(c.theory.t_c),
            opt(c.outcome.x_c),
            opt(c.outcome.quality),
            c.outcome.bound_flags.join(";"),
            c.outcome.note.clone(),
        ]);
        w.write_record(&row)?;
    }
    w.flush()?;
    let rows: Vec<(String, RunOutcome)> =
        pd.cells.iter().enumerate().map(|(k, c)| (format!("cell_{k:04}"), c.outcome.clone())).collect();
    write_outcomes(fs::File::create(dir.join("outcomes.csv"))?, &rows)?;
    let manifest = SweepManifest {
        tool: "ct-lab",
        version: env!("CARGO_PKG_VERSION"),
        command: "phase-diagram",
        config: cfg,
        axes: &pd.axes,
        stats: &pd.stats,
        agreement: pd.stats.agreement(),
        agreement_outside_band: pd.stats.agreement_outside_band(),
        files: ["phase_diagram.csv", "outcomes.csv", "manifest.json"],
    };
    write_json(&dir.join("manifest.json"), &manifest)
}
