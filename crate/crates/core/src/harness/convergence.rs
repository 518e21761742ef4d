//! Convergence of the EP characteristic integrator against the closed form.

use std::path::Path;

use serde::Serialize;

use super::run::{create_dir, write_json};
use crate::characteristics::{ep_closed_form, integrate_ep};
use crate::thresholds::{ep_pointwise, Verdict};
use crate::Result;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConvergenceRow {
    pub rho0: f64,
    pub g0: f64,
    pub dt: f64,
    /// `max|state - exact| / max|exact|` at the horizon; `None` for excluded points.
    pub error: Option<f64>,
    /// `log(e_prev / e) / log(dt_prev / dt)` against the previous row of the same point.
    pub order: Option<f64>,
    pub excluded: Option<Verdict>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceTable {
    pub horizon: f64,
    pub rows: Vec<ConvergenceRow>,
}

impl ConvergenceTable {
    /// Last observed order for one point.
    pub fn observed_order(&self, rho0: f64, g0: f64) -> Option<f64> {
        self.rows.iter().rev().find(|r| r.rho0 == rho0 && r.g0 == g0).and_then(|r| r.order)
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["rho0", "g0", "dt", "error", "order", "status"])?;
        let opt = |v: Option<f64>| v.map_or(String::new(), |v| v.to_string());
        for r in &self.rows {
            let status = match r.excluded {
                None => "ok".to_string(),
                Some(v) => format!("excluded-{v}"),
            };
            w.write_record([
                r.rho0.to_string(),
                r.g0.to_string(),
                r.dt.to_string(),
                opt(r.error),
                opt(r.order),
                status,
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

#[derive(Serialize)]
struct ConvergenceManifest<'a> {
    tool: &'static str,
    version: &'static str,
    command: &'static str,
    table: &'a ConvergenceTable,
    files: [&'static str; 2],
}

/// Writes `convergence.csv` and `manifest.json` into `dir`.
pub fn write_convergence(table: &ConvergenceTable, dir: &Path) -> Result<()> {
    create_dir(dir)?;
    table.write_csv(&dir.join("convergence.csv"))?;
    let manifest = ConvergenceManifest {
        tool: "ct-lab",
        version: env!("CARGO_PKG_VERSION"),
        command: "verify-closed-form",
        table,
        files: ["convergence.csv", "manifest.json"],
    };
    write_json(&dir.join("manifest.json"), &manifest)
}

/// Integrates every `(rho0, g0)` point with each `dt` and compares with the
/// closed form at `horizon`. Critical and supercritical points are listed but
/// not measured, since the closed form stops at the blowup time.
pub fn verify_closed_form(points: &[(f64, f64)], dts: &[f64], horizon: f64) -> Result<ConvergenceTable> {
    let mut rows = Vec::new();
    for &(rho0, g0) in points {
        let verdict = ep_pointwise(g0, rho0);
        if verdict != Verdict::Subcritical {
            rows.extend(dts.iter().map(|&dt| ConvergenceRow {
                rho0,
                g0,
                dt,
                error: None,
                order: None,
                excluded: Some(verdict),
            }));
            continue;
        }
        let exact = ep_closed_form(rho0, g0, horizon)?;
        let scale = exact.rho.abs().max(exact.g.abs());
        let mut prev: Option<(f64, f64)> = None;
        for &dt in dts {
            let traj = integrate_ep(rho0, g0, horizon, dt)?;
            let (_, s) = traj.last().expect("trajectory holds the initial state");
            let err = (s.rho - exact.rho).abs().max((s.g - exact.g).abs()) / scale;
            let order = prev
                .and_then(|(pe, pdt)| (err > 0.0 && pe > 0.0 && pdt != dt).then(|| (pe / err).ln() / (pdt / dt).ln()));
            rows.push(ConvergenceRow { rho0, g0, dt, error: Some(err), order, excluded: None });
            prev = Some((err, dt));
        }
    }
    Ok(ConvergenceTable { horizon, rows })
}
