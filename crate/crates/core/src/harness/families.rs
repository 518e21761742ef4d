//! Named, versioned initial-data families.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use serde::Serialize;

use crate::grid::{Domain, GridField, InitialFields};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Family {
    /// A single `(rho0, g0)` state for the EP characteristic ODEs.
    Point,
    /// Torus: `rho = mass (1 + amplitude sin(2 pi mode (x - phase)))`,
    /// `u = u_mean + u_amplitude sin(2 pi mode x)`.
    SinePerturbation,
    /// Line: Gaussian bumps of `rho` and `u` over constant far fields.
    GaussianBump,
    /// Line: `u = u_base - depth tanh((x - center) / width)` with a Gaussian density bump.
    TanhCompression,
}

/// Every family is at version 1.
pub const FAMILY_VERSION: u32 = 1;

impl Family {
    pub const ALL: [Family; 4] =
        [Family::Point, Family::SinePerturbation, Family::GaussianBump, Family::TanhCompression];

    pub fn name(self) -> &'static str {
        match self {
            Family::Point => "point",
            Family::SinePerturbation => "sine-perturbation",
            Family::GaussianBump => "gaussian-bump",
            Family::TanhCompression => "tanh-compression",
        }
    }

    pub fn parse(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|f| f.name() == name)
    }

    /// Parameter names with their defaults.
    pub fn defaults(self) -> &'static [(&'static str, f64)] {
        match self {
            Family::Point => &[("rho0", 1.0), ("g0", 0.0)],
            Family::SinePerturbation => &[
                ("mass", 1.0),
                ("amplitude", 0.01),
                ("phase", 0.0),
                ("mode", 1.0),
                ("u_mean", 0.0),
                ("u_amplitude", 0.0),
            ],
            Family::GaussianBump => &[
                ("center", 0.0),
                ("rho_base", 1.0),
                ("rho_height", 0.0),
                ("rho_width", 1.0),
                ("u_base", 0.5),
                ("u_height", 0.1),
                ("u_width", 1.0),
            ],
            Family::TanhCompression => &[
                ("center", 0.0),
                ("rho_base", 1.0),
                ("rho_height", 0.0),
                ("rho_width", 1.0),
                ("u_base", 0.0),
                ("depth", 0.5),
                ("width", 1.0),
            ],
        }
    }

    pub fn has_param(self, name: &str) -> bool {
        self.defaults().iter().any(|(k, _)| *k == name)
    }

    /// Defaults overlaid with `given`.
    pub fn resolve(self, given: &BTreeMap<String, f64>) -> Result<BTreeMap<String, f64>> {
        let mut out: BTreeMap<String, f64> = self.defaults().iter().map(|(k, v)| (k.to_string(), *v)).collect();
        for (k, v) in given {
            if !self.has_param(k) {
                return Err(Error::Config(format!("family {} has no parameter {k}", self.name())));
            }
            out.insert(k.clone(), *v);
        }
        self.check(&out)?;
        Ok(out)
    }

    fn check(self, p: &BTreeMap<String, f64>) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(format!("family {}: {msg}", self.name())));
        if let Some((k, v)) = p.iter().find(|(_, v)| !v.is_finite()) {
            return bad(format!("{k} = {v} is not finite"));
        }
        match self {
            Family::Point => {
                if !(p["rho0"] > 0.0) {
                    return bad(format!("rho0 must be positive, got {}", p["rho0"]));
                }
            }
            Family::SinePerturbation => {
                if !(p["mass"] > 0.0) || !(p["amplitude"].abs() < 1.0) {
                    return bad("needs mass > 0 and |amplitude| < 1".into());
                }
                let m = p["mode"];
                if !(m >= 1.0 && m.fract() == 0.0) {
                    return bad(format!("mode must be a positive integer, got {m}"));
                }
            }
            Family::GaussianBump | Family::TanhCompression => {
                let width_keys: &[&str] =
                    if self == Family::GaussianBump { &["rho_width", "u_width"] } else { &["rho_width", "width"] };
                for k in width_keys {
                    if !(p[*k] > 0.0) {
                        return bad(format!("{k} must be positive, got {}", p[*k]));
                    }
                }
                if !(p["rho_base"] >= 0.0 && p["rho_base"] + p["rho_height"].min(0.0) >= 0.0) {
                    return bad("density must stay nonnegative".into());
                }
            }
        }
        Ok(())
    }

    pub fn on_torus(self) -> bool {
        self == Family::SinePerturbation
    }

    /// Samples the family on `n` nodes of the torus or of `[-half_width, half_width]`,
    /// with `u_x` taken analytically.
    pub fn fields(self, p: &BTreeMap<String, f64>, n: usize, half_width: f64) -> Result<InitialFields> {
        let bump = |x: f64, c: f64, w: f64| (-((x - c) / w).powi(2)).exp();
        let (domain, rho, u, ux): (Domain, Box<dyn Fn(f64) -> f64>, Box<dyn Fn(f64) -> f64>, Box<dyn Fn(f64) -> f64>) =
            match self {
                Family::Point => {
                    return Err(Error::Config("the point family has no spatial fields".into()));
                }
                Family::SinePerturbation => {
                    let (mass, a, ph, k) = (p["mass"], p["amplitude"], p["phase"], 2.0 * PI * p["mode"]);
                    let (um, ua) = (p["u_mean"], p["u_amplitude"]);
                    (
                        Domain::Torus,
                        Box::new(move |x| mass * (1.0 + a * (k * (x - ph)).sin())),
                        Box::new(move |x| um + ua * (k * x).sin()),
                        Box::new(move |x| ua * k * (k * x).cos()),
                    )
                }
                Family::GaussianBump => {
                    let (c, rb, rh, rw) = (p["center"], p["rho_base"], p["rho_height"], p["rho_width"]);
                    let (ub, uh, uw) = (p["u_base"], p["u_height"], p["u_width"]);
                    (
                        Domain::Line { half_width },
                        Box::new(move |x| rb + rh * bump(x, c, rw)),
                        Box::new(move |x| ub + uh * bump(x, c, uw)),
                        Box::new(move |x| -2.0 * (x - c) / (uw * uw) * uh * bump(x, c, uw)),
                    )
                }
                Family::TanhCompression => {
                    let (c, rb, rh, rw) = (p["center"], p["rho_base"], p["rho_height"], p["rho_width"]);
                    let (ub, d, w) = (p["u_base"], p["depth"], p["width"]);
                    (
                        Domain::Line { half_width },
                        Box::new(move |x| rb + rh * bump(x, c, rw)),
                        Box::new(move |x| ub - d * ((x - c) / w).tanh()),
                        Box::new(move |x| -d / w / ((x - c) / w).cosh().powi(2)),
                    )
                }
            };
        let init = InitialFields {
            rho: GridField::from_fn(domain, n, rho),
            u: GridField::from_fn(domain, n, u),
            ux: GridField::from_fn(domain, n, ux),
        };
        init.check()?;
        Ok(init)
    }
}
