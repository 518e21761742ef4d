//! Experiment configuration. The file is TOML with the sections `[system]`,
//! `[kernel]`, `[grid]`, `[initial]`, `[output]`, `[sweep]` and `[verify]`;
//! validation errors name the offending line.

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use serde::Serialize;
use toml::{Spanned, Value};

use super::families::{Family, FAMILY_VERSION};
use crate::eulerian::{DEFAULT_CFL, DEFAULT_GRADIENT_GUARD, DEFAULT_LINE_N, DEFAULT_TORUS_N};
use crate::kernels::{BoundedKernel, ConvolutionMethod, L1Kernel, Profile, RelaxKernel, TorusKernel};
use crate::laws::PolynomialLaw;
use crate::thresholds::Flavor;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SystemKind {
    Ep,
    Epa,
    Ea,
    RelaxNonlocal,
    RelaxLocal,
}

impl SystemKind {
    pub const ALL: [SystemKind; 5] =
        [SystemKind::Ep, SystemKind::Epa, SystemKind::Ea, SystemKind::RelaxNonlocal, SystemKind::RelaxLocal];

    pub fn as_str(self) -> &'static str {
        match self {
            SystemKind::Ep => "ep",
            SystemKind::Epa => "epa",
            SystemKind::Ea => "ea",
            SystemKind::RelaxNonlocal => "relax-nonlocal",
            SystemKind::RelaxLocal => "relax-local",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.as_str() == s)
    }

    pub fn is_alignment(self) -> bool {
        matches!(self, SystemKind::Epa | SystemKind::Ea)
    }

    pub fn is_relaxation(self) -> bool {
        matches!(self, SystemKind::RelaxNonlocal | SystemKind::RelaxLocal)
    }

    fn families(self) -> &'static [Family] {
        match self {
            SystemKind::Ep => &[Family::Point],
            SystemKind::Epa | SystemKind::Ea => &[Family::SinePerturbation],
            _ => &[Family::GaussianBump, Family::TanhCompression],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Solver {
    Grid,
    Particles,
}

/// Torus influence function shapes, named as in the config file.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "name", rename_all = "kebab-case")]
pub enum KernelShape {
    Constant { value: f64 },
    Tophat { height: f64, half_width: f64 },
    Triangle { peak: f64, half_width: f64 },
    Exp { amplitude: f64, scale: f64 },
    Gaussian { amplitude: f64, width: f64 },
    Cosine { mean: f64, amplitude: f64 },
    Power { amplitude: f64, exponent: f64 },
    Tabulated { path: PathBuf },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TorusKernelSpec {
    pub shape: KernelShape,
    pub flavor: Flavor,
    /// Samples used for the L1 statistics.
    pub samples: usize,
}

impl TorusKernelSpec {
    pub fn profile(&self) -> Result<Profile> {
        let p = match &self.shape {
            KernelShape::Constant { value } => Profile::Constant { value: *value },
            KernelShape::Tophat { height, half_width } => Profile::TopHat { height: *height, half_width: *half_width },
            KernelShape::Triangle { peak, half_width } => Profile::Triangle { peak: *peak, half_width: *half_width },
            KernelShape::Exp { amplitude, scale } => Profile::Exponential { amplitude: *amplitude, scale: *scale },
            KernelShape::Gaussian { amplitude, width } => Profile::Gaussian { amplitude: *amplitude, width: *width },
            KernelShape::Cosine { mean, amplitude } => Profile::Cosine { mean: *mean, amplitude: *amplitude },
            KernelShape::Power { amplitude, exponent } => Profile::power(*amplitude, *exponent)?,
            KernelShape::Tabulated { path } => Profile::tabulated_from_csv(path)?,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn build(&self, n: usize) -> Result<TorusKernel> {
        let profile = self.profile()?;
        Ok(match self.flavor {
            Flavor::Bounded => TorusKernel::Bounded(BoundedKernel::new(profile, n)?),
            Flavor::L1 => TorusKernel::L1(L1Kernel::new(profile, self.samples)?),
        })
    }
}

/// Unit-mass relaxation kernels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "name", rename_all = "kebab-case")]
pub enum RelaxKernelSpec {
    Gaussian { sigma: f64, radius_sigmas: f64 },
    Exp { scale: f64, radius: f64 },
}

impl RelaxKernelSpec {
    pub fn build(&self) -> Result<RelaxKernel> {
        match *self {
            RelaxKernelSpec::Gaussian { sigma, radius_sigmas } => RelaxKernel::gaussian(sigma, radius_sigmas),
            RelaxKernelSpec::Exp { scale, radius } => RelaxKernel::exponential(scale, radius),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum KernelSpec {
    Torus(TorusKernelSpec),
    Relax(RelaxKernelSpec),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridSpec {
    pub n: usize,
    /// Line domains only.
    pub half_width: f64,
    pub cfl: f64,
    pub dt: Option<f64>,
    pub gradient_guard: f64,
    pub max_steps: Option<usize>,
    pub solver: Solver,
    pub convolution: ConvolutionMethod,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InitialSpec {
    pub family: Family,
    pub version: u32,
    /// Every family parameter, defaults included.
    pub params: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OutputSpec {
    pub dir: PathBuf,
    pub snapshot_interval: Option<f64>,
    pub snapshots: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Axis {
    pub param: String,
    pub min: f64,
    pub max: f64,
    pub count: usize,
}

impl Axis {
    /// `count` evenly spaced values from `min` to `max`; a single value is `min`.
    pub fn values(&self) -> Vec<f64> {
        if self.count == 1 {
            return vec![self.min];
        }
        let step = (self.max - self.min) / (self.count - 1) as f64;
        (0..self.count).map(|i| if i + 1 == self.count { self.max } else { self.min + i as f64 * step }).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepSpec {
    pub axes: Vec<Axis>,
    /// Half-width of the boundary band excluded from the agreement statistic.
    pub band: f64,
    pub jobs: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifySpec {
    pub dts: Vec<f64>,
    /// `(rho0, g0)` pairs.
    pub points: Vec<(f64, f64)>,
    pub horizon: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub system: SystemKind,
    pub k: f64,
    pub law: Option<PolynomialLaw>,
    pub horizon: f64,
    pub seed: u64,
    pub kernel: Option<KernelSpec>,
    pub grid: GridSpec,
    pub initial: InitialSpec,
    pub output: OutputSpec,
    pub sweep: Option<SweepSpec>,
    pub verify: Option<VerifySpec>,
}

type RawSection = BTreeMap<String, Spanned<Value>>;

fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

/// One `[section]` being consumed key by key.
struct Section<'a> {
    name: &'static str,
    text: &'a str,
    line: usize,
    entries: RawSection,
    used: BTreeSet<String>,
}

impl<'a> Section<'a> {
    fn new(name: &'static str, text: &'a str, raw: Spanned<RawSection>) -> Self {
        let line = line_of(text, raw.span().start);
        Self { name, text, line, entries: raw.into_inner(), used: BTreeSet::new() }
    }

    fn err_at(&self, line: usize, msg: impl std::fmt::Display) -> Error {
        Error::Config(format!("line {line}: [{}] {msg}", self.name))
    }

    fn err(&self, msg: impl std::fmt::Display) -> Error {
        self.err_at(self.line, msg)
    }

    fn raw(&mut self, key: &str) -> Option<(usize, Value)> {
        let v = self.entries.get(key)?;
        self.used.insert(key.to_string());
        Some((line_of(self.text, v.span().start), v.get_ref().clone()))
    }

    fn f64(&mut self, key: &str) -> Result<Option<f64>> {
        match self.raw(key) {
            None => Ok(None),
            Some((_, Value::Float(v))) => Ok(Some(v)),
            Some((_, Value::Integer(v))) => Ok(Some(v as f64)),
            Some((line, v)) => Err(self.err_at(line, format!("{key} must be a number, got {v}"))),
        }
    }

    fn req_f64(&mut self, key: &str) -> Result<f64> {
        self.f64(key)?.ok_or_else(|| self.err(format!("missing key {key}")))
    }

    fn positive(&mut self, key: &str) -> Result<Option<f64>> {
        let line = self.entries.get(key).map(|v| line_of(self.text, v.span().start));
        match self.f64(key)? {
            Some(v) if !(v > 0.0 && v.is_finite()) => {
                Err(self.err_at(line.unwrap_or(self.line), format!("{key} must be positive, got {v}")))
            }
            other => Ok(other),
        }
    }

    fn usize(&mut self, key: &str) -> Result<Option<usize>> {
        match self.raw(key) {
            None => Ok(None),
            Some((_, Value::Integer(v))) if v >= 0 => Ok(Some(v as usize)),
            Some((line, v)) => Err(self.err_at(line, format!("{key} must be a nonnegative integer, got {v}"))),
        }
    }

    fn str(&mut self, key: &str) -> Result<Option<String>> {
        match self.raw(key) {
            None => Ok(None),
            Some((_, Value::String(s))) => Ok(Some(s)),
            Some((line, v)) => Err(self.err_at(line, format!("{key} must be a string, got {v}"))),
        }
    }

    fn req_str(&mut self, key: &str) -> Result<String> {
        self.str(key)?.ok_or_else(|| self.err(format!("missing key {key}")))
    }

    fn bool(&mut self, key: &str) -> Result<Option<bool>> {
        match self.raw(key) {
            None => Ok(None),
            Some((_, Value::Boolean(b))) => Ok(Some(b)),
            Some((line, v)) => Err(self.err_at(line, format!("{key} must be true or false, got {v}"))),
        }
    }

    /// Remaining numeric keys, for free-form parameter tables.
    fn rest_f64(&mut self) -> Result<BTreeMap<String, f64>> {
        let keys: Vec<String> = self.entries.keys().filter(|k| !self.used.contains(*k)).cloned().collect();
        let mut out = BTreeMap::new();
        for k in keys {
            let v = self.req_f64(&k)?;
            out.insert(k, v);
        }
        Ok(out)
    }

    fn finish(&self) -> Result<()> {
        for (k, v) in &self.entries {
            if !self.used.contains(k) {
                return Err(self.err_at(line_of(self.text, v.span().start), format!("unknown key {k}")));
            }
        }
        Ok(())
    }
}

impl ExperimentConfig {
    pub fn from_path(path: &Path) -> Result<Self> {
        let text =
            std::fs::read_to_string(path).map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let doc: BTreeMap<String, Spanned<RawSection>> = toml::from_str(text).map_err(|e| {
            let line = e.span().map_or(1, |s| line_of(text, s.start));
            Error::Config(format!("line {line}: {}", e.message().trim()))
        })?;
        let mut doc = doc;
        const KNOWN: [&str; 7] = ["system", "kernel", "grid", "initial", "output", "sweep", "verify"];
        if let Some((name, raw)) = doc.iter().find(|(k, _)| !KNOWN.contains(&k.as_str())) {
            return Err(Error::Config(format!("line {}: unknown section [{name}]", line_of(text, raw.span().start))));
        }
        let mut take = |name: &'static str| doc.remove(name).map(|raw| Section::new(name, text, raw));
        let missing = |name: &str| Error::Config(format!("missing section [{name}]"));

        let mut sys = take("system").ok_or_else(|| missing("system"))?;
        let kind_name = sys.req_str("kind")?;
        let system = SystemKind::parse(&kind_name).ok_or_else(|| {
            let names: Vec<&str> = SystemKind::ALL.iter().map(|k| k.as_str()).collect();
            sys.err(format!("unknown system {kind_name:?}; expected one of {}", names.join(", ")))
        })?;
        let k = match (system, sys.f64("k")?) {
            (SystemKind::Epa, Some(k)) if k > 0.0 => k,
            (SystemKind::Epa, Some(k)) => {
                return Err(sys.err(format!("epa needs k > 0, got {k}; use system = \"ea\" for k = 0")))
            }
            (SystemKind::Epa, None) => return Err(sys.err("missing key k")),
            (SystemKind::Ea, Some(k)) if k != 0.0 => return Err(sys.err(format!("ea fixes k = 0, got {k}"))),
            (_, Some(_)) if !system.is_alignment() => {
                return Err(sys.err(format!("k is not used by {}", system.as_str())))
            }
            _ => 0.0,
        };
        let law = match sys.raw("law") {
            Some((line, v)) => {
                if system != SystemKind::RelaxLocal {
                    return Err(sys.err_at(line, "law is only used by relax-local"));
                }
                let law: PolynomialLaw = v
                    .try_into()
                    .map_err(|e: toml::de::Error| sys.err_at(line, format!("law: {}", e.message().trim())))?;
                Some(law)
            }
            None if system == SystemKind::RelaxLocal => {
                return Err(sys.err("relax-local needs a law table, e.g. law = { u = -1.0 }"))
            }
            None => None,
        };
        let horizon = sys.req_f64("horizon")?;
        if !(horizon >= 0.0 && horizon.is_finite()) {
            return Err(sys.err(format!("horizon must be >= 0, got {horizon}")));
        }
        let seed = sys.usize("seed")?.unwrap_or(0) as u64;
        sys.finish()?;

        let kernel = match take("kernel") {
            Some(sec) => Some(parse_kernel(sec, system)?),
            None if system.is_alignment() || system == SystemKind::RelaxNonlocal => {
                return Err(missing("kernel"));
            }
            None => None,
        };

        let mut g = take("grid").ok_or_else(|| missing("grid"))?;
        let default_n = if system.is_relaxation() { DEFAULT_LINE_N } else { DEFAULT_TORUS_N };
        let n = g.usize("n")?.unwrap_or(default_n);
        if n < 8 {
            return Err(g.err(format!("n must be at least 8, got {n}")));
        }
        let half_width = g.positive("half_width")?.unwrap_or(40.0);
        let cfl = g.f64("cfl")?.unwrap_or(DEFAULT_CFL);
        if !(cfl > 0.0 && cfl < 1.0) {
            return Err(g.err(format!("cfl must lie in (0, 1), got {cfl}")));
        }
        let dt = g.positive("dt")?.or((system == SystemKind::Ep).then_some(1e-3));
        let gradient_guard = g.positive("gradient_guard")?.unwrap_or(DEFAULT_GRADIENT_GUARD);
        let max_steps = g.usize("max_steps")?;
        let solver = match g.str("solver")?.as_deref() {
            None | Some("grid") => Solver::Grid,
            Some("particles") if system.is_alignment() => Solver::Particles,
            Some(s) => return Err(g.err(format!("solver {s:?} is not available for {}", system.as_str()))),
        };
        let convolution = match g.str("convolution")?.as_deref() {
            None | Some("direct") => ConvolutionMethod::Direct,
            Some("fft") => ConvolutionMethod::Fft,
            Some(s) => return Err(g.err(format!("convolution must be direct or fft, got {s:?}"))),
        };
        g.finish()?;
        let grid = GridSpec { n, half_width, cfl, dt, gradient_guard, max_steps, solver, convolution };

        let mut ini = take("initial").ok_or_else(|| missing("initial"))?;
        let fam_name = ini.req_str("family")?;
        let family = Family::parse(&fam_name).ok_or_else(|| ini.err(format!("unknown family {fam_name:?}")))?;
        if !system.families().contains(&family) {
            let names: Vec<&str> = system.families().iter().map(|f| f.name()).collect();
            return Err(ini.err(format!(
                "family {fam_name} does not fit {}; expected {}",
                system.as_str(),
                names.join(" or ")
            )));
        }
        let version = ini.usize("version")?.unwrap_or(FAMILY_VERSION as usize) as u32;
        if version != FAMILY_VERSION {
            return Err(ini.err(format!("family {fam_name} has no version {version}")));
        }
        let given = ini.rest_f64()?;
        for key in given.keys() {
            if !family.has_param(key) {
                let line = line_of(text, ini.entries[key].span().start);
                return Err(ini.err_at(line, format!("family {fam_name} has no parameter {key}")));
            }
        }
        let params = family.resolve(&given).map_err(|e| ini.err(e))?;
        ini.finish()?;
        let initial = InitialSpec { family, version, params };

        let output = match take("output") {
            Some(mut o) => {
                let dir = PathBuf::from(o.str("dir")?.unwrap_or_else(|| "out".into()));
                let snapshot_interval = o.positive("snapshot_interval")?;
                let snapshots = o.bool("snapshots")?.unwrap_or(true);
                o.finish()?;
                OutputSpec { dir, snapshot_interval, snapshots }
            }
            None => OutputSpec { dir: PathBuf::from("out"), snapshot_interval: None, snapshots: true },
        };

        let sweep = match take("sweep") {
            Some(s) => Some(parse_sweep(s, system, family)?),
            None => None,
        };

        let verify = match take("verify") {
            Some(mut v) => {
                let dts = match v.raw("dts") {
                    Some((line, Value::Array(a))) => a
                        .iter()
                        .map(|x| x.as_float().or(x.as_integer().map(|i| i as f64)).filter(|d| *d > 0.0))
                        .collect::<Option<Vec<f64>>>()
                        .ok_or_else(|| v.err_at(line, "dts must be positive numbers"))?,
                    Some((line, _)) => return Err(v.err_at(line, "dts must be an array")),
                    None => vec![1e-2, 5e-3, 2.5e-3],
                };
                let points = match v.raw("points") {
                    Some((line, Value::Array(a))) => a
                        .iter()
                        .map(|p| {
                            let p = p.as_array()?;
                            let num = |x: &Value| x.as_float().or(x.as_integer().map(|i| i as f64));
                            (p.len() == 2).then_some(())?;
                            Some((num(&p[0])?, num(&p[1])?))
                        })
                        .collect::<Option<Vec<_>>>()
                        .ok_or_else(|| v.err_at(line, "points must be [rho0, g0] pairs"))?,
                    Some((line, _)) => return Err(v.err_at(line, "points must be an array")),
                    None => vec![(
                        initial.params.get("rho0").copied().unwrap_or(2.0),
                        initial.params.get("g0").copied().unwrap_or(0.0),
                    )],
                };
                let horizon = v.f64("horizon")?.unwrap_or(horizon);
                v.finish()?;
                Some(VerifySpec { dts, points, horizon })
            }
            None => None,
        };

        Ok(Self { system, k, law, horizon, seed, kernel, grid, initial, output, sweep, verify })
    }

    /// Copy with one swept parameter replaced: a family parameter, `k` or `horizon`.
    pub fn with_param(&self, name: &str, value: f64) -> Result<Self> {
        let mut out = self.clone();
        match name {
            "k" if self.system == SystemKind::Epa => {
                if !(value > 0.0) {
                    return Err(Error::InvalidParameter(format!("epa needs k > 0, got {value}")));
                }
                out.k = value;
            }
            "horizon" => out.horizon = value,
            _ => {
                if !self.initial.family.has_param(name) {
                    return Err(Error::Config(format!(
                        "family {} has no parameter {name}",
                        self.initial.family.name()
                    )));
                }
                out.initial.params.insert(name.to_string(), value);
                let given = out.initial.params.clone();
                out.initial.params = out.initial.family.resolve(&given)?;
            }
        }
        Ok(out)
    }
}

fn parse_kernel(mut sec: Section<'_>, system: SystemKind) -> Result<KernelSpec> {
    let name = sec.req_str("name")?;
    if system == SystemKind::RelaxNonlocal {
        let spec = match name.as_str() {
            "gaussian" => {
                let sigma = sec.positive("sigma")?.ok_or_else(|| sec.err("missing key sigma"))?;
                RelaxKernelSpec::Gaussian { sigma, radius_sigmas: sec.positive("radius_sigmas")?.unwrap_or(8.0) }
            }
            "exp" => {
                let scale = sec.positive("scale")?.ok_or_else(|| sec.err("missing key scale"))?;
                RelaxKernelSpec::Exp { scale, radius: sec.positive("radius")?.unwrap_or(20.0 * scale) }
            }
            other => return Err(sec.err(format!("relaxation kernels are gaussian or exp, got {other:?}"))),
        };
        sec.finish()?;
        spec.build().map_err(|e| sec.err(e))?;
        return Ok(KernelSpec::Relax(spec));
    }
    if !system.is_alignment() {
        return Err(sec.err(format!("{} takes no kernel", system.as_str())));
    }
    let shape = match name.as_str() {
        "constant" => KernelShape::Constant { value: sec.req_f64("value")? },
        "tophat" => KernelShape::Tophat { height: sec.req_f64("height")?, half_width: sec.req_f64("half_width")? },
        "triangle" => KernelShape::Triangle { peak: sec.req_f64("peak")?, half_width: sec.req_f64("half_width")? },
        "exp" => KernelShape::Exp { amplitude: sec.req_f64("amplitude")?, scale: sec.req_f64("scale")? },
        "gaussian" => KernelShape::Gaussian { amplitude: sec.req_f64("amplitude")?, width: sec.req_f64("width")? },
        "cosine" => KernelShape::Cosine { mean: sec.req_f64("mean")?, amplitude: sec.req_f64("amplitude")? },
        "power" => KernelShape::Power { amplitude: sec.req_f64("amplitude")?, exponent: sec.req_f64("exponent")? },
        "tabulated" => KernelShape::Tabulated { path: PathBuf::from(sec.req_str("path")?) },
        other => return Err(sec.err(format!("unknown kernel {other:?}"))),
    };
    let singular = matches!(shape, KernelShape::Power { .. });
    let flavor = match sec.str("flavor")?.as_deref() {
        None if singular => Flavor::L1,
        None | Some("bounded") if !singular => Flavor::Bounded,
        Some("l1") => Flavor::L1,
        Some(s) => return Err(sec.err(format!("flavor {s:?} does not fit kernel {name}"))),
        None => unreachable!(),
    };
    let samples = sec.usize("samples")?.unwrap_or(1 << 16);
    sec.finish()?;
    let spec = TorusKernelSpec { shape, flavor, samples };
    spec.profile().map_err(|e| sec.err(e))?;
    Ok(KernelSpec::Torus(spec))
}

fn parse_sweep(mut sec: Section<'_>, system: SystemKind, family: Family) -> Result<SweepSpec> {
    let (line, raw) = sec.raw("axes").ok_or_else(|| sec.err("missing key axes"))?;
    let Value::Array(items) = raw else {
        return Err(sec.err_at(line, "axes must be an array of tables"));
    };
    if items.is_empty() || items.len() > 2 {
        return Err(sec.err_at(line, format!("a sweep has one or two axes, got {}", items.len())));
    }
    let mut axes = Vec::new();
    for item in items {
        let t = item.as_table().ok_or_else(|| sec.err_at(line, "each axis is a table {param, min, max, count}"))?;
        let num = |k: &str| t.get(k).and_then(|x| x.as_float().or(x.as_integer().map(|i| i as f64)));
        let param = t.get("param").and_then(|p| p.as_str()).ok_or_else(|| sec.err_at(line, "axis needs param"))?;
        if let Some(extra) = t.keys().find(|k| !["param", "min", "max", "count"].contains(&k.as_str())) {
            return Err(sec.err_at(line, format!("unknown axis key {extra}")));
        }
        let known = family.has_param(param) || param == "horizon" || (param == "k" && system == SystemKind::Epa);
        if !known {
            return Err(sec.err_at(line, format!("axis parameter {param} does not exist in family {}", family.name())));
        }
        let (min, max) = match (num("min"), num("max")) {
            (Some(a), Some(b)) if a.is_finite() && b.is_finite() && a <= b => (a, b),
            _ => return Err(sec.err_at(line, format!("axis {param} needs finite min <= max"))),
        };
        let count = match t.get("count").and_then(|c| c.as_integer()) {
            Some(c) if c >= 1 => c as usize,
            _ => return Err(sec.err_at(line, format!("axis {param} needs an integer count >= 1"))),
        };
        axes.push(Axis { param: param.to_string(), min, max, count });
    }
    if axes.len() == 2 && axes[0].param == axes[1].param {
        return Err(sec.err_at(line, "the two axes sweep the same parameter"));
    }
    let band = sec.f64("band")?.unwrap_or(0.05);
    let jobs = sec.usize("jobs")?.unwrap_or(1).max(1);
    sec.finish()?;
    Ok(SweepSpec { axes, band, jobs })
}
