//! Flat `key = value` run configuration.
//!
//! ```text
//! # circle at two widths
//! scenario = circle
//! scenario.epsilon = 0.05, 0.025
//! analyses = norms, monotonicity
//! output.dir = out/circle
//! ```
//!
//! Keys are dotted, values are numbers, words or comma-separated lists, and
//! `#` starts a comment. A `scenario` name loads a corpus entry which the
//! `scenario.*` keys then override; without it the scenario is given inline.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::PathBuf;
use std::str::FromStr;

use aclab_core::fields::Boundary;
use aclab_core::scenarios::{standard, Profile, Resolution, Scenario};

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("key `{key}`: {msg}")]
    Value { key: String, msg: String },
    #[error("unknown key `{0}`")]
    UnknownKey(String),
    #[error("missing key `{0}`")]
    Missing(String),
    #[error("unknown scenario `{0}` (see `list-scenarios`)")]
    UnknownScenario(String),
    #[error("invalid scenario: {0}")]
    Scenario(#[from] aclab_core::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Analysis {
    Norms,
    Monotonicity,
    Slab,
    Quantize,
    Gdelta,
    Firstvar,
    Sweep,
}

impl Analysis {
    pub const ALL: [Analysis; 7] = [
        Analysis::Norms,
        Analysis::Monotonicity,
        Analysis::Slab,
        Analysis::Quantize,
        Analysis::Gdelta,
        Analysis::Firstvar,
        Analysis::Sweep,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Analysis::Norms => "norms",
            Analysis::Monotonicity => "monotonicity",
            Analysis::Slab => "slab",
            Analysis::Quantize => "quantize",
            Analysis::Gdelta => "gdelta",
            Analysis::Firstvar => "firstvar",
            Analysis::Sweep => "sweep",
        }
    }
}

impl FromStr for Analysis {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Analysis::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| format!("unknown analysis `{s}`"))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MonotonicitySettings {
    /// Ball centre; derived from the profile when absent.
    pub center: Option<[f64; 3]>,
    pub r_min: f64,
    pub r_max: f64,
    pub count: usize,
    pub tolerance: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SlabSettings {
    pub t1: Option<f64>,
    pub t2: Option<f64>,
    pub tolerance: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuantizeSettings {
    pub lines: usize,
    pub tolerance: f64,
    pub potential_tolerance: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GdeltaSettings {
    pub deltas: Vec<f64>,
    pub c0: f64,
    pub points: usize,
    pub samples: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FirstvarSettings {
    pub fields: usize,
    pub inset: f64,
    pub tolerance: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HolderSettings {
    pub s: f64,
    /// Defaults to `0` in one dimension and `s` otherwise.
    pub t: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub scenario: Scenario,
    pub analyses: Vec<Analysis>,
    pub out_dir: Option<PathBuf>,
    pub monotonicity: MonotonicitySettings,
    pub slab: SlabSettings,
    pub quantize: QuantizeSettings,
    pub gdelta: GdeltaSettings,
    pub firstvar: FirstvarSettings,
    pub holder: HolderSettings,
}

impl RunConfig {
    /// Config with default analysis settings.
    pub fn new(scenario: Scenario, analyses: Vec<Analysis>) -> Self {
        RunConfig {
            scenario,
            analyses,
            out_dir: None,
            monotonicity: MonotonicitySettings { center: None, r_min: 0.1, r_max: 0.4, count: 25, tolerance: 0.05 },
            slab: SlabSettings { t1: None, t2: None, tolerance: 0.05 },
            quantize: QuantizeSettings { lines: 5, tolerance: 0.01, potential_tolerance: 0.02 },
            gdelta: GdeltaSettings { deltas: vec![0.1, 0.01], c0: 2.0, points: 20_000, samples: 1000 },
            firstvar: FirstvarSettings { fields: 5, inset: 0.1, tolerance: 1e-3 },
            holder: HolderSettings { s: 3.0, t: None },
        }
    }

    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut kv = KeyValues::parse(text)?;
        let scenario = parse_scenario(&mut kv)?;
        let analyses: Vec<Analysis> = kv.list("analyses")?.ok_or_else(|| ConfigError::Missing("analyses".into()))?;
        if analyses.is_empty() {
            return Err(ConfigError::Value { key: "analyses".into(), msg: "select at least one analysis".into() });
        }
        let mut analyses = analyses;
        analyses.sort();
        analyses.dedup();
        let mut cfg = RunConfig::new(scenario, analyses);
        cfg.out_dir = kv.take("output.dir").map(|(_, v)| PathBuf::from(v));

        let m = &mut cfg.monotonicity;
        if let Some(c) = kv.list::<f64>("monotonicity.center")? {
            m.center = Some(point(&c, "monotonicity.center")?);
        }
        kv.set(&mut m.r_min, "monotonicity.r_min")?;
        kv.set(&mut m.r_max, "monotonicity.r_max")?;
        kv.set(&mut m.count, "monotonicity.count")?;
        kv.set(&mut m.tolerance, "monotonicity.tolerance")?;
        cfg.slab.t1 = kv.value("slab.t1")?;
        cfg.slab.t2 = kv.value("slab.t2")?;
        kv.set(&mut cfg.slab.tolerance, "slab.tolerance")?;
        kv.set(&mut cfg.quantize.lines, "quantize.lines")?;
        kv.set(&mut cfg.quantize.tolerance, "quantize.tolerance")?;
        kv.set(&mut cfg.quantize.potential_tolerance, "quantize.potential_tolerance")?;
        if let Some(d) = kv.list("gdelta.delta")? {
            cfg.gdelta.deltas = d;
        }
        kv.set(&mut cfg.gdelta.c0, "gdelta.c0")?;
        kv.set(&mut cfg.gdelta.points, "gdelta.points")?;
        kv.set(&mut cfg.gdelta.samples, "gdelta.samples")?;
        kv.set(&mut cfg.firstvar.fields, "firstvar.fields")?;
        kv.set(&mut cfg.firstvar.inset, "firstvar.inset")?;
        kv.set(&mut cfg.firstvar.tolerance, "firstvar.tolerance")?;
        kv.set(&mut cfg.holder.s, "holder.s")?;
        cfg.holder.t = kv.value("holder.t")?;
        kv.finish()?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Checks everything that can be checked without building fields.
    pub fn validate(&self) -> Result<(), ConfigError> {
        self.scenario.validate()?;
        let bad = |key: &str, msg: &str| Err(ConfigError::Value { key: key.into(), msg: msg.into() });
        let m = &self.monotonicity;
        if !(m.r_min > 0.0 && m.r_max > m.r_min) {
            return bad("monotonicity.r_max", "need 0 < r_min < r_max");
        }
        if m.count < 5 {
            return bad("monotonicity.count", "need at least 5 radii");
        }
        if let (Some(a), Some(b)) = (self.slab.t1, self.slab.t2) {
            if a >= b {
                return bad("slab.t2", "need t1 < t2");
            }
        }
        if self.quantize.lines == 0 {
            return bad("quantize.lines", "need at least one line");
        }
        if self.gdelta.deltas.is_empty() {
            return bad("gdelta.delta", "need at least one delta");
        }
        if self.gdelta.samples < 100 {
            return bad("gdelta.samples", "need at least 100 samples");
        }
        if self.firstvar.fields == 0 {
            return bad("firstvar.fields", "need at least one test field");
        }
        if !(self.holder.s > 2.0) {
            return bad("holder.s", "s must exceed 2");
        }
        Ok(())
    }
}

fn point(v: &[f64], key: &str) -> Result<[f64; 3], ConfigError> {
    if v.is_empty() || v.len() > 3 {
        return Err(ConfigError::Value { key: key.into(), msg: "expected 1 to 3 coordinates".into() });
    }
    let mut p = [0.0; 3];
    p[..v.len()].copy_from_slice(v);
    Ok(p)
}

/// Parsed key-value pairs, consumed as they are read so leftovers can be
/// reported as unknown keys.
struct KeyValues {
    map: BTreeMap<String, (usize, String)>,
}

impl KeyValues {
    fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut map = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let Some((k, v)) = content.split_once('=') else {
                return Err(ConfigError::Syntax { line, msg: format!("expected `key = value`, got `{content}`") });
            };
            let (k, v) = (k.trim(), v.trim());
            let valid = !k.is_empty()
                && k.chars().all(|c| c.is_ascii_lowercase() || c.is_ascii_digit() || matches!(c, '.' | '_' | '-'));
            if !valid {
                return Err(ConfigError::Syntax { line, msg: format!("invalid key `{k}`") });
            }
            if v.is_empty() {
                return Err(ConfigError::Syntax { line, msg: format!("empty value for `{k}`") });
            }
            if map.insert(k.to_string(), (line, v.to_string())).is_some() {
                return Err(ConfigError::Syntax { line, msg: format!("duplicate key `{k}`") });
            }
        }
        Ok(KeyValues { map })
    }

    fn take(&mut self, key: &str) -> Option<(usize, String)> {
        self.map.remove(key)
    }

    fn has(&self, key: &str) -> bool {
        self.map.contains_key(key)
    }

    fn value<T: FromStr>(&mut self, key: &str) -> Result<Option<T>, ConfigError>
    where
        T::Err: std::fmt::Display,
    {
        self.take(key)
            .map(|(_, v)| v.parse::<T>().map_err(|e| ConfigError::Value { key: key.into(), msg: format!("`{v}`: {e}") }))
            .transpose()
    }

    fn set<T: FromStr>(&mut self, slot: &mut T, key: &str) -> Result<(), ConfigError>
    where
        T::Err: std::fmt::Display,
    {
        if let Some(v) = self.value(key)? {
            *slot = v;
        }
        Ok(())
    }

    fn list<T: FromStr>(&mut self, key: &str) -> Result<Option<Vec<T>>, ConfigError>
    where
        T::Err: std::fmt::Display,
    {
        let Some((_, v)) = self.take(key) else {
            return Ok(None);
        };
        v.split(',')
            .map(|s| {
                let s = s.trim();
                s.parse::<T>().map_err(|e| ConfigError::Value { key: key.into(), msg: format!("`{s}`: {e}") })
            })
            .collect::<Result<Vec<T>, _>>()
            .map(Some)
    }

    fn finish(self) -> Result<(), ConfigError> {
        match self.map.into_iter().min_by_key(|(_, (line, _))| *line) {
            Some((k, _)) => Err(ConfigError::UnknownKey(k)),
            None => Ok(()),
        }
    }
}

const PROFILE_KEYS: [&str; 10] = [
    "scenario.value",
    "scenario.axis",
    "scenario.position",
    "scenario.positions",
    "scenario.center",
    "scenario.radius",
    "scenario.noise",
    "scenario.tol",
    "scenario.max_iter",
    "scenario.profile",
];

fn parse_scenario(kv: &mut KeyValues) -> Result<Scenario, ConfigError> {
    let mut s = match kv.take("scenario") {
        Some((_, name)) => standard(&name).ok_or(ConfigError::UnknownScenario(name))?,
        None => {
            // Inline definitions must name every structural field.
            for key in ["scenario.name", "scenario.lower", "scenario.upper", "scenario.epsilon", "scenario.profile"] {
                if !kv.has(key) {
                    return Err(ConfigError::Missing(key.into()));
                }
            }
            let dim = kv.map.get("scenario.lower").map_or(1, |(_, v)| v.split(',').count());
            let mut s = standard("planar-1").expect("corpus entry");
            s.params = aclab_core::AnalysisParams::new(dim);
            s
        }
    };
    kv.set(&mut s.name, "scenario.name")?;
    if let Some(v) = kv.list("scenario.lower")? {
        s.lower = v;
    }
    if let Some(v) = kv.list("scenario.upper")? {
        s.upper = v;
    }
    if let Some((_, b)) = kv.take("scenario.boundary") {
        s.boundary = b
            .parse::<Boundary>()
            .map_err(|e| ConfigError::Value { key: "scenario.boundary".into(), msg: e.to_string() })?;
    }
    if let Some(v) = kv.list("scenario.epsilon")? {
        s.epsilons = v;
    }
    let per: Option<f64> = kv.value("scenario.h_per_epsilon")?;
    let fixed: Option<f64> = kv.value("scenario.h")?;
    let coef: Option<f64> = kv.value("scenario.h_coefficient")?;
    let expo: Option<f64> = kv.value("scenario.h_exponent")?;
    s.resolution = match (per, fixed, coef, expo) {
        (None, None, None, None) => s.resolution,
        (Some(k), None, None, None) => Resolution::PerEpsilon(k),
        (None, Some(h), None, None) => Resolution::Fixed(h),
        (None, None, Some(c), Some(p)) => Resolution::PowerLaw { coefficient: c, exponent: p },
        _ => {
            return Err(ConfigError::Value {
                key: "scenario.h".into(),
                msg: "give exactly one of h_per_epsilon, h, or h_coefficient with h_exponent".into(),
            })
        }
    };
    s.profile = parse_profile(kv, s.profile)?;
    kv.set(&mut s.seed, "scenario.seed")?;
    kv.set(&mut s.params.q0, "analysis.q0")?;
    kv.set(&mut s.params.tau, "analysis.tau")?;
    kv.set(&mut s.params.supersample, "analysis.supersample")?;
    kv.set(&mut s.params.grad_threshold, "analysis.grad_threshold")?;
    Ok(s)
}

fn parse_profile(kv: &mut KeyValues, base: Profile) -> Result<Profile, ConfigError> {
    let kind: Option<String> = kv.value("scenario.profile")?;
    let mut p = match kind.as_deref() {
        None => base,
        Some("constant") => Profile::Constant { value: 0.0 },
        Some("planar") => Profile::Planar { axis: 0, position: 0.0 },
        Some("stack") => Profile::Stack { axis: 0, positions: Vec::new() },
        Some("radial") => Profile::Radial { center: [0.0; 3], radius: 0.5 },
        Some("solved-radial") => {
            Profile::SolvedRadial { center: [0.0; 3], radius: 0.5, noise: 0.01, tol: 1e-10, max_iter: 50 }
        }
        Some(other) => {
            return Err(ConfigError::Value { key: "scenario.profile".into(), msg: format!("unknown profile `{other}`") })
        }
    };
    match &mut p {
        Profile::Constant { value } => kv.set(value, "scenario.value")?,
        Profile::Planar { axis, position } => {
            kv.set(axis, "scenario.axis")?;
            kv.set(position, "scenario.position")?;
        }
        Profile::Stack { axis, positions } => {
            kv.set(axis, "scenario.axis")?;
            if let Some(v) = kv.list("scenario.positions")? {
                *positions = v;
            }
            if positions.is_empty() {
                return Err(ConfigError::Missing("scenario.positions".into()));
            }
        }
        Profile::Radial { center, radius } => {
            if let Some(c) = kv.list::<f64>("scenario.center")? {
                *center = point(&c, "scenario.center")?;
            }
            kv.set(radius, "scenario.radius")?;
        }
        Profile::SolvedRadial { center, radius, noise, tol, max_iter } => {
            if let Some(c) = kv.list::<f64>("scenario.center")? {
                *center = point(&c, "scenario.center")?;
            }
            kv.set(radius, "scenario.radius")?;
            kv.set(noise, "scenario.noise")?;
            kv.set(tol, "scenario.tol")?;
            kv.set(max_iter, "scenario.max_iter")?;
        }
    }
    // Keys of other profile kinds are errors, not silently ignored.
    if let Some(k) = PROFILE_KEYS.iter().find(|k| kv.has(k)) {
        return Err(ConfigError::Value {
            key: k.to_string(),
            msg: format!("not a parameter of the `{}` profile", p.kind()),
        });
    }
    Ok(p)
}

fn join(v: &[f64]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(", ")
}

/// Inline config text that reproduces `s` exactly.
pub fn scenario_to_config(s: &Scenario) -> String {
    let mut out = String::new();
    let dim = s.lower.len();
    let mut line = |k: &str, v: String| {
        let _ = writeln!(out, "scenario.{k} = {v}");
    };
    line("name", s.name.clone());
    line("lower", join(&s.lower));
    line("upper", join(&s.upper));
    line("boundary", s.boundary.as_str().to_string());
    line("epsilon", join(&s.epsilons));
    match s.resolution {
        Resolution::PerEpsilon(k) => line("h_per_epsilon", k.to_string()),
        Resolution::Fixed(h) => line("h", h.to_string()),
        Resolution::PowerLaw { coefficient, exponent } => {
            line("h_coefficient", coefficient.to_string());
            line("h_exponent", exponent.to_string());
        }
    }
    line("profile", s.profile.kind().to_string());
    match &s.profile {
        Profile::Constant { value } => line("value", value.to_string()),
        Profile::Planar { axis, position } => {
            line("axis", axis.to_string());
            line("position", position.to_string());
        }
        Profile::Stack { axis, positions } => {
            line("axis", axis.to_string());
            line("positions", join(positions));
        }
        Profile::Radial { center, radius } => {
            line("center", join(&center[..dim]));
            line("radius", radius.to_string());
        }
        Profile::SolvedRadial { center, radius, noise, tol, max_iter } => {
            line("center", join(&center[..dim]));
            line("radius", radius.to_string());
            line("noise", noise.to_string());
            line("tol", tol.to_string());
            line("max_iter", max_iter.to_string());
        }
    }
    line("seed", s.seed.to_string());
    let p = &s.params;
    let _ = writeln!(out, "analysis.q0 = {}", p.q0);
    let _ = writeln!(out, "analysis.tau = {}", p.tau);
    let _ = writeln!(out, "analysis.supersample = {}", p.supersample);
    let _ = writeln!(out, "analysis.grad_threshold = {}", p.grad_threshold);
    out
}
