//! Experiment configuration: TOML grammar, preset overlay, validation and echo.
//!
//! A config is a TOML document. `preset = "<name>"` loads a built-in preset
//! first; every other key in the document overrides it (tables merge key by
//! key, arrays are replaced). See `README.md` for the full key list.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use passage_core::angular::{HalfInt, LevelScheme};
use passage_core::basis::BasisState;
use passage_core::correlations::PostSelectionRule;
use passage_core::hamiltonian::{Polarizations, PulseProfile, SimulationConfig};
use toml::{Table, Value};

use crate::error::{Error, Result};
use crate::presets;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ExperimentKind {
    Spectrum,
    DarkStates,
    LandauZener,
    Trajectory,
    Ensemble,
    Master,
    SweepDetuning,
    CorrelateGhz,
    CorrelateAtomPhoton,
    PhotonHistogram,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 10] = [
        ExperimentKind::Spectrum,
        ExperimentKind::DarkStates,
        ExperimentKind::LandauZener,
        ExperimentKind::Trajectory,
        ExperimentKind::Ensemble,
        ExperimentKind::Master,
        ExperimentKind::SweepDetuning,
        ExperimentKind::CorrelateGhz,
        ExperimentKind::CorrelateAtomPhoton,
        ExperimentKind::PhotonHistogram,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::Spectrum => "spectrum",
            ExperimentKind::DarkStates => "dark-states",
            ExperimentKind::LandauZener => "landau-zener",
            ExperimentKind::Trajectory => "trajectory",
            ExperimentKind::Ensemble => "ensemble",
            ExperimentKind::Master => "master",
            ExperimentKind::SweepDetuning => "sweep-detuning",
            ExperimentKind::CorrelateGhz => "correlate-ghz",
            ExperimentKind::CorrelateAtomPhoton => "correlate-atom-photon",
            ExperimentKind::PhotonHistogram => "photon-histogram",
        }
    }

    fn takes_sweep(self) -> bool {
        matches!(
            self,
            ExperimentKind::SweepDetuning | ExperimentKind::CorrelateGhz | ExperimentKind::CorrelateAtomPhoton | ExperimentKind::PhotonHistogram
        )
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ExperimentKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL.into_iter().find(|k| k.name() == s).ok_or_else(|| {
            let names: Vec<_> = Self::ALL.iter().map(|k| k.name()).collect();
            Error::range("kind", s, format!("one of {}", names.join(", ")))
        })
    }
}

/// Which population groups are written per time step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ObservableSet {
    /// Every basis state.
    #[default]
    States,
    /// Photon-number distributions of both modes and ground Zeeman populations.
    Reduced,
    /// Mean photon numbers and ground Zeeman populations.
    Occupations,
}

impl ObservableSet {
    pub fn name(self) -> &'static str {
        match self {
            ObservableSet::States => "states",
            ObservableSet::Reduced => "reduced",
            ObservableSet::Occupations => "occupations",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        [ObservableSet::States, ObservableSet::Reduced, ObservableSet::Occupations].into_iter().find(|o| o.name() == s)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnalyzerConfig {
    /// One photon analyzer per angle.
    pub angles: Vec<f64>,
    /// Atomic analyzer angle.
    pub theta: Option<f64>,
    pub rule: PostSelectionRule,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepAxis {
    /// Both cavity detunings.
    Delta,
    DeltaPlus,
    DeltaMinus,
    Kappa,
    Gamma,
    /// Cavity coupling amplitude.
    G0,
    /// Pump amplitude.
    Omega0,
    /// All photon analyzer angles at once.
    Phi,
    /// Atomic analyzer angle.
    Theta,
}

impl SweepAxis {
    const ALL: [SweepAxis; 9] = [
        SweepAxis::Delta,
        SweepAxis::DeltaPlus,
        SweepAxis::DeltaMinus,
        SweepAxis::Kappa,
        SweepAxis::Gamma,
        SweepAxis::G0,
        SweepAxis::Omega0,
        SweepAxis::Phi,
        SweepAxis::Theta,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SweepAxis::Delta => "delta",
            SweepAxis::DeltaPlus => "delta_plus",
            SweepAxis::DeltaMinus => "delta_minus",
            SweepAxis::Kappa => "kappa",
            SweepAxis::Gamma => "gamma",
            SweepAxis::G0 => "g0",
            SweepAxis::Omega0 => "omega0",
            SweepAxis::Phi => "phi",
            SweepAxis::Theta => "theta",
        }
    }

    fn is_detuning(self) -> bool {
        matches!(self, SweepAxis::Delta | SweepAxis::DeltaPlus | SweepAxis::DeltaMinus)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sweep {
    pub axis: SweepAxis,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub kind: ExperimentKind,
    pub config: SimulationConfig,
    /// Output grid points over `[t_start, t_end]`.
    pub samples: usize,
    pub analyzer: Option<AnalyzerConfig>,
    pub n_traj: usize,
    pub base_seed: u64,
    pub out: Option<String>,
    pub sweep: Option<Sweep>,
    /// State whose final probability (fidelity) is reported.
    pub target: Vec<(BasisState, Complex64)>,
    pub observables: ObservableSet,
}

const SCHEMA: &[(&str, &[&str])] = &[
    ("", &["kind", "preset", "system", "cavity", "pump", "time", "initial", "target", "analyzer", "run", "sweep"]),
    ("system", &["f_g", "f_e", "n_max", "polarizations", "delta", "delta_plus", "delta_minus", "kappa", "gamma"]),
    ("cavity", &["amplitude", "center", "fwhm"]),
    ("pump", &["amplitude", "center", "fwhm"]),
    ("time", &["t_start", "t_end", "samples"]),
    ("initial", &["state", "re", "im"]),
    ("target", &["state", "re", "im"]),
    ("analyzer", &["angles", "theta", "required", "max_hits", "distinct_analyzers"]),
    ("run", &["n_traj", "seed", "out", "observables"]),
    ("sweep", &["parameter", "values", "start", "stop", "count"]),
];

fn known(section: &str) -> &'static [&'static str] {
    SCHEMA.iter().find(|(s, _)| *s == section).map_or(&[], |(_, k)| *k)
}

fn unknown_keys(doc: &Table) -> Vec<String> {
    let mut out = Vec::new();
    for (key, value) in doc {
        if !known("").contains(&key.as_str()) {
            out.push(key.clone());
            continue;
        }
        let tables: Vec<(String, &Table)> = match value {
            Value::Table(t) => vec![(key.clone(), t)],
            Value::Array(items) => items.iter().enumerate().filter_map(|(i, v)| v.as_table().map(|t| (format!("{key}[{i}]"), t))).collect(),
            _ => continue,
        };
        for (path, t) in tables {
            out.extend(t.keys().filter(|k| !known(key).contains(&k.as_str())).map(|k| format!("{path}.{k}")));
        }
    }
    out
}

/// Overlays `top` onto `base`; nested tables merge, everything else is replaced.
fn merge(mut base: Table, top: Table) -> Table {
    for (k, v) in top {
        match (base.get_mut(&k), v) {
            (Some(Value::Table(b)), Value::Table(t)) => {
                let merged = merge(std::mem::take(b), t);
                *b = merged;
            }
            (_, v) => {
                base.insert(k, v);
            }
        }
    }
    base
}

/// Typed access to one (optional) section.
struct Section<'a> {
    name: &'static str,
    table: Option<&'a Table>,
}

impl<'a> Section<'a> {
    fn of(doc: &'a Table, name: &'static str) -> Result<Self> {
        match doc.get(name) {
            None => Ok(Section { name, table: None }),
            Some(Value::Table(t)) => Ok(Section { name, table: Some(t) }),
            Some(_) => Err(Error::Type { key: name.into(), expected: "a table" }),
        }
    }

    fn path(&self, key: &str) -> String {
        format!("{}.{key}", self.name)
    }

    fn raw(&self, key: &str) -> Option<&'a Value> {
        self.table.and_then(|t| t.get(key))
    }

    fn f64(&self, key: &str) -> Result<Option<f64>> {
        self.raw(key).map(|v| as_f64(v).ok_or_else(|| Error::Type { key: self.path(key), expected: "a number" })).transpose()
    }

    fn f64_or(&self, key: &str, default: f64) -> Result<f64> {
        let v = self.f64(key)?.unwrap_or(default);
        if !v.is_finite() {
            return Err(Error::range(&self.path(key), v, "finite"));
        }
        Ok(v)
    }

    fn int(&self, key: &str) -> Result<Option<i64>> {
        self.raw(key).map(|v| v.as_integer().ok_or_else(|| Error::Type { key: self.path(key), expected: "an integer" })).transpose()
    }

    fn int_in(&self, key: &str, default: i64, lo: i64, hi: i64) -> Result<i64> {
        let v = self.int(key)?.unwrap_or(default);
        if v < lo || v > hi {
            return Err(Error::range(&self.path(key), v, format!("{lo} <= value <= {hi}")));
        }
        Ok(v)
    }

    fn str(&self, key: &str) -> Result<Option<&'a str>> {
        self.raw(key).map(|v| v.as_str().ok_or_else(|| Error::Type { key: self.path(key), expected: "a string" })).transpose()
    }

    fn bool(&self, key: &str) -> Result<Option<bool>> {
        self.raw(key).map(|v| v.as_bool().ok_or_else(|| Error::Type { key: self.path(key), expected: "a boolean" })).transpose()
    }

    fn f64_array(&self, key: &str) -> Result<Option<Vec<f64>>> {
        let Some(v) = self.raw(key) else { return Ok(None) };
        let err = || Error::Type { key: self.path(key), expected: "an array of numbers" };
        let items = v.as_array().ok_or_else(err)?;
        let out = items.iter().map(|x| as_f64(x).ok_or_else(err)).collect::<Result<Vec<f64>>>()?;
        if let Some(bad) = out.iter().find(|x| !x.is_finite()) {
            return Err(Error::range(&self.path(key), bad, "finite"));
        }
        Ok(Some(out))
    }

    fn require<T>(&self, key: &str, v: Option<T>) -> Result<T> {
        v.ok_or_else(|| Error::Missing(self.path(key)))
    }
}

fn as_f64(v: &Value) -> Option<f64> {
    match v {
        Value::Float(x) => Some(*x),
        Value::Integer(i) => Some(*i as f64),
        _ => None,
    }
}

fn angular_momentum(sec: &Section<'_>, key: &str) -> Result<HalfInt> {
    let v = sec.require(key, sec.raw(key))?;
    let parsed = match v {
        Value::Integer(i) => i32::try_from(*i).ok().map(HalfInt::from_int),
        Value::String(s) => HalfInt::parse(s),
        _ => None,
    };
    let j = parsed.ok_or(Error::Type { key: sec.path(key), expected: "an integer or a string like \"3/2\"" })?;
    if j.twice() < 0 || j.twice() > 40 {
        return Err(Error::range(&sec.path(key), j, "0 <= value <= 20"));
    }
    Ok(j)
}

fn pulse(doc: &Table, name: &'static str, center: f64) -> Result<PulseProfile> {
    let sec = Section::of(doc, name)?;
    let amplitude = sec.require("amplitude", sec.f64("amplitude")?)?;
    let p = PulseProfile { amplitude, center: sec.f64_or("center", center)?, fwhm: sec.f64_or("fwhm", 10.0)? };
    if !(amplitude.is_finite() && amplitude >= 0.0) {
        return Err(Error::range(&sec.path("amplitude"), amplitude, ">= 0"));
    }
    if !(p.fwhm > 0.0) {
        return Err(Error::range(&sec.path("fwhm"), p.fwhm, "> 0"));
    }
    Ok(p)
}

fn amplitudes(doc: &Table, name: &'static str) -> Result<Option<Vec<(BasisState, Complex64)>>> {
    let Some(v) = doc.get(name) else { return Ok(None) };
    let err = || Error::Type { key: name.into(), expected: "an array of tables [[...]] with state, re, im" };
    let items = v.as_array().ok_or_else(err)?;
    if items.is_empty() {
        return Err(Error::range(name, "[]", "at least one state"));
    }
    let mut out = Vec::with_capacity(items.len());
    for (i, item) in items.iter().enumerate() {
        let t = item.as_table().ok_or_else(err)?;
        let path = format!("{name}[{i}]");
        let label = t.get("state").ok_or_else(|| Error::Missing(format!("{path}.state")))?;
        let label = label.as_str().ok_or(Error::Type { key: format!("{path}.state"), expected: "a basis label such as \"g-3,0,0\"" })?;
        let state = BasisState::parse_label(label).ok_or_else(|| Error::range(&format!("{path}.state"), label, "a basis label such as \"g-3,0,0\""))?;
        let part = |k: &str, default: f64| -> Result<f64> {
            let x = t.get(k).map(|v| as_f64(v).ok_or(Error::Type { key: format!("{path}.{k}"), expected: "a number" })).transpose()?;
            let x = x.unwrap_or(default);
            if !x.is_finite() {
                return Err(Error::range(&format!("{path}.{k}"), x, "finite"));
            }
            Ok(x)
        };
        out.push((state, Complex64::new(part("re", 1.0)?, part("im", 0.0)?)));
    }
    let norm: f64 = out.iter().map(|(_, a)| a.norm_sqr()).sum();
    if !(norm > 0.0) {
        return Err(Error::range(name, "zero vector", "nonzero norm"));
    }
    if (norm - 1.0).abs() > 1e-12 {
        let s = 1.0 / norm.sqrt();
        for (_, a) in &mut out {
            *a *= s;
        }
    }
    Ok(Some(out))
}

fn sweep(doc: &Table) -> Result<Option<Sweep>> {
    if doc.get("sweep").is_none() {
        return Ok(None);
    }
    let sec = Section::of(doc, "sweep")?;
    let name = sec.require("parameter", sec.str("parameter")?)?;
    let axis = SweepAxis::ALL.into_iter().find(|a| a.name() == name).ok_or_else(|| {
        let names: Vec<_> = SweepAxis::ALL.iter().map(|a| a.name()).collect();
        Error::range("sweep.parameter", name, format!("one of {}", names.join(", ")))
    })?;
    let values = match sec.f64_array("values")? {
        Some(v) => {
            if sec.raw("start").is_some() || sec.raw("stop").is_some() || sec.raw("count").is_some() {
                return Err(Error::Invalid("sweep: give either `values` or `start`/`stop`/`count`, not both".into()));
            }
            v
        }
        None => {
            let start = sec.require("start", sec.f64("start")?)?;
            let stop = sec.require("stop", sec.f64("stop")?)?;
            let count = sec.int_in("count", 0, 1, 100_000)? as usize;
            if !(start.is_finite() && stop.is_finite()) {
                return Err(Error::range("sweep.start/stop", format!("{start}..{stop}"), "finite"));
            }
            linspace(start, stop, count)
        }
    };
    if values.is_empty() {
        return Err(Error::range("sweep.values", "[]", "at least one value"));
    }
    Ok(Some(Sweep { axis, values }))
}

/// `count` evenly spaced points from `start` to `stop` inclusive.
pub fn linspace(start: f64, stop: f64, count: usize) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => vec![start],
        _ => (0..count).map(|i| start + (stop - start) * i as f64 / (count - 1) as f64).collect(),
    }
}

fn analyzer(doc: &Table) -> Result<Option<AnalyzerConfig>> {
    if doc.get("analyzer").is_none() {
        return Ok(None);
    }
    let sec = Section::of(doc, "analyzer")?;
    let angles = sec.f64_array("angles")?.unwrap_or_default();
    let theta = sec.f64("theta")?;
    if let Some(t) = theta.filter(|t| !t.is_finite()) {
        return Err(Error::range("analyzer.theta", t, "finite"));
    }
    let default_required = if angles.is_empty() { 3 } else { angles.len() as i64 };
    let required = sec.int_in("required", default_required, 1, 64)? as usize;
    let max_hits = sec.int_in("max_hits", 1, 0, 64)? as usize;
    let rule = PostSelectionRule {
        required,
        max_hits_per_detector: (max_hits > 0).then_some(max_hits),
        distinct_analyzers: sec.bool("distinct_analyzers")?.unwrap_or(false),
    };
    Ok(Some(AnalyzerConfig { angles, theta, rule }))
}

/// Parses a config whose kind is given by its `kind` key (or its preset's).
pub fn parse_experiment(text: &str) -> Result<ExperimentSpec> {
    parse_inner(text, None)
}

/// Parses a config and forces the experiment kind.
pub fn parse_experiment_as(text: &str, kind: ExperimentKind) -> Result<ExperimentSpec> {
    parse_inner(text, Some(kind))
}

fn parse_inner(text: &str, kind: Option<ExperimentKind>) -> Result<ExperimentSpec> {
    let user: Table = text.parse().map_err(|e: toml::de::Error| Error::Syntax(e.to_string()))?;
    let unknown = unknown_keys(&user);
    if !unknown.is_empty() {
        return Err(Error::UnknownKeys(unknown));
    }
    let doc = match user.get("preset") {
        None => user,
        Some(Value::String(name)) => {
            let base = presets::preset(name).ok_or_else(|| Error::UnknownPreset(name.clone()))?;
            let mut base: Table = base.parse().map_err(|e: toml::de::Error| Error::Syntax(format!("preset {name}: {e}")))?;
            // a sweep given in the other form replaces the preset's
            if let (Some(Value::Table(b)), Some(Value::Table(u))) = (base.get_mut("sweep"), user.get("sweep")) {
                let range = ["start", "stop", "count"];
                if u.contains_key("values") {
                    for k in range {
                        b.remove(k);
                    }
                } else if range.iter().any(|k| u.contains_key(*k)) {
                    b.remove("values");
                }
            }
            merge(base, user)
        }
        Some(_) => return Err(Error::Type { key: "preset".into(), expected: "a string" }),
    };
    from_table(&doc, kind)
}

fn from_table(doc: &Table, kind: Option<ExperimentKind>) -> Result<ExperimentSpec> {
    let kind = match kind {
        Some(k) => k,
        None => {
            let v = doc.get("kind").ok_or_else(|| Error::Missing("kind".into()))?;
            v.as_str().ok_or(Error::Type { key: "kind".into(), expected: "a string" })?.parse()?
        }
    };

    let system = Section::of(doc, "system")?;
    let f_g = angular_momentum(&system, "f_g")?;
    let f_e = angular_momentum(&system, "f_e")?;
    let scheme = LevelScheme::new(f_g, f_e).map_err(|e| Error::range("system.f_g/f_e", format!("{f_g} -> {f_e}"), e.to_string()))?;
    let n_max = system.int_in("n_max", 7, 0, 30)? as u32;
    let polarizations = match system.str("polarizations")?.unwrap_or("both") {
        "both" => Polarizations::Both,
        "minus-only" => Polarizations::MinusOnly,
        other => return Err(Error::range("system.polarizations", other, "\"both\" or \"minus-only\"")),
    };
    let delta = system.f64_or("delta", 0.0)?;
    let delta_plus = system.f64_or("delta_plus", delta)?;
    let delta_minus = system.f64_or("delta_minus", delta)?;
    let kappa = system.f64_or("kappa", 0.0)?;
    let gamma = system.f64_or("gamma", 1.0)?;
    if kappa < 0.0 {
        return Err(Error::range("system.kappa", kappa, ">= 0"));
    }
    if gamma < 0.0 {
        return Err(Error::range("system.gamma", gamma, ">= 0"));
    }

    let time = Section::of(doc, "time")?;
    let t_start = time.f64_or("t_start", 0.0)?;
    let t_end = time.f64_or("t_end", 40.0)?;
    if t_end <= t_start {
        return Err(Error::range("time.t_end", t_end, format!("> t_start = {t_start}")));
    }
    let samples = time.int_in("samples", 401, 2, 1_000_000)? as usize;

    let initial_state = amplitudes(doc, "initial")?.ok_or_else(|| Error::Missing("initial".into()))?;
    let target = amplitudes(doc, "target")?.unwrap_or_else(|| vec![(BasisState::ground(0, 0, 3), Complex64::new(1.0, 0.0))]);

    let config = SimulationConfig {
        scheme,
        n_max,
        cavity_pulse: pulse(doc, "cavity", 17.0)?,
        pump_pulse: pulse(doc, "pump", 23.0)?,
        delta_plus,
        delta_minus,
        kappa,
        gamma,
        t_start,
        t_end,
        initial_state,
        polarizations,
    };
    config.validate()?;
    let basis = config.basis();
    for (s, _) in &target {
        if basis.index_of(s).is_none() {
            return Err(Error::range("target.state", s, format!("a state of the basis with n_max = {n_max}")));
        }
    }

    let run = Section::of(doc, "run")?;
    let n_traj = run.int_in("n_traj", 2000, 1, 100_000_000)? as usize;
    let base_seed = run.int_in("seed", 0, 0, i64::MAX)? as u64;
    let out = run.str("out")?.map(String::from);
    let observables = match run.str("observables")? {
        None => ObservableSet::default(),
        Some(s) => ObservableSet::parse(s).ok_or_else(|| Error::range("run.observables", s, "\"states\", \"reduced\" or \"occupations\""))?,
    };

    let analyzer = analyzer(doc)?;
    let sweep = sweep(doc)?;
    let spec = ExperimentSpec { kind, config, samples, analyzer, n_traj, base_seed, out, sweep, target, observables };
    spec.check_kind()?;
    Ok(spec)
}

impl ExperimentSpec {
    /// Kind-specific required fields and sweep axes.
    fn check_kind(&self) -> Result<()> {
        let kind = self.kind;
        if let Some(sw) = &self.sweep {
            if !kind.takes_sweep() {
                return Err(Error::Invalid(format!("kind {kind} does not take a [sweep] section")));
            }
            let ok = match kind {
                ExperimentKind::SweepDetuning => sw.axis.is_detuning(),
                ExperimentKind::CorrelateGhz => sw.axis != SweepAxis::Theta,
                ExperimentKind::CorrelateAtomPhoton => true,
                _ => !matches!(sw.axis, SweepAxis::Phi | SweepAxis::Theta),
            };
            if !ok {
                return Err(Error::range("sweep.parameter", sw.axis.name(), format!("an axis that applies to {kind}")));
            }
            if sw.axis == SweepAxis::Kappa && sw.values.iter().any(|&k| k < 0.0) {
                return Err(Error::range("sweep.values", "negative kappa", ">= 0"));
            }
            if sw.axis == SweepAxis::Gamma && sw.values.iter().any(|&k| k < 0.0) {
                return Err(Error::range("sweep.values", "negative gamma", ">= 0"));
            }
            if matches!(sw.axis, SweepAxis::G0 | SweepAxis::Omega0) && sw.values.iter().any(|&k| k < 0.0) {
                return Err(Error::range("sweep.values", "negative amplitude", ">= 0"));
            }
        }
        match kind {
            ExperimentKind::SweepDetuning if self.sweep.is_none() => Err(Error::Missing("sweep".into())),
            ExperimentKind::CorrelateGhz => {
                let a = self.analyzer.as_ref().ok_or_else(|| Error::Missing("analyzer".into()))?;
                if a.angles.is_empty() {
                    return Err(Error::Missing("analyzer.angles".into()));
                }
                Ok(())
            }
            ExperimentKind::CorrelateAtomPhoton => {
                let a = self.analyzer.as_ref().ok_or_else(|| Error::Missing("analyzer".into()))?;
                if a.angles.is_empty() {
                    return Err(Error::Missing("analyzer.angles".into()));
                }
                let swept = self.sweep.as_ref().is_some_and(|s| s.axis == SweepAxis::Theta);
                if a.theta.is_none() && !swept {
                    return Err(Error::Missing("analyzer.theta".into()));
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    /// Spec with one sweep value applied and the sweep removed.
    pub fn at_point(&self, value: f64) -> Result<ExperimentSpec> {
        let mut s = self.clone();
        let Some(sw) = s.sweep.take() else { return Ok(s) };
        let c = &mut s.config;
        match sw.axis {
            SweepAxis::Delta => {
                c.delta_plus = value;
                c.delta_minus = value;
            }
            SweepAxis::DeltaPlus => c.delta_plus = value,
            SweepAxis::DeltaMinus => c.delta_minus = value,
            SweepAxis::Kappa => c.kappa = value,
            SweepAxis::Gamma => c.gamma = value,
            SweepAxis::G0 => c.cavity_pulse.amplitude = value,
            SweepAxis::Omega0 => c.pump_pulse.amplitude = value,
            SweepAxis::Phi => {
                let a = s.analyzer.as_mut().ok_or_else(|| Error::Missing("analyzer".into()))?;
                a.angles.iter_mut().for_each(|x| *x = value);
            }
            SweepAxis::Theta => {
                let a = s.analyzer.as_mut().ok_or_else(|| Error::Missing("analyzer".into()))?;
                a.theta = Some(value);
            }
        }
        s.config.validate()?;
        Ok(s)
    }

    /// Sweep values, or a single `None` point when there is no sweep.
    pub fn points(&self) -> Vec<Option<f64>> {
        match &self.sweep {
            Some(sw) => sw.values.iter().map(|&v| Some(v)).collect(),
            None => vec![None],
        }
    }

    /// Fully resolved config in the input grammar; parses back to `self`.
    pub fn to_toml(&self) -> String {
        let c = &self.config;
        let mut doc = Table::new();
        doc.insert("kind".into(), self.kind.name().into());

        let mut system = Table::new();
        for (k, j) in [("f_g", c.scheme.f_g), ("f_e", c.scheme.f_e)] {
            let v: Value = if j.is_integer() { Value::Integer(i64::from(j.twice() / 2)) } else { j.to_string().into() };
            system.insert(k.into(), v);
        }
        system.insert("n_max".into(), i64::from(c.n_max).into());
        let pol = match c.polarizations {
            Polarizations::Both => "both",
            Polarizations::MinusOnly => "minus-only",
        };
        system.insert("polarizations".into(), pol.into());
        system.insert("delta_plus".into(), c.delta_plus.into());
        system.insert("delta_minus".into(), c.delta_minus.into());
        system.insert("kappa".into(), c.kappa.into());
        system.insert("gamma".into(), c.gamma.into());
        doc.insert("system".into(), system.into());

        for (name, p) in [("cavity", c.cavity_pulse), ("pump", c.pump_pulse)] {
            let mut t = Table::new();
            t.insert("amplitude".into(), p.amplitude.into());
            t.insert("center".into(), p.center.into());
            t.insert("fwhm".into(), p.fwhm.into());
            doc.insert(name.into(), t.into());
        }

        let mut time = Table::new();
        time.insert("t_start".into(), c.t_start.into());
        time.insert("t_end".into(), c.t_end.into());
        time.insert("samples".into(), (self.samples as i64).into());
        doc.insert("time".into(), time.into());

        doc.insert("initial".into(), amplitude_array(&c.initial_state));
        doc.insert("target".into(), amplitude_array(&self.target));

        if let Some(a) = &self.analyzer {
            let mut t = Table::new();
            t.insert("angles".into(), Value::Array(a.angles.iter().map(|&x| x.into()).collect()));
            if let Some(theta) = a.theta {
                t.insert("theta".into(), theta.into());
            }
            t.insert("required".into(), (a.rule.required as i64).into());
            t.insert("max_hits".into(), (a.rule.max_hits_per_detector.unwrap_or(0) as i64).into());
            t.insert("distinct_analyzers".into(), a.rule.distinct_analyzers.into());
            doc.insert("analyzer".into(), t.into());
        }

        let mut run = Table::new();
        run.insert("n_traj".into(), (self.n_traj as i64).into());
        run.insert("seed".into(), (self.base_seed as i64).into());
        run.insert("observables".into(), self.observables.name().into());
        if let Some(out) = &self.out {
            run.insert("out".into(), out.clone().into());
        }
        doc.insert("run".into(), run.into());

        if let Some(sw) = &self.sweep {
            let mut t = Table::new();
            t.insert("parameter".into(), sw.axis.name().into());
            t.insert("values".into(), Value::Array(sw.values.iter().map(|&x| x.into()).collect()));
            doc.insert("sweep".into(), t.into());
        }
        toml::to_string(&doc).expect("config tables always serialize")
    }
}

fn amplitude_array(amps: &[(BasisState, Complex64)]) -> Value {
    Value::Array(
        amps.iter()
            .map(|(s, a)| {
                let mut t = Table::new();
                t.insert("state".into(), s.label().into());
                t.insert("re".into(), a.re.into());
                t.insert("im".into(), a.im.into());
                Value::Table(t)
            })
            .collect(),
    )
}
