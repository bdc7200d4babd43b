//! Scenario configuration: a flat `key = value` document with dotted keys.
//!
//! ```text
//! # comments run to the end of the line
//! name = "demo"
//! mesh.N = 256
//! time.dt = 1e-4
//! time.T_end = 0.1
//! model.beta0 = "tanh"
//! model.beta0.beta_R = 2.0
//! eps_scan.values = [1e-2, 1e-3]
//! ```
//!
//! Values are numbers, double-quoted strings, `true`/`false`, or bracketed
//! lists of numbers. A key may be both a value and a prefix of other keys
//! (`model.beta0` and `model.beta0.beta_R`).
//!
//! Defaults:
//!
//! | key | default |
//! |-----|---------|
//! | `name` | `"scenario"` |
//! | `mesh.L` | `1.0` |
//! | `mesh.N` | required |
//! | `time.dt`, `time.T_end` | required |
//! | `time.output_every` | steps / 10, at least 1 |
//! | `model.*` | Fickian: `D0 = 1`, `beta0 = 1`, the rest `0` |
//! | `initial.u0` | `"cosine"` with mean 0, amplitude 1, mode 1 |
//! | `initial.sigma0` | `"constant"` 0 |
//! | `boundary.phi_left`, `boundary.phi_right` | `"zero"` |
//! | `epsilon` | `0` |
//! | `solver.stress_scheme` | `"implicit-decay"` |
//! | `longtime.*` | absent; with any key set: `Gamma = 1`, box `t = x = [0, 0]`, `u = [0, 1]`, `sigma = [-1, 1]`, `samples = 21` |
//! | `eps_scan.values` | `[1e-2, 1e-3, 1e-4]` |
//! | `eps_scan.margin` | `0.1` |
//! | `checks.*` | off |

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::{self, Write as _};
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::coefficients::{
    Arg, Coefficient, CohenLaw, PhysicalCoefficients, Profile, SampleBox, StressDiffusionParams, TanhLaw,
};
use crate::discretization::{BoundaryData, Influx};
use crate::solver::{SolverConfig, StressScheme};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("line {line}: duplicate key `{key}` (first set on line {first})")]
    DuplicateKey { line: usize, key: String, first: usize },
    #[error("line {line}: unknown key `{key}`")]
    UnknownKey { line: usize, key: String },
    #[error("missing required key `{key}`")]
    MissingKey { key: String },
    #[error("line {line}: key `{key}` expects {expected}, found {found}")]
    TypeMismatch { line: usize, key: String, expected: &'static str, found: &'static str },
    #[error("{}key `{key}`: {reason}", line.map(|l| format!("line {l}: ")).unwrap_or_default())]
    Invalid { line: Option<usize>, key: String, reason: String },
    #[error("unknown preset `{0}`")]
    UnknownPreset(String),
    #[error("{path}: {message}")]
    Io { path: PathBuf, message: String },
}

#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Number(f64),
    Str(String),
    Bool(bool),
    List(Vec<f64>),
}

impl Value {
    fn kind(&self) -> &'static str {
        match self {
            Value::Number(_) => "a number",
            Value::Str(_) => "a string",
            Value::Bool(_) => "a boolean",
            Value::List(_) => "a list of numbers",
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Number(v) => write!(f, "{v:?}"),
            Value::Str(s) => write!(f, "\"{s}\""),
            Value::Bool(b) => write!(f, "{b}"),
            Value::List(vs) => {
                write!(f, "[")?;
                for (i, v) in vs.iter().enumerate() {
                    if i > 0 {
                        write!(f, ", ")?;
                    }
                    write!(f, "{v:?}")?;
                }
                write!(f, "]")
            }
        }
    }
}

/// The raw key-value entries of a document with their line numbers.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Document {
    entries: BTreeMap<String, (usize, Value)>,
}

impl Document {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut entries: BTreeMap<String, (usize, Value)> = BTreeMap::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let content = strip_comment(raw).trim();
            if content.is_empty() {
                continue;
            }
            let (key, value) = content
                .split_once('=')
                .ok_or_else(|| ConfigError::Syntax { line, message: format!("expected `key = value`, found `{content}`") })?;
            let key = key.trim();
            if key.is_empty()
                || key.split('.').any(|part| part.is_empty())
                || !key.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '.')
            {
                return Err(ConfigError::Syntax { line, message: format!("invalid key `{key}`") });
            }
            let value = parse_value(value.trim()).map_err(|message| ConfigError::Syntax { line, message })?;
            if let Some((first, _)) = entries.get(key) {
                return Err(ConfigError::DuplicateKey { line, key: key.to_string(), first: *first });
            }
            entries.insert(key.to_string(), (line, value));
        }
        Ok(Self { entries })
    }

    pub fn get(&self, key: &str) -> Option<&Value> {
        self.entries.get(key).map(|(_, v)| v)
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }
}

fn strip_comment(line: &str) -> &str {
    let mut in_string = false;
    for (i, c) in line.char_indices() {
        match c {
            '"' => in_string = !in_string,
            '#' if !in_string => return &line[..i],
            _ => {}
        }
    }
    line
}

fn parse_number(s: &str) -> Result<f64, String> {
    s.parse::<f64>().map_err(|_| format!("cannot parse `{s}` as a value"))
}

fn parse_value(s: &str) -> Result<Value, String> {
    if s.is_empty() {
        return Err("missing value".into());
    }
    if let Some(rest) = s.strip_prefix('"') {
        let inner = rest.strip_suffix('"').ok_or("unterminated string")?;
        if inner.contains('"') {
            return Err("unexpected `\"` inside string".into());
        }
        return Ok(Value::Str(inner.to_string()));
    }
    if let Some(rest) = s.strip_prefix('[') {
        let inner = rest.strip_suffix(']').ok_or("unterminated list")?.trim();
        if inner.is_empty() {
            return Ok(Value::List(Vec::new()));
        }
        return inner.split(',').map(|item| parse_number(item.trim())).collect::<Result<_, _>>().map(Value::List);
    }
    match s {
        "true" => return Ok(Value::Bool(true)),
        "false" => return Ok(Value::Bool(false)),
        _ => {}
    }
    let v = parse_number(s)?;
    if !v.is_finite() {
        return Err(format!("non-finite number `{s}`"));
    }
    Ok(Value::Number(v))
}

/// Typed access to a [`Document`] that remembers which keys were read.
struct Reader<'a> {
    doc: &'a Document,
    used: BTreeSet<String>,
}

impl<'a> Reader<'a> {
    fn new(doc: &'a Document) -> Self {
        Self { doc, used: BTreeSet::new() }
    }

    fn line(&self, key: &str) -> Option<usize> {
        self.doc.entries.get(key).map(|(l, _)| *l)
    }

    fn raw(&mut self, key: &str) -> Option<(usize, &'a Value)> {
        let (line, value) = self.doc.entries.get(key)?;
        self.used.insert(key.to_string());
        Some((*line, value))
    }

    fn has(&self, key: &str) -> bool {
        self.doc.entries.contains_key(key)
    }

    fn has_prefix(&self, prefix: &str) -> bool {
        let dotted = format!("{prefix}.");
        self.doc.entries.keys().any(|k| k == prefix || k.starts_with(&dotted))
    }

    fn mismatch(key: &str, line: usize, expected: &'static str, v: &Value) -> ConfigError {
        ConfigError::TypeMismatch { line, key: key.to_string(), expected, found: v.kind() }
    }

    fn number(&mut self, key: &str) -> Result<Option<f64>, ConfigError> {
        match self.raw(key) {
            None => Ok(None),
            Some((_, Value::Number(v))) => Ok(Some(*v)),
            Some((line, v)) => Err(Self::mismatch(key, line, "a number", v)),
        }
    }

    fn number_or(&mut self, key: &str, default: f64) -> Result<f64, ConfigError> {
        Ok(self.number(key)?.unwrap_or(default))
    }

    fn required_number(&mut self, key: &str) -> Result<f64, ConfigError> {
        self.number(key)?.ok_or_else(|| ConfigError::MissingKey { key: key.to_string() })
    }

    fn count(&mut self, key: &str) -> Result<Option<usize>, ConfigError> {
        let Some(v) = self.number(key)? else { return Ok(None) };
        if v < 0.0 || v.fract() != 0.0 || v > u32::MAX as f64 {
            return Err(ConfigError::TypeMismatch {
                line: self.line(key).unwrap_or(0),
                key: key.to_string(),
                expected: "a non-negative integer",
                found: "a number",
            });
        }
        Ok(Some(v as usize))
    }

    fn string(&mut self, key: &str) -> Result<Option<String>, ConfigError> {
        match self.raw(key) {
            None => Ok(None),
            Some((_, Value::Str(s))) => Ok(Some(s.clone())),
            Some((line, v)) => Err(Self::mismatch(key, line, "a string", v)),
        }
    }

    fn boolean(&mut self, key: &str) -> Result<Option<bool>, ConfigError> {
        match self.raw(key) {
            None => Ok(None),
            Some((_, Value::Bool(b))) => Ok(Some(*b)),
            Some((line, v)) => Err(Self::mismatch(key, line, "a boolean", v)),
        }
    }

    fn list(&mut self, key: &str) -> Result<Option<Vec<f64>>, ConfigError> {
        match self.raw(key) {
            None => Ok(None),
            Some((_, Value::List(v))) => Ok(Some(v.clone())),
            Some((line, v)) => Err(Self::mismatch(key, line, "a list of numbers", v)),
        }
    }

    fn interval(&mut self, key: &str, default: [f64; 2]) -> Result<[f64; 2], ConfigError> {
        match self.list(key)? {
            None => Ok(default),
            Some(v) if v.len() == 2 => Ok([v[0], v[1]]),
            Some(v) => Err(self.invalid(key, format!("expects [lo, hi], got {} entries", v.len()))),
        }
    }

    fn invalid(&self, key: &str, reason: impl Into<String>) -> ConfigError {
        ConfigError::Invalid { line: self.line(key), key: key.to_string(), reason: reason.into() }
    }

    /// First key that exists among `aliases`, read as a number.
    fn aliased(&mut self, prefix: &str, aliases: &[&str]) -> Result<Option<f64>, ConfigError> {
        let mut found: Option<(String, f64)> = None;
        for a in aliases {
            let key = format!("{prefix}.{a}");
            if let Some(v) = self.number(&key)? {
                if let Some((first, _)) = &found {
                    return Err(self.invalid(&key, format!("conflicts with `{first}`")));
                }
                found = Some((key, v));
            }
        }
        Ok(found.map(|(_, v)| v))
    }

    fn finish(&self) -> Result<(), ConfigError> {
        for (key, (line, _)) in &self.doc.entries {
            if !self.used.contains(key) {
                return Err(ConfigError::UnknownKey { line: *line, key: key.clone() });
            }
        }
        Ok(())
    }
}

/// A one-variable law selected by name.
#[derive(Debug, Clone, PartialEq)]
pub enum LawSpec {
    Constant(f64),
    Tanh(TanhLaw),
    Cohen(CohenLaw),
    Polynomial(Vec<f64>),
}

impl LawSpec {
    pub fn name(&self) -> &'static str {
        match self {
            LawSpec::Constant(_) => "constant",
            LawSpec::Tanh(_) => "tanh",
            LawSpec::Cohen(_) => "cohen-e0",
            LawSpec::Polynomial(_) => "polynomial",
        }
    }

    pub fn profile(&self) -> Profile {
        match self {
            LawSpec::Constant(c) => Profile::Constant(*c),
            LawSpec::Tanh(t) => Profile::Tanh(*t),
            LawSpec::Cohen(c) => Profile::Cohen(*c),
            LawSpec::Polynomial(p) => Profile::Polynomial(p.clone()),
        }
    }

    fn read(r: &mut Reader<'_>, prefix: &str, default: &LawSpec) -> Result<LawSpec, ConfigError> {
        let selector = match r.string(prefix)? {
            Some(s) => s,
            None if r.has(&format!("{prefix}.value")) => "constant".into(),
            None => return Ok(default.clone()),
        };
        let need = |r: &mut Reader<'_>, aliases: &[&str]| -> Result<f64, ConfigError> {
            r.aliased(prefix, aliases)?.ok_or_else(|| ConfigError::MissingKey { key: format!("{prefix}.{}", aliases[0]) })
        };
        match selector.as_str() {
            "constant" => Ok(LawSpec::Constant(need(r, &["value"])?)),
            "tanh" => {
                let low = need(r, &["low", "beta_G", "D_G"])?;
                let high = need(r, &["high", "beta_R", "D_R"])?;
                let center = need(r, &["center", "u_RG"])?;
                let width = need(r, &["width", "delta"])?;
                if !(width > 0.0) {
                    return Err(r.invalid(&format!("{prefix}.width"), format!("must be positive, got {width}")));
                }
                Ok(LawSpec::Tanh(TanhLaw { low, high, center, width }))
            }
            "cohen-e0" => {
                let a1 = need(r, &["alpha_1"])?;
                let a2 = need(r, &["alpha_2"])?;
                let p = StressDiffusionParams::new(a1, a2).map_err(|e| r.invalid(prefix, e.to_string()))?;
                Ok(LawSpec::Cohen(p.law()))
            }
            "polynomial" => {
                let key = format!("{prefix}.coeffs");
                let c = r.list(&key)?.ok_or_else(|| ConfigError::MissingKey { key: key.clone() })?;
                if c.is_empty() {
                    return Err(r.invalid(&key, "needs at least one coefficient"));
                }
                Ok(LawSpec::Polynomial(c))
            }
            other => Err(r.invalid(prefix, format!("unknown model `{other}`; expected constant, tanh, cohen-e0 or polynomial"))),
        }
    }

    fn write(&self, out: &mut String, prefix: &str) {
        let _ = writeln!(out, "{prefix} = \"{}\"", self.name());
        match self {
            LawSpec::Constant(c) => {
                let _ = writeln!(out, "{prefix}.value = {c:?}");
            }
            LawSpec::Tanh(t) => {
                let _ = writeln!(out, "{prefix}.low = {:?}", t.low);
                let _ = writeln!(out, "{prefix}.high = {:?}", t.high);
                let _ = writeln!(out, "{prefix}.center = {:?}", t.center);
                let _ = writeln!(out, "{prefix}.width = {:?}", t.width);
            }
            LawSpec::Cohen(c) => {
                let _ = writeln!(out, "{prefix}.alpha_1 = {:?}", c.alpha_1);
                let _ = writeln!(out, "{prefix}.alpha_2 = {:?}", c.alpha_2);
            }
            LawSpec::Polynomial(p) => {
                let _ = writeln!(out, "{prefix}.coeffs = {}", Value::List(p.clone()));
            }
        }
    }
}

/// A law together with the variable it is evaluated at.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientSpec {
    pub law: LawSpec,
    pub arg: Arg,
}

impl CoefficientSpec {
    fn constant(c: f64) -> Self {
        Self { law: LawSpec::Constant(c), arg: Arg::U }
    }

    pub fn coefficient(&self) -> Coefficient {
        Coefficient::Law { profile: self.law.profile(), arg: self.arg }
    }

    fn read(r: &mut Reader<'_>, prefix: &str, default: &CoefficientSpec) -> Result<Self, ConfigError> {
        let law = LawSpec::read(r, prefix, &default.law)?;
        let key = format!("{prefix}.arg");
        let arg = match r.string(&key)? {
            None => default.arg,
            Some(s) => Arg::parse(&s).ok_or_else(|| r.invalid(&key, format!("unknown argument `{s}`; expected u, sigma, x or t")))?,
        };
        Ok(Self { law, arg })
    }

    fn write(&self, out: &mut String, prefix: &str) {
        self.law.write(out, prefix);
        let _ = writeln!(out, "{prefix}.arg = \"{}\"", self.arg.name());
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelSpec {
    pub d0: CoefficientSpec,
    pub e0: CoefficientSpec,
    pub m0: CoefficientSpec,
    pub beta0: CoefficientSpec,
    pub mu0: LawSpec,
    pub nu0: LawSpec,
}

impl ModelSpec {
    pub fn fickian() -> Self {
        Self {
            d0: CoefficientSpec::constant(1.0),
            e0: CoefficientSpec::constant(0.0),
            m0: CoefficientSpec::constant(0.0),
            beta0: CoefficientSpec::constant(1.0),
            mu0: LawSpec::Constant(0.0),
            nu0: LawSpec::Constant(0.0),
        }
    }

    pub fn physical(&self) -> PhysicalCoefficients {
        PhysicalCoefficients {
            d0: self.d0.coefficient(),
            e0: self.e0.coefficient(),
            m0: self.m0.coefficient(),
            beta0: self.beta0.coefficient(),
            mu0: self.mu0.profile(),
            nu0: self.nu0.profile(),
        }
    }

    fn read(r: &mut Reader<'_>) -> Result<Self, ConfigError> {
        let base = match r.string("model.preset")? {
            None => Self::fickian(),
            Some(p) if p == "fickian" => Self::fickian(),
            Some(p) => return Err(r.invalid("model.preset", format!("unknown model preset `{p}`; expected fickian"))),
        };
        Ok(Self {
            d0: CoefficientSpec::read(r, "model.D0", &base.d0)?,
            e0: CoefficientSpec::read(r, "model.E0", &base.e0)?,
            m0: CoefficientSpec::read(r, "model.M0", &base.m0)?,
            beta0: CoefficientSpec::read(r, "model.beta0", &base.beta0)?,
            mu0: LawSpec::read(r, "model.mu0", &base.mu0)?,
            nu0: LawSpec::read(r, "model.nu0", &base.nu0)?,
        })
    }

    fn write(&self, out: &mut String) {
        self.d0.write(out, "model.D0");
        self.e0.write(out, "model.E0");
        self.m0.write(out, "model.M0");
        self.beta0.write(out, "model.beta0");
        self.mu0.write(out, "model.mu0");
        self.nu0.write(out, "model.nu0");
    }
}

/// Nodal initial profile.
#[derive(Debug, Clone, PartialEq)]
pub enum FieldSpec {
    Constant(f64),
    /// `mean + amplitude·cos(mode·πx/L)`.
    Cosine { mean: f64, amplitude: f64, mode: u32 },
    /// `left` for `x < position`, `right` otherwise.
    Step { left: f64, right: f64, position: f64 },
    /// A snapshot file; `u0` takes its `u` column, `sigma0` its `sigma` column.
    File(PathBuf),
}

impl FieldSpec {
    fn read(r: &mut Reader<'_>, prefix: &str, default: FieldSpec) -> Result<Self, ConfigError> {
        let Some(kind) = r.string(prefix)? else {
            if r.has_prefix(prefix) {
                return Err(ConfigError::MissingKey { key: prefix.to_string() });
            }
            return Ok(default);
        };
        let k = |a: &str| format!("{prefix}.{a}");
        match kind.as_str() {
            "constant" => Ok(FieldSpec::Constant(r.number_or(&k("value"), 0.0)?)),
            "cosine" => {
                let mode = r.count(&k("mode"))?.unwrap_or(1);
                Ok(FieldSpec::Cosine {
                    mean: r.number_or(&k("mean"), 0.0)?,
                    amplitude: r.number_or(&k("amplitude"), 1.0)?,
                    mode: mode as u32,
                })
            }
            "step" => Ok(FieldSpec::Step {
                left: r.number_or(&k("left"), 1.0)?,
                right: r.number_or(&k("right"), 0.0)?,
                position: r.required_number(&k("position"))?,
            }),
            "file" => {
                let key = k("path");
                let p = r.string(&key)?.ok_or(ConfigError::MissingKey { key })?;
                Ok(FieldSpec::File(PathBuf::from(p)))
            }
            other => Err(r.invalid(prefix, format!("unknown initial profile `{other}`; expected constant, cosine, step or file"))),
        }
    }

    fn write(&self, out: &mut String, prefix: &str) {
        match self {
            FieldSpec::Constant(v) => {
                let _ = writeln!(out, "{prefix} = \"constant\"\n{prefix}.value = {v:?}");
            }
            FieldSpec::Cosine { mean, amplitude, mode } => {
                let _ = writeln!(
                    out,
                    "{prefix} = \"cosine\"\n{prefix}.mean = {mean:?}\n{prefix}.amplitude = {amplitude:?}\n{prefix}.mode = {mode}"
                );
            }
            FieldSpec::Step { left, right, position } => {
                let _ = writeln!(
                    out,
                    "{prefix} = \"step\"\n{prefix}.left = {left:?}\n{prefix}.right = {right:?}\n{prefix}.position = {position:?}"
                );
            }
            FieldSpec::File(p) => {
                let _ = writeln!(out, "{prefix} = \"file\"\n{prefix}.path = \"{}\"", p.display());
            }
        }
    }

    fn resolve_relative(&mut self, base: &Path) {
        if let FieldSpec::File(p) = self {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
    }
}

fn read_influx(r: &mut Reader<'_>, prefix: &str) -> Result<Influx, ConfigError> {
    let Some(kind) = r.string(prefix)? else {
        if r.has_prefix(prefix) {
            return Err(ConfigError::MissingKey { key: prefix.to_string() });
        }
        return Ok(Influx::Zero);
    };
    let k = |a: &str| format!("{prefix}.{a}");
    match kind.as_str() {
        "zero" => Ok(Influx::Zero),
        "constant" => Ok(Influx::Constant(r.required_number(&k("value"))?)),
        "sinusoid" => Ok(Influx::Sinusoid {
            offset: r.number_or(&k("offset"), 0.0)?,
            amplitude: r.required_number(&k("amplitude"))?,
            omega: r.number_or(&k("omega"), 1.0)?,
            phase: r.number_or(&k("phase"), 0.0)?,
        }),
        "pulse" => {
            let value = r.required_number(&k("value"))?;
            let t_on = r.number_or(&k("t_on"), 0.0)?;
            let t_off = r.required_number(&k("t_off"))?;
            if !(t_off > t_on) {
                return Err(r.invalid(&k("t_off"), format!("must exceed t_on = {t_on}")));
            }
            Ok(Influx::Pulse { value, t_on, t_off })
        }
        other => Err(r.invalid(prefix, format!("unknown influx `{other}`; expected zero, constant, sinusoid or pulse"))),
    }
}

fn write_influx(out: &mut String, prefix: &str, influx: &Influx) {
    match influx {
        Influx::Zero | Influx::Custom(_) => {
            let _ = writeln!(out, "{prefix} = \"zero\"");
        }
        Influx::Constant(v) => {
            let _ = writeln!(out, "{prefix} = \"constant\"\n{prefix}.value = {v:?}");
        }
        Influx::Sinusoid { offset, amplitude, omega, phase } => {
            let _ = writeln!(
                out,
                "{prefix} = \"sinusoid\"\n{prefix}.offset = {offset:?}\n{prefix}.amplitude = {amplitude:?}\n{prefix}.omega = {omega:?}\n{prefix}.phase = {phase:?}"
            );
        }
        Influx::Pulse { value, t_on, t_off } => {
            let _ = writeln!(out, "{prefix} = \"pulse\"\n{prefix}.value = {value:?}\n{prefix}.t_on = {t_on:?}\n{prefix}.t_off = {t_off:?}");
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum GammaChoice {
    Fixed(f64),
    Grid(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct LongtimeSpec {
    pub gamma: GammaChoice,
    pub sample_box: SampleBox,
    pub samples: usize,
}

impl LongtimeSpec {
    pub const DEFAULT_SAMPLES: usize = 21;

    fn read(r: &mut Reader<'_>) -> Result<Option<Self>, ConfigError> {
        if !r.has_prefix("longtime") {
            return Ok(None);
        }
        let fixed = r.number("longtime.Gamma")?;
        let grid = r.list("longtime.gamma_grid")?;
        let gamma = match (fixed, grid) {
            (Some(_), Some(_)) => return Err(r.invalid("longtime.gamma_grid", "give either longtime.Gamma or longtime.gamma_grid")),
            (Some(g), None) => {
                if !(g > 0.0) {
                    return Err(r.invalid("longtime.Gamma", format!("must be positive, got {g}")));
                }
                GammaChoice::Fixed(g)
            }
            (None, Some(g)) => {
                if g.is_empty() || g.iter().any(|v| !(*v > 0.0)) {
                    return Err(r.invalid("longtime.gamma_grid", "must be a nonempty list of positive values"));
                }
                GammaChoice::Grid(g)
            }
            (None, None) => GammaChoice::Fixed(1.0),
        };
        let sample_box = SampleBox::new(
            r.interval("longtime.box.t", [0.0, 0.0])?,
            r.interval("longtime.box.x", [0.0, 0.0])?,
            r.interval("longtime.box.u", [0.0, 1.0])?,
            r.interval("longtime.box.sigma", [-1.0, 1.0])?,
        );
        sample_box.validate().map_err(|e| r.invalid("longtime.box", e.to_string()))?;
        let samples = r.count("longtime.samples")?.unwrap_or(Self::DEFAULT_SAMPLES);
        if samples < 2 {
            return Err(r.invalid("longtime.samples", "must be at least 2"));
        }
        Ok(Some(Self { gamma, sample_box, samples }))
    }

    fn write(&self, out: &mut String) {
        match &self.gamma {
            GammaChoice::Fixed(g) => {
                let _ = writeln!(out, "longtime.Gamma = {g:?}");
            }
            GammaChoice::Grid(g) => {
                let _ = writeln!(out, "longtime.gamma_grid = {}", Value::List(g.clone()));
            }
        }
        let b = &self.sample_box;
        for (name, iv) in [("t", b.t), ("x", b.x), ("u", b.u), ("sigma", b.s)] {
            let _ = writeln!(out, "longtime.box.{name} = {}", Value::List(iv.to_vec()));
        }
        let _ = writeln!(out, "longtime.samples = {}", self.samples);
    }
}

/// Checks evaluated after a run; each is off unless configured.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ChecksSpec {
    /// Maximum L² error against the decaying cosine mode of the heat equation.
    pub analytic_tol: Option<f64>,
    /// Per-step slack of the Lyapunov decay check.
    pub lyapunov_tol: Option<f64>,
    /// The homogenization metric must fall below this before `T_end`.
    pub homogenize_tol: Option<f64>,
    /// Relative tolerance of the mass balance.
    pub mass_tol: Option<f64>,
    pub overshoot: bool,
    pub undershoot: bool,
    pub front: bool,
}

impl ChecksSpec {
    fn read(r: &mut Reader<'_>) -> Result<Self, ConfigError> {
        let tol = |r: &mut Reader<'_>, key: &str| -> Result<Option<f64>, ConfigError> {
            match r.number(key)? {
                Some(v) if !(v > 0.0) => Err(r.invalid(key, format!("must be positive, got {v}"))),
                v => Ok(v),
            }
        };
        Ok(Self {
            analytic_tol: tol(r, "checks.analytic_tol")?,
            lyapunov_tol: tol(r, "checks.lyapunov_tol")?,
            homogenize_tol: tol(r, "checks.homogenize_tol")?,
            mass_tol: tol(r, "checks.mass_tol")?,
            overshoot: r.boolean("checks.overshoot")?.unwrap_or(false),
            undershoot: r.boolean("checks.undershoot")?.unwrap_or(false),
            front: r.boolean("checks.front")?.unwrap_or(false),
        })
    }

    fn write(&self, out: &mut String) {
        for (key, v) in [
            ("analytic_tol", self.analytic_tol),
            ("lyapunov_tol", self.lyapunov_tol),
            ("homogenize_tol", self.homogenize_tol),
            ("mass_tol", self.mass_tol),
        ] {
            if let Some(v) = v {
                let _ = writeln!(out, "checks.{key} = {v:?}");
            }
        }
        for (key, v) in [("overshoot", self.overshoot), ("undershoot", self.undershoot), ("front", self.front)] {
            if v {
                let _ = writeln!(out, "checks.{key} = true");
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub name: String,
    pub length: f64,
    pub cells: usize,
    pub dt: f64,
    pub t_end: f64,
    pub output_every: usize,
    pub model: ModelSpec,
    pub u0: FieldSpec,
    pub sigma0: FieldSpec,
    pub phi_left: Influx,
    pub phi_right: Influx,
    pub epsilon: f64,
    pub stress_scheme: StressScheme,
    pub longtime: Option<LongtimeSpec>,
    pub eps_values: Vec<f64>,
    pub eps_margin: f64,
    pub checks: ChecksSpec,
}

impl ScenarioConfig {
    pub fn solver_config(&self) -> SolverConfig {
        SolverConfig {
            dt: self.dt,
            t_end: self.t_end,
            epsilon: self.epsilon,
            stress_scheme: self.stress_scheme,
            output_every: self.output_every,
        }
    }

    pub fn boundary(&self) -> BoundaryData {
        BoundaryData::new(self.phi_left.clone(), self.phi_right.clone())
    }

    /// Replaces `dt` and keeps the snapshot cadence in simulated time.
    pub fn override_dt(&mut self, dt: f64) -> Result<(), ConfigError> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(ConfigError::Invalid { line: None, key: "time.dt".into(), reason: format!("must be positive, got {dt}") });
        }
        let interval = self.output_every as f64 * self.dt;
        self.dt = dt;
        self.output_every = ((interval / dt).round() as usize).max(1);
        self.validate_time(None)
    }

    pub fn override_cells(&mut self, cells: usize) -> Result<(), ConfigError> {
        if cells < 2 {
            return Err(ConfigError::Invalid { line: None, key: "mesh.N".into(), reason: format!("must be at least 2, got {cells}") });
        }
        self.cells = cells;
        Ok(())
    }

    fn validate_time(&self, r: Option<&Reader<'_>>) -> Result<(), ConfigError> {
        let invalid = |key: &str, reason: String| ConfigError::Invalid { line: r.and_then(|r| r.line(key)), key: key.into(), reason };
        if !(self.dt > 0.0) {
            return Err(invalid("time.dt", format!("must be positive, got {}", self.dt)));
        }
        if !(self.t_end == 0.0 || self.t_end >= self.dt) {
            return Err(invalid("time.T_end", format!("must be 0 or at least time.dt = {}, got {}", self.dt, self.t_end)));
        }
        Ok(())
    }

    /// Serializes every field, defaults included.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "name = \"{}\"", self.name);
        let _ = writeln!(out, "mesh.L = {:?}\nmesh.N = {}", self.length, self.cells);
        let _ = writeln!(out, "time.dt = {:?}\ntime.T_end = {:?}\ntime.output_every = {}", self.dt, self.t_end, self.output_every);
        self.model.write(&mut out);
        self.u0.write(&mut out, "initial.u0");
        self.sigma0.write(&mut out, "initial.sigma0");
        write_influx(&mut out, "boundary.phi_left", &self.phi_left);
        write_influx(&mut out, "boundary.phi_right", &self.phi_right);
        let _ = writeln!(out, "epsilon = {:?}", self.epsilon);
        let _ = writeln!(out, "solver.stress_scheme = \"{}\"", self.stress_scheme.name());
        if let Some(lt) = &self.longtime {
            lt.write(&mut out);
        }
        let _ = writeln!(out, "eps_scan.values = {}", Value::List(self.eps_values.clone()));
        let _ = writeln!(out, "eps_scan.margin = {:?}", self.eps_margin);
        self.checks.write(&mut out);
        out
    }
}

pub fn parse_config(text: &str) -> Result<ScenarioConfig, ConfigError> {
    let doc = Document::parse(text)?;
    let mut r = Reader::new(&doc);

    let name = r.string("name")?.unwrap_or_else(|| "scenario".into());
    if name.is_empty() || !name.chars().all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_') {
        return Err(r.invalid("name", "must be nonempty and use only letters, digits, `-` and `_`"));
    }
    let length = r.number_or("mesh.L", 1.0)?;
    if !(length > 0.0) {
        return Err(r.invalid("mesh.L", format!("must be positive, got {length}")));
    }
    let cells = r.count("mesh.N")?.ok_or(ConfigError::MissingKey { key: "mesh.N".into() })?;
    if cells < 2 {
        return Err(r.invalid("mesh.N", format!("must be at least 2, got {cells}")));
    }
    let dt = r.required_number("time.dt")?;
    let t_end = r.required_number("time.T_end")?;
    let output_every = r.count("time.output_every")?;
    if output_every == Some(0) {
        return Err(r.invalid("time.output_every", "must be at least 1"));
    }

    let model = ModelSpec::read(&mut r)?;
    let u0 = FieldSpec::read(&mut r, "initial.u0", FieldSpec::Cosine { mean: 0.0, amplitude: 1.0, mode: 1 })?;
    let sigma0 = FieldSpec::read(&mut r, "initial.sigma0", FieldSpec::Constant(0.0))?;
    let phi_left = read_influx(&mut r, "boundary.phi_left")?;
    let phi_right = read_influx(&mut r, "boundary.phi_right")?;

    let epsilon = r.number_or("epsilon", 0.0)?;
    if !(epsilon >= 0.0) {
        return Err(r.invalid("epsilon", format!("must be non-negative, got {epsilon}")));
    }
    let stress_scheme = match r.string("solver.stress_scheme")? {
        None => StressScheme::default(),
        Some(s) => StressScheme::parse(&s)
            .ok_or_else(|| r.invalid("solver.stress_scheme", format!("unknown scheme `{s}`; expected implicit-decay or explicit")))?,
    };
    let longtime = LongtimeSpec::read(&mut r)?;
    let eps_values = r.list("eps_scan.values")?.unwrap_or_else(|| vec![1e-2, 1e-3, 1e-4]);
    if eps_values.is_empty() || eps_values.iter().any(|v| !(*v > 0.0)) {
        return Err(r.invalid("eps_scan.values", "must be a nonempty list of positive values"));
    }
    let eps_margin = r.number_or("eps_scan.margin", 0.1)?;
    if !(eps_margin >= 0.0) {
        return Err(r.invalid("eps_scan.margin", "must be non-negative"));
    }
    let checks = ChecksSpec::read(&mut r)?;
    r.finish()?;

    let steps = if dt > 0.0 { (t_end / dt).round().max(0.0) as usize } else { 0 };
    let cfg = ScenarioConfig {
        name,
        length,
        cells,
        dt,
        t_end,
        output_every: output_every.unwrap_or((steps / 10).max(1)),
        model,
        u0,
        sigma0,
        phi_left,
        phi_right,
        epsilon,
        stress_scheme,
        longtime,
        eps_values,
        eps_margin,
        checks,
    };
    cfg.validate_time(Some(&r))?;
    if cfg.checks.lyapunov_tol.is_some() && cfg.longtime.is_none() {
        return Err(r.invalid("checks.lyapunov_tol", "requires a longtime section"));
    }
    Ok(cfg)
}

/// Reads and parses a config file; relative snapshot paths are taken
/// relative to the file's directory.
pub fn load_config(path: &Path) -> Result<ScenarioConfig, ConfigError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| ConfigError::Io { path: path.to_path_buf(), message: e.to_string() })?;
    let mut cfg = parse_config(&text)?;
    let base = path.parent().unwrap_or_else(|| Path::new("."));
    cfg.u0.resolve_relative(base);
    cfg.sigma0.resolve_relative(base);
    Ok(cfg)
}

pub const PRESET_NAMES: [&str; 6] = ["fickian", "case2-front", "sorption", "desorption", "homogenize", "eps-scan"];

pub fn preset_text(name: &str) -> Option<&'static str> {
    Some(match name {
        "fickian" => include_str!("../presets/fickian.cfg"),
        "case2-front" => include_str!("../presets/case2-front.cfg"),
        "sorption" => include_str!("../presets/sorption.cfg"),
        "desorption" => include_str!("../presets/desorption.cfg"),
        "homogenize" => include_str!("../presets/homogenize.cfg"),
        "eps-scan" => include_str!("../presets/eps-scan.cfg"),
        _ => return None,
    })
}

pub fn preset(name: &str) -> Result<ScenarioConfig, ConfigError> {
    parse_config(preset_text(name).ok_or_else(|| ConfigError::UnknownPreset(name.to_string()))?)
}
