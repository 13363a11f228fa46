//! Run configuration files.
//!
//! A configuration is a list of `key: value` items, one or more per line and
//! separated by commas. `#` starts a comment. Matrices are written as nested
//! brackets, `[[0, -1], [1, 0]]`, and may span several lines.
//!
//! ```text
//! builtin: rotation, omega: 6.283185307
//! fiber: sphere
//! resolution: 128
//! ```
//!
//! The system is given by `builtin: <name>` (with its parameters), by
//! `system: <path>` naming a system definition file, or inline with
//! `kind: constant | trig | builtin`, `dimension`, `period`, `A0`, `A1`…, `B1`… and
//! `name`.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use skewflow_core::{EpsilonField, FiberKind, Matrix, PeriodicSystem, TheoremId};
use thiserror::Error;

use crate::registry;

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("{}field `{field}`: {message}", line.map(|l| format!("line {l}: ")).unwrap_or_default())]
    Field { field: String, line: Option<usize>, message: String },
    #[error("no system given (use `builtin`, `system` or `kind`)")]
    MissingSystem,
    #[error("no command given")]
    MissingCommand,
    #[error("cannot read {path}: {message}")]
    Read { path: PathBuf, message: String },
}

impl ConfigError {
    fn field(entry: &Entry, message: impl Into<String>) -> Self {
        ConfigError::Field {
            field: entry.key.clone(),
            line: (entry.line > 0).then_some(entry.line),
            message: message.into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Command {
    Integrate,
    Monodromy,
    ChainGraph,
    /// `None` runs every theorem.
    Verify(Option<TheoremId>),
    LiftDemo,
    ProjectDemo,
}

impl Command {
    pub fn parse(text: &str) -> Option<Self> {
        let mut words = text.split_whitespace();
        let command = match words.next()? {
            "integrate" => Command::Integrate,
            "monodromy" => Command::Monodromy,
            "chain-graph" => Command::ChainGraph,
            "lift-demo" => Command::LiftDemo,
            "project-demo" => Command::ProjectDemo,
            "verify" => match words.next()? {
                "all" => Command::Verify(None),
                id => Command::Verify(Some(TheoremId::parse(id)?)),
            },
            _ => return None,
        };
        words.next().is_none().then_some(command)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum SystemSource {
    Inline(PeriodicSystem),
    /// A system definition file, resolved when the command runs.
    File(PathBuf),
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub command: Option<Command>,
    pub system: SystemSource,
    /// RK4 steps per period.
    pub steps: usize,
    pub fiber: FiberKind,
    pub resolution: usize,
    pub base_resolution: usize,
    pub epsilon: EpsilonField,
    pub samples_per_box: usize,
    pub seed: u64,
    pub output: PathBuf,
    /// Trajectory length for `integrate`.
    pub t_end: f64,
    /// Trajectory rows per unit time.
    pub rate: usize,
    /// Initial condition for `integrate`; the first basis vector by default.
    pub initial: Option<Vec<f64>>,
    /// Steps of the demo chains.
    pub chain_steps: usize,
    pub n_min: u64,
    /// Random samples per verification check.
    pub samples: usize,
}

pub const DEFAULT_STEPS: usize = 1024;
pub const DEFAULT_RESOLUTION: usize = 64;
pub const DEFAULT_EPSILON: f64 = 1e-2;
pub const DEFAULT_SAMPLES_PER_BOX: usize = 5;
pub const DEFAULT_SEED: u64 = 42;

const SYSTEM_KEYS: &[&str] = &["builtin", "system", "kind", "name", "dimension", "period"];
const RUN_KEYS: &[&str] = &[
    "command",
    "steps",
    "N",
    "fiber",
    "radius",
    "resolution",
    "base_resolution",
    "epsilon",
    "epsilon_slope",
    "samples_per_box",
    "seed",
    "output",
    "t_end",
    "rate",
    "x0",
    "chain_steps",
    "n_min",
    "samples",
];

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Entry {
    pub key: String,
    pub value: String,
    pub line: usize,
}

impl Entry {
    pub fn error(&self, message: impl Into<String>) -> ConfigError {
        ConfigError::field(self, message)
    }
}

/// Splits text into `key: value` entries, joining lines inside open brackets.
fn entries(text: &str) -> Result<Vec<Entry>, ConfigError> {
    let mut out = Vec::new();
    let mut pending = String::new();
    let mut start = 0;
    let mut depth = 0i32;
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("");
        if pending.is_empty() {
            start = i + 1;
        }
        pending.push_str(line);
        pending.push(' ');
        for c in line.chars() {
            match c {
                '[' | '(' => depth += 1,
                ']' | ')' => depth -= 1,
                _ => {}
            }
        }
        if depth < 0 {
            return Err(ConfigError::Syntax { line: i + 1, message: "unbalanced closing bracket".into() });
        }
        if depth == 0 {
            split_items(&pending, start, &mut out)?;
            pending.clear();
        }
    }
    if depth != 0 {
        return Err(ConfigError::Syntax { line: start, message: "unclosed bracket".into() });
    }
    Ok(out)
}

fn split_items(text: &str, line: usize, out: &mut Vec<Entry>) -> Result<(), ConfigError> {
    let mut depth = 0;
    let mut item = String::new();
    let mut push = |item: &str| -> Result<(), ConfigError> {
        let item = item.trim();
        if item.is_empty() {
            return Ok(());
        }
        let (key, value) = item
            .split_once(':')
            .ok_or_else(|| ConfigError::Syntax { line, message: format!("expected `key: value`, found `{item}`") })?;
        let key = key.trim();
        if key.is_empty() {
            return Err(ConfigError::Syntax { line, message: "empty key".into() });
        }
        out.push(Entry { key: key.to_string(), value: value.trim().to_string(), line });
        Ok(())
    };
    for c in text.chars() {
        match c {
            '[' | '(' => depth += 1,
            ']' | ')' => depth -= 1,
            ',' if depth == 0 => {
                push(&item)?;
                item.clear();
                continue;
            }
            _ => {}
        }
        item.push(c);
    }
    push(&item)
}

fn index(list: Vec<Entry>) -> Result<BTreeMap<String, Entry>, ConfigError> {
    let mut map = BTreeMap::new();
    for e in list {
        if let Some(prev) = map.get(&e.key) {
            let prev: &Entry = prev;
            return Err(ConfigError::field(&e, format!("already set on line {}", prev.line)));
        }
        map.insert(e.key.clone(), e);
    }
    Ok(map)
}

fn number(e: &Entry) -> Result<f64, ConfigError> {
    parse_number(&e.value).ok_or_else(|| ConfigError::field(e, format!("`{}` is not a number", e.value)))
}

fn parse_number(text: &str) -> Option<f64> {
    text.trim().parse::<f64>().ok().filter(|v| v.is_finite())
}

fn positive(e: &Entry) -> Result<f64, ConfigError> {
    let v = number(e)?;
    if v > 0.0 {
        Ok(v)
    } else {
        Err(ConfigError::field(e, format!("must be positive (got {v})")))
    }
}

fn count(e: &Entry, min: usize) -> Result<usize, ConfigError> {
    match e.value.parse::<usize>() {
        Ok(v) if v >= min => Ok(v),
        Ok(v) => Err(ConfigError::field(e, format!("must be at least {min} (got {v})"))),
        Err(_) => Err(ConfigError::field(e, format!("`{}` is not a nonnegative integer", e.value))),
    }
}

fn vector(e: &Entry, text: &str) -> Result<Vec<f64>, ConfigError> {
    let inner = text
        .trim()
        .strip_prefix('[')
        .and_then(|t| t.strip_suffix(']'))
        .ok_or_else(|| ConfigError::field(e, format!("expected `[a, b, ...]`, found `{}`", text.trim())))?;
    if inner.trim().is_empty() {
        return Ok(Vec::new());
    }
    inner
        .split(',')
        .map(|t| parse_number(t).ok_or_else(|| ConfigError::field(e, format!("`{}` is not a number", t.trim()))))
        .collect()
}

/// Splits `[[..], [..]]` into its row texts.
fn rows(e: &Entry) -> Result<Vec<String>, ConfigError> {
    let inner = e
        .value
        .strip_prefix('[')
        .and_then(|t| t.strip_suffix(']'))
        .ok_or_else(|| ConfigError::field(e, "expected a matrix `[[...], ...]`"))?;
    let mut out = Vec::new();
    let mut depth = 0;
    let mut row = String::new();
    for c in inner.chars() {
        match c {
            '[' => depth += 1,
            ']' => depth -= 1,
            _ => {}
        }
        if c == ',' && depth == 0 {
            out.push(std::mem::take(&mut row));
        } else {
            row.push(c);
        }
    }
    if !row.trim().is_empty() || !out.is_empty() {
        out.push(row);
    }
    Ok(out)
}

fn matrix(e: &Entry, dimension: Option<usize>) -> Result<Matrix, ConfigError> {
    let rows = rows(e)?;
    let n = dimension.unwrap_or(rows.len());
    if n == 0 {
        return Err(ConfigError::field(e, "matrix has no rows"));
    }
    if rows.len() != n {
        return Err(ConfigError::field(e, format!("has {} rows, expected {n}", rows.len())));
    }
    let mut data = Vec::with_capacity(n * n);
    for (i, r) in rows.iter().enumerate() {
        let row = vector(e, r).map_err(|err| match err {
            ConfigError::Field { field, line, message } => {
                ConfigError::Field { field, line, message: format!("row {i}: {message}") }
            }
            other => other,
        })?;
        if row.len() != n {
            return Err(ConfigError::field(e, format!("row {i} has {} entries, expected {n}", row.len())));
        }
        data.extend(row);
    }
    Ok(Matrix::from_row_major(n, data).expect("square by construction"))
}

fn is_harmonic_key(key: &str) -> Option<(char, usize)> {
    let mut chars = key.chars();
    let head = chars.next()?;
    let k: usize = chars.as_str().parse().ok()?;
    (matches!(head, 'A' | 'B') && (k > 0 || head == 'A')).then_some((head, k))
}

/// Builds a system from the system keys of an entry map; `None` if none are present.
fn system_from(map: &BTreeMap<String, Entry>) -> Result<Option<PeriodicSystem>, ConfigError> {
    let invalid = |e: &Entry, err: skewflow_core::Error| ConfigError::field(e, err.to_string());
    if let Some(e) = map.get("builtin") {
        if let Some(kind) = map.get("kind") {
            return Err(ConfigError::field(kind, "conflicts with `builtin`"));
        }
        return Ok(Some(PeriodicSystem::builtin(registry::lookup(e, map)?)));
    }
    let Some(kind) = map.get("kind") else {
        if let Some((_, e)) = map.iter().find(|(k, _)| is_harmonic_key(k).is_some()) {
            return Err(ConfigError::field(e, "matrix given without `kind`"));
        }
        return Ok(None);
    };
    let period = match map.get("period") {
        Some(e) => positive(e)?,
        None => 1.0,
    };
    let dimension = map.get("dimension").map(|e| count(e, 1)).transpose()?;
    let system = match kind.value.as_str() {
        "builtin" => {
            let name = map.get("name").ok_or_else(|| ConfigError::field(kind, "`kind: builtin` needs `name`"))?;
            let b = registry::lookup(name, map)?;
            if let Some(d) = dimension.filter(|&d| d != 2) {
                return Err(ConfigError::field(&map["dimension"], format!("builtins are 2-dimensional (got {d})")));
            }
            let system = PeriodicSystem::builtin(b);
            if period == 1.0 {
                system
            } else {
                PeriodicSystem::new(2, period, system.coefficient().clone()).map_err(|err| invalid(kind, err))?
            }
        }
        "constant" => {
            let a0 = map.get("A0").ok_or_else(|| ConfigError::field(kind, "`kind: constant` needs `A0`"))?;
            let m = matrix(a0, dimension)?;
            PeriodicSystem::constant(m, period).map_err(|err| invalid(a0, err))?
        }
        "trig" => {
            let a0 = map.get("A0").ok_or_else(|| ConfigError::field(kind, "`kind: trig` needs `A0`"))?;
            let m0 = matrix(a0, dimension)?;
            let n = m0.dim();
            let top = map.keys().filter_map(|k| is_harmonic_key(k)).map(|(_, k)| k).max().unwrap_or(0);
            let mut cos = Vec::with_capacity(top);
            let mut sin = Vec::with_capacity(top);
            for k in 1..=top {
                for (head, list) in [('A', &mut cos), ('B', &mut sin)] {
                    let m = match map.get(&format!("{head}{k}")) {
                        Some(e) => matrix(e, Some(n))?,
                        None => Matrix::zeros(n),
                    };
                    list.push(m);
                }
            }
            PeriodicSystem::trig(m0, cos, sin, period).map_err(|err| invalid(a0, err))?
        }
        other => {
            return Err(ConfigError::field(kind, format!("unknown kind `{other}` (constant, trig, builtin)")));
        }
    };
    if let Some(d) = dimension.filter(|&d| d != system.dimension()) {
        return Err(ConfigError::field(
            &map["dimension"],
            format!("is {d} but the matrices are {}", system.dimension()),
        ));
    }
    Ok(Some(system))
}

fn check_keys(map: &BTreeMap<String, Entry>, run_keys: bool) -> Result<(), ConfigError> {
    for (key, e) in map {
        let known = SYSTEM_KEYS.contains(&key.as_str())
            || registry::is_parameter(key)
            || is_harmonic_key(key).is_some()
            || (run_keys && RUN_KEYS.contains(&key.as_str()));
        if !known {
            return Err(ConfigError::field(e, "unknown key"));
        }
        if !run_keys && key == "system" {
            return Err(ConfigError::field(e, "system files cannot include other files"));
        }
    }
    Ok(())
}

/// Parses a system definition file.
pub fn parse_system(text: &str) -> Result<PeriodicSystem, ConfigError> {
    let map = index(entries(text)?)?;
    check_keys(&map, false)?;
    system_from(&map)?.ok_or(ConfigError::MissingSystem)
}

/// Parses a run configuration, applying defaults.
pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    parse_config_with(text, &[])
}

/// Parses a run configuration; each override is a `key: value` item replacing the
/// same key in `text`.
pub fn parse_config_with(text: &str, overrides: &[String]) -> Result<RunConfig, ConfigError> {
    let mut map = index(entries(text)?)?;
    for o in overrides {
        let mut items = Vec::new();
        split_items(o, 0, &mut items)?;
        for e in items {
            map.insert(e.key.clone(), e);
        }
    }
    check_keys(&map, true)?;
    let inline = system_from(&map)?;
    let system = match (inline, map.get("system")) {
        (Some(_), Some(e)) => return Err(ConfigError::field(e, "conflicts with an inline system")),
        (Some(s), None) => SystemSource::Inline(s),
        (None, Some(e)) if !e.value.is_empty() => SystemSource::File(PathBuf::from(&e.value)),
        (None, Some(e)) => return Err(ConfigError::field(e, "empty path")),
        (None, None) => return Err(ConfigError::MissingSystem),
    };
    let get_count = |key: &str, min: usize, default: usize| map.get(key).map_or(Ok(default), |e| count(e, min));
    let steps = match (map.get("steps"), map.get("N")) {
        (Some(_), Some(e)) => return Err(ConfigError::field(e, "conflicts with `steps`")),
        (Some(e), None) | (None, Some(e)) => count(e, 1)?,
        (None, None) => DEFAULT_STEPS,
    };
    let radius = map.get("radius").map(positive).transpose()?;
    let fiber = match map.get("fiber") {
        None => FiberKind::Ball { radius: radius.unwrap_or(1.0) },
        Some(e) => match e.value.as_str() {
            "ball" => FiberKind::Ball { radius: radius.unwrap_or(1.0) },
            "euclidean" => FiberKind::Ball { radius: f64::INFINITY },
            "sphere" => FiberKind::Sphere,
            "projective" => FiberKind::Projective,
            other => {
                return Err(ConfigError::field(
                    e,
                    format!("unknown fiber `{other}` (ball, euclidean, sphere, projective)"),
                ))
            }
        },
    };
    if let (Some(e), Some(false)) = (map.get("radius"), map.get("fiber").map(|f| f.value == "ball")) {
        return Err(ConfigError::field(e, "only applies to ball fibers"));
    }
    let offset = map.get("epsilon").map(positive).transpose()?.unwrap_or(DEFAULT_EPSILON);
    let epsilon = match map.get("epsilon_slope") {
        None => EpsilonField::Constant(offset),
        Some(e) => {
            let slope = number(e)?;
            EpsilonField::affine(offset, slope)
                .ok_or_else(|| ConfigError::field(e, format!("must be nonnegative (got {slope})")))?
        }
    };
    let seed = match map.get("seed") {
        None => DEFAULT_SEED,
        Some(e) => e.value.parse().map_err(|_| ConfigError::field(e, format!("`{}` is not a seed", e.value)))?,
    };
    let command = map
        .get("command")
        .map(|e| {
            Command::parse(&e.value).ok_or_else(|| ConfigError::field(e, format!("unknown command `{}`", e.value)))
        })
        .transpose()?;
    let initial = map.get("x0").map(|e| vector(e, &e.value)).transpose()?;
    Ok(RunConfig {
        command,
        system,
        steps,
        fiber,
        resolution: get_count("resolution", 1, DEFAULT_RESOLUTION)?,
        base_resolution: get_count("base_resolution", 2, 16)?,
        epsilon,
        samples_per_box: get_count("samples_per_box", 1, DEFAULT_SAMPLES_PER_BOX)?,
        seed,
        output: map.get("output").map_or_else(|| PathBuf::from("."), |e| PathBuf::from(&e.value)),
        t_end: map.get("t_end").map(positive).transpose()?.unwrap_or(1.0),
        rate: get_count("rate", 1, 64)?,
        initial,
        chain_steps: get_count("chain_steps", 1, 6)?,
        n_min: get_count("n_min", 1, 1)? as u64,
        samples: get_count("samples", 1, 50)?,
    })
}

/// Reads and parses a configuration file. A relative `system` path is taken relative
/// to the directory of the file.
pub fn load_config(path: &Path, overrides: &[String]) -> Result<RunConfig, ConfigError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| ConfigError::Read { path: path.to_path_buf(), message: e.to_string() })?;
    let mut config = parse_config_with(&text, overrides)?;
    if let SystemSource::File(p) = &config.system {
        if p.is_relative() {
            let dir = path.parent().unwrap_or(Path::new(""));
            config.system = SystemSource::File(dir.join(p));
        }
    }
    Ok(config)
}

impl SystemSource {
    pub fn resolve(&self) -> Result<PeriodicSystem, ConfigError> {
        match self {
            SystemSource::Inline(s) => Ok(s.clone()),
            SystemSource::File(path) => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| ConfigError::Read { path: path.clone(), message: e.to_string() })?;
                parse_system(&text)
            }
        }
    }
}
