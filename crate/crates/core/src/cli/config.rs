//! JSON layout files, `key=value` overrides and schema checks.

use std::f64::consts::PI;
use std::path::Path;

use serde::Deserialize;
use serde_json::Value;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::dynamics::SolverOptions;
use crate::hilbert::{c, ket, singlet, triplet, StateVector};
use crate::topology::{Atom, ConnectionPoint, DriveSpec, Layout, TopologyError, ValidatedLayout};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("cannot read {path}: {message}")]
    Io { path: String, message: String },
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse { line: usize, column: usize, message: String },
    #[error("schema error at `{key}`: {message}")]
    Schema { key: String, message: String },
    #[error("bad override {0:?}: {1}")]
    Override(String, String),
}

fn schema(key: impl Into<String>, message: impl Into<String>) -> ConfigError {
    ConfigError::Schema { key: key.into(), message: message.into() }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AtomConfig {
    pub name: String,
    #[serde(default)]
    pub frequency: f64,
    #[serde(default)]
    pub detuning: f64,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PointConfig {
    pub atom: String,
    /// Position order along the waveguide; defaults to the point's index.
    #[serde(default)]
    pub rank: Option<i64>,
    pub gamma_right: f64,
    pub gamma_left: f64,
}

/// Waveguide end the drive enters from. Only the left end is modelled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DriveFrom {
    #[default]
    Left,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DriveConfig {
    pub beta_re: f64,
    #[serde(default)]
    pub beta_im: f64,
    #[serde(default)]
    pub from: DriveFrom,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverConfig {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub t_final: f64,
    #[serde(alias = "sample_count")]
    pub samples: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        let opts = SolverOptions::default();
        Self { rel_tol: opts.rel_tol, abs_tol: opts.abs_tol, t_final: 10.0, samples: 201 }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LayoutConfig {
    pub atoms: Vec<AtomConfig>,
    pub points: Vec<PointConfig>,
    #[serde(default)]
    pub phases: Vec<f64>,
    #[serde(default)]
    pub drive: Option<DriveConfig>,
    #[serde(default)]
    pub solver: SolverConfig,
    /// Initial state for `evolve`: a ket label such as `"eg"`, or `"S"` /
    /// `"T"` for two atoms. Defaults to the first atom excited.
    #[serde(default)]
    pub initial: Option<String>,
}

impl LayoutConfig {
    pub fn to_layout(&self) -> Layout {
        Layout {
            atoms: self.atoms.iter().map(|a| Atom::new(a.name.clone(), a.frequency, a.detuning)).collect(),
            points: self
                .points
                .iter()
                .enumerate()
                .map(|(i, p)| ConnectionPoint::new(p.atom.clone(), p.rank.unwrap_or(i as i64), p.gamma_right, p.gamma_left))
                .collect(),
            phases: self.phases.clone(),
        }
    }

    pub fn drive_spec(&self) -> Option<DriveSpec> {
        self.drive.as_ref().map(|d| DriveSpec::new(c(d.beta_re, d.beta_im)))
    }

    pub fn solver_options(&self) -> SolverOptions {
        SolverOptions { rel_tol: self.solver.rel_tol, abs_tol: self.solver.abs_tol }
    }

    /// Initial pure state for `n` atoms.
    pub fn initial_state(&self, n: usize) -> Result<StateVector, ConfigError> {
        let label = match &self.initial {
            Some(l) => l.clone(),
            None => std::iter::once('e').chain(std::iter::repeat_n('g', n - 1)).collect(),
        };
        match label.as_str() {
            "S" | "T" if n == 2 => Ok(if label == "S" { singlet() } else { triplet() }),
            _ if label.len() == n => ket(&label).map_err(|e| schema("initial", e.to_string())),
            _ => Err(schema("initial", format!("{label:?} is not a state of {n} atoms"))),
        }
    }
}

/// A checked configuration together with the document it came from.
#[derive(Debug, Clone)]
pub struct ParsedConfig {
    pub config: LayoutConfig,
    pub layout: ValidatedLayout,
    /// The document after overrides, with sorted keys.
    pub document: Value,
    /// SHA-256 of the canonical document.
    pub hash: String,
}

pub fn parse_config(path: &Path, overrides: &[String]) -> Result<ParsedConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    parse_config_str(&text, overrides)
}

pub fn parse_config_str(text: &str, overrides: &[String]) -> Result<ParsedConfig, ConfigError> {
    let mut document: Value = serde_json::from_str(text).map_err(|e| ConfigError::Parse {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    for o in overrides {
        apply_override(&mut document, o)?;
    }
    from_document(document)
}

/// Deserializes and checks an already-parsed document.
pub fn from_document(document: Value) -> Result<ParsedConfig, ConfigError> {
    let config: LayoutConfig = serde_path_to_error::deserialize(&document).map_err(|e| {
        let path = e.path().to_string();
        let message = e.inner().to_string();
        schema(offending_key(&path, &message), message)
    })?;
    let layout = check(&config)?;
    let canonical = serde_json::to_string(&document).expect("JSON values serialize");
    let hash = hex::encode(Sha256::digest(canonical.as_bytes()));
    Ok(ParsedConfig { config, layout, document, hash })
}

// Missing fields are reported against the enclosing object.
fn offending_key(path: &str, message: &str) -> String {
    let field = ["unknown field `", "missing field `"]
        .iter()
        .find_map(|p| message.strip_prefix(p))
        .and_then(|rest| rest.split('`').next());
    match (path, field) {
        (".", Some(f)) => f.to_string(),
        (p, Some(f)) if !p.ends_with(f) => format!("{p}.{f}"),
        (p, _) => p.to_string(),
    }
}

fn check(config: &LayoutConfig) -> Result<ValidatedLayout, ConfigError> {
    if config.atoms.is_empty() {
        return Err(schema("atoms", "need at least one atom"));
    }
    if config.points.is_empty() {
        return Err(schema("points", "need at least one connection point"));
    }
    for (i, p) in config.points.iter().enumerate() {
        for (name, v) in [("gamma_right", p.gamma_right), ("gamma_left", p.gamma_left)] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(schema(format!("points[{i}].{name}"), format!("rate must be finite and ≥ 0, got {v}")));
            }
        }
    }
    if config.phases.len() + 1 != config.points.len() {
        return Err(schema(
            "phases",
            format!("{} points need {} phases, got {}", config.points.len(), config.points.len().saturating_sub(1), config.phases.len()),
        ));
    }
    let s = &config.solver;
    for (name, v) in [("solver.rel_tol", s.rel_tol), ("solver.abs_tol", s.abs_tol), ("solver.t_final", s.t_final)] {
        if !(v.is_finite() && v > 0.0) {
            return Err(schema(name, format!("must be finite and > 0, got {v}")));
        }
    }
    if s.samples < 2 {
        return Err(schema("solver.samples", "need at least 2 samples"));
    }
    if let Some(d) = &config.drive {
        if !(d.beta_re.is_finite() && d.beta_im.is_finite()) {
            return Err(schema("drive", "β must be finite"));
        }
    }
    let layout = config.to_layout().validate().map_err(|e| topology_error(config, e))?;
    config.initial_state(layout.n_atoms())?;
    Ok(layout)
}

fn topology_error(config: &LayoutConfig, e: TopologyError) -> ConfigError {
    let key = match &e {
        TopologyError::UnknownAtom { point, .. } => format!("points[{point}].atom"),
        TopologyError::NegativeRate { point, field, .. } => format!("points[{point}].{field}"),
        TopologyError::PhaseCountMismatch { .. } => "phases".into(),
        TopologyError::RankOrder { point, .. } => format!("points[{point}].rank"),
        TopologyError::DuplicateAtom(name) | TopologyError::EmptyAtom(name) => {
            let i = config.atoms.iter().position(|a| &a.name == name).unwrap_or(0);
            format!("atoms[{i}].name")
        }
        TopologyError::NonFinite(what) => what.clone(),
        _ => "atoms".into(),
    };
    schema(key, e.to_string())
}

/// Applies a `path=value` override to a JSON document.
pub fn apply_override(document: &mut Value, spec: &str) -> Result<(), ConfigError> {
    let (path, raw) = spec
        .split_once('=')
        .ok_or_else(|| ConfigError::Override(spec.to_string(), "expected key=value".into()))?;
    set_path(document, path.trim(), parse_value(raw.trim()))
        .map_err(|m| ConfigError::Override(spec.to_string(), m))
}

/// Sets `path` to `value`. Paths are dotted, with `[i]` for array elements
/// (`points[2].gamma_left`, `drive.beta_re`, `phases[0]`). Missing object
/// keys are created.
pub fn set_path(document: &mut Value, path: &str, value: Value) -> Result<(), String> {
    let mut node = document;
    let segments: Vec<&str> = path.split('.').collect();
    for (si, seg) in segments.iter().enumerate() {
        let (name, indices) = split_indices(seg).ok_or("malformed index")?;
        if name.is_empty() {
            return Err("empty key".into());
        }
        let obj = node.as_object_mut().ok_or("path goes through a non-object")?;
        let last = si + 1 == segments.len();
        if last && indices.is_empty() {
            obj.insert(name.to_string(), value);
            return Ok(());
        }
        node = obj.entry(name.to_string()).or_insert_with(|| Value::Object(Default::default()));
        for (ii, &idx) in indices.iter().enumerate() {
            let arr = node.as_array_mut().ok_or("index into a non-array")?;
            let len = arr.len();
            let slot = arr.get_mut(idx).ok_or(format!("index {idx} out of range (length {len})"))?;
            if last && ii + 1 == indices.len() {
                *slot = value;
                return Ok(());
            }
            node = slot;
        }
    }
    Err("empty path".into())
}

fn split_indices(seg: &str) -> Option<(&str, Vec<usize>)> {
    let (name, mut rest) = match seg.find('[') {
        Some(i) => (&seg[..i], &seg[i..]),
        None => return Some((seg, Vec::new())),
    };
    let mut out = Vec::new();
    while !rest.is_empty() {
        let close = rest.find(']')?;
        if !rest.starts_with('[') {
            return None;
        }
        out.push(rest[1..close].trim().parse().ok()?);
        rest = &rest[close + 1..];
    }
    Some((name, out))
}

/// Numbers, multiples of π (`pi/2`, `-2pi/3`, `0.5*pi`), JSON literals, or
/// else a bare string.
fn parse_value(raw: &str) -> Value {
    if let Some(x) = parse_scalar(raw) {
        if let Some(n) = serde_json::Number::from_f64(x) {
            return Value::Number(n);
        }
    }
    serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()))
}

pub fn parse_scalar(raw: &str) -> Option<f64> {
    let s = raw.trim().to_ascii_lowercase();
    let (num, den) = match s.split_once('/') {
        Some((n, d)) => (n.trim().to_string(), d.trim().parse::<f64>().ok()?),
        None => (s.clone(), 1.0),
    };
    let value = match num.strip_suffix("pi").or_else(|| num.strip_suffix('π')) {
        Some(coef) => {
            let coef = coef.trim().trim_end_matches('*').trim();
            let k = match coef {
                "" | "+" => 1.0,
                "-" => -1.0,
                _ => coef.parse::<f64>().ok()?,
            };
            k * PI
        }
        None => num.parse::<f64>().ok()?,
    };
    Some(value / den)
}
