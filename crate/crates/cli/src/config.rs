//! Scenario files: strict JSON with dotted-path overrides applied before
//! parsing.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use ndarray::Array2;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use serde_json::{Map, Value};

use twophoton::cat_qubit::ReducedInit;
use twophoton::checks::{CheckConfig, Criterion};
use twophoton::experiment::{InitialState, ModelParams, FULL_COLUMNS};
use twophoton::integrator::{IntegratorConfig, Scheme};
use twophoton::{DensityMatrix, FockSpace};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IntegratorSection {
    pub dt: f64,
    pub t_final: f64,
    pub scheme: Scheme,
    pub record_stride: usize,
}

impl Default for IntegratorSection {
    fn default() -> Self {
        Self {
            dt: 1e-3,
            t_final: 20.0,
            scheme: Scheme::KrausEuler,
            record_stride: IntegratorConfig::DEFAULT_STRIDE,
        }
    }
}

impl IntegratorSection {
    pub fn build(&self) -> Result<IntegratorConfig, CliError> {
        Ok(IntegratorConfig::new(self.dt, self.t_final, self.scheme)?.with_record_stride(self.record_stride)?)
    }
}

/// `vacuum`, `cat+`, `cat-`, `superposition`, `fock:N` or `file:PATH`.
#[derive(Debug, Clone, PartialEq)]
pub enum InitialSpec {
    Builtin(InitialState),
    File(PathBuf),
}

impl Default for InitialSpec {
    fn default() -> Self {
        InitialSpec::Builtin(InitialState::Vacuum)
    }
}

impl FromStr for InitialSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let builtin = match s {
            "vacuum" => Some(InitialState::Vacuum),
            "cat+" => Some(InitialState::CatPlus),
            "cat-" => Some(InitialState::CatMinus),
            "superposition" => Some(InitialState::Superposition),
            _ => None,
        };
        if let Some(b) = builtin {
            return Ok(InitialSpec::Builtin(b));
        }
        if let Some(n) = s.strip_prefix("fock:") {
            return n
                .trim()
                .parse()
                .map(|n| InitialSpec::Builtin(InitialState::Fock(n)))
                .map_err(|_| format!("bad Fock level in {s:?}"));
        }
        if let Some(p) = s.strip_prefix("file:") {
            if p.is_empty() {
                return Err("empty path in initial_state".into());
            }
            return Ok(InitialSpec::File(PathBuf::from(p)));
        }
        Err(format!(
            "unknown initial_state {s:?} (expected vacuum, cat+, cat-, superposition, fock:N or file:PATH)"
        ))
    }
}

impl fmt::Display for InitialSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            InitialSpec::Builtin(InitialState::Vacuum) => f.write_str("vacuum"),
            InitialSpec::Builtin(InitialState::CatPlus) => f.write_str("cat+"),
            InitialSpec::Builtin(InitialState::CatMinus) => f.write_str("cat-"),
            InitialSpec::Builtin(InitialState::Superposition) => f.write_str("superposition"),
            InitialSpec::Builtin(InitialState::Fock(n)) => write!(f, "fock:{n}"),
            InitialSpec::File(p) => write!(f, "file:{}", p.display()),
        }
    }
}

impl Serialize for InitialSpec {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for InitialSpec {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Density matrix stored as `{"re": [[..]], "im": [[..]]}`; `im` may be
/// omitted for real matrices.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct MatrixFile {
    re: Vec<Vec<f64>>,
    #[serde(default)]
    im: Option<Vec<Vec<f64>>>,
}

pub fn load_density(path: &Path, space: FockSpace) -> Result<DensityMatrix, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Validation(format!("cannot read {}: {e}", path.display())))?;
    let file: MatrixFile = serde_json::from_str(&text)
        .map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?;
    let n = space.n_max();
    let shape_ok = |rows: &Vec<Vec<f64>>| rows.len() == n && rows.iter().all(|r| r.len() == n);
    if !shape_ok(&file.re) || file.im.as_ref().is_some_and(|im| !shape_ok(im)) {
        return Err(CliError::Validation(format!(
            "{}: density matrix must be {n}x{n} to match n_max",
            path.display()
        )));
    }
    let m = Array2::from_shape_fn((n, n), |(i, j)| {
        C64::new(file.re[i][j], file.im.as_ref().map_or(0.0, |im| im[i][j]))
    });
    Ok(DensityMatrix::new(space, m)?)
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Outputs {
    pub csv_path: Option<PathBuf>,
    pub json_summary_path: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub model: ModelParams,
    pub integrator: IntegratorSection,
    pub initial_state: InitialSpec,
    /// Subset of the full-model observables to write; all when absent.
    pub observables: Option<Vec<String>>,
    pub reduced_init: ReducedInit,
    /// Samples before this time are excluded from plateaus and offsets.
    pub transient_end: f64,
    /// Window for exponential fits; `[transient_end, t_final]` when absent.
    pub fit_window: Option<(f64, f64)>,
    pub seed: u64,
    pub outputs: Outputs,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            model: ModelParams::default(),
            integrator: IntegratorSection::default(),
            initial_state: InitialSpec::default(),
            observables: None,
            reduced_init: ReducedInit::Auto,
            transient_end: 5.0,
            fit_window: None,
            seed: 0,
            outputs: Outputs::default(),
        }
    }
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<(), CliError> {
        self.model.validate()?;
        self.integrator.build()?;
        if let Some(obs) = &self.observables {
            if obs.is_empty() {
                return Err(CliError::Validation("observables list is empty".into()));
            }
            for name in obs {
                if !FULL_COLUMNS.contains(&name.as_str()) {
                    return Err(CliError::Validation(format!(
                        "unknown observable {name:?} (expected one of {})",
                        FULL_COLUMNS.join(", ")
                    )));
                }
            }
        }
        if !(self.transient_end >= 0.0) {
            return Err(CliError::Validation(format!(
                "transient_end = {} must be non-negative",
                self.transient_end
            )));
        }
        if let Some((a, b)) = self.fit_window {
            if !(a >= 0.0 && b > a) {
                return Err(CliError::Validation(format!("bad fit_window [{a}, {b}]")));
            }
        }
        Ok(())
    }

    pub fn fit_window(&self) -> (f64, f64) {
        self.fit_window
            .unwrap_or((self.transient_end, self.integrator.t_final))
    }

    pub fn observables(&self) -> Vec<String> {
        self.observables
            .clone()
            .unwrap_or_else(|| FULL_COLUMNS.iter().map(|s| s.to_string()).collect())
    }

    /// Prepares the initial state; file paths are taken relative to `base`.
    pub fn initial_density(&self, base: &Path) -> Result<DensityMatrix, CliError> {
        match &self.initial_state {
            InitialSpec::Builtin(s) => Ok(s.prepare(&self.model.basis()?)?),
            InitialSpec::File(p) => load_density(&base.join(p), self.model.space()?),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TheoremConfig {
    pub checks: CheckConfig,
    /// Criteria to run; all when empty.
    pub criteria: Vec<Criterion>,
    pub outputs: Outputs,
}

/// Sets `path` (dot separated) in `root` to `value`, creating objects on the
/// way. The value is parsed as JSON when possible and kept as a string
/// otherwise.
pub fn apply_override(root: &mut Value, assignment: &str) -> Result<(), CliError> {
    let (key, raw) = assignment
        .split_once('=')
        .ok_or_else(|| CliError::Validation(format!("override {assignment:?} is not key=value")))?;
    let key = key.trim();
    if key.is_empty() || key.split('.').any(str::is_empty) {
        return Err(CliError::Validation(format!("bad override key {key:?}")));
    }
    let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
    let mut node = root;
    let parts: Vec<&str> = key.split('.').collect();
    for (k, part) in parts.iter().enumerate() {
        if !node.is_object() {
            if node.is_null() {
                *node = Value::Object(Map::new());
            } else {
                return Err(CliError::Validation(format!(
                    "override {key:?}: {} is not an object",
                    parts[..k].join(".")
                )));
            }
        }
        let map = node.as_object_mut().expect("object");
        if k + 1 == parts.len() {
            map.insert(part.to_string(), value);
            return Ok(());
        }
        node = map.entry(part.to_string()).or_insert(Value::Null);
    }
    unreachable!("override key has at least one part")
}

/// Reads a config file (or starts from `{}`), applies overrides and parses.
pub fn load<T: serde::de::DeserializeOwned>(path: Option<&Path>, overrides: &[String]) -> Result<T, CliError> {
    let mut value = match path {
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .map_err(|e| CliError::Validation(format!("cannot read {}: {e}", p.display())))?;
            serde_json::from_str(&text).map_err(|e| CliError::Validation(format!("{}: {e}", p.display())))?
        }
        None => Value::Object(Map::new()),
    };
    if !value.is_object() {
        return Err(CliError::Validation("config must be a JSON object".into()));
    }
    for o in overrides {
        apply_override(&mut value, o)?;
    }
    serde_json::from_value(value).map_err(|e| CliError::Validation(format!("config: {e}")))
}
