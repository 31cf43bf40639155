// SPDX-License-Identifier: Apache-2.0

//! JSON scenarios: parsing, single runs, parameter sweeps and their outputs.
//!
//! A scenario is one flat JSON object. The common keys are `model`, `method`,
//! `integrator`, `outputs`, `seed`, `residual_tolerance` and `sweep_cap`;
//! everything else belongs to the model. Numeric model parameters may be
//! arrays, in which case [`sweep`] evaluates their Cartesian product.

mod report;
mod run;

use std::path::PathBuf;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use thiserror::Error;

use crate::flow::IntegratorConfig;
use crate::matrix::{AntiHermitianGenerator, DenseHermitian, MatrixJson};

pub use report::{
    format_csv_number, ChannelRecord, ComparisonReport, ErrorRecord, MethodRecord, Numeric, ReportSummary, SweepAxis,
    TrajectoryTable,
};
pub use run::{evaluate, run_path, run_scenario, sweep, thread_count, Mode, RunOutcome};

/// Default upper bound on the number of sweep channels.
pub const DEFAULT_SWEEP_CAP: usize = 10_000;
/// Default bound on invariant residuals before a run is flagged.
pub const DEFAULT_RESIDUAL_TOLERANCE: f64 = 1e-9;

/// Process exit status of a scenario run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ExitStatus {
    Ok,
    /// Every channel ran but some invariant residual exceeded the tolerance.
    ResidualExceeded,
    ModelError,
    Io,
    Validation,
}

impl ExitStatus {
    pub fn code(self) -> i32 {
        match self {
            ExitStatus::Ok => 0,
            ExitStatus::ResidualExceeded => 1,
            ExitStatus::ModelError => 2,
            ExitStatus::Io => 3,
            ExitStatus::Validation => 4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ScenarioError {
    #[error("malformed JSON at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("invalid field `{field}`: {message}")]
    Validation { field: String, message: String },

    #[error("I/O error on {path}: {message}")]
    Io { path: String, message: String },
}

impl ScenarioError {
    fn field(field: impl Into<String>, message: impl Into<String>) -> Self {
        ScenarioError::Validation {
            field: field.into(),
            message: message.into(),
        }
    }

    pub(crate) fn io(path: &std::path::Path, err: impl std::fmt::Display) -> Self {
        ScenarioError::Io {
            path: path.display().to_string(),
            message: err.to_string(),
        }
    }

    pub fn status(&self) -> ExitStatus {
        match self {
            ScenarioError::Parse { .. } | ScenarioError::Validation { .. } => ExitStatus::Validation,
            ScenarioError::Io { .. } => ExitStatus::Io,
        }
    }

    /// Machine-readable form printed by the command-line front end.
    pub fn to_record(&self) -> Value {
        let mut m = Map::new();
        match self {
            ScenarioError::Parse { line, column, message } => {
                m.insert("error".into(), "parse".into());
                m.insert("line".into(), (*line).into());
                m.insert("column".into(), (*column).into());
                m.insert("message".into(), message.clone().into());
            }
            ScenarioError::Validation { field, message } => {
                m.insert("error".into(), "validation".into());
                m.insert("field".into(), field.clone().into());
                m.insert("message".into(), message.clone().into());
            }
            ScenarioError::Io { path, message } => {
                m.insert("error".into(), "io".into());
                m.insert("path".into(), path.clone().into());
                m.insert("message".into(), message.clone().into());
            }
        }
        Value::Object(m)
    }
}

type SResult<T> = std::result::Result<T, ScenarioError>;

/// A scalar parameter or a list of values to sweep over.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum Param<T> {
    One(T),
    Many(Vec<T>),
}

impl<T: Clone> Param<T> {
    pub fn len(&self) -> usize {
        match self {
            Param::One(_) => 1,
            Param::Many(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn is_sweep(&self) -> bool {
        matches!(self, Param::Many(_))
    }

    pub fn get(&self, i: usize) -> T {
        match self {
            Param::One(v) => v.clone(),
            Param::Many(v) => v[i].clone(),
        }
    }

    pub fn values(&self) -> Vec<T> {
        (0..self.len()).map(|i| self.get(i)).collect()
    }
}

impl<T: DeserializeOwned> Param<T> {
    // A value that parses as `T` wins, so `[re, im]` stays a single complex number.
    fn from_value(field: &str, v: Value, what: &str) -> SResult<Self> {
        if let Ok(one) = serde_json::from_value::<T>(v.clone()) {
            return Ok(Param::One(one));
        }
        serde_json::from_value::<Vec<T>>(v)
            .map(Param::Many)
            .map_err(|_| ScenarioError::field(field, format!("expected {what} or an array of them")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MethodChoice {
    Fe,
    Cut,
    Both,
}

impl MethodChoice {
    pub fn includes_fe(self) -> bool {
        matches!(self, MethodChoice::Fe | MethodChoice::Both)
    }

    pub fn includes_cut(self) -> bool {
        matches!(self, MethodChoice::Cut | MethodChoice::Both)
    }
}

/// Where a run writes its artifacts. Both paths are optional.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputTarget {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trajectory_csv: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub report_json: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticParams {
    pub f0: Param<f64>,
    pub g0: Param<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EphParams {
    pub omega: Param<f64>,
    pub delta: Param<f64>,
    pub m0: Param<f64>,
    pub v0: Param<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ThreeBosonParams {
    pub beta1: Param<f64>,
    pub beta2: Param<f64>,
    pub psi1: Param<[f64; 2]>,
    pub psi2: Param<[f64; 2]>,
    pub phi0: Param<[f64; 2]>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum MatrixSource {
    /// Seeded random Hermitian matrix of the given size.
    Random {
        n: Param<usize>,
    },
    Given(MatrixJson),
}

#[derive(Debug, Clone, PartialEq)]
pub struct MatrixParams {
    pub source: MatrixSource,
    /// Fixed generator for the one-step route; a seeded random one of unit
    /// Frobenius norm when absent.
    pub generator: Option<MatrixJson>,
    pub theta: Param<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpinParams {
    pub n: Param<usize>,
    pub omega0: Param<f64>,
    pub alpha: Param<f64>,
    /// Coupling matrix; all zeros when absent.
    pub couplings: Option<Vec<Vec<f64>>>,
    pub t_end: Param<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ModelParams {
    Quadratic(QuadraticParams),
    Eph(EphParams),
    ThreeBoson(ThreeBosonParams),
    Matrix(MatrixParams),
    Spins(SpinParams),
}

impl ModelParams {
    pub fn name(&self) -> &'static str {
        match self {
            ModelParams::Quadratic(_) => "quadratic",
            ModelParams::Eph(_) => "eph",
            ModelParams::ThreeBoson(_) => "threeboson",
            ModelParams::Matrix(_) => "matrix",
            ModelParams::Spins(_) => "spins",
        }
    }
}

pub const MODEL_NAMES: [&str; 5] = ["quadratic", "eph", "threeboson", "matrix", "spins"];

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub model: ModelParams,
    pub method: MethodChoice,
    pub integrator: IntegratorConfig,
    /// `l_max` was not given and is chosen per model from its slowest decay rate.
    pub auto_l_max: bool,
    pub outputs: Vec<OutputTarget>,
    pub seed: Param<u64>,
    pub residual_tolerance: f64,
    pub sweep_cap: usize,
}

/// Key-by-key reader that reports the offending key on every failure.
struct Fields {
    map: Map<String, Value>,
}

impl Fields {
    fn take_raw(&mut self, key: &str) -> Option<Value> {
        self.map.remove(key)
    }

    fn take<T: DeserializeOwned>(&mut self, key: &str) -> SResult<Option<T>> {
        match self.map.remove(key) {
            None => Ok(None),
            Some(v) => serde_json::from_value(v)
                .map(Some)
                .map_err(|e| ScenarioError::field(key, e.to_string())),
        }
    }

    fn param<T: DeserializeOwned>(&mut self, key: &str, what: &str) -> SResult<Option<Param<T>>> {
        match self.map.remove(key) {
            None => Ok(None),
            Some(v) => Param::from_value(key, v, what).map(Some),
        }
    }

    fn required<T: DeserializeOwned>(&mut self, key: &str, what: &str) -> SResult<Param<T>> {
        self.param(key, what)?
            .ok_or_else(|| ScenarioError::field(key, "missing required field"))
    }

    fn finish(self) -> SResult<()> {
        match self.map.keys().next() {
            None => Ok(()),
            Some(k) => Err(ScenarioError::field(k.clone(), "unknown field")),
        }
    }
}

const NUMBER: &str = "a number";
const COMPLEX: &str = "a [re, im] pair";
const COUNT: &str = "a non-negative integer";

/// Parses and validates a scenario from UTF-8 JSON.
pub fn parse_scenario(text: &[u8]) -> SResult<Scenario> {
    let value: Value = serde_json::from_slice(text).map_err(|e| ScenarioError::Parse {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    from_value(value)
}

/// Validates an already-parsed JSON value as a scenario.
pub fn from_value(value: Value) -> SResult<Scenario> {
    let Value::Object(map) = value else {
        return Err(ScenarioError::field("(root)", "scenario must be a JSON object"));
    };
    let mut f = Fields { map };

    let model_name: String = match f.take_raw("model") {
        None => return Err(ScenarioError::field("model", "missing required field")),
        Some(Value::String(s)) => s,
        Some(other) => return Err(ScenarioError::field("model", format!("expected a string, got {other}"))),
    };
    let method = f.take::<MethodChoice>("method")?.unwrap_or(MethodChoice::Both);

    let (integrator, auto_l_max) = match f.take_raw("integrator") {
        None => (IntegratorConfig::default(), true),
        Some(v) => {
            let auto = !matches!(&v, Value::Object(m) if m.contains_key("l_max"));
            let cfg: IntegratorConfig =
                serde_json::from_value(v).map_err(|e| ScenarioError::field("integrator", e.to_string()))?;
            (cfg, auto)
        }
    };
    integrator
        .validate()
        .map_err(|e| ScenarioError::field("integrator", e.to_string()))?;

    let outputs = match f.take_raw("outputs") {
        None => Vec::new(),
        Some(v @ Value::Object(_)) => {
            vec![serde_json::from_value(v).map_err(|e| ScenarioError::field("outputs", e.to_string()))?]
        }
        Some(v) => serde_json::from_value(v).map_err(|e| ScenarioError::field("outputs", e.to_string()))?,
    };

    let seed = f.param::<u64>("seed", COUNT)?.unwrap_or(Param::One(0));
    let residual_tolerance = f
        .take::<f64>("residual_tolerance")?
        .unwrap_or(DEFAULT_RESIDUAL_TOLERANCE);
    if !(residual_tolerance >= 0.0) {
        return Err(ScenarioError::field("residual_tolerance", "must be >= 0"));
    }
    let sweep_cap = f.take::<usize>("sweep_cap")?.unwrap_or(DEFAULT_SWEEP_CAP);
    if sweep_cap == 0 {
        return Err(ScenarioError::field("sweep_cap", "must be >= 1"));
    }

    let model = match model_name.as_str() {
        "quadratic" => ModelParams::Quadratic(QuadraticParams {
            f0: f.required("f0", NUMBER)?,
            g0: f.required("g0", NUMBER)?,
        }),
        "eph" => ModelParams::Eph(EphParams {
            omega: f.required("omega", NUMBER)?,
            delta: f.required("delta", NUMBER)?,
            m0: f.required("m0", NUMBER)?,
            v0: f.param("v0", NUMBER)?.unwrap_or(Param::One(0.0)),
        }),
        "threeboson" => ModelParams::ThreeBoson(ThreeBosonParams {
            beta1: f.required("beta1", NUMBER)?,
            beta2: f.required("beta2", NUMBER)?,
            psi1: f.required("psi1", COMPLEX)?,
            psi2: f.required("psi2", COMPLEX)?,
            phi0: f.param("phi0", COMPLEX)?.unwrap_or(Param::One([0.0, 0.0])),
        }),
        "matrix" => ModelParams::Matrix(parse_matrix(&mut f)?),
        "spins" => ModelParams::Spins(SpinParams {
            n: f.required("n", COUNT)?,
            omega0: f.required("omega0", NUMBER)?,
            alpha: f.param("alpha", NUMBER)?.unwrap_or(Param::One(1.0)),
            couplings: f.take("J")?,
            t_end: f.required("t_end", NUMBER)?,
        }),
        other => {
            return Err(ScenarioError::field(
                "model",
                format!("unknown model `{other}`, expected one of {}", MODEL_NAMES.join(", ")),
            ))
        }
    };
    f.finish()?;

    if seed.is_sweep()
        && !matches!(
            model,
            ModelParams::Matrix(MatrixParams {
                source: MatrixSource::Random { .. },
                ..
            })
        )
    {
        return Err(ScenarioError::field(
            "seed",
            "only random matrix scenarios accept a seed array",
        ));
    }

    Ok(Scenario {
        model,
        method,
        integrator,
        auto_l_max,
        outputs,
        seed,
        residual_tolerance,
        sweep_cap,
    })
}

fn parse_matrix(f: &mut Fields) -> SResult<MatrixParams> {
    let n = f.param::<usize>("n", COUNT)?;
    let given = f.take::<MatrixJson>("matrix")?;
    let source = match (n, given) {
        (Some(_), Some(_)) => return Err(ScenarioError::field("matrix", "give either `n` or `matrix`, not both")),
        (None, None) => return Err(ScenarioError::field("n", "missing required field (or give `matrix`)")),
        (Some(n), None) => {
            if n.values().contains(&0) {
                return Err(ScenarioError::field("n", "matrix size must be >= 1"));
            }
            MatrixSource::Random { n }
        }
        (None, Some(m)) => {
            DenseHermitian::from_json(&m).map_err(|e| ScenarioError::field("matrix", e.to_string()))?;
            MatrixSource::Given(m)
        }
    };
    let generator = f.take::<MatrixJson>("generator")?;
    if let Some(g) = &generator {
        AntiHermitianGenerator::from_json(g).map_err(|e| ScenarioError::field("generator", e.to_string()))?;
        let sizes = match &source {
            MatrixSource::Random { n } => n.values(),
            MatrixSource::Given(m) => vec![m.n],
        };
        if sizes.iter().any(|&n| n != g.n) {
            return Err(ScenarioError::field(
                "generator",
                format!("size {} does not match the matrix", g.n),
            ));
        }
    }
    let theta = f.param("theta", NUMBER)?.unwrap_or(Param::One(1.0));
    Ok(MatrixParams {
        source,
        generator,
        theta,
    })
}

impl Scenario {
    /// Canonical JSON form; [`parse_scenario`] maps it back to an equal value.
    pub fn to_value(&self) -> Value {
        let mut m = Map::new();
        let put = |m: &mut Map<String, Value>, k: &str, v: Value| {
            m.insert(k.to_string(), v);
        };
        put(&mut m, "model", self.model.name().into());
        put(&mut m, "method", json(&self.method));
        let mut integ = serde_json::to_value(&self.integrator).expect("integrator config serializes");
        if self.auto_l_max {
            if let Value::Object(o) = &mut integ {
                o.remove("l_max");
            }
        }
        put(&mut m, "integrator", integ);
        put(&mut m, "outputs", json(&self.outputs));
        put(&mut m, "seed", json(&self.seed));
        put(&mut m, "residual_tolerance", self.residual_tolerance.into());
        put(&mut m, "sweep_cap", self.sweep_cap.into());
        match &self.model {
            ModelParams::Quadratic(p) => {
                put(&mut m, "f0", json(&p.f0));
                put(&mut m, "g0", json(&p.g0));
            }
            ModelParams::Eph(p) => {
                put(&mut m, "omega", json(&p.omega));
                put(&mut m, "delta", json(&p.delta));
                put(&mut m, "m0", json(&p.m0));
                put(&mut m, "v0", json(&p.v0));
            }
            ModelParams::ThreeBoson(p) => {
                put(&mut m, "beta1", json(&p.beta1));
                put(&mut m, "beta2", json(&p.beta2));
                put(&mut m, "psi1", json(&p.psi1));
                put(&mut m, "psi2", json(&p.psi2));
                put(&mut m, "phi0", json(&p.phi0));
            }
            ModelParams::Matrix(p) => {
                match &p.source {
                    MatrixSource::Random { n } => put(&mut m, "n", json(n)),
                    MatrixSource::Given(g) => put(&mut m, "matrix", json(g)),
                }
                if let Some(g) = &p.generator {
                    put(&mut m, "generator", json(g));
                }
                put(&mut m, "theta", json(&p.theta));
            }
            ModelParams::Spins(p) => {
                put(&mut m, "n", json(&p.n));
                put(&mut m, "omega0", json(&p.omega0));
                put(&mut m, "alpha", json(&p.alpha));
                if let Some(j) = &p.couplings {
                    put(&mut m, "J", json(j));
                }
                put(&mut m, "t_end", json(&p.t_end));
            }
        }
        Value::Object(m)
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(&self.to_value()).expect("scenario serializes")
    }
}

fn json<T: Serialize + ?Sized>(v: &T) -> Value {
    serde_json::to_value(v).expect("plain data serializes")
}
