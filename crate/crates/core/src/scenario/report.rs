// SPDX-License-Identifier: Apache-2.0

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::Serialize;
use serde_json::{Map, Value};

use super::{ExitStatus, MethodChoice};
use crate::error::FlowError;
use crate::flow::{FlowResult, Termination};
use crate::matrix::MatrixJson;

/// A result value as it appears in a report.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum Numeric {
    Scalar(f64),
    /// `[re, im]`.
    Complex([f64; 2]),
    Vector(Vec<f64>),
    Matrix(MatrixJson),
}

impl Numeric {
    fn flat(&self) -> Vec<f64> {
        match self {
            Numeric::Scalar(x) => vec![*x],
            Numeric::Complex(z) => z.to_vec(),
            Numeric::Vector(v) => v.clone(),
            Numeric::Matrix(m) => m.re.iter().chain(&m.im).copied().collect(),
        }
    }

    /// Euclidean norm, which is the modulus for complex values and the
    /// Frobenius norm for matrices.
    pub fn magnitude(&self) -> f64 {
        match self {
            Numeric::Vector(v) => v.iter().fold(0.0, |a, x| a.max(x.abs())),
            other => other.flat().iter().map(|x| x * x).sum::<f64>().sqrt(),
        }
    }

    /// Distance in the same norm as [`Numeric::magnitude`]; vectors (sorted
    /// spectra, order weights) use the maximum entry difference.
    pub fn distance(&self, other: &Numeric) -> Option<f64> {
        let (a, b) = (self.flat(), other.flat());
        if a.len() != b.len() {
            return None;
        }
        let diff = Numeric::Vector(a.iter().zip(&b).map(|(x, y)| x - y).collect());
        Some(match self {
            Numeric::Vector(_) => diff.magnitude(),
            _ => diff.flat().iter().map(|x| x * x).sum::<f64>().sqrt(),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ErrorRecord {
    pub kind: String,
    pub message: String,
}

impl From<&FlowError> for ErrorRecord {
    fn from(e: &FlowError) -> Self {
        Self {
            kind: e.kind().to_string(),
            message: e.to_string(),
        }
    }
}

/// Outcome of one method on one channel.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MethodRecord {
    /// `fe`, `cut`, or `flow` for models without a method choice.
    pub method: String,
    pub quantity: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub numeric: Option<Numeric>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub closed_form: Option<Numeric>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub abs_error: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rel_error: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub termination: Option<Termination>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub final_l: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub accepted_steps: Option<usize>,
    /// Invariant violations, checked against the scenario's tolerance.
    pub residuals: BTreeMap<String, f64>,
    /// Further diagnostics that are reported but not checked.
    #[serde(skip_serializing_if = "BTreeMap::is_empty")]
    pub metrics: BTreeMap<String, f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub warning: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<ErrorRecord>,
}

impl MethodRecord {
    pub(crate) fn new(method: &str, quantity: &str) -> Self {
        Self {
            method: method.to_string(),
            quantity: quantity.to_string(),
            numeric: None,
            closed_form: None,
            abs_error: None,
            rel_error: None,
            termination: None,
            final_l: None,
            accepted_steps: None,
            residuals: BTreeMap::new(),
            metrics: BTreeMap::new(),
            warning: None,
            error: None,
        }
    }

    pub(crate) fn failed(method: &str, quantity: &str, err: &FlowError) -> Self {
        Self {
            error: Some(err.into()),
            ..Self::new(method, quantity)
        }
    }

    pub(crate) fn with_flow(mut self, flow: &FlowResult) -> Self {
        self.termination = Some(flow.termination);
        self.final_l = Some(flow.final_l);
        self.accepted_steps = Some(flow.accepted_steps);
        if flow.termination == Termination::NumericalFailure && self.error.is_none() {
            let msg = flow.failure.clone().unwrap_or_else(|| "integration failed".into());
            self.error = Some(ErrorRecord::from(&FlowError::NumericalFailure(msg)));
        }
        self
    }

    /// Sets both values and derives the absolute and relative errors.
    pub(crate) fn with_values(mut self, numeric: Numeric, closed_form: Numeric) -> Self {
        if let Some(d) = numeric.distance(&closed_form) {
            self.abs_error = Some(d);
            let scale = closed_form.magnitude();
            self.rel_error = (scale > 0.0).then(|| d / scale);
        }
        self.numeric = Some(numeric);
        self.closed_form = Some(closed_form);
        self
    }

    pub(crate) fn residual(mut self, name: &str, value: f64) -> Self {
        self.residuals.insert(name.to_string(), value);
        self
    }

    pub(crate) fn metric(mut self, name: &str, value: f64) -> Self {
        self.metrics.insert(name.to_string(), value);
        self
    }

    /// Largest residual; NaN when any residual is not finite.
    pub fn max_residual(&self) -> f64 {
        self.residuals
            .values()
            .fold(0.0, |a: f64, &r| if r.is_finite() { a.max(r.abs()) } else { f64::NAN })
    }
}

/// One point of the parameter grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChannelRecord {
    pub index: usize,
    /// Position along each sweep axis.
    pub coords: Vec<usize>,
    pub inputs: Map<String, Value>,
    pub methods: Vec<MethodRecord>,
    /// Cross-method quantities, present when both methods succeeded.
    #[serde(skip_serializing_if = "BTreeMap::is_empty")]
    pub comparison: BTreeMap<String, f64>,
}

impl ChannelRecord {
    pub fn method(&self, name: &str) -> Option<&MethodRecord> {
        self.methods.iter().find(|m| m.method == name)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepAxis {
    pub name: String,
    pub len: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportSummary {
    pub channels: usize,
    pub model_errors: usize,
    pub residuals_exceeded: usize,
    pub residual_tolerance: f64,
    pub max_abs_error: Option<f64>,
    pub status: ExitStatus,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonReport {
    pub model: String,
    pub method: MethodChoice,
    pub axes: Vec<SweepAxis>,
    pub channels: Vec<ChannelRecord>,
    pub summary: ReportSummary,
}

impl ComparisonReport {
    pub(crate) fn assemble(
        model: &str,
        method: MethodChoice,
        axes: Vec<SweepAxis>,
        channels: Vec<ChannelRecord>,
        residual_tolerance: f64,
    ) -> Self {
        let all = || channels.iter().flat_map(|c| &c.methods);
        let model_errors = all().filter(|m| m.error.is_some()).count();
        let residuals_exceeded = all()
            .filter(|m| m.error.is_none())
            .filter(|m| !(m.max_residual() <= residual_tolerance))
            .count();
        let max_abs_error = all()
            .filter_map(|m| m.abs_error)
            .fold(None, |a: Option<f64>, e| Some(a.map_or(e, |a| a.max(e))));
        let status = if model_errors > 0 {
            ExitStatus::ModelError
        } else if residuals_exceeded > 0 {
            ExitStatus::ResidualExceeded
        } else {
            ExitStatus::Ok
        };
        let summary = ReportSummary {
            channels: channels.len(),
            model_errors,
            residuals_exceeded,
            residual_tolerance,
            max_abs_error,
            status,
        };
        Self {
            model: model.to_string(),
            method,
            axes,
            channels,
            summary,
        }
    }

    pub fn status(&self) -> ExitStatus {
        self.summary.status
    }

    /// Pretty JSON with a trailing newline. Floats are written in their
    /// shortest exact round-trip form.
    pub fn to_json_string(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }
}

/// `x` with 17 significant digits, which parses back to the same `f64`.
pub fn format_csv_number(x: f64) -> String {
    format!("{x:.16e}")
}

/// Trajectory samples of one channel with a fixed column layout.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryTable {
    /// Prefix each row with the method that produced it.
    pub method_column: bool,
    pub columns: Vec<String>,
    pub rows: Vec<(String, Vec<f64>)>,
}

impl TrajectoryTable {
    pub(crate) fn new(method_column: bool, columns: &[&str]) -> Self {
        Self {
            method_column,
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub(crate) fn push(&mut self, method: &str, row: Vec<f64>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push((method.to_string(), row));
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        if self.method_column {
            out.push_str("method,");
        }
        out.push_str(&self.columns.join(","));
        out.push('\n');
        for (method, row) in &self.rows {
            if self.method_column {
                out.push_str(method);
                out.push(',');
            }
            for (i, x) in row.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                let _ = write!(out, "{}", format_csv_number(*x));
            }
            out.push('\n');
        }
        out
    }
}
