// SPDX-License-Identifier: Apache-2.0

use thiserror::Error;

/// Errors raised by the flow engine, the matrix routines and the model modules.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum FlowError {
    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid integrator configuration: {0}")]
    InvalidConfig(String),

    #[error("matrix is not {kind} (deviation {deviation:e})")]
    NotHermitian { kind: &'static str, deviation: f64 },

    #[error("numerical failure: {0}")]
    NumericalFailure(String),

    #[error("value out of range: {0}")]
    OutOfRange(String),

    /// |g₀| ≥ f₀: the quadratic mode has no real spectrum.
    #[error("unstable mode: |g0| = {g0} must be smaller than f0 = {f0}")]
    UnstableMode { f0: f64, g0: f64 },

    /// A vanishing energy denominator in the one-step generator.
    #[error("resonance: energy denominator vanishes ({0})")]
    Resonance(String),

    #[error("degenerate energy: {0}")]
    DegenerateEnergy(String),

    #[error("invalid spin system: {0}")]
    InvalidSpinSystem(String),
}

impl FlowError {
    /// Short machine-readable tag used in reports.
    pub fn kind(&self) -> &'static str {
        match self {
            FlowError::DimensionMismatch { .. } => "dimension_mismatch",
            FlowError::InvalidConfig(_) => "invalid_config",
            FlowError::NotHermitian { .. } => "not_hermitian",
            FlowError::NumericalFailure(_) => "numerical_failure",
            FlowError::OutOfRange(_) => "out_of_range",
            FlowError::UnstableMode { .. } => "unstable_mode",
            FlowError::Resonance(_) => "resonance",
            FlowError::DegenerateEnergy(_) => "degenerate_energy",
            FlowError::InvalidSpinSystem(_) => "invalid_spin_system",
        }
    }
}

pub type Result<T> = std::result::Result<T, FlowError>;
