// SPDX-License-Identifier: Apache-2.0

//! Elimination of the electron-phonon coupling in the zero-momentum pair
//! channel `(k, −k)` exchanging a phonon `q`.
//!
//! The channel has two energy differences `α₁ = ω + Δ` and `α₂ = ω − Δ`. The
//! one-step route uses the constant generator `R_i = M₀/α_i` and yields the
//! Fröhlich interaction `V₀ − M₀²ω/(ω² − Δ²)`. The flow-equation route uses
//! `η = [H₀, H_e-ph]`, lets `M_i` decay like `e^{−α_i² l}` and yields
//! `V₀ − M₀²ω/(ω² + Δ²)`.

use serde::{Deserialize, Serialize};

use crate::error::{FlowError, Result};
use crate::flow::{integrate_flow, FlowProblem, FlowResult, IntegratorConfig, Termination};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EPhPairChannel {
    /// Phonon energy ω_q.
    pub omega: f64,
    /// Electron energy difference ε_{k+q} − ε_k.
    pub delta: f64,
    /// Initial coupling M_q.
    pub m0: f64,
    /// Initial pair interaction V_{k,−k,q}(0).
    pub v0: f64,
}

impl EPhPairChannel {
    pub fn new(omega: f64, delta: f64, m0: f64, v0: f64) -> Result<Self> {
        let ch = Self { omega, delta, m0, v0 };
        ch.validate()?;
        Ok(ch)
    }

    /// Builds a channel from arbitrary `(α₁, α₂)`; `ω` and `Δ` are their half
    /// sum and half difference, and `ω > 0` is not enforced.
    pub fn from_alphas(alpha1: f64, alpha2: f64, m0: f64, v0: f64) -> Self {
        Self {
            omega: 0.5 * (alpha1 + alpha2),
            delta: 0.5 * (alpha1 - alpha2),
            m0,
            v0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [self.omega, self.delta, self.m0, self.v0].iter().all(|v| v.is_finite());
        if !finite {
            return Err(FlowError::OutOfRange("channel parameters must be finite".into()));
        }
        if self.omega <= 0.0 {
            return Err(FlowError::OutOfRange(format!("omega must be > 0, got {}", self.omega)));
        }
        Ok(())
    }

    pub fn alphas(&self) -> (f64, f64) {
        alphas(self)
    }
}

pub fn alphas(ch: &EPhPairChannel) -> (f64, f64) {
    (ch.omega + ch.delta, ch.omega - ch.delta)
}

/// `R_i = M₀/α_i`.
pub fn cut_generator_coeffs(ch: &EPhPairChannel) -> Result<(f64, f64)> {
    let (a1, a2) = alphas(ch);
    if a1 == 0.0 || a2 == 0.0 {
        return Err(FlowError::Resonance(format!(
            "alpha = ({a1}, {a2}); one-step generator is singular at |delta| = omega"
        )));
    }
    Ok((ch.m0 / a1, ch.m0 / a2))
}

/// `V₀ − M₀²(α₁ + α₂)/(2α₁α₂)`, i.e. `V₀ − M₀²ω/(ω² − Δ²)`.
pub fn cut_effective_v(ch: &EPhPairChannel) -> Result<f64> {
    let (a1, a2) = alphas(ch);
    if a1 * a2 == 0.0 {
        return Err(FlowError::Resonance(format!(
            "omega^2 - delta^2 = 0 (omega = {}, delta = {})",
            ch.omega, ch.delta
        )));
    }
    Ok(ch.v0 - ch.m0 * ch.m0 * (a1 + a2) / (2.0 * a1 * a2))
}

/// `V₀ − M₀²(α₁ + α₂)/(α₁² + α₂²)`, i.e. `V₀ − M₀²ω/(ω² + Δ²)`.
pub fn fe_effective_v(ch: &EPhPairChannel) -> Result<f64> {
    let (a1, a2) = alphas(ch);
    let denom = a1 * a1 + a2 * a2;
    if denom == 0.0 {
        return Err(FlowError::DegenerateEnergy("alpha1 = alpha2 = 0".into()));
    }
    Ok(ch.v0 - ch.m0 * ch.m0 * (a1 + a2) / denom)
}

/// Integrator settings used when the caller does not supply any.
pub fn default_config() -> IntegratorConfig {
    IntegratorConfig::adaptive(1e-12, 1e-15, 1.0).with_threshold(1e-12)
}

/// One-step flow of `(M₁, M₂, V)` on `l ∈ [0, 1]`.
pub fn cut_flow(ch: &EPhPairChannel) -> Result<FlowResult> {
    cut_flow_with(ch, &default_config())
}

pub fn cut_flow_with(ch: &EPhPairChannel, config: &IntegratorConfig) -> Result<FlowResult> {
    ch.validate()?;
    let (a1, a2) = alphas(ch);
    let (r1, r2) = cut_generator_coeffs(ch)?;
    let problem = FlowProblem::new(3, move |_, x, dx| {
        dx[0] = -a1 * r1;
        dx[1] = -a2 * r2;
        dx[2] = -r1 * x[1] - r2 * x[0];
    });
    let cfg = IntegratorConfig {
        l_max: 1.0,
        convergence_threshold: 0.0,
        ..config.clone()
    };
    integrate_flow(&problem, &cfg, &[ch.m0, ch.m0, ch.v0])
}

/// Flow-equation trajectory of `(M₁, M₂, V)`.
#[derive(Debug, Clone)]
pub struct EphFeFlow {
    pub flow: FlowResult,
    /// Set when some `α_i = 0`, so that `M_i` never decays.
    pub warning: Option<String>,
}

impl EphFeFlow {
    pub fn final_v(&self) -> f64 {
        self.flow.final_state[2]
    }
}

/// `50 / min α_i²` over the nonzero energy differences.
pub fn default_fe_horizon(ch: &EPhPairChannel) -> Result<f64> {
    let (a1, a2) = alphas(ch);
    let rate = [a1 * a1, a2 * a2]
        .into_iter()
        .filter(|&r| r > 0.0)
        .fold(f64::INFINITY, f64::min);
    if rate.is_infinite() {
        return Err(FlowError::DegenerateEnergy("alpha1 = alpha2 = 0".into()));
    }
    Ok(50.0 / rate)
}

/// Flow-equation integration with `l_max` from [`default_fe_horizon`].
pub fn fe_flow(ch: &EPhPairChannel) -> Result<EphFeFlow> {
    let cfg = IntegratorConfig {
        l_max: default_fe_horizon(ch)?,
        ..default_config()
    };
    fe_flow_with(ch, &cfg)
}

pub fn fe_flow_with(ch: &EPhPairChannel, config: &IntegratorConfig) -> Result<EphFeFlow> {
    ch.validate()?;
    let (a1, a2) = alphas(ch);
    let problem = FlowProblem::new(3, move |_, x, dx| {
        dx[0] = -a1 * a1 * x[0];
        dx[1] = -a2 * a2 * x[1];
        dx[2] = -(a1 + a2) * x[0] * x[1];
    })
    .with_convergence("max_abs_m", |x| x[0].abs().max(x[1].abs()));
    let flow = integrate_flow(&problem, config, &[ch.m0, ch.m0, ch.v0])?;
    let warning = if ch.m0 != 0.0 && (a1 == 0.0 || a2 == 0.0) {
        Some(format!("alpha = ({a1}, {a2}): coupling with alpha = 0 never decays"))
    } else if flow.termination == Termination::ReachedLMax {
        Some("coupling did not reach the convergence threshold before l_max".into())
    } else {
        None
    };
    Ok(EphFeFlow { flow, warning })
}

/// Both effective interactions side by side. A resonant one-step side is
/// reported as an error string; the flow-equation value is always produced.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EphComparison {
    pub channel: EPhPairChannel,
    pub cut_v: Option<f64>,
    pub cut_error: Option<String>,
    pub fe_v: f64,
    /// `cut_v − fe_v = −2M₀²ωΔ²/((ω² − Δ²)(ω² + Δ²))`.
    pub difference: Option<f64>,
}

pub fn compare_methods(ch: &EPhPairChannel) -> Result<EphComparison> {
    ch.validate()?;
    let fe_v = fe_effective_v(ch)?;
    let (cut_v, cut_error) = match cut_effective_v(ch) {
        Ok(v) => (Some(v), None),
        Err(e @ FlowError::Resonance(_)) => (None, Some(e.kind().to_string())),
        Err(e) => return Err(e),
    };
    Ok(EphComparison {
        channel: *ch,
        cut_v,
        cut_error,
        fe_v,
        difference: cut_v.map(|c| c - fe_v),
    })
}
