// SPDX-License-Identifier: Apache-2.0

//! Quadratic two-boson mode `f (a†a + b†b) + g (a†b† + ab)`.
//!
//! Each mode carries a diagonal energy `f` and an anomalous coupling `g`.
//! The flow-equation route uses `η ∝ g(l)` and gives the nonlinear system
//! `f' = −g²`, `g' = −f g`; the one-step route uses a constant coefficient `G`
//! and gives the linear system `f' = −G g`, `g' = −G f`. Both conserve
//! `f² − g²`, whose square root is the mode spectrum.

use serde::{Deserialize, Serialize};

use crate::error::{FlowError, Result};
use crate::flow::{integrate_flow, FlowProblem, FlowResult, IntegratorConfig};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadraticMode {
    pub f: f64,
    pub g: f64,
}

/// Coefficient of the fixed one-step generator for a single mode.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CutGeneratorCoefficient(pub f64);

impl QuadraticMode {
    pub fn new(f: f64, g: f64) -> Self {
        Self { f, g }
    }

    /// Rejects modes with `|g| ≥ f` (no real spectrum) or non-finite values.
    pub fn validate(&self) -> Result<()> {
        if !(self.f.is_finite() && self.g.is_finite()) || self.f <= 0.0 || self.g.abs() >= self.f {
            return Err(FlowError::UnstableMode { f0: self.f, g0: self.g });
        }
        Ok(())
    }

    /// `f² − g²`.
    pub fn invariant(&self) -> f64 {
        self.f * self.f - self.g * self.g
    }

    fn state(&self) -> [f64; 2] {
        [self.f, self.g]
    }
}

pub fn fe_rhs(mode: QuadraticMode) -> (f64, f64) {
    (-mode.g * mode.g, -mode.f * mode.g)
}

pub fn cut_rhs(mode: QuadraticMode, generator: CutGeneratorCoefficient) -> (f64, f64) {
    let g = generator.0;
    (-g * mode.g, -g * mode.f)
}

/// `√(f₀² − g₀²)`.
pub fn spectrum(mode0: QuadraticMode) -> Result<f64> {
    mode0.validate()?;
    Ok(mode0.invariant().sqrt())
}

/// Closed-form solution of the flow-equation system:
/// `f = ε coth(εl + l₀)`, `g = ε sgn(g₀) / sinh(εl + l₀)` with
/// `l₀ = ½ ln((f₀ + ε)/(f₀ − ε))`.
pub fn fe_closed_form(mode0: QuadraticMode, l: f64) -> Result<QuadraticMode> {
    mode0.validate()?;
    if mode0.g == 0.0 || l == 0.0 {
        return Ok(mode0);
    }
    let eps = mode0.invariant().sqrt();
    let l0 = 0.5 * ((mode0.f + eps) / (mode0.f - eps)).ln();
    let x = eps * l + l0;
    // coth and 1/sinh through e^{-2x} so that large l does not overflow.
    let q = (-2.0 * x).exp();
    let f = eps * (1.0 + q) / (1.0 - q);
    let g = eps * mode0.g.signum() * 2.0 * (-x).exp() / (1.0 - q);
    Ok(QuadraticMode { f, g })
}

/// `G = ½ ln((f₀ + g₀)/(f₀ − g₀))`, which makes the mode diagonal at `l = 1`.
pub fn cut_generator(mode0: QuadraticMode) -> Result<CutGeneratorCoefficient> {
    mode0.validate()?;
    Ok(CutGeneratorCoefficient(
        0.5 * ((mode0.f + mode0.g) / (mode0.f - mode0.g)).ln(),
    ))
}

pub fn cut_closed_form(mode0: QuadraticMode, generator: CutGeneratorCoefficient, l: f64) -> QuadraticMode {
    let plus = 0.5 * (mode0.f + mode0.g);
    let minus = 0.5 * (mode0.f - mode0.g);
    let decay = (-generator.0 * l).exp();
    let growth = (generator.0 * l).exp();
    QuadraticMode {
        f: plus * decay + minus * growth,
        g: plus * decay - minus * growth,
    }
}

/// Flow-equation ODE as a [`FlowProblem`] on `[f, g]`, converging on `|g|`
/// and monitoring `f² − g²`.
pub fn fe_problem() -> FlowProblem<'static> {
    FlowProblem::new(2, |_, x, dx| {
        let (df, dg) = fe_rhs(QuadraticMode::new(x[0], x[1]));
        dx[0] = df;
        dx[1] = dg;
    })
    .with_monitor("invariant", |x| x[0] * x[0] - x[1] * x[1])
    .with_convergence("abs_g", |x| x[1].abs())
}

pub fn cut_problem(generator: CutGeneratorCoefficient) -> FlowProblem<'static> {
    FlowProblem::new(2, move |_, x, dx| {
        let (df, dg) = cut_rhs(QuadraticMode::new(x[0], x[1]), generator);
        dx[0] = df;
        dx[1] = dg;
    })
    .with_monitor("invariant", |x| x[0] * x[0] - x[1] * x[1])
}

/// Horizon `50/ε`; asymptotically `g ∝ e^{−εl}`.
pub fn default_fe_horizon(mode0: QuadraticMode) -> Result<f64> {
    Ok(50.0 / spectrum(mode0)?)
}

pub fn fe_flow(mode0: QuadraticMode, config: &IntegratorConfig) -> Result<FlowResult> {
    mode0.validate()?;
    integrate_flow(&fe_problem(), config, &mode0.state())
}

/// Integrates the one-step system on `[0, 1]` with `G` from [`cut_generator`].
pub fn cut_flow(mode0: QuadraticMode, config: &IntegratorConfig) -> Result<FlowResult> {
    let generator = cut_generator(mode0)?;
    let cfg = IntegratorConfig {
        l_max: 1.0,
        ..config.clone()
    };
    integrate_flow(&cut_problem(generator), &cfg, &mode0.state())
}

/// Side-by-side outcome of both methods on one mode.
#[derive(Debug, Clone, Serialize)]
pub struct QuadraticComparison {
    pub mode: QuadraticMode,
    pub spectrum: f64,
    pub fe_f: f64,
    pub fe_g: f64,
    pub cut_f: f64,
    pub cut_g: f64,
}

pub fn compare_methods(mode0: QuadraticMode, config: &IntegratorConfig) -> Result<QuadraticComparison> {
    let fe = fe_flow(mode0, config)?;
    let cut = cut_flow(mode0, config)?;
    Ok(QuadraticComparison {
        mode: mode0,
        spectrum: spectrum(mode0)?,
        fe_f: fe.final_state[0],
        fe_g: fe.final_state[1],
        cut_f: cut.final_state[0],
        cut_g: cut.final_state[1],
    })
}

/// Vectorized sweep over independent modes.
pub fn sweep_spectrum(modes: &[QuadraticMode]) -> Vec<Result<f64>> {
    modes.iter().map(|&m| spectrum(m)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flow::Termination;
    use proptest::prelude::*;

    const LN2: f64 = std::f64::consts::LN_2;

    #[test]
    fn fe_rhs_values() {
        assert_eq!(fe_rhs(QuadraticMode::new(1.0, 0.0)), (0.0, 0.0) as (f64, f64));
        let (a, b) = fe_rhs(QuadraticMode::new(1.0, 0.6));
        assert!((a + 0.36).abs() < 1e-15 && (b + 0.6).abs() < 1e-15);
        assert_eq!(fe_rhs(QuadraticMode::new(2.0, 1.0)), (-1.0, -2.0));
    }

    #[test]
    fn cut_rhs_values() {
        let (a, b) = cut_rhs(QuadraticMode::new(1.0, 0.6), CutGeneratorCoefficient(0.0));
        assert_eq!((a.abs(), b.abs()), (0.0, 0.0));
        let (a, b) = cut_rhs(QuadraticMode::new(1.0, 0.6), CutGeneratorCoefficient(LN2));
        assert!((a + 0.4158883).abs() < 1e-7 && (b + 0.6931472).abs() < 1e-7);
        let (a, b) = cut_rhs(QuadraticMode::new(1.0, 0.0), CutGeneratorCoefficient(0.3));
        assert_eq!(a.abs(), 0.0);
        assert_eq!(b, -0.3);
    }

    #[test]
    fn generator_values() {
        assert!((cut_generator(QuadraticMode::new(1.0, 0.6)).unwrap().0 - 0.6931472).abs() < 1e-7);
        assert!((cut_generator(QuadraticMode::new(1.0, 0.6)).unwrap().0 - LN2).abs() < 1e-12);
        assert_eq!(cut_generator(QuadraticMode::new(3.0, 0.0)).unwrap().0, 0.0);
        let g = cut_generator(QuadraticMode::new(2.0, 1.0)).unwrap().0;
        assert!((g - 0.5 * 3f64.ln()).abs() < 1e-12);
        assert!((g - 0.5493061).abs() < 1e-7);
    }

    #[test]
    fn spectrum_values() {
        assert_eq!(spectrum(QuadraticMode::new(1.0, 0.0)).unwrap(), 1.0);
        assert!((spectrum(QuadraticMode::new(1.0, 0.6)).unwrap() - 0.8).abs() < 1e-15);
        assert_eq!(spectrum(QuadraticMode::new(5.0, 3.0)).unwrap(), 4.0);
    }

    #[test]
    fn unstable_modes_rejected() {
        for (f, g) in [(1.0, 1.0), (1.0, -1.5), (-1.0, 0.0), (0.0, 0.0), (f64::NAN, 0.1)] {
            let m = QuadraticMode::new(f, g);
            assert!(matches!(spectrum(m), Err(FlowError::UnstableMode { .. })));
            assert!(cut_generator(m).is_err());
            assert!(fe_closed_form(m, 1.0).is_err());
        }
    }

    #[test]
    fn fe_closed_form_endpoints() {
        let m = QuadraticMode::new(1.0, 0.6);
        assert_eq!(fe_closed_form(m, 0.0).unwrap(), m);
        let far = fe_closed_form(m, 200.0).unwrap();
        assert!((far.f - 0.8).abs() < 1e-10 && far.g.abs() < 1e-10);
        let z = QuadraticMode::new(2.5, 0.0);
        assert_eq!(fe_closed_form(z, 3.0).unwrap(), z);
        // Negative coupling keeps its sign.
        let neg = fe_closed_form(QuadraticMode::new(1.0, -0.6), 0.5).unwrap();
        assert!(neg.g < 0.0);
        let pos = fe_closed_form(QuadraticMode::new(1.0, 0.6), 0.5).unwrap();
        assert!((neg.g + pos.g).abs() < 1e-15 && neg.f == pos.f);
    }

    #[test]
    fn fe_closed_form_satisfies_ode_by_central_difference() {
        let h = 1e-5;
        for (f0, g0) in [(1.0, 0.6), (2.0, 1.0), (1.5, -0.9), (0.7, 0.1)] {
            let m0 = QuadraticMode::new(f0, g0);
            for l in [0.05, 0.3, 1.0, 4.0] {
                let a = fe_closed_form(m0, l - h).unwrap();
                let b = fe_closed_form(m0, l + h).unwrap();
                let c = fe_closed_form(m0, l).unwrap();
                let (df, dg) = fe_rhs(c);
                assert!(((b.f - a.f) / (2.0 * h) - df).abs() < 1e-6);
                assert!(((b.g - a.g) / (2.0 * h) - dg).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn cut_closed_form_values() {
        let m = QuadraticMode::new(1.0, 0.6);
        let g = CutGeneratorCoefficient(LN2);
        let start = cut_closed_form(m, g, 0.0);
        assert!((start.f - m.f).abs() < 1e-15 && (start.g - m.g).abs() < 1e-15);
        let end = cut_closed_form(m, g, 1.0);
        assert!((end.f - 0.8).abs() < 1e-12 && end.g.abs() < 1e-12);
    }

    #[test]
    fn fe_integration_converges_to_spectrum() {
        let m = QuadraticMode::new(1.0, 0.6);
        let cfg = IntegratorConfig::adaptive(1e-10, 1e-12, 100.0).with_threshold(1e-10);
        let r = fe_flow(m, &cfg).unwrap();
        assert_eq!(r.termination, Termination::Converged);
        assert!((r.final_state[0] - 0.8).abs() < 1e-8);
        assert!(r.monitor_range("invariant").unwrap().drift() < 1e-9);
        // |g| decreases monotonically without changing sign.
        let g: Vec<f64> = r.trajectory.iter().map(|s| s.state[1]).collect();
        assert!(g.windows(2).all(|w| w[1] < w[0] && w[1] > 0.0));
    }

    #[test]
    fn numeric_flows_match_closed_forms() {
        let m = QuadraticMode::new(1.0, 0.6);
        let cfg = IntegratorConfig::adaptive(1e-12, 1e-14, 20.0).with_threshold(0.0);
        let r = fe_flow(m, &cfg).unwrap();
        for s in &r.trajectory {
            let c = fe_closed_form(m, s.l).unwrap();
            assert!((s.state[0] - c.f).abs() < 1e-8 && (s.state[1] - c.g).abs() < 1e-8);
        }
        let g = cut_generator(m).unwrap();
        let r = cut_flow(m, &cfg).unwrap();
        for s in &r.trajectory {
            let c = cut_closed_form(m, g, s.l);
            assert!((s.state[0] - c.f).abs() < 1e-9 && (s.state[1] - c.g).abs() < 1e-9);
        }
    }

    #[test]
    fn sweep_reports_each_mode() {
        let out = sweep_spectrum(&[QuadraticMode::new(1.0, 0.6), QuadraticMode::new(1.0, 2.0)]);
        assert!((out[0].as_ref().unwrap() - 0.8).abs() < 1e-15);
        assert!(out[1].is_err());
    }

    proptest! {
        #[test]
        fn both_fields_conserve_invariant(f in 0.1f64..10.0, ratio in -0.99f64..0.99, big_g in -3.0f64..3.0) {
            let m = QuadraticMode::new(f, ratio * f);
            let (df, dg) = fe_rhs(m);
            prop_assert!((2.0 * m.f * df - 2.0 * m.g * dg).abs() <= 1e-12 * f * f * f);
            let (df, dg) = cut_rhs(m, CutGeneratorCoefficient(big_g));
            prop_assert!((2.0 * m.f * df - 2.0 * m.g * dg).abs() <= 1e-12 * f * f * (1.0 + big_g.abs()));
        }

        #[test]
        fn cut_diagonal_at_one(f in 0.1f64..10.0, ratio in -0.95f64..0.95) {
            let m = QuadraticMode::new(f, ratio * f);
            let end = cut_closed_form(m, cut_generator(m).unwrap(), 1.0);
            prop_assert!(end.g.abs() <= 1e-12 * f);
            prop_assert!((end.f - spectrum(m).unwrap()).abs() <= 1e-12 * f);
        }
    }
}
