// SPDX-License-Identifier: Apache-2.0

//! Elimination of three-boson terms `Ψ b†b†b† + h.c.` and the four-boson
//! vertex `Φ` they induce, one `(k₁k₂; k₃k₄)` channel at a time.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{FlowError, Result};
use crate::flow::{integrate_flow, FlowProblem, FlowResult, IntegratorConfig};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThreeBosonVertex {
    /// Energy sum `ε_k + ε_q + ε_{−k−q}` of the first pair.
    pub beta1: f64,
    pub beta2: f64,
    pub psi1: Complex64,
    pub psi2: Complex64,
    pub phi0: Complex64,
}

impl ThreeBosonVertex {
    pub fn new(beta1: f64, beta2: f64, psi1: Complex64, psi2: Complex64, phi0: Complex64) -> Result<Self> {
        let v = Self {
            beta1,
            beta2,
            psi1,
            psi2,
            phi0,
        };
        v.validate()?;
        Ok(v)
    }

    /// Real amplitudes and `Φ₀ = 0`.
    pub fn real(beta1: f64, beta2: f64, psi1: f64, psi2: f64) -> Result<Self> {
        Self::new(beta1, beta2, psi1.into(), psi2.into(), Complex64::new(0.0, 0.0))
    }

    pub fn validate(&self) -> Result<()> {
        for (name, b) in [("beta1", self.beta1), ("beta2", self.beta2)] {
            if !(b.is_finite() && b > 0.0) {
                return Err(FlowError::DegenerateEnergy(format!("{name} must be > 0, got {b}")));
            }
        }
        let amps = [self.psi1, self.psi2, self.phi0];
        if amps.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(FlowError::OutOfRange("amplitudes must be finite".into()));
        }
        Ok(())
    }

    /// `Ψ₁ Ψ₂*`, the bilinear that drives both effective vertices.
    fn drive(&self) -> Complex64 {
        self.psi1 * self.psi2.conj()
    }

    fn state(&self) -> [f64; 6] {
        [
            self.psi1.re,
            self.psi1.im,
            self.psi2.re,
            self.psi2.im,
            self.phi0.re,
            self.phi0.im,
        ]
    }
}

/// `R_i = Ψ_i / (3β_i)`, chosen so that `Ψ_i(1) = 0`.
pub fn cut_generator(v: &ThreeBosonVertex) -> Result<(Complex64, Complex64)> {
    v.validate()?;
    Ok((v.psi1 / (3.0 * v.beta1), v.psi2 / (3.0 * v.beta2)))
}

/// `Φ₀ − Ψ₁Ψ₂*(1/β₁ + 1/β₂)`.
pub fn cut_effective_phi(v: &ThreeBosonVertex) -> Result<Complex64> {
    v.validate()?;
    Ok(v.phi0 - v.drive() * (1.0 / v.beta1 + 1.0 / v.beta2))
}

/// `Φ₀ − 2Ψ₁Ψ₂*(β₁ + β₂)/(β₁² + β₂²)`.
pub fn fe_effective_phi(v: &ThreeBosonVertex) -> Result<Complex64> {
    v.validate()?;
    let (b1, b2) = (v.beta1, v.beta2);
    Ok(v.phi0 - v.drive() * (2.0 * (b1 + b2) / (b1 * b1 + b2 * b2)))
}

pub fn default_config() -> IntegratorConfig {
    IntegratorConfig::adaptive(1e-12, 1e-15, 1.0).with_threshold(1e-12)
}

/// `50 / min β_i²`.
pub fn default_fe_horizon(v: &ThreeBosonVertex) -> Result<f64> {
    v.validate()?;
    Ok(50.0 / v.beta1.min(v.beta2).powi(2))
}

fn unpack(x: &[f64]) -> (Complex64, Complex64) {
    (Complex64::new(x[0], x[1]), Complex64::new(x[2], x[3]))
}

/// One-step flow of `(Ψ₁, Ψ₂, Φ)` on `l ∈ [0, 1]`; the state is
/// `[Ψ₁.re, Ψ₁.im, Ψ₂.re, Ψ₂.im, Φ.re, Φ.im]`.
pub fn cut_flow(v: &ThreeBosonVertex) -> Result<FlowResult> {
    cut_flow_with(v, &default_config())
}

pub fn cut_flow_with(v: &ThreeBosonVertex, config: &IntegratorConfig) -> Result<FlowResult> {
    let (r1, r2) = cut_generator(v)?;
    let (b1, b2) = (v.beta1, v.beta2);
    let problem = FlowProblem::new(6, move |_, x, dx| {
        let (p1, p2) = unpack(x);
        let d1 = -3.0 * b1 * r1;
        let d2 = -3.0 * b2 * r2;
        let dphi = -6.0 * r1 * p2.conj() - 6.0 * r2.conj() * p1;
        dx.copy_from_slice(&[d1.re, d1.im, d2.re, d2.im, dphi.re, dphi.im]);
    });
    let cfg = IntegratorConfig {
        l_max: 1.0,
        convergence_threshold: 0.0,
        ..config.clone()
    };
    integrate_flow(&problem, &cfg, &v.state())
}

pub fn fe_flow(v: &ThreeBosonVertex) -> Result<FlowResult> {
    let cfg = IntegratorConfig {
        l_max: default_fe_horizon(v)?,
        ..default_config()
    };
    fe_flow_with(v, &cfg)
}

pub fn fe_flow_with(v: &ThreeBosonVertex, config: &IntegratorConfig) -> Result<FlowResult> {
    v.validate()?;
    let (b1, b2) = (v.beta1, v.beta2);
    let problem = FlowProblem::new(6, move |_, x, dx| {
        let (p1, p2) = unpack(x);
        let d1 = -b1 * b1 * p1;
        let d2 = -b2 * b2 * p2;
        let dphi = -2.0 * (b1 + b2) * p1 * p2.conj();
        dx.copy_from_slice(&[d1.re, d1.im, d2.re, d2.im, dphi.re, dphi.im]);
    })
    .with_convergence("max_abs_psi", |x| {
        let (p1, p2) = unpack(x);
        p1.norm().max(p2.norm())
    });
    integrate_flow(&problem, config, &v.state())
}

/// `Φ` at the end of a flow.
pub fn final_phi(flow: &FlowResult) -> Complex64 {
    Complex64::new(flow.final_state[4], flow.final_state[5])
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ThreeBosonComparison {
    pub vertex: ThreeBosonVertex,
    pub cut_phi: Complex64,
    pub fe_phi: Complex64,
    /// `(Φ_fe − Φ₀)/(Φ_cut − Φ₀) = 2β₁β₂/(β₁² + β₂²)`; `None` when the shift vanishes.
    pub ratio: Option<f64>,
}

pub fn compare_methods(v: &ThreeBosonVertex) -> Result<ThreeBosonComparison> {
    let cut_phi = cut_effective_phi(v)?;
    let fe_phi = fe_effective_phi(v)?;
    let cut_shift = cut_phi - v.phi0;
    let ratio = if cut_shift.norm() == 0.0 {
        None
    } else {
        Some(((fe_phi - v.phi0) / cut_shift).re)
    };
    Ok(ThreeBosonComparison {
        vertex: *v,
        cut_phi,
        fe_phi,
        ratio,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flow::Termination;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn generator_values() {
        let (r1, r2) = cut_generator(&ThreeBosonVertex::real(1.0, 2.0, 0.0, 0.0).unwrap()).unwrap();
        assert_eq!((r1.norm(), r2.norm()), (0.0, 0.0));
        let (r1, _) = cut_generator(&ThreeBosonVertex::real(1.0, 1.0, 0.3, 0.3).unwrap()).unwrap();
        assert!((r1.re - 0.1).abs() < 1e-15);
        let (r1, _) = cut_generator(&ThreeBosonVertex::real(3.0, 1.0, 0.3, 0.3).unwrap()).unwrap();
        assert!((r1.re - 0.0333333).abs() < 1e-7);
    }

    #[test]
    fn non_positive_energies_rejected() {
        assert!(matches!(
            ThreeBosonVertex::real(0.0, 1.0, 0.3, 0.3),
            Err(FlowError::DegenerateEnergy(_))
        ));
        assert!(ThreeBosonVertex::real(1.0, -2.0, 0.3, 0.3).is_err());
        let raw = ThreeBosonVertex {
            beta1: 0.0,
            beta2: 1.0,
            psi1: c(1.0, 0.0),
            psi2: c(1.0, 0.0),
            phi0: c(0.0, 0.0),
        };
        assert!(cut_effective_phi(&raw).is_err());
        assert!(fe_effective_phi(&raw).is_err());
        assert!(cut_flow(&raw).is_err());
    }

    #[test]
    fn closed_forms() {
        let v = ThreeBosonVertex::new(1.0, 3.0, c(0.0, 0.0), c(0.3, 0.1), c(0.5, -0.2)).unwrap();
        assert_eq!(cut_effective_phi(&v).unwrap(), v.phi0);
        let v = ThreeBosonVertex::new(1.0, 3.0, c(0.3, 0.1), c(0.0, 0.0), c(0.5, -0.2)).unwrap();
        assert_eq!(fe_effective_phi(&v).unwrap(), v.phi0);

        let v = ThreeBosonVertex::real(1.0, 1.0, 0.3, 0.3).unwrap();
        assert!((cut_effective_phi(&v).unwrap() - c(-0.18, 0.0)).norm() < 1e-15);
        let v = ThreeBosonVertex::real(1.0, 3.0, 0.3, 0.3).unwrap();
        assert!((cut_effective_phi(&v).unwrap() - c(-0.12, 0.0)).norm() < 1e-15);
        assert!((fe_effective_phi(&v).unwrap() - c(-0.072, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn equal_energies_coincide() {
        for beta in [0.5, 1.0, 7.0] {
            let v = ThreeBosonVertex::new(beta, beta, c(0.2, 0.4), c(-0.1, 0.3), c(0.0, 0.0)).unwrap();
            let a = cut_effective_phi(&v).unwrap();
            let b = fe_effective_phi(&v).unwrap();
            assert!((a - b).norm() < 1e-15);
            assert!((a + 2.0 * v.psi1 * v.psi2.conj() / beta).norm() < 1e-15);
        }
    }

    #[test]
    fn cut_flow_examples() {
        let r = cut_flow(&ThreeBosonVertex::new(1.0, 2.0, c(0.0, 0.0), c(0.0, 0.0), c(0.1, 0.2)).unwrap()).unwrap();
        assert!(r.trajectory.iter().all(|s| s.state[4] == 0.1 && s.state[5] == 0.2));

        let r = cut_flow(&ThreeBosonVertex::real(1.0, 1.0, 0.3, 0.3).unwrap()).unwrap();
        assert!(r.final_state[..4].iter().all(|x| x.abs() < 1e-10));
        assert!((final_phi(&r) - c(-0.18, 0.0)).norm() < 1e-8);

        let r = cut_flow(&ThreeBosonVertex::real(1.0, 3.0, 0.3, 0.3).unwrap()).unwrap();
        assert!((final_phi(&r) - c(-0.12, 0.0)).norm() < 1e-8);
    }

    #[test]
    fn fe_flow_examples() {
        let v = ThreeBosonVertex::new(1.0, 2.0, c(0.0, 0.0), c(0.0, 0.0), c(0.4, 0.0)).unwrap();
        let r = fe_flow(&v).unwrap();
        assert_eq!(r.termination, Termination::Converged);
        assert_eq!(r.final_l, 0.0);
        assert_eq!(final_phi(&r), c(0.4, 0.0));

        let r = fe_flow(&ThreeBosonVertex::real(1.0, 1.0, 0.3, 0.3).unwrap()).unwrap();
        assert_eq!(r.termination, Termination::Converged);
        assert!((final_phi(&r) - c(-0.18, 0.0)).norm() < 1e-7);

        let r = fe_flow(&ThreeBosonVertex::real(1.0, 3.0, 0.3, 0.3).unwrap()).unwrap();
        assert!((final_phi(&r) - c(-0.072, 0.0)).norm() < 1e-7);
    }

    #[test]
    fn ratio_values() {
        let r = compare_methods(&ThreeBosonVertex::real(2.0, 2.0, 0.3, 0.3).unwrap()).unwrap();
        assert!((r.ratio.unwrap() - 1.0).abs() < 1e-15);
        let r = compare_methods(&ThreeBosonVertex::real(1.0, 3.0, 0.3, 0.3).unwrap()).unwrap();
        assert!((r.ratio.unwrap() - 0.6).abs() < 1e-15);
        let r = compare_methods(&ThreeBosonVertex::real(1.0, 2.0, 0.3, 0.3).unwrap()).unwrap();
        assert!((r.ratio.unwrap() - 0.8).abs() < 1e-15);
        let r = compare_methods(&ThreeBosonVertex::real(1.0, 2.0, 0.0, 0.3).unwrap()).unwrap();
        assert_eq!(r.ratio, None);
    }

    #[test]
    fn real_equal_amplitudes_give_real_vertices() {
        let v = ThreeBosonVertex::real(0.7, 2.5, 0.4, 0.4).unwrap();
        assert_eq!(cut_effective_phi(&v).unwrap().im, 0.0);
        assert_eq!(fe_effective_phi(&v).unwrap().im, 0.0);
    }

    proptest! {
        #[test]
        fn phase_covariance(b1 in 0.2f64..5.0, b2 in 0.2f64..5.0, phase in -3.1f64..3.1,
                            a in 0.01f64..1.0, b in 0.01f64..1.0) {
            let v = ThreeBosonVertex::new(b1, b2, c(a, 0.0), c(b, 0.0), c(0.0, 0.0)).unwrap();
            let rot = Complex64::from_polar(1.0, phase);
            let w = ThreeBosonVertex { psi1: v.psi1 * rot, ..v };
            let (c0, f0) = (cut_effective_phi(&v).unwrap(), fe_effective_phi(&v).unwrap());
            prop_assert!((cut_effective_phi(&w).unwrap() - c0 * rot).norm() < 1e-14);
            prop_assert!((fe_effective_phi(&w).unwrap() - f0 * rot).norm() < 1e-14);
        }

        #[test]
        fn fe_shift_never_exceeds_cut_shift(b1 in 0.2f64..5.0, b2 in 0.2f64..5.0,
                                            re in -1.0f64..1.0, im in -1.0f64..1.0) {
            let v = ThreeBosonVertex::new(b1, b2, c(re, im), c(0.5, -0.25), c(0.1, 0.1)).unwrap();
            let cut = (cut_effective_phi(&v).unwrap() - v.phi0).norm();
            let fe = (fe_effective_phi(&v).unwrap() - v.phi0).norm();
            prop_assert!(fe <= cut * (1.0 + 1e-12));
        }
    }
}
