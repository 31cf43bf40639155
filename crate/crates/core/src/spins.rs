// SPDX-License-Identifier: Apache-2.0

//! Time evolution of a spin-½ ensemble treated as a continuous unitary flow
//! with generator `−iH` (density matrix) or `iH` (Heisenberg operators).
//!
//! The initial state is the high-temperature transverse magnetization
//! `ρ = 1 − α Σ_j I_j^x`. Only the deviation `Δρ` evolves; its Pauli-weight
//! spectrum tracks how single-spin order spreads into multi-spin correlations.
//! Units with ħ = 1.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{FlowError, Result};
use crate::flow::{integrate_flow, FlowProblem, FlowResult, IntegratorConfig, Termination};
use crate::matrix::{matrix_exponential, pack_hermitian, unpack_hermitian, CMatrix, DenseHermitian};
use crate::pauli::{pauli_order_spectrum, PauliOrderSpectrum};

pub const MAX_SPINS: usize = 8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpinSystemConfig {
    pub n_spins: usize,
    /// Zeeman (Larmor) frequency.
    pub omega0: f64,
    /// Symmetric coupling matrix with zero diagonal.
    pub couplings: Vec<Vec<f64>>,
    /// Transverse amplitude of the initial deviation.
    pub alpha: f64,
}

impl SpinSystemConfig {
    pub fn uncoupled(n_spins: usize, omega0: f64, alpha: f64) -> Self {
        Self {
            n_spins,
            omega0,
            couplings: vec![vec![0.0; n_spins]; n_spins],
            alpha,
        }
    }

    /// Open chain with coupling `j` between neighbours.
    pub fn chain(n_spins: usize, omega0: f64, j: f64, alpha: f64) -> Self {
        let mut cfg = Self::uncoupled(n_spins, omega0, alpha);
        for i in 0..n_spins.saturating_sub(1) {
            cfg.couplings[i][i + 1] = j;
            cfg.couplings[i + 1][i] = j;
        }
        cfg
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.n_spins;
        if !(1..=MAX_SPINS).contains(&n) {
            return Err(FlowError::InvalidSpinSystem(format!(
                "n_spins must be in 1..={MAX_SPINS}, got {n}"
            )));
        }
        if !self.omega0.is_finite() || !self.alpha.is_finite() {
            return Err(FlowError::InvalidSpinSystem("omega0 and alpha must be finite".into()));
        }
        if self.couplings.len() != n || self.couplings.iter().any(|r| r.len() != n) {
            return Err(FlowError::InvalidSpinSystem(format!("couplings must be {n}x{n}")));
        }
        for i in 0..n {
            if self.couplings[i][i] != 0.0 {
                return Err(FlowError::InvalidSpinSystem("couplings must have zero diagonal".into()));
            }
            for j in 0..n {
                let v = self.couplings[i][j];
                if !v.is_finite() || v != self.couplings[j][i] {
                    return Err(FlowError::InvalidSpinSystem("couplings must be symmetric".into()));
                }
            }
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        1 << self.n_spins
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    X,
    Y,
    Z,
}

/// `I_j^axis` on `n` spins; spin 0 is the most significant tensor factor and
/// `|↑⟩` is the first basis state.
pub fn spin_operator(n: usize, site: usize, axis: Axis) -> CMatrix {
    let dim = 1usize << n;
    let bit = 1usize << (n - 1 - site);
    let mut m = CMatrix::zeros(dim, dim);
    for c in 0..dim {
        let down = c & bit != 0;
        match axis {
            Axis::Z => m[(c, c)] = Complex64::new(if down { -0.5 } else { 0.5 }, 0.0),
            Axis::X => m[(c ^ bit, c)] = Complex64::new(0.5, 0.0),
            // I^y|↑⟩ = (i/2)|↓⟩, I^y|↓⟩ = (−i/2)|↑⟩
            Axis::Y => m[(c ^ bit, c)] = Complex64::new(0.0, if down { -0.5 } else { 0.5 }),
        }
    }
    m
}

pub fn total_spin(n: usize, axis: Axis) -> CMatrix {
    let dim = 1usize << n;
    (0..n).fold(CMatrix::zeros(dim, dim), |acc, j| acc + spin_operator(n, j, axis))
}

/// `ω₀ Σ I^z + Σ_{i<j} J_ij (2 I_i^z I_j^z − ½(I_i^+ I_j^− + I_i^− I_j^+))`.
pub fn build_spin_hamiltonian(cfg: &SpinSystemConfig) -> Result<DenseHermitian> {
    cfg.validate()?;
    let n = cfg.n_spins;
    let mut h = total_spin(n, Axis::Z) * Complex64::new(cfg.omega0, 0.0);
    for i in 0..n {
        for j in i + 1..n {
            let jij = cfg.couplings[i][j];
            if jij == 0.0 {
                continue;
            }
            let op = |a| spin_operator(n, i, a) * spin_operator(n, j, a);
            // I⁺I⁻ + I⁻I⁺ = 2(IˣIˣ + IʸIʸ)
            let term = op(Axis::Z) * Complex64::new(2.0, 0.0) - op(Axis::X) - op(Axis::Y);
            h += term * Complex64::new(jij, 0.0);
        }
    }
    Ok(DenseHermitian::from_matrix_unchecked(h))
}

/// Traceless Hermitian deviation `Δρ` of the density matrix from the identity.
#[derive(Debug, Clone, PartialEq)]
pub struct DeviationDensity(DenseHermitian);

impl DeviationDensity {
    pub fn new(m: DenseHermitian) -> Result<Self> {
        let tr = m.trace();
        if tr.abs() > 1e-12 * m.matrix().norm().max(1.0) {
            return Err(FlowError::OutOfRange(format!(
                "deviation density must be traceless, trace = {tr}"
            )));
        }
        Ok(Self(m))
    }

    /// `α Σ_j I_j^x`.
    pub fn transverse(cfg: &SpinSystemConfig) -> Result<Self> {
        cfg.validate()?;
        let m = total_spin(cfg.n_spins, Axis::X) * Complex64::new(cfg.alpha, 0.0);
        Ok(Self(DenseHermitian::from_matrix_unchecked(m)))
    }

    pub fn matrix(&self) -> &CMatrix {
        self.0.matrix()
    }

    pub fn hermitian(&self) -> &DenseHermitian {
        &self.0
    }

    pub fn trace(&self) -> f64 {
        self.0.trace()
    }

    /// `tr Δρ²`.
    pub fn purity(&self) -> f64 {
        self.0.trace_sq()
    }

    pub fn order_spectrum(&self) -> Result<PauliOrderSpectrum> {
        pauli_order_spectrum(self.matrix())
    }

    /// `(X_j, Y_j)` in `Δρ = Σ_j (X_j I_j^x + Y_j I_j^y) + …`.
    pub fn transverse_components(&self, site: usize) -> Result<(f64, f64)> {
        let n = crate::pauli::qubit_count(self.0.dim())?;
        if site >= n {
            return Err(FlowError::OutOfRange(format!("site {site} on {n} spins")));
        }
        // tr(I^a I^a) = 2ⁿ/4
        let norm = 4.0 / self.0.dim() as f64;
        let proj = |a| (self.matrix() * spin_operator(n, site, a)).trace().re * norm;
        Ok((proj(Axis::X), proj(Axis::Y)))
    }
}

fn check_dims(a: &CMatrix, h: &DenseHermitian) -> Result<()> {
    if a.nrows() != h.dim() || a.ncols() != h.dim() {
        return Err(FlowError::DimensionMismatch {
            expected: h.dim(),
            found: a.nrows(),
        });
    }
    Ok(())
}

/// `dΔρ/dt = [−iH, Δρ]`.
pub fn liouville_rhs(rho: &DeviationDensity, h: &DenseHermitian) -> Result<CMatrix> {
    check_dims(rho.matrix(), h)?;
    let hr = h.matrix() * rho.matrix();
    Ok((&hr - hr.adjoint()) * Complex64::new(0.0, -1.0))
}

/// `dA/dt = [iH, A]`.
pub fn heisenberg_rhs(a: &CMatrix, h: &DenseHermitian) -> Result<CMatrix> {
    check_dims(a, h)?;
    Ok((h.matrix() * a - a * h.matrix()) * Complex64::new(0.0, 1.0))
}

/// `e^{−iHt} Δρ e^{iHt}`.
pub fn exact_propagate(rho0: &DeviationDensity, h: &DenseHermitian, t: f64) -> Result<DeviationDensity> {
    check_dims(rho0.matrix(), h)?;
    if !t.is_finite() {
        return Err(FlowError::OutOfRange(format!("t = {t}")));
    }
    let u = matrix_exponential(&(h.matrix() * Complex64::new(0.0, -t)))?;
    let m = &u * rho0.matrix() * u.adjoint();
    Ok(DeviationDensity(DenseHermitian::from_matrix_unchecked(m)))
}

/// Larmor precession of the transverse components: `(α cos ω₀t, α sin ω₀t)`.
pub fn zeeman_closed_form(alpha: f64, omega0: f64, t: f64) -> (f64, f64) {
    let (s, c) = (omega0 * t).sin_cos();
    (alpha * c, alpha * s)
}

/// One sampled point of a propagated spin system.
#[derive(Debug, Clone, Serialize)]
pub struct SpinSample {
    pub t: f64,
    pub spectrum: PauliOrderSpectrum,
    /// `tr Δρ(t)`; zero under unitary evolution.
    pub trace_check: f64,
    /// `tr Δρ(t)² − tr Δρ(0)²`.
    pub purity_check: f64,
}

#[derive(Debug, Clone)]
pub struct SpinEvolution {
    pub flow: FlowResult,
    pub samples: Vec<SpinSample>,
    pub final_density: DeviationDensity,
}

pub fn default_config() -> IntegratorConfig {
    IntegratorConfig::adaptive(1e-12, 1e-14, 1.0)
}

/// Integrates `dΔρ/dt = [−iH, Δρ]` from `α Σ I^x` up to `t_end` with the flow
/// engine, recording the Pauli-order spectrum at each sample.
pub fn propagate_flow(cfg: &SpinSystemConfig, t_end: f64, config: &IntegratorConfig) -> Result<SpinEvolution> {
    let h = build_spin_hamiltonian(cfg)?;
    let rho0 = DeviationDensity::transverse(cfg)?;
    let dim = cfg.dim();
    if !(t_end >= 0.0 && t_end.is_finite()) {
        return Err(FlowError::OutOfRange(format!("t_end must be >= 0, got {t_end}")));
    }

    let hm = h.matrix().clone();
    let rhs = move |_t: f64, x: &[f64], dx: &mut [f64]| {
        let mut rho = CMatrix::zeros(dim, dim);
        unpack_hermitian(x, &mut rho);
        let hr = &hm * &rho;
        let d = (&hr - hr.adjoint()) * Complex64::new(0.0, -1.0);
        pack_hermitian(&d, dx);
    };
    let problem = FlowProblem::new(dim * dim, rhs)
        .with_monitor("trace", move |x| x[..dim].iter().sum())
        .with_monitor("purity", move |x| {
            let d: f64 = x[..dim].iter().map(|v| v * v).sum();
            let o: f64 = x[dim..].iter().map(|v| v * v).sum();
            d + 2.0 * o
        });
    let mut initial = vec![0.0; dim * dim];
    rho0.hermitian().pack(&mut initial);

    let flow = if t_end == 0.0 {
        // A zero-length run: stop on the first check, at l = 0.
        let idle = problem.with_convergence("idle", |_| 0.0);
        integrate_flow(&idle, config, &initial)?
    } else {
        let cfg = IntegratorConfig {
            l_max: t_end,
            convergence_threshold: 0.0,
            ..config.clone()
        };
        integrate_flow(&problem, &cfg, &initial)?
    };
    if flow.termination == Termination::NumericalFailure {
        return Err(FlowError::NumericalFailure(flow.failure.clone().unwrap_or_default()));
    }
    finish(flow, dim, rho0.purity())
}

fn finish(flow: FlowResult, dim: usize, purity0: f64) -> Result<SpinEvolution> {
    let mut samples = Vec::with_capacity(flow.trajectory.len());
    for s in &flow.trajectory {
        let rho = DeviationDensity(DenseHermitian::unpack(dim, &s.state));
        samples.push(SpinSample {
            t: s.l,
            spectrum: rho.order_spectrum()?,
            trace_check: rho.trace(),
            purity_check: rho.purity() - purity0,
        });
    }
    let final_density = DeviationDensity(DenseHermitian::unpack(dim, &flow.final_state));
    Ok(SpinEvolution {
        flow,
        samples,
        final_density,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_2;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn single(omega0: f64, alpha: f64) -> (DenseHermitian, DeviationDensity) {
        let cfg = SpinSystemConfig::uncoupled(1, omega0, alpha);
        (
            build_spin_hamiltonian(&cfg).unwrap(),
            DeviationDensity::transverse(&cfg).unwrap(),
        )
    }

    #[test]
    fn spin_algebra() {
        let (x, y, z) = (
            spin_operator(1, 0, Axis::X),
            spin_operator(1, 0, Axis::Y),
            spin_operator(1, 0, Axis::Z),
        );
        // [I^x, I^y] = i I^z
        assert!((&x * &y - &y * &x - &z * c(0.0, 1.0)).norm() < 1e-15);
        assert!((&y * &z - &z * &y - &x * c(0.0, 1.0)).norm() < 1e-15);
    }

    #[test]
    fn hamiltonian_examples() {
        let h = build_spin_hamiltonian(&SpinSystemConfig::uncoupled(1, 1.0, 0.1)).unwrap();
        assert_eq!(h.diagonal_values(), vec![0.5, -0.5]);
        assert_eq!(h.off_diagonal_norm(), 0.0);

        let h = build_spin_hamiltonian(&SpinSystemConfig::chain(2, 0.0, 1.0, 0.1)).unwrap();
        assert_eq!(h.diagonal_values(), vec![0.5, -0.5, -0.5, 0.5]);
        let m = h.matrix();
        assert!((m[(1, 2)] - c(-0.5, 0.0)).norm() < 1e-15);
        assert!((m[(2, 1)] - c(-0.5, 0.0)).norm() < 1e-15);
        assert!((h.off_diagonal_norm() - (0.5f64).sqrt()).abs() < 1e-15);

        let h = build_spin_hamiltonian(&SpinSystemConfig::uncoupled(3, 0.0, 0.1)).unwrap();
        assert_eq!(h.matrix().norm(), 0.0);
    }

    #[test]
    fn invalid_configs() {
        assert!(build_spin_hamiltonian(&SpinSystemConfig::uncoupled(0, 1.0, 0.1)).is_err());
        assert!(build_spin_hamiltonian(&SpinSystemConfig::uncoupled(9, 1.0, 0.1)).is_err());
        let mut cfg = SpinSystemConfig::chain(3, 1.0, 1.0, 0.1);
        cfg.couplings[0][1] = 2.0;
        assert!(matches!(
            build_spin_hamiltonian(&cfg),
            Err(FlowError::InvalidSpinSystem(_))
        ));
        let mut cfg = SpinSystemConfig::uncoupled(2, 1.0, 0.1);
        cfg.couplings[1][1] = 1.0;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn liouville_examples() {
        let (_, rho) = single(1.0, 0.1);
        let zero = DenseHermitian::zeros(2);
        assert_eq!(liouville_rhs(&rho, &zero).unwrap().norm(), 0.0);

        let diag = DeviationDensity::new(DenseHermitian::diagonal(&[0.2, -0.2])).unwrap();
        assert_eq!(
            liouville_rhs(&diag, &DenseHermitian::diagonal(&[1.0, 3.0]))
                .unwrap()
                .norm(),
            0.0
        );

        let (omega0, alpha) = (1.3, 0.1);
        let (h, rho) = single(omega0, alpha);
        let d = liouville_rhs(&rho, &h).unwrap();
        let want = spin_operator(1, 0, Axis::Y) * c(alpha * omega0, 0.0);
        assert!((d - want).norm() < 1e-15);

        assert!(liouville_rhs(&rho, &DenseHermitian::zeros(4)).is_err());
    }

    #[test]
    fn heisenberg_examples() {
        let (h, _) = single(0.7, 0.1);
        assert!(heisenberg_rhs(h.matrix(), &h).unwrap().norm() < 1e-15);
        assert_eq!(heisenberg_rhs(&CMatrix::identity(2, 2), &h).unwrap().norm(), 0.0);

        // dI^x/dt = −ω₀ I^y, opposite in sign to the density-matrix flow.
        let x = spin_operator(1, 0, Axis::X);
        let d = heisenberg_rhs(&x, &h).unwrap();
        assert!((&d + spin_operator(1, 0, Axis::Y) * c(0.7, 0.0)).norm() < 1e-15);
        // Cross-check against a short exact Heisenberg propagation e^{iHt} A e^{−iHt}.
        let t = 1e-6;
        let u = matrix_exponential(&(h.matrix() * c(0.0, t))).unwrap();
        let moved = &u * &x * u.adjoint();
        assert!(((moved - &x) * c(1.0 / t, 0.0) - d).norm() < 1e-6);
    }

    #[test]
    fn exact_propagation_examples() {
        let (h, rho) = single(1.0, 0.1);
        assert_eq!(exact_propagate(&rho, &h, 0.0).unwrap().matrix(), rho.matrix());
        assert_eq!(
            exact_propagate(&rho, &DenseHermitian::zeros(2), 3.0).unwrap().matrix(),
            rho.matrix()
        );

        let out = exact_propagate(&rho, &h, FRAC_PI_2).unwrap();
        let want = spin_operator(1, 0, Axis::Y) * c(0.1, 0.0);
        assert!((out.matrix() - want).norm() < 1e-10);
        assert!((out.purity() - rho.purity()).abs() < 1e-10);
    }

    #[test]
    fn zeeman_closed_form_values() {
        assert_eq!(zeeman_closed_form(0.3, 2.0, 0.0), (0.3, 0.0));
        let (x, y) = zeeman_closed_form(0.1, 1.0, FRAC_PI_2);
        assert!(x.abs() < 1e-12 && (y - 0.1).abs() < 1e-12);
        for t in [0.1, 1.7, 40.0] {
            let (x, y) = zeeman_closed_form(0.25, 1.3, t);
            assert!((x * x + y * y - 0.0625).abs() < 1e-15);
        }
    }

    #[test]
    fn transverse_spectrum() {
        for n in 1..=4 {
            let cfg = SpinSystemConfig::uncoupled(n, 1.0, 0.2);
            let s = DeviationDensity::transverse(&cfg).unwrap().order_spectrum().unwrap();
            assert!((s.weight(1) - n as f64 * 0.04 / 4.0).abs() < 1e-15);
            assert!(s.weights[1..].iter().all(|&w| w < 1e-30));
        }
    }

    #[test]
    fn deviation_must_be_traceless() {
        assert!(DeviationDensity::new(DenseHermitian::diagonal(&[1.0, 0.0])).is_err());
    }

    #[test]
    fn single_spin_flow_precesses() {
        let cfg = SpinSystemConfig::uncoupled(1, 1.0, 0.1);
        let ev = propagate_flow(&cfg, 2.0, &default_config()).unwrap();
        for s in &ev.flow.trajectory {
            let rho = DeviationDensity(DenseHermitian::unpack(2, &s.state));
            let (x, y) = rho.transverse_components(0).unwrap();
            let (xe, ye) = zeeman_closed_form(0.1, 1.0, s.l);
            assert!((x - xe).abs() < 1e-8 && (y - ye).abs() < 1e-8);
        }
    }

    #[test]
    fn zero_time_returns_initial_spectrum() {
        let cfg = SpinSystemConfig::chain(3, 1.0, 1.0, 0.1);
        let ev = propagate_flow(&cfg, 0.0, &default_config()).unwrap();
        assert_eq!(ev.samples.len(), 1);
        assert!((ev.samples[0].spectrum.weight(1) - 3.0 * 0.01 / 4.0).abs() < 1e-15);
        assert_eq!(ev.final_density, DeviationDensity::transverse(&cfg).unwrap());
    }

    #[test]
    fn two_spin_flow_matches_exact() {
        let cfg = SpinSystemConfig::chain(2, 1.0, 1.0, 0.1);
        let ev = propagate_flow(&cfg, 1.0, &default_config()).unwrap();
        let h = build_spin_hamiltonian(&cfg).unwrap();
        let exact = exact_propagate(&DeviationDensity::transverse(&cfg).unwrap(), &h, 1.0).unwrap();
        assert!((ev.final_density.matrix() - exact.matrix()).norm() < 1e-7);
    }
}
