// SPDX-License-Identifier: Apache-2.0

use num_complex::Complex64;

use super::{
    matrix_exponential, pack_complex, pack_hermitian, unpack_complex, unpack_hermitian, AntiHermitianGenerator,
    CMatrix, DenseHermitian,
};
use crate::error::{FlowError, Result};
use crate::flow::{integrate_flow, FlowProblem, FlowResult, IntegratorConfig, Termination};

/// Entry (i, j) of `[H_d, H]` is `(h_ii − h_jj)·h_ij`.
fn wegner_matrix(h: &CMatrix) -> CMatrix {
    let n = h.nrows();
    CMatrix::from_fn(n, n, |i, j| h[(i, j)] * (h[(i, i)].re - h[(j, j)].re))
}

/// Decayed off-diagonal entries would otherwise drift into subnormal range,
/// where arithmetic is orders of magnitude slower.
fn flush_tiny(m: &mut CMatrix) {
    for z in m.iter_mut() {
        if z.re.abs() < 1e-150 {
            z.re = 0.0;
        }
        if z.im.abs() < 1e-150 {
            z.im = 0.0;
        }
    }
}

/// Wegner's generator `η = [H_d, H]`.
pub fn wegner_generator(h: &DenseHermitian) -> AntiHermitianGenerator {
    AntiHermitianGenerator::from_matrix_unchecked(wegner_matrix(h.matrix()))
}

/// Outcome of a matrix flow.
#[derive(Debug, Clone)]
pub struct MatrixFlow {
    pub flow: FlowResult,
    pub matrix: DenseHermitian,
    /// Accumulated transformation `U(l)` with `H(l) = U H(0) U†`, when requested.
    pub unitary: Option<CMatrix>,
}

impl MatrixFlow {
    pub fn termination(&self) -> Termination {
        self.flow.termination
    }

    pub fn residual_off_diagonal(&self) -> f64 {
        self.matrix.off_diagonal_norm()
    }

    /// Diagonal of the final matrix, sorted ascending.
    pub fn sorted_diagonal(&self) -> Vec<f64> {
        let mut d = self.matrix.diagonal_values();
        d.sort_by(f64::total_cmp);
        d
    }

    /// `H(l)` at every stored sample.
    pub fn matrices(&self) -> Vec<(f64, DenseHermitian)> {
        let n = self.matrix.dim();
        self.flow
            .trajectory
            .iter()
            .map(|s| (s.l, DenseHermitian::unpack(n, &s.state[..n * n])))
            .collect()
    }
}

fn hermitian_monitors<'a>(p: FlowProblem<'a>, n: usize) -> FlowProblem<'a> {
    p.with_monitor("trace", move |x| x[..n].iter().sum())
        .with_monitor("trace_sq", move |x| {
            let diag: f64 = x[..n].iter().map(|v| v * v).sum();
            let off: f64 = x[n..n * n].iter().map(|v| v * v).sum();
            diag + 2.0 * off
        })
        .with_monitor("off_diagonal_sq", move |x| {
            2.0 * x[n..n * n].iter().map(|v| v * v).sum::<f64>()
        })
}

fn off_diag_from_packed(x: &[f64], n: usize) -> f64 {
    (2.0 * x[n..n * n].iter().map(|v| v * v).sum::<f64>()).sqrt()
}

/// Integrates `dH/dl = [[H_d, H], H]` until the off-diagonal Frobenius norm
/// drops to `config.convergence_threshold`.
///
/// Diagonal entries that are (nearly) degenerate switch the generator off on
/// the corresponding block, so such flows end with `ReachedLMax` and a
/// nonzero residual instead of converging.
pub fn flow_diagonalize(h: &DenseHermitian, config: &IntegratorConfig) -> Result<MatrixFlow> {
    run_wegner(h, config, false)
}

/// As [`flow_diagonalize`], additionally integrating `dU/dl = η(l) U` from `U(0) = I`.
pub fn flow_diagonalize_with_unitary(h: &DenseHermitian, config: &IntegratorConfig) -> Result<MatrixFlow> {
    run_wegner(h, config, true)
}

fn run_wegner(h: &DenseHermitian, config: &IntegratorConfig, with_unitary: bool) -> Result<MatrixFlow> {
    let n = h.dim();
    let hn = n * n;
    let dim = if with_unitary { 3 * hn } else { hn };

    let rhs = move |_l: f64, x: &[f64], dx: &mut [f64]| {
        let mut hm = CMatrix::zeros(n, n);
        unpack_hermitian(&x[..hn], &mut hm);
        flush_tiny(&mut hm);
        let eta = wegner_matrix(&hm);
        // [η, H] = ηH + (ηH)† for anti-Hermitian η and Hermitian H.
        let eta_h = &eta * &hm;
        let dh = &eta_h + eta_h.adjoint();
        pack_hermitian(&dh, &mut dx[..hn]);
        if with_unitary {
            let mut u = CMatrix::zeros(n, n);
            unpack_complex(&x[hn..], &mut u);
            pack_complex(&(&eta * u), &mut dx[hn..]);
        }
    };
    let problem = hermitian_monitors(FlowProblem::new(dim, rhs), n)
        .with_convergence("off_diagonal_norm", move |x| off_diag_from_packed(x, n));

    let mut initial = vec![0.0; dim];
    h.pack(&mut initial[..hn]);
    if with_unitary {
        pack_complex(&CMatrix::identity(n, n), &mut initial[hn..]);
    }
    let flow = integrate_flow(&problem, config, &initial)?;
    if flow.termination == Termination::NumericalFailure {
        return Err(FlowError::NumericalFailure(
            flow.failure.clone().unwrap_or_else(|| "Wegner flow failed".into()),
        ));
    }
    let matrix = DenseHermitian::unpack(n, &flow.final_state[..hn]);
    let unitary = with_unitary.then(|| {
        let mut u = CMatrix::zeros(n, n);
        unpack_complex(&flow.final_state[hn..], &mut u);
        u
    });
    Ok(MatrixFlow { flow, matrix, unitary })
}

/// Integrates `dH/dl = c(l)·[R, H]` on `[0, l_end]`.
///
/// Rescaling the flow parameter turns this into the constant-generator flow
/// with `θ = ∫ c dl`, which [`one_step_cut`] evaluates in closed form.
pub fn fixed_generator_flow(
    h: &DenseHermitian,
    generator: &AntiHermitianGenerator,
    rate: impl Fn(f64) -> f64 + Send + Sync,
    l_end: f64,
    config: &IntegratorConfig,
) -> Result<MatrixFlow> {
    let n = h.dim();
    if generator.dim() != n {
        return Err(FlowError::DimensionMismatch {
            expected: n,
            found: generator.dim(),
        });
    }
    let r = generator.matrix().clone();
    let rhs = move |l: f64, x: &[f64], dx: &mut [f64]| {
        let mut hm = CMatrix::zeros(n, n);
        unpack_hermitian(x, &mut hm);
        let dh = (&r * &hm - &hm * &r) * Complex64::new(rate(l), 0.0);
        pack_hermitian(&dh, dx);
    };
    let problem = hermitian_monitors(FlowProblem::new(n * n, rhs), n);
    let mut initial = vec![0.0; n * n];
    h.pack(&mut initial);
    let cfg = IntegratorConfig {
        l_max: l_end,
        convergence_threshold: 0.0,
        ..config.clone()
    };
    let flow = integrate_flow(&problem, &cfg, &initial)?;
    if flow.termination != Termination::ReachedLMax {
        return Err(FlowError::NumericalFailure(format!(
            "fixed-generator flow ended with {:?}",
            flow.termination
        )));
    }
    let matrix = DenseHermitian::unpack(n, &flow.final_state);
    Ok(MatrixFlow {
        flow,
        matrix,
        unitary: None,
    })
}

/// Integrates `dU/dl = η(l) U` from `U(0) = I` to `l_end` for a prescribed
/// generator path. Monitors `unitarity_defect = ‖U†U − I‖_F`.
pub fn accumulate_unitary(
    generator: impl Fn(f64) -> CMatrix + Send + Sync,
    n: usize,
    l_end: f64,
    config: &IntegratorConfig,
) -> Result<(CMatrix, FlowResult)> {
    let rhs = move |l: f64, x: &[f64], dx: &mut [f64]| {
        let mut u = CMatrix::zeros(n, n);
        unpack_complex(x, &mut u);
        pack_complex(&(generator(l) * u), dx);
    };
    let problem = FlowProblem::new(2 * n * n, rhs).with_monitor("unitarity_defect", move |x| {
        let mut u = CMatrix::zeros(n, n);
        unpack_complex(x, &mut u);
        (u.adjoint() * &u - CMatrix::identity(n, n)).norm()
    });
    let mut initial = vec![0.0; 2 * n * n];
    pack_complex(&CMatrix::identity(n, n), &mut initial);
    if l_end == 0.0 {
        let flow = integrate_flow(
            &problem,
            &IntegratorConfig {
                max_steps: 1,
                ..config.clone()
            },
            &initial,
        )?;
        return Ok((CMatrix::identity(n, n), flow));
    }
    let cfg = IntegratorConfig {
        l_max: l_end,
        convergence_threshold: 0.0,
        ..config.clone()
    };
    let flow = integrate_flow(&problem, &cfg, &initial)?;
    if flow.termination != Termination::ReachedLMax {
        return Err(FlowError::NumericalFailure(format!(
            "unitary accumulation ended with {:?}",
            flow.termination
        )));
    }
    let mut u = CMatrix::zeros(n, n);
    unpack_complex(&flow.final_state, &mut u);
    Ok((u, flow))
}

/// One-step transformation with a fixed generator, evaluated both ways.
#[derive(Debug, Clone)]
pub struct OneStepCut {
    /// `e^{θR} H e^{−θR}`.
    pub matrix: DenseHermitian,
    /// Endpoint of the integrated flow `dH/dθ = [R, H]`.
    pub ode_matrix: DenseHermitian,
    /// Frobenius norm of the difference between the two routes.
    pub discrepancy: f64,
}

fn cut_ode_config() -> IntegratorConfig {
    IntegratorConfig::adaptive(1e-12, 1e-14, 1.0)
}

/// Transforms `H` by the fixed generator `R` up to `theta_end`, using a tight
/// default integrator for the ODE route.
pub fn one_step_cut(h: &DenseHermitian, generator: &AntiHermitianGenerator, theta_end: f64) -> Result<OneStepCut> {
    one_step_cut_with(h, generator, theta_end, &cut_ode_config())
}

pub fn one_step_cut_with(
    h: &DenseHermitian,
    generator: &AntiHermitianGenerator,
    theta_end: f64,
    config: &IntegratorConfig,
) -> Result<OneStepCut> {
    let n = h.dim();
    if generator.dim() != n {
        return Err(FlowError::DimensionMismatch {
            expected: n,
            found: generator.dim(),
        });
    }
    if !theta_end.is_finite() {
        return Err(FlowError::OutOfRange(format!("theta_end = {theta_end}")));
    }
    if theta_end == 0.0 || generator.is_zero() {
        return Ok(OneStepCut {
            matrix: h.clone(),
            ode_matrix: h.clone(),
            discrepancy: 0.0,
        });
    }

    let theta_r = generator.matrix() * Complex64::new(theta_end, 0.0);
    let u = matrix_exponential(&theta_r)?;
    let exact = DenseHermitian::from_matrix_unchecked(&u * h.matrix() * u.adjoint());

    // Negative θ runs the flow forward with −R.
    let (gen, span) = if theta_end > 0.0 {
        (generator.clone(), theta_end)
    } else {
        (generator.scaled(-1.0), -theta_end)
    };
    let ode = fixed_generator_flow(h, &gen, |_| 1.0, span, config)?;
    let discrepancy = (ode.matrix.matrix() - exact.matrix()).norm();
    Ok(OneStepCut {
        matrix: exact,
        ode_matrix: ode.matrix,
        discrepancy,
    })
}
