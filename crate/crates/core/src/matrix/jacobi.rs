// SPDX-License-Identifier: Apache-2.0

//! Cyclic complex Jacobi eigenvalue solver. It shares no code with the flow
//! routines and serves as their oracle.

use num_complex::Complex64;

use super::{CMatrix, DenseHermitian};
use crate::error::{FlowError, Result};

const MAX_SWEEPS: usize = 100;
const OFF_TOL: f64 = 1e-13;

/// Ascending eigenvalues of `h`.
pub fn reference_eigenvalues(h: &DenseHermitian) -> Result<Vec<f64>> {
    let mut a: CMatrix = h.matrix().clone();
    let n = a.nrows();
    let scale = a.norm().max(1.0);

    for _ in 0..MAX_SWEEPS {
        if off_norm(&a) < OFF_TOL * scale {
            let mut ev: Vec<f64> = (0..n).map(|i| a[(i, i)].re).collect();
            ev.sort_by(f64::total_cmp);
            return Ok(ev);
        }
        for p in 0..n {
            for q in p + 1..n {
                rotate(&mut a, p, q);
            }
        }
    }
    Err(FlowError::NumericalFailure(format!(
        "Jacobi iteration did not converge in {MAX_SWEEPS} sweeps"
    )))
}

fn off_norm(a: &CMatrix) -> f64 {
    let n = a.nrows();
    let mut s = 0.0;
    for i in 0..n {
        for j in i + 1..n {
            s += 2.0 * a[(i, j)].norm_sqr();
        }
    }
    s.sqrt()
}

/// Applies `A <- J† A J` with the unitary plane rotation that zeroes `a[p][q]`.
fn rotate(a: &mut CMatrix, p: usize, q: usize) {
    let apq = a[(p, q)];
    let r = apq.norm();
    if r == 0.0 {
        return;
    }
    let phase = apq / r;
    let app = a[(p, p)].re;
    let aqq = a[(q, q)].re;
    let tau = (aqq - app) / (2.0 * r);
    let t = if tau >= 0.0 {
        1.0 / (tau + (1.0 + tau * tau).sqrt())
    } else {
        -1.0 / (-tau + (1.0 + tau * tau).sqrt())
    };
    let c = 1.0 / (1.0 + t * t).sqrt();
    let s = t * c;
    let cc = Complex64::new(c, 0.0);
    let se = phase * s;
    let se_conj = se.conj();
    let n = a.nrows();

    // Columns: A J.
    for k in 0..n {
        let akp = a[(k, p)];
        let akq = a[(k, q)];
        a[(k, p)] = cc * akp - se_conj * akq;
        a[(k, q)] = se * akp + cc * akq;
    }
    // Rows: J† (A J).
    for k in 0..n {
        let apk = a[(p, k)];
        let aqk = a[(q, k)];
        a[(p, k)] = cc * apk - se * aqk;
        a[(q, k)] = se_conj * apk + cc * aqk;
    }
    a[(p, q)] = Complex64::new(0.0, 0.0);
    a[(q, p)] = Complex64::new(0.0, 0.0);
    a[(p, p)].im = 0.0;
    a[(q, q)].im = 0.0;
}
