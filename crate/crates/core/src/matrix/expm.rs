// SPDX-License-Identifier: Apache-2.0

//! Matrix exponential by scaling and squaring with a [13/13] Padé approximant
//! (Higham 2005).

use num_complex::Complex64;

use super::CMatrix;
use crate::error::{FlowError, Result};

const PADE13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];

const THETA13: f64 = 5.371920351148152;

fn one_norm(a: &CMatrix) -> f64 {
    a.column_iter()
        .map(|c| c.iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

fn scaled(a: &CMatrix, s: f64) -> CMatrix {
    a * Complex64::new(s, 0.0)
}

pub fn matrix_exponential(a: &CMatrix) -> Result<CMatrix> {
    let n = a.nrows();
    if a.ncols() != n {
        return Err(FlowError::DimensionMismatch {
            expected: n,
            found: a.ncols(),
        });
    }
    if a.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(FlowError::NumericalFailure(
            "matrix exponential of non-finite input".into(),
        ));
    }
    if n == 0 {
        return Ok(CMatrix::zeros(0, 0));
    }

    let norm = one_norm(a);
    let squarings = if norm > THETA13 {
        (norm / THETA13).log2().ceil() as i32
    } else {
        0
    };
    let a = scaled(a, 0.5f64.powi(squarings));

    let id = CMatrix::identity(n, n);
    let a2 = &a * &a;
    let a4 = &a2 * &a2;
    let a6 = &a4 * &a2;
    let b = |k: usize| Complex64::new(PADE13[k], 0.0);

    let inner_u = &a6 * (&a6 * b(13) + &a4 * b(11) + &a2 * b(9));
    let u = &a * (inner_u + &a6 * b(7) + &a4 * b(5) + &a2 * b(3) + &id * b(1));
    let inner_v = &a6 * (&a6 * b(12) + &a4 * b(10) + &a2 * b(8));
    let v = inner_v + &a6 * b(6) + &a4 * b(4) + &a2 * b(2) + &id * b(0);

    let p = &v + &u;
    let q = &v - &u;
    let mut r = q
        .lu()
        .solve(&p)
        .ok_or_else(|| FlowError::NumericalFailure("singular Padé denominator".into()))?;
    for _ in 0..squarings {
        r = &r * &r;
    }
    if r.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(FlowError::NumericalFailure("matrix exponential overflowed".into()));
    }
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::{AntiHermitianGenerator, DenseHermitian};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::FRAC_PI_2;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    /// Truncated Taylor series, summed until terms vanish. Test oracle only.
    fn taylor(a: &CMatrix) -> CMatrix {
        let n = a.nrows();
        let mut sum = CMatrix::identity(n, n);
        let mut term = CMatrix::identity(n, n);
        for k in 1..200 {
            term = &term * a * c(1.0 / k as f64);
            sum += &term;
            if term.norm() < 1e-20 {
                break;
            }
        }
        sum
    }

    #[test]
    fn zero_gives_identity() {
        let e = matrix_exponential(&CMatrix::zeros(3, 3)).unwrap();
        assert_eq!(e, CMatrix::identity(3, 3));
    }

    #[test]
    fn diagonal_input() {
        let a = CMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![c(0.3), c(-2.0)]));
        let e = matrix_exponential(&a).unwrap();
        assert!((e[(0, 0)].re - 0.3f64.exp()).abs() < 1e-14);
        assert!((e[(1, 1)].re - (-2.0f64).exp()).abs() < 1e-15);
        assert_eq!(e[(0, 1)], c(0.0));
    }

    #[test]
    fn quarter_rotation() {
        let t = FRAC_PI_2;
        let a = CMatrix::from_row_slice(2, 2, &[c(0.0), c(t), c(-t), c(0.0)]);
        let e = matrix_exponential(&a).unwrap();
        let want = CMatrix::from_row_slice(2, 2, &[c(0.0), c(1.0), c(-1.0), c(0.0)]);
        assert!((e - want).norm() < 1e-10);
    }

    #[test]
    fn matches_taylor_series_on_random_matrices() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for scale in [0.1, 1.0, 3.0] {
            let h = DenseHermitian::random(5, &mut rng);
            let r = AntiHermitianGenerator::random(5, &mut rng);
            let a = (h.matrix() + r.matrix()) * c(scale);
            let want = taylor(&a);
            let got = matrix_exponential(&a).unwrap();
            assert!((&got - &want).norm() / want.norm() < 1e-12, "scale {scale}");
        }
    }

    #[test]
    fn anti_hermitian_exponential_is_unitary() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for n in [2, 4, 8] {
            let r = AntiHermitianGenerator::random(n, &mut rng).scaled(4.0);
            let u = matrix_exponential(r.matrix()).unwrap();
            let defect = (u.adjoint() * &u - CMatrix::identity(n, n)).norm();
            assert!(defect < 1e-10, "n = {n}: {defect}");
        }
    }

    #[test]
    fn overflow_is_numerical_failure() {
        let a = CMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![c(1000.0), c(0.0)]));
        assert!(matches!(matrix_exponential(&a), Err(FlowError::NumericalFailure(_))));
    }
}
