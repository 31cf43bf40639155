// SPDX-License-Identifier: Apache-2.0

//! Dense Hermitian matrices and the two continuous-transformation schemes
//! acting on them: the Wegner double-bracket flow and the fixed-generator
//! one-step transformation.

mod expm;
mod jacobi;
mod wegner;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{FlowError, Result};

pub use expm::matrix_exponential;
pub use jacobi::reference_eigenvalues;
pub use wegner::{
    accumulate_unitary, fixed_generator_flow, flow_diagonalize, flow_diagonalize_with_unitary, one_step_cut,
    one_step_cut_with, wegner_generator, MatrixFlow, OneStepCut,
};

pub type CMatrix = DMatrix<Complex64>;

const HERMITIAN_TOL: f64 = 1e-12;

/// n×n complex Hermitian matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseHermitian(CMatrix);

/// n×n complex anti-Hermitian matrix, the generator of a unitary flow.
#[derive(Debug, Clone, PartialEq)]
pub struct AntiHermitianGenerator(CMatrix);

fn hermiticity_defect(m: &CMatrix, sign: f64) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in i..n {
            let d = m[(i, j)] - m[(j, i)].conj() * sign;
            worst = worst.max(d.norm());
        }
    }
    worst
}

fn check_square_finite(m: &CMatrix) -> Result<()> {
    if m.nrows() != m.ncols() {
        return Err(FlowError::DimensionMismatch {
            expected: m.nrows(),
            found: m.ncols(),
        });
    }
    if m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(FlowError::NumericalFailure("matrix has non-finite entries".into()));
    }
    Ok(())
}

impl DenseHermitian {
    pub fn new(m: CMatrix) -> Result<Self> {
        check_square_finite(&m)?;
        let deviation = hermiticity_defect(&m, 1.0);
        if deviation > HERMITIAN_TOL {
            return Err(FlowError::NotHermitian {
                kind: "Hermitian",
                deviation,
            });
        }
        Ok(Self(m))
    }

    /// Symmetrizes `(m + m†)/2` without checking.
    pub(crate) fn from_matrix_unchecked(m: CMatrix) -> Self {
        let h = (&m + m.adjoint()) * Complex64::new(0.5, 0.0);
        Self(h)
    }

    pub fn from_real(n: usize, rows: &[f64]) -> Result<Self> {
        if rows.len() != n * n {
            return Err(FlowError::DimensionMismatch {
                expected: n * n,
                found: rows.len(),
            });
        }
        Self::new(CMatrix::from_fn(n, n, |i, j| Complex64::new(rows[i * n + j], 0.0)))
    }

    pub fn diagonal(values: &[f64]) -> Self {
        let n = values.len();
        Self(CMatrix::from_fn(n, n, |i, j| {
            if i == j {
                Complex64::new(values[i], 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            }
        }))
    }

    pub fn zeros(n: usize) -> Self {
        Self(CMatrix::zeros(n, n))
    }

    /// Entries with real and imaginary parts uniform in [-1, 1] (diagonal real).
    pub fn random<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Self {
        let mut m = CMatrix::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = Complex64::new(rng.gen_range(-1.0..=1.0), 0.0);
            for j in i + 1..n {
                let z = Complex64::new(rng.gen_range(-1.0..=1.0), rng.gen_range(-1.0..=1.0));
                m[(i, j)] = z;
                m[(j, i)] = z.conj();
            }
        }
        Self(m)
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.0
    }

    pub fn into_matrix(self) -> CMatrix {
        self.0
    }

    pub fn diagonal_values(&self) -> Vec<f64> {
        (0..self.dim()).map(|i| self.0[(i, i)].re).collect()
    }

    /// Diagonal part `H_d`.
    pub fn diagonal_part(&self) -> DenseHermitian {
        DenseHermitian::diagonal(&self.diagonal_values())
    }

    pub fn off_diagonal_norm(&self) -> f64 {
        off_diagonal_norm(&self.0)
    }

    pub fn trace(&self) -> f64 {
        self.0.trace().re
    }

    /// tr H² = ‖H‖_F² for Hermitian H.
    pub fn trace_sq(&self) -> f64 {
        self.0.iter().map(|z| z.norm_sqr()).sum()
    }

    /// Number of reals in the packed representation (`n²`).
    pub fn packed_len(n: usize) -> usize {
        n * n
    }

    /// Diagonal reals followed by `(re, im)` of the strict upper triangle, row by row.
    pub fn pack(&self, out: &mut [f64]) {
        pack_hermitian(&self.0, out)
    }

    pub fn unpack(n: usize, data: &[f64]) -> Self {
        let mut m = CMatrix::zeros(n, n);
        unpack_hermitian(data, &mut m);
        Self(m)
    }

    pub fn to_json(&self) -> MatrixJson {
        MatrixJson::from_matrix(&self.0)
    }

    pub fn from_json(j: &MatrixJson) -> Result<Self> {
        Self::new(j.to_matrix()?)
    }
}

impl AntiHermitianGenerator {
    pub fn new(m: CMatrix) -> Result<Self> {
        check_square_finite(&m)?;
        let deviation = hermiticity_defect(&m, -1.0);
        if deviation > HERMITIAN_TOL {
            return Err(FlowError::NotHermitian {
                kind: "anti-Hermitian",
                deviation,
            });
        }
        Ok(Self(m))
    }

    pub(crate) fn from_matrix_unchecked(m: CMatrix) -> Self {
        let a = (&m - m.adjoint()) * Complex64::new(0.5, 0.0);
        Self(a)
    }

    pub fn zeros(n: usize) -> Self {
        Self(CMatrix::zeros(n, n))
    }

    /// `i·H` for Hermitian `H`.
    pub fn from_hermitian_times_i(h: &DenseHermitian) -> Self {
        Self(h.matrix() * Complex64::new(0.0, 1.0))
    }

    pub fn random<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Self {
        Self::from_hermitian_times_i(&DenseHermitian::random(n, rng))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.0
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self(&self.0 * Complex64::new(c, 0.0))
    }

    pub fn norm(&self) -> f64 {
        self.0.norm()
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|z| z.norm_sqr() == 0.0)
    }

    pub fn to_json(&self) -> MatrixJson {
        MatrixJson::from_matrix(&self.0)
    }

    pub fn from_json(j: &MatrixJson) -> Result<Self> {
        Self::new(j.to_matrix()?)
    }
}

/// `AB − BA`.
pub fn commutator(a: &CMatrix, b: &CMatrix) -> Result<CMatrix> {
    if a.nrows() != a.ncols() {
        return Err(FlowError::DimensionMismatch {
            expected: a.nrows(),
            found: a.ncols(),
        });
    }
    if b.shape() != a.shape() {
        return Err(FlowError::DimensionMismatch {
            expected: a.nrows(),
            found: b.nrows(),
        });
    }
    Ok(a * b - b * a)
}

pub fn off_diagonal_norm(m: &CMatrix) -> f64 {
    let n = m.nrows();
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                s += m[(i, j)].norm_sqr();
            }
        }
    }
    s.sqrt()
}

pub(crate) fn pack_hermitian(m: &CMatrix, out: &mut [f64]) {
    let n = m.nrows();
    for i in 0..n {
        out[i] = m[(i, i)].re;
    }
    let mut k = n;
    for i in 0..n {
        for j in i + 1..n {
            out[k] = m[(i, j)].re;
            out[k + 1] = m[(i, j)].im;
            k += 2;
        }
    }
}

pub(crate) fn unpack_hermitian(data: &[f64], m: &mut CMatrix) {
    let n = m.nrows();
    for i in 0..n {
        m[(i, i)] = Complex64::new(data[i], 0.0);
    }
    let mut k = n;
    for i in 0..n {
        for j in i + 1..n {
            let z = Complex64::new(data[k], data[k + 1]);
            m[(i, j)] = z;
            m[(j, i)] = z.conj();
            k += 2;
        }
    }
}

/// Row-major interleaved `(re, im)`, `2n²` reals.
pub(crate) fn pack_complex(m: &CMatrix, out: &mut [f64]) {
    let n = m.ncols();
    for i in 0..m.nrows() {
        for j in 0..n {
            let k = 2 * (i * n + j);
            out[k] = m[(i, j)].re;
            out[k + 1] = m[(i, j)].im;
        }
    }
}

pub(crate) fn unpack_complex(data: &[f64], m: &mut CMatrix) {
    let n = m.ncols();
    for i in 0..m.nrows() {
        for j in 0..n {
            let k = 2 * (i * n + j);
            m[(i, j)] = Complex64::new(data[k], data[k + 1]);
        }
    }
}

/// Wire format for matrices: `{"n": int, "re": [...], "im": [...]}`, row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatrixJson {
    pub n: usize,
    pub re: Vec<f64>,
    pub im: Vec<f64>,
}

impl MatrixJson {
    pub fn from_matrix(m: &CMatrix) -> Self {
        let n = m.nrows();
        let mut re = Vec::with_capacity(n * n);
        let mut im = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                re.push(m[(i, j)].re);
                im.push(m[(i, j)].im);
            }
        }
        Self { n, re, im }
    }

    pub fn to_matrix(&self) -> Result<CMatrix> {
        let nn = self.n * self.n;
        for len in [self.re.len(), self.im.len()] {
            if len != nn {
                return Err(FlowError::DimensionMismatch {
                    expected: nn,
                    found: len,
                });
            }
        }
        Ok(CMatrix::from_fn(self.n, self.n, |i, j| {
            Complex64::new(self.re[i * self.n + j], self.im[i * self.n + j])
        }))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn real(n: usize, rows: &[f64]) -> CMatrix {
        CMatrix::from_fn(n, n, |i, j| c(rows[i * n + j]))
    }

    #[test]
    fn commutator_with_identity_vanishes() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let b = DenseHermitian::random(4, &mut rng).into_matrix();
        let z = commutator(&CMatrix::identity(4, 4), &b).unwrap();
        assert!(z.norm() == 0.0);
        assert!(commutator(&b, &b).unwrap().norm() < 1e-15);
    }

    #[test]
    fn commutator_two_by_two() {
        let a = real(2, &[0.0, 1.0, -1.0, 0.0]);
        let b = real(2, &[1.0, 0.0, 0.0, 2.0]);
        let got = commutator(&a, &b).unwrap();
        assert_eq!(got, real(2, &[0.0, 1.0, 1.0, 0.0]));
    }

    #[test]
    fn commutator_dimension_mismatch() {
        let a = CMatrix::zeros(2, 2);
        let b = CMatrix::zeros(3, 3);
        assert!(matches!(commutator(&a, &b), Err(FlowError::DimensionMismatch { .. })));
    }

    #[test]
    fn anti_hermitian_with_hermitian_gives_hermitian() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let r = AntiHermitianGenerator::random(5, &mut rng);
        let h = DenseHermitian::random(5, &mut rng);
        let k = commutator(r.matrix(), h.matrix()).unwrap();
        assert!(DenseHermitian::new(k).is_ok());
    }

    #[test]
    fn construction_checks_symmetry() {
        assert!(DenseHermitian::from_real(2, &[1.0, 0.5, 0.4, 2.0]).is_err());
        assert!(DenseHermitian::from_real(2, &[1.0, 0.5, 0.5, 2.0]).is_ok());
        let m = real(2, &[0.0, 1.0, 1.0, 0.0]);
        assert!(AntiHermitianGenerator::new(m).is_err());
        let m = real(2, &[0.0, 1.0, -1.0, 0.0]);
        assert!(AntiHermitianGenerator::new(m).is_ok());
        let mut bad = CMatrix::zeros(2, 2);
        bad[(0, 0)] = c(f64::NAN);
        assert!(DenseHermitian::new(bad).is_err());
    }

    #[test]
    fn packing_round_trips() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let h = DenseHermitian::random(6, &mut rng);
        let mut buf = vec![0.0; DenseHermitian::packed_len(6)];
        h.pack(&mut buf);
        assert_eq!(DenseHermitian::unpack(6, &buf), h);

        let m = CMatrix::from_fn(3, 3, |i, j| Complex64::new(i as f64, j as f64 - 1.0));
        let mut buf = vec![0.0; 18];
        pack_complex(&m, &mut buf);
        let mut back = CMatrix::zeros(3, 3);
        unpack_complex(&buf, &mut back);
        assert_eq!(back, m);
    }

    #[test]
    fn json_field_names_and_round_trip() {
        let h = DenseHermitian::from_real(2, &[1.0, 0.5, 0.5, 2.0]).unwrap();
        let text = serde_json::to_string(&h.to_json()).unwrap();
        assert_eq!(text, r#"{"n":2,"re":[1.0,0.5,0.5,2.0],"im":[0.0,0.0,0.0,0.0]}"#);
        let back: MatrixJson = serde_json::from_str(&text).unwrap();
        assert_eq!(DenseHermitian::from_json(&back).unwrap(), h);

        let short = MatrixJson {
            n: 2,
            re: vec![1.0],
            im: vec![0.0; 4],
        };
        assert!(DenseHermitian::from_json(&short).is_err());
        assert!(serde_json::from_str::<MatrixJson>(r#"{"n":1,"re":[1],"im":[0],"x":1}"#).is_err());
    }
}
