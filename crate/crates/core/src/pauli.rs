// SPDX-License-Identifier: Apache-2.0

//! Decomposition of 2ⁿ×2ⁿ operators over Pauli strings.
//!
//! A string is encoded by two bitmasks `(x, z)`: site `j` carries `I`, `X`,
//! `Z` or `Y` for `(x_j, z_j)` = `(0,0)`, `(1,0)`, `(0,1)`, `(1,1)`. Acting on
//! a basis state `|c⟩` it gives `i^{|x∧z|} (−1)^{|z∧c|} |c ⊕ x⟩`.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{FlowError, Result};
use crate::matrix::CMatrix;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PauliTerm {
    pub x: usize,
    pub z: usize,
    /// Coefficient in `A = Σ c_P P`, i.e. `tr(P A)/2ⁿ`.
    pub coeff: Complex64,
}

impl PauliTerm {
    /// Number of non-identity factors.
    pub fn weight(&self) -> u32 {
        (self.x | self.z).count_ones()
    }
}

/// Squared coefficient mass per correlation order.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PauliOrderSpectrum {
    /// `weights[k]` is `W_{k+1}`, the sum of `|c_P|²` over strings of weight `k+1`.
    pub weights: Vec<f64>,
    /// `|c_I|²`; zero for traceless input.
    pub identity: f64,
}

impl PauliOrderSpectrum {
    /// `W_order` for `order ≥ 1`.
    pub fn weight(&self, order: usize) -> f64 {
        self.weights[order - 1]
    }

    pub fn total(&self) -> f64 {
        self.weights.iter().sum()
    }
}

/// Number of qubits for a `dim × dim` operator.
pub fn qubit_count(dim: usize) -> Result<usize> {
    if dim == 0 || !dim.is_power_of_two() {
        return Err(FlowError::OutOfRange(format!("dimension {dim} is not a power of two")));
    }
    Ok(dim.trailing_zeros() as usize)
}

fn string_phase(x: usize, z: usize, c: usize) -> Complex64 {
    let sign = if (z & c).count_ones() % 2 == 0 { 1.0 } else { -1.0 };
    match (x & z).count_ones() % 4 {
        0 => Complex64::new(sign, 0.0),
        1 => Complex64::new(0.0, sign),
        2 => Complex64::new(-sign, 0.0),
        _ => Complex64::new(0.0, -sign),
    }
}

/// Every Pauli string with its coefficient in `a`.
pub fn pauli_coefficients(a: &CMatrix) -> Result<Vec<PauliTerm>> {
    if a.nrows() != a.ncols() {
        return Err(FlowError::DimensionMismatch {
            expected: a.nrows(),
            found: a.ncols(),
        });
    }
    let dim = a.nrows();
    qubit_count(dim)?;
    let norm = 1.0 / dim as f64;
    let mut out = Vec::with_capacity(dim * dim);
    for x in 0..dim {
        for z in 0..dim {
            // tr(P A) = Σ_c P[c⊕x, c] · A[c, c⊕x]
            let tr: Complex64 = (0..dim).map(|c| string_phase(x, z, c) * a[(c, c ^ x)]).sum();
            out.push(PauliTerm { x, z, coeff: tr * norm });
        }
    }
    Ok(out)
}

/// `Σ c_P P`.
pub fn reconstruct(dim: usize, terms: &[PauliTerm]) -> CMatrix {
    let mut m = CMatrix::zeros(dim, dim);
    for t in terms {
        if t.coeff.norm_sqr() == 0.0 {
            continue;
        }
        for c in 0..dim {
            m[(c ^ t.x, c)] += t.coeff * string_phase(t.x, t.z, c);
        }
    }
    m
}

pub fn pauli_order_spectrum(a: &CMatrix) -> Result<PauliOrderSpectrum> {
    let n = qubit_count(a.nrows())?;
    let mut weights = vec![0.0; n];
    let mut identity = 0.0;
    for t in pauli_coefficients(a)? {
        match t.weight() {
            0 => identity += t.coeff.norm_sqr(),
            w => weights[w as usize - 1] += t.coeff.norm_sqr(),
        }
    }
    Ok(PauliOrderSpectrum { weights, identity })
}
