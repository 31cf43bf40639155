// SPDX-License-Identifier: Apache-2.0

//! Wegner double-bracket flow of a random Hermitian matrix, checked against
//! Jacobi eigenvalues.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use flowdiag::flow::IntegratorConfig;
use flowdiag::matrix::{flow_diagonalize_with_unitary, reference_eigenvalues, DenseHermitian};

fn main() -> flowdiag::error::Result<()> {
    let n = 8;
    let h = DenseHermitian::random(n, &mut ChaCha8Rng::seed_from_u64(42));
    let cfg = IntegratorConfig::adaptive(1e-10, 1e-12, 1e5)
        .with_threshold(1e-10)
        .with_stride(50);
    let out = flow_diagonalize_with_unitary(&h, &cfg)?;

    println!("{:>10} {:>14}", "l", "off-diagonal");
    for (l, m) in out.matrices() {
        println!("{l:>10.4} {:>14.6e}", m.off_diagonal_norm());
    }

    let eigs = reference_eigenvalues(&h)?;
    println!("\n{:>4} {:>16} {:>16}", "k", "flow", "jacobi");
    for (k, (a, b)) in out.sorted_diagonal().iter().zip(&eigs).enumerate() {
        println!("{k:>4} {a:>16.12} {b:>16.12}");
    }
    let u = out.unitary.expect("requested");
    let defect = (u.adjoint() * &u - nalgebra::DMatrix::identity(n, n)).norm();
    println!(
        "\n{:?} after {} steps, ||U^+U - I|| = {defect:.2e}",
        out.flow.termination, out.flow.accepted_steps
    );
    Ok(())
}
