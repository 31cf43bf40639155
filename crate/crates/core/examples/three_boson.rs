// SPDX-License-Identifier: Apache-2.0

//! Four-boson vertex induced by eliminating three-boson terms, and the ratio
//! between the two methods.

use num_complex::Complex64;

use flowdiag::three_boson::{self as tb, ThreeBosonVertex};

fn main() -> flowdiag::error::Result<()> {
    let psi1 = Complex64::from_polar(0.3, 0.4);
    let psi2 = Complex64::from_polar(0.2, -1.1);
    println!(
        "{:>6} {:>6} {:>26} {:>26} {:>8}",
        "beta1", "beta2", "Phi_cut", "Phi_fe", "ratio"
    );
    for (b1, b2) in [(1.0, 1.0), (1.0, 2.0), (1.0, 3.0), (0.5, 4.0)] {
        let v = ThreeBosonVertex::new(b1, b2, psi1, psi2, Complex64::new(0.0, 0.0))?;
        let cut = tb::final_phi(&tb::cut_flow(&v)?);
        let fe = tb::final_phi(&tb::fe_flow(&v)?);
        let ratio = tb::compare_methods(&v)?.ratio.unwrap_or(f64::NAN);
        println!(
            "{b1:>6} {b2:>6} {:>26} {:>26} {ratio:>8.4}",
            format!("{cut:.6}"),
            format!("{fe:.6}")
        );
    }
    Ok(())
}
