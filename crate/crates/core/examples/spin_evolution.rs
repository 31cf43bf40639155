// SPDX-License-Identifier: Apache-2.0

//! Transverse magnetization of a 4-spin chain spreading into multi-spin
//! correlations, tracked by Pauli weight.

use flowdiag::spins::{self, SpinSystemConfig};

fn main() -> flowdiag::error::Result<()> {
    let cfg = SpinSystemConfig::chain(4, 0.0, 1.0, 1.0);
    let evo = spins::propagate_flow(&cfg, 3.0, &spins::default_config().with_stride(4))?;

    println!(
        "{:>7} {:>11} {:>11} {:>11} {:>11} {:>11}",
        "t", "W_1", "W_2", "W_3", "W_4", "sum"
    );
    for s in &evo.samples {
        let w = &s.spectrum.weights;
        println!(
            "{:>7.3} {:>11.6} {:>11.6} {:>11.6} {:>11.6} {:>11.6}",
            s.t,
            w[0],
            w[1],
            w[2],
            w[3],
            s.spectrum.total()
        );
    }

    let h = spins::build_spin_hamiltonian(&cfg)?;
    let rho0 = spins::DeviationDensity::transverse(&cfg)?;
    let exact = spins::exact_propagate(&rho0, &h, 3.0)?;
    println!(
        "\ndistance to exact propagation: {:.2e}",
        (evo.final_density.matrix() - exact.matrix()).norm()
    );
    Ok(())
}
