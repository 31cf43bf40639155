// SPDX-License-Identifier: Apache-2.0

//! Effective electron pair interaction from eliminating the electron-phonon
//! coupling, across and beyond the one-step resonance `|Δ| = ω`.

use flowdiag::electron_phonon::{self as eph, EPhPairChannel};

fn main() -> flowdiag::error::Result<()> {
    let (omega, m0) = (1.0, 0.2);
    println!("{:>6} {:>14} {:>14} {:>14}", "delta", "V_cut", "V_fe", "cut - fe");
    for delta in [0.0, 0.3, 0.6, 0.9, 1.0, 1.5, 2.0] {
        let ch = EPhPairChannel::new(omega, delta, m0, 0.0)?;
        let fe = eph::fe_flow(&ch)?;
        let cut = match eph::cut_flow(&ch) {
            Ok(flow) => format!("{:>14.6e}", flow.final_state[2]),
            Err(e) => format!("{:>14}", e.kind()),
        };
        let diff = eph::compare_methods(&ch)?
            .difference
            .map_or("-".to_string(), |d| format!("{d:.6e}"));
        println!("{delta:>6.2} {cut} {:>14.6e} {diff:>14}", fe.final_v());
    }
    println!("\nabove resonance the one-step shift turns repulsive; the flow-equation shift stays attractive");
    Ok(())
}
