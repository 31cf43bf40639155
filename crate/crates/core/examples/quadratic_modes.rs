// SPDX-License-Identifier: Apache-2.0

//! Diagonalizes `f (a†a + b†b) + g (a†b† + ab)` both ways and prints how the
//! anomalous coupling decays along each flow.

use flowdiag::flow::IntegratorConfig;
use flowdiag::quadratic::{self, QuadraticMode};

fn main() -> flowdiag::error::Result<()> {
    let mode = QuadraticMode::new(1.0, 0.6);
    let eps = quadratic::spectrum(mode)?;

    let fe_cfg = IntegratorConfig::adaptive(1e-10, 1e-12, quadratic::default_fe_horizon(mode)?);
    let fe = quadratic::fe_flow(mode, &fe_cfg)?;
    let cut = quadratic::cut_flow(mode, &IntegratorConfig::adaptive(1e-10, 1e-12, 1.0))?;

    println!("exact spectrum  {eps:.12}");
    println!(
        "flow equations  {:.12}  (l = {:.2}, {:?})",
        fe.final_state[0], fe.final_l, fe.termination
    );
    println!("one-step CUT    {:.12}  (l = 1)", cut.final_state[0]);

    println!("\n{:>6} {:>14} {:>14}", "l", "g_fe", "g_cut");
    let grid = [0.0, 0.25, 0.5, 0.75, 1.0];
    let fe_g = fe.resample(&grid)?;
    let cut_g = cut.resample(&grid)?;
    for (i, l) in grid.iter().enumerate() {
        println!("{l:>6.2} {:>14.6e} {:>14.6e}", fe_g[i][1], cut_g[i][1]);
    }
    Ok(())
}
