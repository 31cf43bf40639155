// SPDX-License-Identifier: Apache-2.0

//! Runs a JSON scenario sweep in-process and writes the report and one
//! trajectory CSV per channel to a temporary directory.

use flowdiag::scenario::{parse_scenario, sweep};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = std::env::temp_dir().join("flowdiag-example");
    std::fs::create_dir_all(&dir)?;
    let text = serde_json::json!({
        "model": "eph",
        "omega": 1.0,
        "delta": [0.0, 0.3, 0.6, 1.0],
        "m0": [0.1, 0.2],
        "method": "both",
        "outputs": {
            "report_json": dir.join("report.json"),
            "trajectory_csv": dir.join("eph.csv"),
        }
    })
    .to_string();

    let out = sweep(&parse_scenario(text.as_bytes())?)?;
    for ch in &out.report.channels {
        let shift = |m: &str| {
            ch.method(m).map(|r| match (&r.numeric, &r.error) {
                (_, Some(e)) => e.kind.clone(),
                (Some(v), None) => serde_json::to_string(v).unwrap_or_default(),
                _ => "-".into(),
            })
        };
        println!(
            "delta = {:<4} m0 = {:<4} fe = {:<24} cut = {}",
            ch.inputs["delta"],
            ch.inputs["m0"],
            shift("fe").unwrap_or_default(),
            shift("cut").unwrap_or_default()
        );
    }
    println!(
        "status {:?}; wrote {} files under {}",
        out.status(),
        out.written.len(),
        dir.display()
    );
    Ok(())
}
