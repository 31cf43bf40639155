// SPDX-License-Identifier: Apache-2.0

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde_json::{Map, Value};

use super::report::{ChannelRecord, ComparisonReport, MethodRecord, Numeric, SweepAxis, TrajectoryTable};
use super::{ExitStatus, MatrixSource, ModelParams, Param, SResult, Scenario, ScenarioError};
use crate::electron_phonon::{self as eph, EPhPairChannel};
use crate::error::Result;
use crate::flow::{FlowResult, IntegratorConfig, Termination};
use crate::matrix::{
    fixed_generator_flow, flow_diagonalize, matrix_exponential, reference_eigenvalues, AntiHermitianGenerator,
    DenseHermitian, MatrixJson,
};
use crate::quadratic::{self, QuadraticMode};
use crate::spins::{self, DeviationDensity, SpinSystemConfig};
use crate::three_boson::{self as tb, ThreeBosonVertex};

/// Environment variable that caps the number of worker threads.
pub const THREADS_ENV: &str = "FLOWDIAG_THREADS";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    /// Every parameter must be a scalar.
    Run,
    /// Array-valued parameters span a Cartesian grid.
    Sweep,
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub report: ComparisonReport,
    pub trajectories: Vec<TrajectoryTable>,
    /// Files written, in order.
    pub written: Vec<PathBuf>,
}

impl RunOutcome {
    pub fn status(&self) -> ExitStatus {
        self.report.status()
    }
}

/// Worker count from `FLOWDIAG_THREADS`; `None` when unset or empty.
pub fn thread_count() -> SResult<Option<usize>> {
    match std::env::var(THREADS_ENV) {
        Err(_) => Ok(None),
        Ok(s) if s.trim().is_empty() => Ok(None),
        Ok(s) => match s.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(ScenarioError::field(
                THREADS_ENV,
                format!("expected a positive integer, got `{s}`"),
            )),
        },
    }
}

/// Evaluates a scenario with scalar parameters and writes its outputs.
pub fn run_scenario(s: &Scenario) -> SResult<RunOutcome> {
    execute(s, Mode::Run)
}

/// Evaluates every point of the parameter grid and writes the aggregated outputs.
pub fn sweep(s: &Scenario) -> SResult<RunOutcome> {
    execute(s, Mode::Sweep)
}

/// Reads, parses and executes a scenario file.
pub fn run_path(path: &Path, mode: Mode) -> SResult<RunOutcome> {
    let text = std::fs::read(path).map_err(|e| ScenarioError::io(path, e))?;
    let s = super::parse_scenario(&text)?;
    execute(&s, mode)
}

fn execute(s: &Scenario, mode: Mode) -> SResult<RunOutcome> {
    let (report, trajectories) = evaluate(s, mode)?;
    let written = write_outputs(s, &report, &trajectories)?;
    Ok(RunOutcome {
        report,
        trajectories,
        written,
    })
}

/// Computes the report and trajectories without touching the file system.
pub fn evaluate(s: &Scenario, mode: Mode) -> SResult<(ComparisonReport, Vec<TrajectoryTable>)> {
    let axes = axes(s);
    for (name, len, many) in &axes {
        if *many && mode == Mode::Run {
            return Err(ScenarioError::field(
                name.clone(),
                "array-valued parameter; use a sweep",
            ));
        }
        if *len == 0 {
            return Err(ScenarioError::field(name.clone(), "empty sweep array"));
        }
    }
    let count = axes
        .iter()
        .try_fold(1usize, |acc, (_, len, _)| acc.checked_mul(*len))
        .filter(|&c| c <= s.sweep_cap)
        .ok_or_else(|| {
            ScenarioError::field("sweep_cap", format!("grid exceeds the cap of {} channels", s.sweep_cap))
        })?;
    let lens: Vec<usize> = axes.iter().map(|a| a.1).collect();

    let one = |i: usize| evaluate_channel(s, i, &coords(i, &lens));
    let results: Vec<(ChannelRecord, TrajectoryTable)> = match thread_count()? {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| ScenarioError::field(THREADS_ENV, e.to_string()))?
            .install(|| (0..count).into_par_iter().map(one).collect()),
        None => (0..count).into_par_iter().map(one).collect(),
    };
    let (channels, tables): (Vec<_>, Vec<_>) = results.into_iter().unzip();
    let sweep_axes = axes.into_iter().map(|(name, len, _)| SweepAxis { name, len }).collect();
    let report = ComparisonReport::assemble(s.model.name(), s.method, sweep_axes, channels, s.residual_tolerance);
    Ok((report, tables))
}

/// Mixed-radix digits of `i`, last axis fastest.
fn coords(mut i: usize, lens: &[usize]) -> Vec<usize> {
    let mut c = vec![0; lens.len()];
    for k in (0..lens.len()).rev() {
        c[k] = i % lens[k];
        i /= lens[k];
    }
    c
}

fn axis<T: Clone>(name: &str, p: &Param<T>) -> (String, usize, bool) {
    (name.to_string(), p.len(), p.is_sweep())
}

fn axes(s: &Scenario) -> Vec<(String, usize, bool)> {
    match &s.model {
        ModelParams::Quadratic(p) => vec![axis("f0", &p.f0), axis("g0", &p.g0)],
        ModelParams::Eph(p) => {
            vec![
                axis("omega", &p.omega),
                axis("delta", &p.delta),
                axis("m0", &p.m0),
                axis("v0", &p.v0),
            ]
        }
        ModelParams::ThreeBoson(p) => vec![
            axis("beta1", &p.beta1),
            axis("beta2", &p.beta2),
            axis("psi1", &p.psi1),
            axis("psi2", &p.psi2),
            axis("phi0", &p.phi0),
        ],
        ModelParams::Matrix(p) => match &p.source {
            MatrixSource::Random { n } => vec![axis("seed", &s.seed), axis("n", n), axis("theta", &p.theta)],
            MatrixSource::Given(_) => vec![axis("theta", &p.theta)],
        },
        ModelParams::Spins(p) => vec![
            axis("n", &p.n),
            axis("omega0", &p.omega0),
            axis("alpha", &p.alpha),
            axis("t_end", &p.t_end),
        ],
    }
}

struct Outcome {
    methods: Vec<MethodRecord>,
    comparison: BTreeMap<String, f64>,
    table: TrajectoryTable,
}

fn evaluate_channel(s: &Scenario, index: usize, coords: &[usize]) -> (ChannelRecord, TrajectoryTable) {
    let mut inputs = Map::new();
    let mut put = |k: &str, v: Value| {
        inputs.insert(k.to_string(), v);
    };
    let c = |k: usize| coords[k];
    let outcome = match &s.model {
        ModelParams::Quadratic(p) => {
            let mode = QuadraticMode::new(p.f0.get(c(0)), p.g0.get(c(1)));
            put("f0", mode.f.into());
            put("g0", mode.g.into());
            run_quadratic(s, mode)
        }
        ModelParams::Eph(p) => {
            let ch = EPhPairChannel {
                omega: p.omega.get(c(0)),
                delta: p.delta.get(c(1)),
                m0: p.m0.get(c(2)),
                v0: p.v0.get(c(3)),
            };
            for (k, v) in [("omega", ch.omega), ("delta", ch.delta), ("m0", ch.m0), ("v0", ch.v0)] {
                put(k, v.into());
            }
            run_eph(s, ch)
        }
        ModelParams::ThreeBoson(p) => {
            let z = |a: [f64; 2]| Complex64::new(a[0], a[1]);
            let v = ThreeBosonVertex {
                beta1: p.beta1.get(c(0)),
                beta2: p.beta2.get(c(1)),
                psi1: z(p.psi1.get(c(2))),
                psi2: z(p.psi2.get(c(3))),
                phi0: z(p.phi0.get(c(4))),
            };
            put("beta1", v.beta1.into());
            put("beta2", v.beta2.into());
            put("psi1", super::json(&p.psi1.get(c(2))));
            put("psi2", super::json(&p.psi2.get(c(3))));
            put("phi0", super::json(&p.phi0.get(c(4))));
            run_three_boson(s, v)
        }
        ModelParams::Matrix(p) => {
            let (h, seed, theta) = match &p.source {
                MatrixSource::Random { n } => {
                    let (seed, n) = (s.seed.get(c(0)), n.get(c(1)));
                    put("source", "random".into());
                    put("seed", seed.into());
                    put("n", n.into());
                    let mut rng = ChaCha8Rng::seed_from_u64(seed);
                    (DenseHermitian::random(n, &mut rng), seed, p.theta.get(c(2)))
                }
                MatrixSource::Given(m) => {
                    put("source", "matrix".into());
                    put("n", m.n.into());
                    let h = DenseHermitian::from_json(m).expect("validated while parsing");
                    (h, s.seed.get(0), p.theta.get(c(0)))
                }
            };
            put("theta", theta.into());
            let generator = match &p.generator {
                Some(g) => AntiHermitianGenerator::from_json(g).expect("validated while parsing"),
                None => random_generator(h.dim(), seed),
            };
            run_matrix(s, &h, &generator, theta)
        }
        ModelParams::Spins(p) => {
            let n = p.n.get(c(0));
            let cfg = SpinSystemConfig {
                n_spins: n,
                omega0: p.omega0.get(c(1)),
                couplings: p.couplings.clone().unwrap_or_else(|| vec![vec![0.0; n]; n]),
                alpha: p.alpha.get(c(2)),
            };
            let t_end = p.t_end.get(c(3));
            put("n", n.into());
            put("omega0", cfg.omega0.into());
            put("alpha", cfg.alpha.into());
            put("J", super::json(&cfg.couplings));
            put("t_end", t_end.into());
            run_spins(s, &cfg, t_end)
        }
    };
    let record = ChannelRecord {
        index,
        coords: coords.to_vec(),
        inputs,
        methods: outcome.methods,
        comparison: outcome.comparison,
    };
    (record, outcome.table)
}

/// Generator used when a matrix scenario names none: seeded, unit Frobenius norm.
/// It is drawn after the Hermitian matrix from a separate stream.
fn random_generator(n: usize, seed: u64) -> AntiHermitianGenerator {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(1);
    let r = AntiHermitianGenerator::random(n, &mut rng);
    let norm = r.norm();
    if norm > 0.0 {
        r.scaled(1.0 / norm)
    } else {
        r
    }
}

fn fe_config(s: &Scenario, horizon: impl FnOnce() -> Result<f64>) -> Result<IntegratorConfig> {
    if s.auto_l_max {
        Ok(IntegratorConfig {
            l_max: horizon()?,
            ..s.integrator.clone()
        })
    } else {
        Ok(s.integrator.clone())
    }
}

fn record(method: &str, quantity: &str, f: impl FnOnce() -> Result<MethodRecord>) -> MethodRecord {
    f().unwrap_or_else(|e| MethodRecord::failed(method, quantity, &e))
}

/// Drift of a monitor relative to `scale` (absolute when `scale` is zero).
fn drift(flow: &FlowResult, monitor: &str, scale: f64) -> f64 {
    let d = flow.monitor_range(monitor).map_or(f64::NAN, |r| r.drift());
    if scale > 0.0 {
        d / scale
    } else {
        d
    }
}

fn not_converged(flow: &FlowResult) -> Option<String> {
    (flow.termination == Termination::ReachedLMax).then(|| "convergence threshold not reached before l_max".to_string())
}

fn numeric_of(rec: &MethodRecord) -> Option<&Numeric> {
    if rec.error.is_some() {
        None
    } else {
        rec.numeric.as_ref()
    }
}

fn run_quadratic(s: &Scenario, mode: QuadraticMode) -> Outcome {
    let mut table = TrajectoryTable::new(true, &["l", "f", "g", "invariant"]);
    let push = |table: &mut TrajectoryTable, method: &str, flow: &FlowResult| {
        for smp in &flow.trajectory {
            let (f, g) = (smp.state[0], smp.state[1]);
            table.push(method, vec![smp.l, f, g, f * f - g * g]);
        }
    };
    let mut methods = Vec::new();
    let finish = |flow: &FlowResult, method: &str, exact: f64| {
        let (f, g) = (flow.final_state[0], flow.final_state[1]);
        MethodRecord::new(method, "spectrum")
            .with_flow(flow)
            .with_values(Numeric::Scalar(f), Numeric::Scalar(exact))
            .metric("final_abs_g", g.abs())
            .residual("invariant_drift", drift(flow, "invariant", mode.invariant().abs()))
    };
    if s.method.includes_fe() {
        methods.push(record("fe", "spectrum", || {
            let exact = quadratic::spectrum(mode)?;
            let cfg = fe_config(s, || quadratic::default_fe_horizon(mode))?;
            let flow = quadratic::fe_flow(mode, &cfg)?;
            push(&mut table, "fe", &flow);
            let mut r = finish(&flow, "fe", exact);
            r.warning = not_converged(&flow);
            Ok(r)
        }));
    }
    if s.method.includes_cut() {
        methods.push(record("cut", "spectrum", || {
            let exact = quadratic::spectrum(mode)?;
            let flow = quadratic::cut_flow(mode, &s.integrator)?;
            push(&mut table, "cut", &flow);
            Ok(finish(&flow, "cut", exact))
        }));
    }
    let mut comparison = BTreeMap::new();
    if let [a, b] = &methods[..] {
        if let (Some(Numeric::Scalar(x)), Some(Numeric::Scalar(y))) = (numeric_of(a), numeric_of(b)) {
            comparison.insert("abs_difference".into(), (x - y).abs());
        }
    }
    Outcome {
        methods,
        comparison,
        table,
    }
}

fn run_eph(s: &Scenario, ch: EPhPairChannel) -> Outcome {
    let mut table = TrajectoryTable::new(true, &["l", "m1", "m2", "v"]);
    let push = |table: &mut TrajectoryTable, method: &str, flow: &FlowResult| {
        for smp in &flow.trajectory {
            table.push(method, vec![smp.l, smp.state[0], smp.state[1], smp.state[2]]);
        }
    };
    let mut methods = Vec::new();
    if s.method.includes_fe() {
        methods.push(record("fe", "effective_v", || {
            ch.validate()?;
            let exact = eph::fe_effective_v(&ch)?;
            let cfg = fe_config(s, || eph::default_fe_horizon(&ch))?;
            let out = eph::fe_flow_with(&ch, &cfg)?;
            push(&mut table, "fe", &out.flow);
            let m = out.flow.final_state[0].abs().max(out.flow.final_state[1].abs());
            let mut r = MethodRecord::new("fe", "effective_v")
                .with_flow(&out.flow)
                .with_values(Numeric::Scalar(out.final_v()), Numeric::Scalar(exact))
                .metric("final_max_abs_m", m);
            r.warning = out.warning;
            Ok(r)
        }));
    }
    if s.method.includes_cut() {
        methods.push(record("cut", "effective_v", || {
            let exact = eph::cut_effective_v(&ch)?;
            let flow = eph::cut_flow_with(&ch, &s.integrator)?;
            push(&mut table, "cut", &flow);
            Ok(MethodRecord::new("cut", "effective_v")
                .with_flow(&flow)
                .with_values(Numeric::Scalar(flow.final_state[2]), Numeric::Scalar(exact)))
        }));
    }
    let mut comparison = BTreeMap::new();
    let get = |m: &str| methods.iter().find(|r| r.method == m).and_then(numeric_of);
    if let (Some(Numeric::Scalar(fe)), Some(Numeric::Scalar(cut))) = (get("fe"), get("cut")) {
        comparison.insert("cut_minus_fe".into(), cut - fe);
    }
    Outcome {
        methods,
        comparison,
        table,
    }
}

fn run_three_boson(s: &Scenario, v: ThreeBosonVertex) -> Outcome {
    let cols = ["l", "psi1_re", "psi1_im", "psi2_re", "psi2_im", "phi_re", "phi_im"];
    let mut table = TrajectoryTable::new(true, &cols);
    let push = |table: &mut TrajectoryTable, method: &str, flow: &FlowResult| {
        for smp in &flow.trajectory {
            let mut row = vec![smp.l];
            row.extend_from_slice(&smp.state);
            table.push(method, row);
        }
    };
    let c = |z: Complex64| Numeric::Complex([z.re, z.im]);
    let mut methods = Vec::new();
    if s.method.includes_fe() {
        methods.push(record("fe", "effective_phi", || {
            let exact = tb::fe_effective_phi(&v)?;
            let cfg = fe_config(s, || tb::default_fe_horizon(&v))?;
            let flow = tb::fe_flow_with(&v, &cfg)?;
            push(&mut table, "fe", &flow);
            let mut r = MethodRecord::new("fe", "effective_phi")
                .with_flow(&flow)
                .with_values(c(tb::final_phi(&flow)), c(exact))
                .metric("final_max_abs_psi", flow.convergence_value.unwrap_or(f64::NAN));
            r.warning = not_converged(&flow);
            Ok(r)
        }));
    }
    if s.method.includes_cut() {
        methods.push(record("cut", "effective_phi", || {
            let exact = tb::cut_effective_phi(&v)?;
            let flow = tb::cut_flow_with(&v, &s.integrator)?;
            push(&mut table, "cut", &flow);
            Ok(MethodRecord::new("cut", "effective_phi")
                .with_flow(&flow)
                .with_values(c(tb::final_phi(&flow)), c(exact)))
        }));
    }
    let mut comparison = BTreeMap::new();
    let get = |m: &str| methods.iter().find(|r| r.method == m).and_then(numeric_of);
    if let (Some(Numeric::Complex(fe)), Some(Numeric::Complex(cut))) = (get("fe"), get("cut")) {
        let phi0 = v.phi0;
        let cut_shift = Complex64::new(cut[0], cut[1]) - phi0;
        if cut_shift.norm() > 0.0 {
            comparison.insert("ratio".into(), ((Complex64::new(fe[0], fe[1]) - phi0) / cut_shift).re);
            let (b1, b2) = (v.beta1, v.beta2);
            comparison.insert("expected_ratio".into(), 2.0 * b1 * b2 / (b1 * b1 + b2 * b2));
        }
    }
    Outcome {
        methods,
        comparison,
        table,
    }
}

/// `50 / (smallest eigenvalue gap)²`, the slowest off-diagonal decay rate
/// near the fixed point; `None` for degenerate or 1×1 spectra.
fn wegner_horizon(eigs: &[f64]) -> Option<f64> {
    let gap = eigs.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min);
    (gap.is_finite() && gap > 0.0).then(|| 50.0 / (gap * gap))
}

fn push_matrix_rows(table: &mut TrajectoryTable, method: &str, flow: &FlowResult) {
    let idx = |name| flow.monitor_index(name).expect("matrix flows carry hermitian monitors");
    let (tr, tr2, off) = (idx("trace"), idx("trace_sq"), idx("off_diagonal_sq"));
    for smp in &flow.trajectory {
        let m = &smp.monitors;
        table.push(method, vec![smp.l, m[off].max(0.0).sqrt(), m[tr], m[tr2]]);
    }
}

fn run_matrix(s: &Scenario, h: &DenseHermitian, generator: &AntiHermitianGenerator, theta: f64) -> Outcome {
    let mut table = TrajectoryTable::new(true, &["l", "off_diagonal_norm", "trace", "trace_sq"]);
    let norm = h.matrix().norm();
    let residuals = |r: MethodRecord, flow: &FlowResult| {
        r.residual("trace_drift", drift(flow, "trace", norm))
            .residual("trace_sq_drift", drift(flow, "trace_sq", norm * norm))
    };
    let mut methods = Vec::new();
    if s.method.includes_fe() {
        methods.push(record("fe", "eigenvalues", || {
            let eigs = reference_eigenvalues(h)?;
            let cfg = fe_config(s, || Ok(wegner_horizon(&eigs).unwrap_or(s.integrator.l_max)))?;
            let out = flow_diagonalize(h, &cfg)?;
            push_matrix_rows(&mut table, "fe", &out.flow);
            let mut r = MethodRecord::new("fe", "eigenvalues")
                .with_flow(&out.flow)
                .with_values(Numeric::Vector(out.sorted_diagonal()), Numeric::Vector(eigs))
                .metric("residual_off_diagonal", out.residual_off_diagonal());
            r.warning = not_converged(&out.flow);
            Ok(residuals(r, &out.flow))
        }));
    }
    if s.method.includes_cut() {
        methods.push(record("cut", "transformed_matrix", || {
            let r =
                MethodRecord::new("cut", "transformed_matrix").metric("generator_norm", theta.abs() * generator.norm());
            let as_json = |m: &DenseHermitian| Numeric::Matrix(MatrixJson::from_matrix(m.matrix()));
            if theta == 0.0 {
                table.push("cut", vec![0.0, h.off_diagonal_norm(), h.trace(), h.trace_sq()]);
                return Ok(r.with_values(as_json(h), as_json(h)));
            }
            let u = matrix_exponential(&(generator.matrix() * Complex64::new(theta, 0.0)))?;
            let exact = DenseHermitian::from_matrix_unchecked(&u * h.matrix() * u.adjoint());
            let gen = if theta > 0.0 {
                generator.clone()
            } else {
                generator.scaled(-1.0)
            };
            let ode = fixed_generator_flow(h, &gen, |_| 1.0, theta.abs(), &s.integrator)?;
            push_matrix_rows(&mut table, "cut", &ode.flow);
            let r = r
                .with_flow(&ode.flow)
                .with_values(as_json(&ode.matrix), as_json(&exact));
            Ok(residuals(r, &ode.flow))
        }));
    }
    Outcome {
        methods,
        comparison: BTreeMap::new(),
        table,
    }
}

fn run_spins(s: &Scenario, cfg: &SpinSystemConfig, t_end: f64) -> Outcome {
    let n = cfg.n_spins;
    let mut cols: Vec<String> = vec!["t".into()];
    cols.extend((1..=n).map(|k| format!("W_{k}")));
    cols.extend(["trace_check".into(), "purity_check".into()]);
    let col_refs: Vec<&str> = cols.iter().map(String::as_str).collect();
    let mut table = TrajectoryTable::new(false, &col_refs);

    let rec = record("flow", "order_spectrum", || {
        let evo = spins::propagate_flow(cfg, t_end, &s.integrator)?;
        let rho0 = DeviationDensity::transverse(cfg)?;
        let h = spins::build_spin_hamiltonian(cfg)?;
        let exact = spins::exact_propagate(&rho0, &h, t_end)?;

        let purity0 = rho0.purity();
        let total0 = evo.samples.first().map_or(0.0, |smp| smp.spectrum.total());
        let rel = |x: f64, scale: f64| if scale > 0.0 { x / scale } else { x };
        let (mut trace_max, mut purity_max, mut total_max) = (0.0f64, 0.0f64, 0.0f64);
        for smp in &evo.samples {
            let mut row = vec![smp.t];
            row.extend_from_slice(&smp.spectrum.weights);
            row.extend([smp.trace_check, smp.purity_check]);
            table.push("flow", row);
            trace_max = trace_max.max(smp.trace_check.abs());
            purity_max = purity_max.max(smp.purity_check.abs());
            total_max = total_max.max((smp.spectrum.total() - total0).abs());
        }
        let fin = evo.final_density.order_spectrum()?;
        let ex = exact.order_spectrum()?;
        Ok(MethodRecord::new("flow", "order_spectrum")
            .with_flow(&evo.flow)
            .with_values(Numeric::Vector(fin.weights), Numeric::Vector(ex.weights))
            .metric(
                "frobenius_distance",
                (evo.final_density.matrix() - exact.matrix()).norm(),
            )
            .residual("trace_check", rel(trace_max, purity0.sqrt()))
            .residual("purity_drift", rel(purity_max, purity0))
            .residual("weight_total_drift", rel(total_max, total0)))
    });
    Outcome {
        methods: vec![rec],
        comparison: BTreeMap::new(),
        table,
    }
}

fn suffixed(path: &Path, index: usize, count: usize) -> PathBuf {
    let width = (count - 1).to_string().len();
    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    let name = match path.extension() {
        Some(ext) => format!("{stem}_{index:0width$}.{}", ext.to_string_lossy()),
        None => format!("{stem}_{index:0width$}"),
    };
    path.with_file_name(name)
}

/// Writes the report and trajectories; a grid with several channels gets one
/// CSV per channel, numbered by channel index.
fn write_outputs(s: &Scenario, report: &ComparisonReport, tables: &[TrajectoryTable]) -> SResult<Vec<PathBuf>> {
    let write = |path: &Path, text: &str| std::fs::write(path, text).map_err(|e| ScenarioError::io(path, e));
    let mut written = Vec::new();
    for target in &s.outputs {
        if let Some(path) = &target.report_json {
            write(path, &report.to_json_string())?;
            written.push(path.clone());
        }
        if let Some(path) = &target.trajectory_csv {
            if tables.len() == 1 {
                write(path, &tables[0].to_csv())?;
                written.push(path.clone());
            } else {
                for (i, t) in tables.iter().enumerate() {
                    let p = suffixed(path, i, tables.len());
                    write(&p, &t.to_csv())?;
                    written.push(p);
                }
            }
        }
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::super::parse_scenario;
    use super::*;

    fn eval(text: &str, mode: Mode) -> ComparisonReport {
        evaluate(&parse_scenario(text.as_bytes()).unwrap(), mode).unwrap().0
    }

    fn scalar(r: &MethodRecord) -> f64 {
        match r.numeric {
            Some(Numeric::Scalar(x)) => x,
            ref other => panic!("{other:?}"),
        }
    }

    #[test]
    fn grid_coordinates() {
        assert_eq!(coords(0, &[2, 3]), vec![0, 0]);
        assert_eq!(coords(4, &[2, 3]), vec![1, 1]);
        assert_eq!(coords(5, &[2, 3]), vec![1, 2]);
        assert_eq!(coords(0, &[]), Vec::<usize>::new());
    }

    #[test]
    fn suffixes() {
        assert_eq!(suffixed(Path::new("out/t.csv"), 3, 12), PathBuf::from("out/t_03.csv"));
        assert_eq!(suffixed(Path::new("t"), 0, 2), PathBuf::from("t_0"));
    }

    #[test]
    fn quadratic_both_methods() {
        let rep = eval(r#"{"model":"quadratic","f0":1,"g0":0.6}"#, Mode::Run);
        assert_eq!(rep.status(), ExitStatus::Ok);
        let ch = &rep.channels[0];
        let fe = scalar(ch.method("fe").unwrap());
        let cut = scalar(ch.method("cut").unwrap());
        assert!((fe - 0.8).abs() < 1e-8 && (cut - 0.8).abs() < 1e-8);
        assert!(ch.comparison["abs_difference"] < 1e-8);
    }

    #[test]
    fn resonance_is_a_typed_record() {
        let rep = eval(r#"{"model":"eph","omega":1,"delta":1,"m0":0.2}"#, Mode::Run);
        assert_eq!(rep.status(), ExitStatus::ModelError);
        let ch = &rep.channels[0];
        assert_eq!(ch.method("cut").unwrap().error.as_ref().unwrap().kind, "resonance");
        let fe = ch.method("fe").unwrap();
        assert!(fe.error.is_none());
        assert!((scalar(fe) + 0.02).abs() < 1e-8);
    }

    #[test]
    fn run_rejects_arrays_and_sweep_rejects_empty() {
        let s = parse_scenario(br#"{"model":"quadratic","f0":1,"g0":[0.1,0.2]}"#).unwrap();
        assert!(matches!(evaluate(&s, Mode::Run), Err(ScenarioError::Validation { ref field, .. }) if field == "g0"));
        let s = parse_scenario(br#"{"model":"quadratic","f0":1,"g0":[]}"#).unwrap();
        assert!(matches!(evaluate(&s, Mode::Sweep), Err(ScenarioError::Validation { ref field, .. }) if field == "g0"));
        let s = parse_scenario(br#"{"model":"quadratic","f0":[1,2,3],"g0":[0.1,0.2],"sweep_cap":5}"#).unwrap();
        assert!(
            matches!(evaluate(&s, Mode::Sweep), Err(ScenarioError::Validation { ref field, .. }) if field == "sweep_cap")
        );
    }

    #[test]
    fn spins_table_columns() {
        let s =
            parse_scenario(br#"{"model":"spins","n":2,"omega0":1,"alpha":0.5,"J":[[0,1],[1,0]],"t_end":0.3}"#).unwrap();
        let (rep, tables) = evaluate(&s, Mode::Run).unwrap();
        assert_eq!(rep.status(), ExitStatus::Ok);
        assert_eq!(tables[0].columns, ["t", "W_1", "W_2", "trace_check", "purity_check"]);
        assert!(rep.channels[0].methods[0].metrics["frobenius_distance"] < 1e-7);
    }

    #[test]
    fn wegner_horizon_from_gaps() {
        assert_eq!(wegner_horizon(&[0.0, 1.0, 3.0]), Some(50.0));
        assert_eq!(wegner_horizon(&[1.0, 1.0]), None);
        assert_eq!(wegner_horizon(&[2.0]), None);
    }
}
