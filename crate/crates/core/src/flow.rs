// SPDX-License-Identifier: Apache-2.0

//! Integrator for flows `dx/dl = F(l, x)` on real coefficient vectors.
//!
//! Every model in the crate reduces its operator flow to a real vector of
//! coefficients (complex amplitudes interleaved as `re, im`) and hands it to
//! [`integrate_flow`]. Two schemes are available: classical fixed-step RK4 and
//! the Dormand–Prince embedded 4(5) pair with step control
//!
//! ```text
//! h_new = h * clamp(0.9 * err^(-1/5), 0.2, 5.0)
//! err   = rms_i( e_i / (abs_tol + rel_tol * max(|x_i|, |x_new_i|)) )
//! ```
//!
//! The limit `l -> inf` is realized as `l_max` plus a convergence threshold on
//! a caller-supplied scalar measure.

use serde::{Deserialize, Serialize};

use crate::error::{FlowError, Result};

type RhsFn<'a> = dyn Fn(f64, &[f64], &mut [f64]) + Send + Sync + 'a;
type ScalarFn<'a> = dyn Fn(&[f64]) -> f64 + Send + Sync + 'a;

/// A named scalar functional of the flow state.
pub struct Monitor<'a> {
    pub name: String,
    eval: Box<ScalarFn<'a>>,
}

impl<'a> Monitor<'a> {
    pub fn new(name: impl Into<String>, eval: impl Fn(&[f64]) -> f64 + Send + Sync + 'a) -> Self {
        Self {
            name: name.into(),
            eval: Box::new(eval),
        }
    }

    pub fn eval(&self, state: &[f64]) -> f64 {
        (self.eval)(state)
    }
}

/// A first-order ODE system on a real coefficient vector.
pub struct FlowProblem<'a> {
    dimension: usize,
    rhs: Box<RhsFn<'a>>,
    monitors: Vec<Monitor<'a>>,
    convergence: Option<Monitor<'a>>,
}

impl<'a> FlowProblem<'a> {
    /// `rhs(l, state, out)` must fill `out` (length `dimension`) with the derivative.
    pub fn new(dimension: usize, rhs: impl Fn(f64, &[f64], &mut [f64]) + Send + Sync + 'a) -> Self {
        Self {
            dimension,
            rhs: Box::new(rhs),
            monitors: Vec::new(),
            convergence: None,
        }
    }

    pub fn with_monitor(mut self, name: impl Into<String>, eval: impl Fn(&[f64]) -> f64 + Send + Sync + 'a) -> Self {
        self.monitors.push(Monitor::new(name, eval));
        self
    }

    /// The flow is declared converged once this measure drops to the
    /// configured threshold.
    pub fn with_convergence(
        mut self,
        name: impl Into<String>,
        eval: impl Fn(&[f64]) -> f64 + Send + Sync + 'a,
    ) -> Self {
        self.convergence = Some(Monitor::new(name, eval));
        self
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn monitor_names(&self) -> Vec<String> {
        self.monitors.iter().map(|m| m.name.clone()).collect()
    }

    pub fn convergence_name(&self) -> Option<&str> {
        self.convergence.as_ref().map(|m| m.name.as_str())
    }

    pub fn eval_rhs(&self, l: f64, state: &[f64], out: &mut [f64]) {
        (self.rhs)(l, state, out)
    }

    fn monitor_values(&self, state: &[f64]) -> Vec<f64> {
        self.monitors.iter().map(|m| m.eval(state)).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    /// Classical fixed-step fourth-order Runge–Kutta.
    Rk4,
    /// Dormand–Prince embedded 4(5) pair with adaptive steps.
    Dopri45,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IntegratorConfig {
    pub method: Method,
    pub abs_tol: f64,
    pub rel_tol: f64,
    /// Step size for [`Method::Rk4`].
    pub step: f64,
    pub l_max: f64,
    pub convergence_threshold: f64,
    pub max_steps: usize,
    pub sample_stride: usize,
    /// First trial step for the adaptive method; chosen automatically when absent.
    pub initial_step: Option<f64>,
    pub max_step: Option<f64>,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self {
            method: Method::Dopri45,
            abs_tol: 1e-12,
            rel_tol: 1e-10,
            step: 1e-3,
            l_max: 100.0,
            convergence_threshold: 1e-10,
            max_steps: 1_000_000,
            sample_stride: 1,
            initial_step: None,
            max_step: None,
        }
    }
}

impl IntegratorConfig {
    pub fn adaptive(rel_tol: f64, abs_tol: f64, l_max: f64) -> Self {
        Self {
            method: Method::Dopri45,
            rel_tol,
            abs_tol,
            l_max,
            ..Self::default()
        }
    }

    pub fn fixed(step: f64, l_max: f64) -> Self {
        Self {
            method: Method::Rk4,
            step,
            l_max,
            ..Self::default()
        }
    }

    pub fn with_threshold(mut self, threshold: f64) -> Self {
        self.convergence_threshold = threshold;
        self
    }

    pub fn with_stride(mut self, stride: usize) -> Self {
        self.sample_stride = stride;
        self
    }

    pub fn with_max_steps(mut self, max_steps: usize) -> Self {
        self.max_steps = max_steps;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(FlowError::InvalidConfig(format!(
                    "{name} must be finite and > 0, got {v}"
                )))
            }
        };
        positive("abs_tol", self.abs_tol)?;
        positive("rel_tol", self.rel_tol)?;
        positive("step", self.step)?;
        positive("l_max", self.l_max)?;
        if let Some(h) = self.initial_step {
            positive("initial_step", h)?;
        }
        if let Some(h) = self.max_step {
            positive("max_step", h)?;
        }
        if !(self.convergence_threshold >= 0.0) {
            return Err(FlowError::InvalidConfig(format!(
                "convergence_threshold must be >= 0, got {}",
                self.convergence_threshold
            )));
        }
        if self.max_steps == 0 {
            return Err(FlowError::InvalidConfig("max_steps must be >= 1".into()));
        }
        if self.sample_stride == 0 {
            return Err(FlowError::InvalidConfig("sample_stride must be >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    Converged,
    ReachedLMax,
    StepLimit,
    NumericalFailure,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub l: f64,
    pub state: Vec<f64>,
    /// `F(l, state)`, kept for Hermite interpolation.
    pub derivative: Vec<f64>,
    pub monitors: Vec<f64>,
}

/// Smallest and largest value a monitor took over all accepted steps.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonitorRange {
    pub initial: f64,
    pub min: f64,
    pub max: f64,
}

impl MonitorRange {
    fn new(v: f64) -> Self {
        Self {
            initial: v,
            min: v,
            max: v,
        }
    }

    fn update(&mut self, v: f64) {
        // NaN propagates into the range so that drift checks fail loudly.
        if v.is_nan() {
            self.min = f64::NAN;
            self.max = f64::NAN;
        } else {
            self.min = self.min.min(v);
            self.max = self.max.max(v);
        }
    }

    /// Largest deviation from the initial value.
    pub fn drift(&self) -> f64 {
        (self.max - self.initial).abs().max((self.initial - self.min).abs())
    }
}

#[derive(Debug, Clone)]
pub struct FlowResult {
    pub final_l: f64,
    pub final_state: Vec<f64>,
    pub trajectory: Vec<Sample>,
    pub termination: Termination,
    pub monitor_names: Vec<String>,
    pub monitor_ranges: Vec<MonitorRange>,
    /// Last value of the convergence measure, if one was supplied.
    pub convergence_value: Option<f64>,
    pub accepted_steps: usize,
    pub rejected_steps: usize,
    pub failure: Option<String>,
}

impl FlowResult {
    pub fn monitor_index(&self, name: &str) -> Option<usize> {
        self.monitor_names.iter().position(|n| n == name)
    }

    pub fn monitor_range(&self, name: &str) -> Option<MonitorRange> {
        self.monitor_index(name).map(|i| self.monitor_ranges[i])
    }

    /// Monitor `name` at every sample.
    pub fn monitor_series(&self, name: &str) -> Option<Vec<(f64, f64)>> {
        let i = self.monitor_index(name)?;
        Some(self.trajectory.iter().map(|s| (s.l, s.monitors[i])).collect())
    }

    pub fn is_converged(&self) -> bool {
        self.termination == Termination::Converged
    }

    /// States at the requested flow parameters, by cubic Hermite interpolation
    /// between stored samples. Sample points are returned exactly.
    pub fn resample(&self, l_points: &[f64]) -> Result<Vec<Vec<f64>>> {
        resample_trajectory(self, l_points)
    }
}

/// Integrates `problem` from `initial` at `l = 0`.
pub fn integrate_flow(problem: &FlowProblem<'_>, config: &IntegratorConfig, initial: &[f64]) -> Result<FlowResult> {
    if initial.len() != problem.dimension {
        return Err(FlowError::DimensionMismatch {
            expected: problem.dimension,
            found: initial.len(),
        });
    }
    config.validate()?;

    let mut run = Run::new(problem, config, initial);
    let termination = match config.method {
        Method::Rk4 => run.drive(Stepper::Rk4),
        Method::Dopri45 => run.drive(Stepper::Dopri),
    };
    Ok(run.finish(termination))
}

/// Free-function form of [`FlowResult::resample`].
pub fn resample_trajectory(result: &FlowResult, l_points: &[f64]) -> Result<Vec<Vec<f64>>> {
    let samples = &result.trajectory;
    let first = samples.first().map(|s| s.l).unwrap_or(0.0);
    let mut out = Vec::with_capacity(l_points.len());
    let mut prev = f64::NEG_INFINITY;
    let mut seg = 0usize;
    for &l in l_points {
        if !(l >= first && l <= result.final_l) {
            return Err(FlowError::OutOfRange(format!(
                "l = {l} outside [{first}, {}]",
                result.final_l
            )));
        }
        if l < prev {
            return Err(FlowError::OutOfRange("requested l values must be nondecreasing".into()));
        }
        prev = l;
        while seg + 1 < samples.len() && samples[seg + 1].l <= l {
            seg += 1;
        }
        let a = &samples[seg];
        if l == a.l || seg + 1 == samples.len() {
            out.push(a.state.clone());
            continue;
        }
        let b = &samples[seg + 1];
        out.push(hermite(a, b, l));
    }
    Ok(out)
}

fn hermite(a: &Sample, b: &Sample, l: f64) -> Vec<f64> {
    let h = b.l - a.l;
    let s = (l - a.l) / h;
    let s2 = s * s;
    let s3 = s2 * s;
    let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
    let h10 = s3 - 2.0 * s2 + s;
    let h01 = -2.0 * s3 + 3.0 * s2;
    let h11 = s3 - s2;
    (0..a.state.len())
        .map(|i| h00 * a.state[i] + h10 * h * a.derivative[i] + h01 * b.state[i] + h11 * h * b.derivative[i])
        .collect()
}

#[derive(Clone, Copy)]
enum Stepper {
    Rk4,
    Dopri,
}

// Dormand–Prince 5(4) tableau.
const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

const SAFETY: f64 = 0.9;
const MIN_FACTOR: f64 = 0.2;
const MAX_FACTOR: f64 = 5.0;

struct Run<'p, 'a> {
    problem: &'p FlowProblem<'a>,
    config: &'p IntegratorConfig,
    l: f64,
    x: Vec<f64>,
    dx: Vec<f64>,
    trajectory: Vec<Sample>,
    ranges: Vec<MonitorRange>,
    last_monitors: Vec<f64>,
    convergence_value: Option<f64>,
    accepted: usize,
    rejected: usize,
    failure: Option<String>,
    k: [Vec<f64>; 7],
    tmp: Vec<f64>,
    x_new: Vec<f64>,
}

fn all_finite(v: &[f64]) -> bool {
    v.iter().all(|x| x.is_finite())
}

impl<'p, 'a> Run<'p, 'a> {
    fn new(problem: &'p FlowProblem<'a>, config: &'p IntegratorConfig, initial: &[f64]) -> Self {
        let n = problem.dimension;
        let monitors = problem.monitor_values(initial);
        let ranges = monitors.iter().copied().map(MonitorRange::new).collect();
        Self {
            problem,
            config,
            l: 0.0,
            x: initial.to_vec(),
            dx: vec![0.0; n],
            trajectory: Vec::new(),
            ranges,
            last_monitors: monitors,
            convergence_value: None,
            accepted: 0,
            rejected: 0,
            failure: None,
            k: std::array::from_fn(|_| vec![0.0; n]),
            tmp: vec![0.0; n],
            x_new: vec![0.0; n],
        }
    }

    fn push_sample(&mut self) {
        self.trajectory.push(Sample {
            l: self.l,
            state: self.x.clone(),
            derivative: self.dx.clone(),
            monitors: self.last_monitors.clone(),
        });
    }

    fn converged(&mut self) -> bool {
        match &self.problem.convergence {
            Some(m) => {
                let v = m.eval(&self.x);
                self.convergence_value = Some(v);
                v <= self.config.convergence_threshold
            }
            None => false,
        }
    }

    fn fail(&mut self, why: String) -> Termination {
        self.failure = Some(why);
        Termination::NumericalFailure
    }

    fn drive(&mut self, stepper: Stepper) -> Termination {
        let problem = self.problem;
        problem.eval_rhs(self.l, &self.x, &mut self.dx);
        if !all_finite(&self.dx) {
            self.push_sample();
            return self.fail("non-finite derivative at l = 0".into());
        }
        if !all_finite(&self.last_monitors) {
            self.push_sample();
            return self.fail("non-finite monitor at l = 0".into());
        }
        self.push_sample();
        if self.converged() {
            return Termination::Converged;
        }

        let l_max = self.config.l_max;
        let mut h = match stepper {
            Stepper::Rk4 => self.config.step,
            Stepper::Dopri => self.config.initial_step.unwrap_or_else(|| self.initial_step()),
        };
        if let Some(hmax) = self.config.max_step {
            h = h.min(hmax);
        }

        loop {
            if self.accepted >= self.config.max_steps {
                return Termination::StepLimit;
            }
            let remaining = l_max - self.l;
            let last = h * (1.0 + 1e-9) >= remaining;
            let h_try = if last { remaining } else { h };

            let accepted = match stepper {
                Stepper::Rk4 => {
                    self.rk4_step(h_try);
                    if !all_finite(&self.x_new) {
                        return self.fail(format!("non-finite state near l = {}", self.l));
                    }
                    true
                }
                Stepper::Dopri => {
                    let err = self.dopri_step(h_try);
                    if !err.is_finite() {
                        return self.fail(format!("non-finite derivative near l = {}", self.l));
                    }
                    let factor = if err == 0.0 {
                        MAX_FACTOR
                    } else {
                        (SAFETY * err.powf(-0.2)).clamp(MIN_FACTOR, MAX_FACTOR)
                    };
                    let ok = err <= 1.0;
                    h = h_try * if ok { factor } else { factor.min(1.0) };
                    if let Some(hmax) = self.config.max_step {
                        h = h.min(hmax);
                    }
                    if !ok {
                        self.rejected += 1;
                        if h <= 1e-14 * self.l.abs().max(1.0) {
                            return self.fail(format!("step size underflow at l = {}", self.l));
                        }
                    }
                    ok
                }
            };
            if !accepted {
                continue;
            }

            self.l = if last { l_max } else { self.l + h_try };
            std::mem::swap(&mut self.x, &mut self.x_new);
            match stepper {
                // FSAL: the seventh stage is F at the new point.
                Stepper::Dopri => self.dx.copy_from_slice(&self.k[6]),
                Stepper::Rk4 => {
                    problem.eval_rhs(self.l, &self.x, &mut self.dx);
                    if !all_finite(&self.dx) {
                        self.push_sample();
                        return self.fail(format!("non-finite derivative at l = {}", self.l));
                    }
                }
            }
            self.accepted += 1;

            self.last_monitors = problem.monitor_values(&self.x);
            for (r, &v) in self.ranges.iter_mut().zip(&self.last_monitors) {
                r.update(v);
            }
            if !all_finite(&self.last_monitors) {
                self.push_sample();
                return self.fail(format!("non-finite monitor at l = {}", self.l));
            }

            let converged = self.converged();
            let done = converged || last;
            if done || self.accepted % self.config.sample_stride == 0 {
                self.push_sample();
            }
            if converged {
                return Termination::Converged;
            }
            if last {
                return Termination::ReachedLMax;
            }
        }
    }

    /// Starting step heuristic from Hairer, Nørsett & Wanner.
    fn initial_step(&mut self) -> f64 {
        let cfg = self.config;
        let n = self.x.len().max(1) as f64;
        let scale = |x: f64| cfg.abs_tol + cfg.rel_tol * x.abs();
        let d0 = (self.x.iter().map(|&x| (x / scale(x)).powi(2)).sum::<f64>() / n).sqrt();
        let d1 = (self
            .x
            .iter()
            .zip(&self.dx)
            .map(|(&x, &f)| (f / scale(x)).powi(2))
            .sum::<f64>()
            / n)
            .sqrt();
        let h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
        let h0 = h0.min(cfg.l_max);
        for i in 0..self.x.len() {
            self.tmp[i] = self.x[i] + h0 * self.dx[i];
        }
        self.problem.eval_rhs(self.l + h0, &self.tmp, &mut self.k[1]);
        let d2 = (self
            .x
            .iter()
            .zip(self.k[1].iter().zip(&self.dx))
            .map(|(&x, (&f1, &f0))| ((f1 - f0) / scale(x)).powi(2))
            .sum::<f64>()
            / n)
            .sqrt()
            / h0;
        let h1 = if d1.max(d2) <= 1e-15 {
            (h0 * 1e-3).max(1e-6)
        } else {
            (0.01 / d1.max(d2)).powf(0.2)
        };
        let h = (100.0 * h0).min(h1);
        if h.is_finite() && h > 0.0 {
            h
        } else {
            1e-6
        }
    }

    fn rk4_step(&mut self, h: f64) {
        let n = self.x.len();
        let p = self.problem;
        let l = self.l;
        let [k1, k2, k3, k4, ..] = &mut self.k;
        k1.copy_from_slice(&self.dx);
        for i in 0..n {
            self.tmp[i] = self.x[i] + 0.5 * h * k1[i];
        }
        p.eval_rhs(l + 0.5 * h, &self.tmp, k2);
        for i in 0..n {
            self.tmp[i] = self.x[i] + 0.5 * h * k2[i];
        }
        p.eval_rhs(l + 0.5 * h, &self.tmp, k3);
        for i in 0..n {
            self.tmp[i] = self.x[i] + h * k3[i];
        }
        p.eval_rhs(l + h, &self.tmp, k4);
        for i in 0..n {
            self.x_new[i] = self.x[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
    }

    /// One Dormand–Prince trial step; returns the scaled error norm.
    fn dopri_step(&mut self, h: f64) -> f64 {
        let n = self.x.len();
        let p = self.problem;
        let l = self.l;
        let x = &self.x;
        let tmp = &mut self.tmp;
        let [k1, k2, k3, k4, k5, k6, k7] = &mut self.k;
        k1.copy_from_slice(&self.dx);

        for i in 0..n {
            tmp[i] = x[i] + h * A21 * k1[i];
        }
        p.eval_rhs(l + C2 * h, tmp, k2);
        for i in 0..n {
            tmp[i] = x[i] + h * (A31 * k1[i] + A32 * k2[i]);
        }
        p.eval_rhs(l + C3 * h, tmp, k3);
        for i in 0..n {
            tmp[i] = x[i] + h * (A41 * k1[i] + A42 * k2[i] + A43 * k3[i]);
        }
        p.eval_rhs(l + C4 * h, tmp, k4);
        for i in 0..n {
            tmp[i] = x[i] + h * (A51 * k1[i] + A52 * k2[i] + A53 * k3[i] + A54 * k4[i]);
        }
        p.eval_rhs(l + C5 * h, tmp, k5);
        for i in 0..n {
            tmp[i] = x[i] + h * (A61 * k1[i] + A62 * k2[i] + A63 * k3[i] + A64 * k4[i] + A65 * k5[i]);
        }
        p.eval_rhs(l + h, tmp, k6);
        for i in 0..n {
            self.x_new[i] = x[i] + h * (A71 * k1[i] + A73 * k3[i] + A74 * k4[i] + A75 * k5[i] + A76 * k6[i]);
        }
        p.eval_rhs(l + h, &self.x_new, k7);

        let mut sum = 0.0;
        for i in 0..n {
            let e = h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
            let sc = self.config.abs_tol + self.config.rel_tol * x[i].abs().max(self.x_new[i].abs());
            sum += (e / sc).powi(2);
        }
        if !all_finite(k7) || !all_finite(&self.x_new) {
            return f64::NAN;
        }
        (sum / n.max(1) as f64).sqrt()
    }

    fn finish(self, termination: Termination) -> FlowResult {
        FlowResult {
            final_l: self.l,
            final_state: self.x,
            trajectory: self.trajectory,
            termination,
            monitor_names: self.problem.monitor_names(),
            monitor_ranges: self.ranges,
            convergence_value: self.convergence_value,
            accepted_steps: self.accepted,
            rejected_steps: self.rejected,
            failure: self.failure,
        }
    }
}
