//! Derivative-free minimization engines with auditable run traces.
//!
//! Five methods share one trace contract: Nelder-Mead, restarted Nelder-Mead,
//! multidirectional search, mesh adaptive direct search, and the alternating
//! coordinate-descent baseline. Every trace carries a monotone non-increasing
//! incumbent sequence, the evaluation count, and the stop reason, so runs can
//! be compared and post-checked mechanically.

mod coordinate;
mod mads;
mod mds;
mod nelder_mead;
mod restart;

pub use coordinate::coordinate_descent;
pub use mads::mads;
pub use mds::mds;
pub use nelder_mead::nelder_mead;
pub use restart::{restart, InnerSolver};

use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::problems::{FilterDims, Objective};
use crate::rng::Rng;

/// Shared optimizer settings.
#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerConfig {
    /// Total evaluation budget; methods check it between iterations, so a run
    /// may overshoot by at most one iteration's worth of evaluations.
    pub max_evaluations: usize,
    /// Relative objective-spread stop (simplex methods).
    pub f_tolerance: f64,
    /// Simplex-diameter / mesh-size stop.
    pub x_tolerance: f64,
    /// Initial simplex edge / mesh size, relative to max(1, ||x0||_inf).
    pub initial_step: f64,
    /// Seed for direction sampling where applicable.
    pub seed: u64,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        OptimizerConfig {
            max_evaluations: 10_000,
            f_tolerance: 1e-10,
            x_tolerance: 1e-9,
            initial_step: 0.1,
            seed: 0,
        }
    }
}

impl OptimizerConfig {
    pub fn validate(&self) -> Result<(), Error> {
        if self.max_evaluations < 1 {
            return Err(Error::parse("max_evaluations must be >= 1"));
        }
        if [self.f_tolerance, self.x_tolerance, self.initial_step]
            .iter()
            .any(|v| v.is_nan() || *v <= 0.0)
        {
            return Err(Error::parse(
                "f_tolerance, x_tolerance and initial_step must be > 0",
            ));
        }
        Ok(())
    }

    /// Absolute initial step for a start point.
    pub(crate) fn step_for(&self, x0: &[f64]) -> f64 {
        let inf_norm = x0.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        self.initial_step * inf_norm.max(1.0)
    }
}

/// Why a run stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StopReason {
    ToleranceF,
    ToleranceX,
    Budget,
    NoImprovement,
}

/// Record of one optimization run.
#[derive(Debug, Clone)]
pub struct RunTrace {
    pub method: String,
    /// Best value so far, recorded after initialization and after every
    /// iteration; non-increasing by construction.
    pub incumbent_values: Vec<f64>,
    pub final_x: Vec<f64>,
    pub final_value: f64,
    pub evaluations: usize,
    pub stop_reason: StopReason,
    pub seed: u64,
    pub start_index: usize,
    pub wall_time: Duration,
    /// Final mesh size (MADS only).
    pub final_mesh: Option<f64>,
    /// Per-run failure recorded instead of thrown, for multistart batches.
    pub error: Option<String>,
}

/// Disjoint two-block partition of the decision indices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoordinateSplit {
    pub subset_one: Vec<usize>,
    pub subset_two: Vec<usize>,
}

impl CoordinateSplit {
    pub fn new(subset_one: Vec<usize>, subset_two: Vec<usize>) -> Self {
        CoordinateSplit {
            subset_one,
            subset_two,
        }
    }

    /// First indices vs the rest; the generic split for unstructured
    /// objectives.
    pub fn halves(dim: usize) -> Result<Self, Error> {
        if dim < 2 {
            return Err(Error::dim("coordinate split needs dim >= 2"));
        }
        let mid = dim / 2;
        Ok(CoordinateSplit {
            subset_one: (0..mid).collect(),
            subset_two: (mid..dim).collect(),
        })
    }

    /// The natural bilinear split for the filter problem: {A-hat, B-hat}
    /// entries against {C-hat, D-hat} entries.
    pub fn filter_bilinear(dims: FilterDims) -> Result<Self, Error> {
        let cut = dims.order * dims.order + dims.order * dims.inputs;
        let total = dims.decision_len();
        if cut == 0 || cut == total {
            return Err(Error::dim(
                "bilinear split degenerates for order-0 filters; use an explicit split",
            ));
        }
        Ok(CoordinateSplit {
            subset_one: (0..cut).collect(),
            subset_two: (cut..total).collect(),
        })
    }

    pub fn validate(&self, dim: usize) -> Result<(), Error> {
        if self.subset_one.is_empty() || self.subset_two.is_empty() {
            return Err(Error::dim("coordinate split subsets must be nonempty"));
        }
        let mut seen = vec![false; dim];
        for &i in self.subset_one.iter().chain(&self.subset_two) {
            if i >= dim {
                return Err(Error::dim(format!(
                    "split index {i} out of range for dim {dim}"
                )));
            }
            if seen[i] {
                return Err(Error::dim(format!("split index {i} appears twice")));
            }
            seen[i] = true;
        }
        if seen.iter().any(|s| !s) {
            return Err(Error::dim("split must cover every coordinate"));
        }
        Ok(())
    }
}

/// Method selector with per-method parameters.
#[derive(Debug, Clone, PartialEq)]
pub enum MethodSpec {
    NelderMead,
    RestartedNelderMead {
        restart_tol: f64,
    },
    Mds,
    Mads,
    CoordinateDescent {
        split: CoordinateSplit,
        outer_tol: f64,
        max_outer: usize,
    },
}

impl MethodSpec {
    pub fn name(&self) -> &'static str {
        match self {
            MethodSpec::NelderMead => "nm",
            MethodSpec::RestartedNelderMead { .. } => "nm-restart",
            MethodSpec::Mds => "mds",
            MethodSpec::Mads => "mads",
            MethodSpec::CoordinateDescent { .. } => "cd",
        }
    }
}

/// Shared evaluation counter; methods check the budget between iterations.
pub(crate) struct Counter {
    used: usize,
    max: usize,
}

impl Counter {
    pub(crate) fn new(max: usize) -> Self {
        Counter { used: 0, max }
    }

    pub(crate) fn eval(&mut self, f: &dyn Objective, x: &[f64]) -> f64 {
        self.used += 1;
        let v = f.value(x);
        debug_assert!(!v.is_nan(), "objective '{}' returned NaN", f.name());
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    }

    pub(crate) fn used(&self) -> usize {
        self.used
    }

    pub(crate) fn exhausted(&self) -> bool {
        self.used >= self.max
    }
}

/// Outcome of an inner solver run, before trace assembly.
pub(crate) struct InnerOutcome {
    pub(crate) x: Vec<f64>,
    pub(crate) value: f64,
    pub(crate) reason: StopReason,
    pub(crate) final_mesh: Option<f64>,
}

pub(crate) fn finish_trace(
    method: &str,
    cfg: &OptimizerConfig,
    started: Instant,
    counter: &Counter,
    incumbents: Vec<f64>,
    outcome: InnerOutcome,
) -> RunTrace {
    debug_assert_eq!(incumbents.last().copied(), Some(outcome.value));
    RunTrace {
        method: method.into(),
        incumbent_values: incumbents,
        final_x: outcome.x,
        final_value: outcome.value,
        evaluations: counter.used(),
        stop_reason: outcome.reason,
        seed: cfg.seed,
        start_index: 0,
        wall_time: started.elapsed(),
        final_mesh: outcome.final_mesh,
        error: None,
    }
}

/// Runs the selected method once.
pub fn run_method(
    spec: &MethodSpec,
    f: &dyn Objective,
    x0: &[f64],
    cfg: &OptimizerConfig,
) -> Result<RunTrace, Error> {
    match spec {
        MethodSpec::NelderMead => nelder_mead(f, x0, cfg),
        MethodSpec::RestartedNelderMead { restart_tol } => {
            restart(InnerSolver::NelderMead, f, x0, cfg, *restart_tol)
        }
        MethodSpec::Mds => mds(f, x0, cfg),
        MethodSpec::Mads => mads(f, x0, cfg),
        MethodSpec::CoordinateDescent {
            split,
            outer_tol,
            max_outer,
        } => coordinate_descent(f, x0, split, cfg, *outer_tol, *max_outer),
    }
}

/// Runs the method independently from each start. Runs are deterministic
/// functions of (f, start, cfg, master_seed, index), so the result does not
/// depend on the parallel schedule; per-run failures are recorded in the
/// trace instead of aborting the batch.
pub fn multistart(
    f: &dyn Objective,
    starts: &[Vec<f64>],
    spec: &MethodSpec,
    cfg: &OptimizerConfig,
    master_seed: u64,
) -> Vec<RunTrace> {
    starts
        .par_iter()
        .enumerate()
        .map(|(i, x0)| {
            let mut run_cfg = cfg.clone();
            let mut seed_rng = Rng::derive(master_seed, i as u64);
            run_cfg.seed = seed_rng.next_u64();
            let mut trace = match run_method(spec, f, x0, &run_cfg) {
                Ok(t) => t,
                Err(e) => RunTrace {
                    method: spec.name().into(),
                    incumbent_values: vec![f64::INFINITY],
                    final_x: x0.clone(),
                    final_value: f64::INFINITY,
                    evaluations: 0,
                    stop_reason: StopReason::Budget,
                    seed: run_cfg.seed,
                    start_index: i,
                    wall_time: Duration::ZERO,
                    final_mesh: None,
                    error: Some(e.to_string()),
                },
            };
            trace.start_index = i;
            trace
        })
        .collect()
}

/// Checks the trace contract; returns human-readable violations (empty when
/// clean). `dim` sizes the allowed one-iteration budget overshoot.
pub fn check_trace(trace: &RunTrace, cfg: &OptimizerConfig, dim: usize) -> Vec<String> {
    let mut violations = Vec::new();
    for w in trace.incumbent_values.windows(2) {
        if w[1] > w[0] {
            violations.push(format!(
                "{}[{}]: incumbent increased from {} to {}",
                trace.method, trace.start_index, w[0], w[1]
            ));
            break;
        }
    }
    match trace.incumbent_values.last() {
        Some(last) if *last == trace.final_value => {}
        Some(last) => violations.push(format!(
            "{}[{}]: final value {} is not the last incumbent {}",
            trace.method, trace.start_index, trace.final_value, last
        )),
        None => violations.push(format!(
            "{}[{}]: empty incumbent sequence",
            trace.method, trace.start_index
        )),
    }
    let allowance = 2 * dim + 2;
    if trace.evaluations > cfg.max_evaluations + allowance {
        violations.push(format!(
            "{}[{}]: evaluations {} exceed budget {} plus one-iteration allowance {}",
            trace.method, trace.start_index, trace.evaluations, cfg.max_evaluations, allowance
        ));
    }
    if trace.stop_reason == StopReason::ToleranceX {
        if let Some(mesh) = trace.final_mesh {
            if mesh >= cfg.x_tolerance {
                violations.push(format!(
                    "{}[{}]: ToleranceX stop with mesh {} >= x_tolerance {}",
                    trace.method, trace.start_index, mesh, cfg.x_tolerance
                ));
            }
        }
    }
    violations
}
