//! Restart wrapper: re-launch the inner solver from its own answer with a
//! fresh full-size simplex/mesh until the runs stop paying for themselves.
//!
//! Simplex methods converge by shrinking their geometry, which strands them
//! when the shrink happens against a kink or a constraint border; restarting
//! from the last answer with a fresh simplex recovers most of that loss at
//! negligible cost.

use std::time::Instant;

use crate::error::Error;
use crate::optimizers::mads::mads_inner;
use crate::optimizers::mds::mds_inner;
use crate::optimizers::nelder_mead::{check_dim, nelder_mead_inner};
use crate::optimizers::{finish_trace, Counter, InnerOutcome, OptimizerConfig, RunTrace, StopReason};
use crate::problems::Objective;
use crate::rng::Rng;

/// Which solver the restart wrapper drives.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InnerSolver {
    NelderMead,
    Mds,
    Mads,
}

impl InnerSolver {
    fn run(
        &self,
        f: &dyn Objective,
        counter: &mut Counter,
        x0: &[f64],
        cfg: &OptimizerConfig,
        incumbents: &mut Vec<f64>,
    ) -> Result<InnerOutcome, Error> {
        match self {
            InnerSolver::NelderMead => Ok(nelder_mead_inner(f, counter, x0, cfg, incumbents)),
            InnerSolver::Mds => Ok(mds_inner(f, counter, x0, cfg, incumbents)),
            InnerSolver::Mads => mads_inner(f, counter, x0, cfg, incumbents),
        }
    }

    fn label(&self) -> &'static str {
        match self {
            InnerSolver::NelderMead => "nm-restart",
            InnerSolver::Mds => "mds-restart",
            InnerSolver::Mads => "mads-restart",
        }
    }
}

/// Repeatedly invokes the inner solver from the previous answer until one
/// round improves the objective by less than `restart_tol` (relative) or the
/// shared budget runs out.
pub fn restart(
    inner: InnerSolver,
    f: &dyn Objective,
    x0: &[f64],
    cfg: &OptimizerConfig,
    restart_tol: f64,
) -> Result<RunTrace, Error> {
    cfg.validate()?;
    check_dim(f, x0)?;
    if restart_tol.is_nan() || restart_tol <= 0.0 {
        return Err(Error::parse("restart_tol must be > 0"));
    }
    let started = Instant::now();
    let mut counter = Counter::new(cfg.max_evaluations);
    let mut incumbents = Vec::new();
    let outcome = restart_inner(inner, f, &mut counter, x0, cfg, restart_tol, &mut incumbents)?;
    Ok(finish_trace(
        inner.label(),
        cfg,
        started,
        &counter,
        incumbents,
        outcome,
    ))
}

pub(crate) fn restart_inner(
    inner: InnerSolver,
    f: &dyn Objective,
    counter: &mut Counter,
    x0: &[f64],
    cfg: &OptimizerConfig,
    restart_tol: f64,
    incumbents: &mut Vec<f64>,
) -> Result<InnerOutcome, Error> {
    let mut x = x0.to_vec();
    let mut previous_final: Option<f64> = None;
    let mut run_index = 0u64;

    loop {
        let mut run_cfg = cfg.clone();
        run_cfg.seed = Rng::derive(cfg.seed, run_index).next_u64();
        let first_of_run = incumbents.len();
        let outcome = inner.run(f, counter, &x, &run_cfg, incumbents)?;
        run_index += 1;

        // Baseline for the first run is f(x0), the run's own first incumbent.
        let baseline = previous_final.unwrap_or_else(|| incumbents[first_of_run]);
        let improvement = if baseline.is_infinite() && outcome.value.is_infinite() {
            0.0
        } else {
            (baseline - outcome.value) / baseline.abs().max(1.0)
        };
        previous_final = Some(outcome.value);
        x = outcome.x;

        if improvement < restart_tol {
            return Ok(InnerOutcome {
                x,
                value: outcome.value,
                reason: StopReason::NoImprovement,
                final_mesh: outcome.final_mesh,
            });
        }
        if counter.exhausted() {
            return Ok(InnerOutcome {
                x,
                value: outcome.value,
                reason: StopReason::Budget,
                final_mesh: outcome.final_mesh,
            });
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::optimizers::nelder_mead;
    use crate::problems::{synthetic_suite, FnObjective};

    #[test]
    fn one_extra_run_when_already_converged() {
        // Smooth quadratic: converge once, then restart from the answer.
        let f = FnObjective::new(2, "quad", |x: &[f64]| {
            (x[0] - 1.0).powi(2) + (x[1] + 2.0).powi(2)
        });
        let cfg = OptimizerConfig {
            max_evaluations: 20_000,
            ..Default::default()
        };
        let first = nelder_mead(&f, &[0.0, 0.0], &cfg).unwrap();
        // From the converged point the wrapper must do exactly one inner run.
        let wrapped = restart(InnerSolver::NelderMead, &f, &first.final_x, &cfg, 1e-8).unwrap();
        assert_eq!(wrapped.stop_reason, StopReason::NoImprovement);
        // One run's cost is bounded by a couple of simplex lifetimes, far
        // below what two full runs would need on a fresh problem.
        assert!(wrapped.evaluations < first.evaluations + 50);
    }

    #[test]
    fn restarts_beat_single_run_on_nonsmooth_suite() {
        // Paired comparison on the max-of-quadratics entry.
        let suite = synthetic_suite();
        let maxquad = &suite[1].objective;
        let mut wins = 0usize;
        let total = 50usize;
        let mut rng = crate::rng::Rng::new(0xBEEF);
        for _ in 0..total {
            let x0: Vec<f64> = (0..4).map(|_| rng.range(-2.0, 2.0)).collect();
            let cfg = OptimizerConfig {
                max_evaluations: 4000,
                ..Default::default()
            };
            let single = nelder_mead(maxquad.as_ref(), &x0, &cfg).unwrap();
            let restarted =
                restart(InnerSolver::NelderMead, maxquad.as_ref(), &x0, &cfg, 1e-9).unwrap();
            if restarted.final_value <= single.final_value + 1e-12 {
                wins += 1;
            }
        }
        assert!(
            wins * 10 >= total * 8,
            "restart won only {wins}/{total} paired runs"
        );
    }

    #[test]
    fn budget_shared_across_runs() {
        let f = FnObjective::new(3, "sphere", |x: &[f64]| x.iter().map(|v| v * v).sum());
        let cfg = OptimizerConfig {
            max_evaluations: 500,
            f_tolerance: 1e-15,
            x_tolerance: 1e-14,
            ..Default::default()
        };
        let trace = restart(InnerSolver::NelderMead, &f, &[3.0, -1.0, 2.0], &cfg, 1e-14).unwrap();
        assert!(trace.evaluations <= 500 + 8);
    }
}
