//! Mesh adaptive direct search with extreme-barrier constraint handling.
//!
//! Each iteration polls 2n directions built from a seeded random Householder
//! reflector, so the union of poll directions over iterations is dense on the
//! sphere — the property that lets the method escape descent cones that
//! coordinate or fixed-pattern schemes never sample. Poll size is the square
//! root of the mesh size; the mesh doubles on success and shrinks by 1/4 on
//! failure, and the run stops when the mesh drops below x_tolerance.

use std::time::Instant;

use crate::error::Error;
use crate::optimizers::nelder_mead::check_dim;
use crate::optimizers::{finish_trace, Counter, InnerOutcome, OptimizerConfig, RunTrace, StopReason};
use crate::problems::Objective;
use crate::rng::Rng;

/// Integer step vector (in mesh cells) plus its frame slot, when it has one.
type Trial = (Vec<f64>, Option<(usize, f64)>);

pub fn mads(f: &dyn Objective, x0: &[f64], cfg: &OptimizerConfig) -> Result<RunTrace, Error> {
    cfg.validate()?;
    check_dim(f, x0)?;
    let started = Instant::now();
    let mut counter = Counter::new(cfg.max_evaluations);
    let mut incumbents = Vec::new();
    let outcome = mads_inner(f, &mut counter, x0, cfg, &mut incumbents)?;
    Ok(finish_trace("mads", cfg, started, &counter, incumbents, outcome))
}

pub(crate) fn mads_inner(
    f: &dyn Objective,
    counter: &mut Counter,
    x0: &[f64],
    cfg: &OptimizerConfig,
    incumbents: &mut Vec<f64>,
) -> Result<InnerOutcome, Error> {
    let n = x0.len();
    let mut x = x0.to_vec();
    let mut fx = counter.eval(f, &x);
    if !fx.is_finite() {
        return Err(Error::InfeasibleStart);
    }
    incumbents.push(fx);

    let mut rng = Rng::new(cfg.seed);
    let mut mesh = cfg.step_for(x0);
    let mesh_cap = mesh.max(1.0);
    // Householder frame and the last successful poll direction. The frame
    // survives one failed poll (a mesh-aligned direction that overshot often
    // works again at the refined mesh) and is resampled after two consecutive
    // failures; failures recur on any bounded-below objective, so the
    // direction union stays dense.
    let mut frame = rng.unit_vector(n);
    let mut last_success: Option<(usize, f64)> = None;
    let mut consecutive_failures = 0usize;
    // The most recent successful step as a primitive integer mesh vector
    // with a consecutive-failure age; kept across frame resamples, rescaled
    // by the current mesh and polled in both signs, so a working lattice
    // direction is not forgotten while it keeps paying, and dropped once it
    // stops.
    let mut pattern: Option<(Vec<f64>, usize)> = None;
    const PATTERN_MAX_AGE: usize = 12;

    let reason = loop {
        if mesh < cfg.x_tolerance {
            break StopReason::ToleranceX;
        }
        if counter.exhausted() {
            break StopReason::Budget;
        }

        // Columns of I - 2 v v^T are orthonormal; polling both signs gives a
        // positive spanning set. Poll points live on the mesh: each step is
        // an integer vector of mesh cells along a column direction, with
        // magnitude drawn log-uniformly between one cell and the poll radius
        // poll_size/mesh = 1/sqrt(mesh). Opportunistic order: the direction
        // that succeeded last is tried first.
        let ratio = (1.0 / mesh.sqrt()).max(1.0);
        let magnitudes: Vec<f64> = (0..n).map(|_| ratio.powf(rng.uniform())).collect();
        let mut order: Vec<(usize, f64)> = Vec::with_capacity(2 * n);
        if let Some(hot) = last_success {
            order.push(hot);
        }
        for i in 0..n {
            for sign in [1.0f64, -1.0] {
                if last_success != Some((i, sign)) {
                    order.push((i, sign));
                }
            }
        }

        // Trials: retained patterns (rescaled to the current mesh), then the
        // frame directions; at most 2n polls per iteration.
        let mut trials: Vec<Trial> = Vec::with_capacity(2 * n + 2);
        if let Some((z, _)) = &pattern {
            trials.push((z.clone(), None));
            trials.push((z.iter().map(|v| -v).collect(), None));
        }
        for (i, sign) in order {
            let mut steps: Vec<f64> = (0..n)
                .map(|j| {
                    let e = if i == j { 1.0 } else { 0.0 };
                    let dir = e - 2.0 * frame[i] * frame[j];
                    (sign * magnitudes[i] * dir).round()
                })
                .collect();
            if steps.iter().all(|z| *z == 0.0) {
                // Too coarse to see this direction; take a single mesh step
                // along its largest component.
                let (jmax, dmax) = (0..n)
                    .map(|j| {
                        let e = if i == j { 1.0 } else { 0.0 };
                        (j, e - 2.0 * frame[i] * frame[j])
                    })
                    .max_by(|a, b| a.1.abs().partial_cmp(&b.1.abs()).expect("finite"))
                    .expect("n >= 1");
                steps[jmax] = (sign * dmax).signum();
            }
            trials.push((steps, Some((i, sign))));
        }

        let mut success = None;
        for (steps, dir) in trials {
            let trial: Vec<f64> = (0..n).map(|j| x[j] + mesh * steps[j]).collect();
            let ft = counter.eval(f, &trial);
            if ft < fx {
                success = Some((trial, ft, dir, steps));
                break;
            }
        }

        match success {
            Some((trial, ft, dir, steps)) => {
                x = trial;
                fx = ft;
                mesh = (mesh * 4.0).min(mesh_cap);
                if dir.is_some() {
                    last_success = dir;
                }
                pattern = Some((primitive_steps(steps), 0));
                consecutive_failures = 0;
            }
            None => {
                mesh *= 0.25;
                consecutive_failures += 1;
                if let Some((_, age)) = pattern.as_mut() {
                    *age += 1;
                    if *age >= PATTERN_MAX_AGE {
                        pattern = None;
                    }
                }
                // A previously successful direction deserves one retry at the
                // refined mesh (it often only overshot); a frame with no
                // success to its name is resampled immediately.
                if last_success.is_none() || consecutive_failures >= 2 {
                    frame = rng.unit_vector(n);
                    last_success = None;
                    consecutive_failures = 0;
                }
            }
        }
        incumbents.push(fx);
    };

    Ok(InnerOutcome {
        x,
        value: fx,
        reason,
        final_mesh: Some(mesh),
    })
}

/// Reduces an integer step vector to its primitive direction (divides by the
/// gcd of the absolute entries), so a retained pattern rescales cleanly with
/// the mesh.
fn primitive_steps(steps: Vec<f64>) -> Vec<f64> {
    let mut g: u64 = 0;
    for s in &steps {
        let v = s.abs().min(1e15) as u64;
        g = gcd(g, v);
    }
    if g <= 1 {
        return steps;
    }
    steps.into_iter().map(|s| s / g as f64).collect()
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}
