//! Classical Nelder-Mead simplex method.

use std::time::Instant;

use crate::error::Error;
use crate::optimizers::{finish_trace, Counter, InnerOutcome, OptimizerConfig, RunTrace, StopReason};
use crate::problems::Objective;

const REFLECT: f64 = 1.0;
const EXPAND: f64 = 2.0;
const CONTRACT: f64 = 0.5;
const SHRINK: f64 = 0.5;

/// Nelder-Mead with the classical coefficients (1, 2, 0.5, 0.5).
///
/// The initial simplex is x0 plus one point per coordinate offset by the
/// configured step. +inf values are legal vertices ordered worst; ties break
/// on the lower vertex index so runs are deterministic.
pub fn nelder_mead(f: &dyn Objective, x0: &[f64], cfg: &OptimizerConfig) -> Result<RunTrace, Error> {
    cfg.validate()?;
    check_dim(f, x0)?;
    let started = Instant::now();
    let mut counter = Counter::new(cfg.max_evaluations);
    let mut incumbents = Vec::new();
    let outcome = nelder_mead_inner(f, &mut counter, x0, cfg, &mut incumbents);
    Ok(finish_trace("nm", cfg, started, &counter, incumbents, outcome))
}

pub(crate) fn check_dim(f: &dyn Objective, x0: &[f64]) -> Result<(), Error> {
    if x0.len() != f.dim() || x0.is_empty() {
        return Err(Error::dim(format!(
            "start has length {}, objective '{}' needs {}",
            x0.len(),
            f.name(),
            f.dim()
        )));
    }
    Ok(())
}

/// Indices of the simplex sorted best-first by (value, index).
fn order(values: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| {
        values[a]
            .partial_cmp(&values[b])
            .expect("objective values are never NaN")
            .then(a.cmp(&b))
    });
    idx
}

pub(crate) fn nelder_mead_inner(
    f: &dyn Objective,
    counter: &mut Counter,
    x0: &[f64],
    cfg: &OptimizerConfig,
    incumbents: &mut Vec<f64>,
) -> InnerOutcome {
    let n = x0.len();
    let h = cfg.step_for(x0);

    let mut simplex: Vec<Vec<f64>> = Vec::with_capacity(n + 1);
    let mut values: Vec<f64> = Vec::with_capacity(n + 1);
    simplex.push(x0.to_vec());
    values.push(counter.eval(f, x0));
    for i in 0..n {
        let mut v = x0.to_vec();
        v[i] += h;
        values.push(counter.eval(f, &v));
        simplex.push(v);
    }

    let mut ord = order(&values);
    incumbents.push(values[ord[0]]);

    let reason = loop {
        let best = values[ord[0]];
        let worst = values[ord[n]];

        if best.is_finite() && worst.is_finite() {
            let spread = (worst - best) / best.abs().max(1.0);
            if spread <= cfg.f_tolerance {
                break StopReason::ToleranceF;
            }
        }
        let diameter = simplex
            .iter()
            .map(|v| {
                v.iter()
                    .zip(&simplex[ord[0]])
                    .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()))
            })
            .fold(0.0f64, f64::max);
        if diameter <= cfg.x_tolerance {
            break StopReason::ToleranceX;
        }
        if counter.exhausted() {
            break StopReason::Budget;
        }

        // Centroid of all but the worst vertex.
        let worst_idx = ord[n];
        let mut centroid = vec![0.0; n];
        for &i in ord.iter().take(n) {
            for (c, v) in centroid.iter_mut().zip(&simplex[i]) {
                *c += v;
            }
        }
        for c in centroid.iter_mut() {
            *c /= n as f64;
        }
        let towards = |t: f64| -> Vec<f64> {
            centroid
                .iter()
                .zip(&simplex[worst_idx])
                .map(|(c, w)| c + t * (c - w))
                .collect()
        };

        let reflected = towards(REFLECT);
        let f_reflected = counter.eval(f, &reflected);

        if f_reflected < values[ord[0]] {
            // Try to go farther in the same direction.
            let expanded = towards(EXPAND);
            let f_expanded = counter.eval(f, &expanded);
            if f_expanded < f_reflected {
                simplex[worst_idx] = expanded;
                values[worst_idx] = f_expanded;
            } else {
                simplex[worst_idx] = reflected;
                values[worst_idx] = f_reflected;
            }
        } else if f_reflected < values[ord[n - 1]] {
            simplex[worst_idx] = reflected;
            values[worst_idx] = f_reflected;
        } else {
            let accepted = if f_reflected < values[worst_idx] {
                // Outside contraction.
                let contracted = towards(CONTRACT);
                let f_contracted = counter.eval(f, &contracted);
                if f_contracted <= f_reflected {
                    simplex[worst_idx] = contracted;
                    values[worst_idx] = f_contracted;
                    true
                } else {
                    false
                }
            } else {
                // Inside contraction.
                let contracted = towards(-CONTRACT);
                let f_contracted = counter.eval(f, &contracted);
                if f_contracted < values[worst_idx] {
                    simplex[worst_idx] = contracted;
                    values[worst_idx] = f_contracted;
                    true
                } else {
                    false
                }
            };
            if !accepted {
                // Shrink toward the best vertex.
                let best_point = simplex[ord[0]].clone();
                for &i in ord.iter().skip(1) {
                    let v: Vec<f64> = simplex[i]
                        .iter()
                        .zip(&best_point)
                        .map(|(x, b)| b + SHRINK * (x - b))
                        .collect();
                    values[i] = counter.eval(f, &v);
                    simplex[i] = v;
                }
            }
        }

        ord = order(&values);
        incumbents.push(values[ord[0]]);
    };

    InnerOutcome {
        x: simplex[ord[0]].clone(),
        value: values[ord[0]],
        reason,
        final_mesh: None,
    }
}
