//! Empirical (non)stationarity certification.
//!
//! A returned point is probed with one-sided finite-difference quotients
//! along many directions at several radii. Forward differences only: these
//! objectives are locally Lipschitz but kinked, and central differences
//! average across kinks, hiding exactly the descent directions the probe
//! exists to find. A point where some direction descends is not stationary
//! no matter how many solvers stopped there.

use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::problems::Objective;
use crate::rng::Rng;

/// Probe settings.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbeConfig {
    /// Random unit directions sampled in addition to the 2*dim signed
    /// coordinate directions, which are always included.
    pub n_directions: usize,
    /// Strictly decreasing finite-difference radii.
    pub radii: Vec<f64>,
    pub seed: u64,
    /// Estimates at or below this value classify the point as non-stationary.
    pub descent_threshold: f64,
}

impl Default for ProbeConfig {
    fn default() -> Self {
        ProbeConfig {
            n_directions: 256,
            radii: vec![1e-2, 1e-4, 1e-6],
            seed: 0,
            descent_threshold: -1e-3,
        }
    }
}

impl ProbeConfig {
    pub fn validate(&self) -> Result<(), Error> {
        if self.radii.is_empty() {
            return Err(Error::parse("probe needs at least one radius"));
        }
        for w in self.radii.windows(2) {
            if w[1] >= w[0] {
                return Err(Error::parse("probe radii must be strictly decreasing"));
            }
        }
        if self.radii.iter().any(|r| r.is_nan() || *r <= 0.0) {
            return Err(Error::parse("probe radii must be positive"));
        }
        Ok(())
    }
}

/// Probe verdict.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Classification {
    /// Some sampled direction descends faster than the threshold.
    DescentFound,
    /// No sampled direction descends beyond the threshold.
    ApproximatelyStationary,
    /// The probed point itself has infinite objective value.
    Infeasible,
}

/// Stationarity evidence at a point.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProbeReport {
    pub point: Vec<f64>,
    pub value: f64,
    pub radii: Vec<f64>,
    /// `estimates[d][r]` is the forward quotient along direction d at radius
    /// r; +inf marks an infeasible trial point.
    pub estimates: Vec<Vec<f64>>,
    /// Sampled directions, unit length, coordinate directions first.
    pub directions: Vec<Vec<f64>>,
    /// Minimum finite estimate at the smallest radius that has any.
    pub min_estimate: Option<f64>,
    pub best_direction: Option<Vec<f64>>,
    pub classification: Classification,
}

impl ProbeReport {
    /// Minimum finite estimate at each radius (None where all trials were
    /// infeasible).
    pub fn min_per_radius(&self) -> Vec<Option<f64>> {
        (0..self.radii.len())
            .map(|ri| {
                self.estimates
                    .iter()
                    .map(|row| row[ri])
                    .filter(|v| v.is_finite())
                    .fold(None, |acc: Option<f64>, v| {
                        Some(acc.map_or(v, |a| a.min(v)))
                    })
            })
            .collect()
    }
}

/// Samples directional difference quotients around `x`.
///
/// Directions: the 2*dim signed coordinate directions, then `n_directions`
/// seeded uniform unit vectors. Quotients: (f(x + r u) - f(x)) / r for each
/// radius r. Infeasible trials are recorded as +inf and excluded from the
/// minimum; classification compares the minimum at the smallest
/// finite-yielding radius against the descent threshold.
pub fn probe(f: &dyn Objective, x: &[f64], cfg: &ProbeConfig) -> Result<ProbeReport, Error> {
    cfg.validate()?;
    if x.len() != f.dim() {
        return Err(Error::dim(format!(
            "probe point has length {}, objective '{}' needs {}",
            x.len(),
            f.name(),
            f.dim()
        )));
    }
    let dim = x.len();
    let fx = f.value(x);
    if !fx.is_finite() {
        return Ok(ProbeReport {
            point: x.to_vec(),
            value: fx,
            radii: cfg.radii.clone(),
            estimates: vec![],
            directions: vec![],
            min_estimate: None,
            best_direction: None,
            classification: Classification::Infeasible,
        });
    }

    let mut directions: Vec<Vec<f64>> = Vec::with_capacity(2 * dim + cfg.n_directions);
    for i in 0..dim {
        for sign in [1.0f64, -1.0] {
            let mut e = vec![0.0; dim];
            e[i] = sign;
            directions.push(e);
        }
    }
    let mut rng = Rng::new(cfg.seed);
    for _ in 0..cfg.n_directions {
        directions.push(rng.unit_vector(dim));
    }

    let estimates: Vec<Vec<f64>> = directions
        .iter()
        .map(|u| {
            cfg.radii
                .iter()
                .map(|&r| {
                    let trial: Vec<f64> =
                        x.iter().zip(u).map(|(xi, ui)| xi + r * ui).collect();
                    let ft = f.value(&trial);
                    if ft.is_finite() {
                        (ft - fx) / r
                    } else {
                        f64::INFINITY
                    }
                })
                .collect()
        })
        .collect();

    // Smallest radius with at least one finite estimate.
    let mut min_estimate = None;
    let mut best_direction = None;
    for ri in (0..cfg.radii.len()).rev() {
        let mut best: Option<(usize, f64)> = None;
        for (di, row) in estimates.iter().enumerate() {
            let v = row[ri];
            if v.is_finite() && best.is_none_or(|(_, b)| v < b) {
                best = Some((di, v));
            }
        }
        if let Some((di, v)) = best {
            min_estimate = Some(v);
            best_direction = Some(directions[di].clone());
            break;
        }
    }

    let classification = match min_estimate {
        Some(v) if v <= cfg.descent_threshold => Classification::DescentFound,
        Some(_) => Classification::ApproximatelyStationary,
        None => Classification::ApproximatelyStationary,
    };

    Ok(ProbeReport {
        point: x.to_vec(),
        value: fx,
        radii: cfg.radii.clone(),
        estimates,
        directions,
        min_estimate,
        best_direction,
        classification,
    })
}
