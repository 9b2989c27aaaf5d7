//! System norms: discrete-time H-infinity (adaptive grid + golden-section
//! refinement, with an independent dense-grid oracle) and H2 via the
//! discrete Lyapunov equation.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::statespace::{solve_discrete_lyapunov, spectral_radius, CMatrix, StateSpace};

/// Result of an H-infinity evaluation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HinfResult {
    /// Peak gain over omega in [0, pi].
    pub value: f64,
    /// Frequency attaining the peak.
    pub peak_omega: f64,
    /// Frequency-response evaluations spent.
    pub evaluations: usize,
}

/// Options for the adaptive H-infinity evaluation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormOptions {
    /// Uniform coarse grid size on [0, pi], endpoints included.
    pub coarse_grid_points: usize,
    /// Number of local maxima refined by golden-section search.
    pub refine_top_k: usize,
    /// Absolute tolerance in omega for the refinement.
    pub refine_tolerance: f64,
    /// Stability margin required of the system (rho < 1 - margin).
    pub stability_margin: f64,
}

impl Default for NormOptions {
    fn default() -> Self {
        NormOptions {
            coarse_grid_points: 512,
            refine_top_k: 5,
            refine_tolerance: 1e-9,
            stability_margin: 0.0,
        }
    }
}

impl NormOptions {
    pub fn validate(&self) -> Result<(), Error> {
        if self.coarse_grid_points < 2 {
            return Err(Error::parse("coarse_grid_points must be >= 2"));
        }
        if self.refine_top_k < 1 {
            return Err(Error::parse("refine_top_k must be >= 1"));
        }
        if self.refine_tolerance.is_nan() || self.refine_tolerance <= 0.0 {
            return Err(Error::parse("refine_tolerance must be > 0"));
        }
        if self.stability_margin < 0.0 {
            return Err(Error::parse("stability_margin must be >= 0"));
        }
        Ok(())
    }
}

/// Largest singular value of a complex matrix; 0 for an empty matrix.
///
/// Computed as the square root of the top eigenvalue of the smaller Gram
/// matrix, diagonalized by cyclic Hermitian Jacobi sweeps.
pub fn sigma_max(m: &CMatrix) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    let (p, q) = (m.rows(), m.cols());
    if p == 1 && q == 1 {
        return m.get(0, 0).norm();
    }
    // Gram matrix on the smaller side.
    let d = p.min(q);
    let mut g = vec![Complex64::new(0.0, 0.0); d * d];
    if q <= p {
        // G = M^H M
        for i in 0..q {
            for j in i..q {
                let mut acc = Complex64::new(0.0, 0.0);
                for k in 0..p {
                    acc += m.get(k, i).conj() * m.get(k, j);
                }
                g[i * d + j] = acc;
                g[j * d + i] = acc.conj();
            }
        }
    } else {
        // G = M M^H
        for i in 0..p {
            for j in i..p {
                let mut acc = Complex64::new(0.0, 0.0);
                for k in 0..q {
                    acc += m.get(i, k) * m.get(j, k).conj();
                }
                g[i * d + j] = acc;
                g[j * d + i] = acc.conj();
            }
        }
    }

    if d == 1 {
        return g[0].re.max(0.0).sqrt();
    }

    // Cyclic Jacobi on the Hermitian Gram matrix.
    let scale: f64 = g.iter().map(|v| v.norm()).fold(0.0, f64::max).max(1e-300);
    for _sweep in 0..60 {
        let mut off = 0.0f64;
        for pq in 0..d {
            for qq in (pq + 1)..d {
                off = off.max(g[pq * d + qq].norm());
            }
        }
        if off <= 1e-16 * scale {
            break;
        }
        for pi in 0..d {
            for qi in (pi + 1)..d {
                let gamma = g[pi * d + qi];
                let gm = gamma.norm();
                if gm <= 1e-18 * scale {
                    continue;
                }
                let alpha = g[pi * d + pi].re;
                let beta = g[qi * d + qi].re;
                let phase = gamma / gm;
                // Real Jacobi rotation on the phase-rotated 2x2 block.
                let tau = (beta - alpha) / (2.0 * gm);
                let t = if tau >= 0.0 {
                    1.0 / (tau + (1.0 + tau * tau).sqrt())
                } else {
                    1.0 / (tau - (1.0 + tau * tau).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                // Column update: J = U R with U = diag(1, conj(phase)),
                // R = [[c, s], [-s, c]]; U^H G U makes the block real.
                for r in 0..d {
                    let rp = g[r * d + pi];
                    let rq = g[r * d + qi];
                    g[r * d + pi] = rp * c - phase.conj() * rq * s;
                    g[r * d + qi] = rp * s + phase.conj() * rq * c;
                }
                // Row update with J^H.
                for col in 0..d {
                    let pr = g[pi * d + col];
                    let qr = g[qi * d + col];
                    g[pi * d + col] = pr * c - phase * qr * s;
                    g[qi * d + col] = pr * s + phase * qr * c;
                }
            }
        }
    }

    let lmax = (0..d).map(|i| g[i * d + i].re).fold(0.0f64, f64::max);
    lmax.max(0.0).sqrt()
}

fn check_stable(sys: &StateSpace, margin: f64) -> Result<(), Error> {
    if sys.order() == 0 {
        return Ok(());
    }
    let rho = spectral_radius(sys.a())?;
    if rho >= 1.0 - margin {
        return Err(Error::Unstable { rho });
    }
    Ok(())
}

/// Gain at a single frequency.
fn gain(sys: &StateSpace, omega: f64) -> Result<f64, Error> {
    Ok(sigma_max(&sys.frequency_response(omega)?))
}

/// Adaptive H-infinity norm: coarse uniform grid on [0, pi], then
/// golden-section refinement of the top-k local maxima. The result never
/// drops below the best coarse-grid sample.
pub fn hinf_norm(sys: &StateSpace, opts: &NormOptions) -> Result<HinfResult, Error> {
    opts.validate()?;
    check_stable(sys, opts.stability_margin)?;

    if sys.order() == 0 {
        return Ok(HinfResult {
            value: sigma_max(&sys.d().to_complex()),
            peak_omega: 0.0,
            evaluations: 1,
        });
    }

    let n_grid = opts.coarse_grid_points;
    let step = std::f64::consts::PI / (n_grid - 1) as f64;
    let mut evals = 0usize;
    let mut values = Vec::with_capacity(n_grid);
    for i in 0..n_grid {
        let omega = step * i as f64;
        values.push(gain(sys, omega)?);
        evals += 1;
    }

    let (mut best_idx, mut best_value) = (0usize, values[0]);
    for (i, v) in values.iter().enumerate() {
        if *v > best_value {
            best_value = *v;
            best_idx = i;
        }
    }
    let mut best_omega = step * best_idx as f64;

    // Local maxima of the sampled gain, ranked by value.
    let mut maxima: Vec<usize> = (0..n_grid)
        .filter(|&i| {
            let left_ok = i == 0 || values[i] >= values[i - 1];
            let right_ok = i == n_grid - 1 || values[i] >= values[i + 1];
            left_ok && right_ok
        })
        .collect();
    maxima.sort_by(|&a, &b| values[b].partial_cmp(&values[a]).unwrap().then(a.cmp(&b)));
    maxima.truncate(opts.refine_top_k);

    for &i in &maxima {
        let lo = if i == 0 { 0.0 } else { step * (i - 1) as f64 };
        let hi = if i == n_grid - 1 {
            std::f64::consts::PI
        } else {
            step * (i + 1) as f64
        };
        let (v, omega, used) = golden_max(sys, lo, hi, opts.refine_tolerance)?;
        evals += used;
        if v > best_value {
            best_value = v;
            best_omega = omega;
        }
    }

    Ok(HinfResult {
        value: best_value,
        peak_omega: best_omega,
        evaluations: evals,
    })
}

/// Golden-section search maximizing the gain on [a, b] down to `tol` in omega.
fn golden_max(sys: &StateSpace, a: f64, b: f64, tol: f64) -> Result<(f64, f64, usize), Error> {
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    const INV_PHI2: f64 = 1.0 - INV_PHI;
    let (mut a, mut b) = (a, b);
    let mut x1 = a + INV_PHI2 * (b - a);
    let mut x2 = a + INV_PHI * (b - a);
    let mut f1 = gain(sys, x1)?;
    let mut f2 = gain(sys, x2)?;
    let mut used = 2usize;
    while b - a > tol {
        if f1 < f2 {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + INV_PHI * (b - a);
            f2 = gain(sys, x2)?;
        } else {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = a + INV_PHI2 * (b - a);
            f1 = gain(sys, x1)?;
        }
        used += 1;
    }
    if f1 >= f2 {
        Ok((f1, x1, used))
    } else {
        Ok((f2, x2, used))
    }
}

/// Brute-force H-infinity oracle: the max gain over a uniform grid of
/// `grid_points` samples on [0, pi], endpoints included. No refinement, by
/// design; acceptance tests measure the adaptive evaluator against this.
pub fn hinf_norm_oracle(sys: &StateSpace, grid_points: usize) -> Result<f64, Error> {
    check_stable(sys, 0.0)?;
    if sys.order() == 0 {
        return Ok(sigma_max(&sys.d().to_complex()));
    }
    let g = grid_points.max(2);
    let step = std::f64::consts::PI / (g - 1) as f64;
    let mut best = 0.0f64;
    for i in 0..g {
        best = best.max(gain(sys, step * i as f64)?);
    }
    Ok(best)
}

/// H2 norm: sqrt(trace(C W C^T + D D^T)) with W the controllability Gramian
/// from A W A^T - W + B B^T = 0.
pub fn h2_norm(sys: &StateSpace) -> Result<f64, Error> {
    check_stable(sys, 0.0)?;
    let d_part = sys.d().mul(&sys.d().transpose())?.trace();
    if sys.order() == 0 {
        return Ok(d_part.max(0.0).sqrt());
    }
    let q = sys.b().mul(&sys.b().transpose())?;
    let w = solve_discrete_lyapunov(sys.a(), &q)?;
    let c_part = sys.c().mul(&w)?.mul(&sys.c().transpose())?.trace();
    Ok((c_part + d_part).max(0.0).sqrt())
}
