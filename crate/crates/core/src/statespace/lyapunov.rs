//! Discrete Lyapunov equation solver.

use crate::error::Error;
use crate::statespace::eig::spectral_radius;
use crate::statespace::matrix::Matrix;

/// Solves A X A^T - X + Q = 0 for symmetric X.
///
/// Plain fixed-point iteration X <- A X A^T + Q. Convergence is geometric at
/// rate rho(A)^2, which is plenty at desk scale; the iteration stops once the
/// update is below 1e-12 relative to X (and small against Q), capped at 1e6
/// sweeps.
pub fn solve_discrete_lyapunov(a: &Matrix, q: &Matrix) -> Result<Matrix, Error> {
    if !a.is_square() {
        return Err(Error::dim(format!(
            "lyapunov: A must be square, got {}x{}",
            a.rows(),
            a.cols()
        )));
    }
    if q.rows() != a.rows() || q.cols() != a.rows() {
        return Err(Error::dim(format!(
            "lyapunov: Q must be {0}x{0}, got {1}x{2}",
            a.rows(),
            q.rows(),
            q.cols()
        )));
    }
    let sym_err = q.sub(&q.transpose())?.max_abs();
    if sym_err > 1e-10 * (1.0 + q.max_abs()) {
        return Err(Error::dim("lyapunov: Q must be symmetric"));
    }
    let rho = spectral_radius(a)?;
    if rho >= 1.0 {
        return Err(Error::Unstable { rho });
    }
    let n = a.rows();
    if n == 0 {
        return Ok(Matrix::zeros(0, 0));
    }

    let at = a.transpose();
    let q_norm = q.frobenius_norm();
    let mut x = q.clone();
    for _ in 0..1_000_000 {
        let next = a.mul(&x)?.mul(&at)?.add(q)?;
        let delta = next.sub(&x)?.frobenius_norm();
        // Symmetrize to kill rounding drift.
        let mut sym = next.clone();
        for i in 0..n {
            for j in 0..n {
                sym.set(i, j, 0.5 * (next.get(i, j) + next.get(j, i)));
            }
        }
        x = sym;
        if delta <= 1e-12 * (1.0 + x.frobenius_norm()) && delta <= 1e-11 * (1.0 + q_norm) {
            return Ok(x);
        }
    }
    Err(Error::numerical(format!(
        "lyapunov iteration did not converge (rho = {rho})"
    )))
}
