//! Eigenvalues of small dense real matrices.
//!
//! Householder reduction to Hessenberg form followed by a shifted QR
//! iteration in complex arithmetic. Complex single-shift QR is slower than a
//! real Francis sweep but much simpler, and at desk scale (n <= 20) the
//! difference is irrelevant.

use num_complex::Complex64;

use crate::error::Error;
use crate::statespace::matrix::Matrix;

/// All eigenvalues of a square matrix, with multiplicity, in no particular
/// order.
pub fn eigenvalues(m: &Matrix) -> Result<Vec<Complex64>, Error> {
    if !m.is_square() {
        return Err(Error::dim(format!(
            "eigenvalues need a square matrix, got {}x{}",
            m.rows(),
            m.cols()
        )));
    }
    let n = m.rows();
    match n {
        0 => Ok(vec![]),
        1 => Ok(vec![Complex64::new(m.get(0, 0), 0.0)]),
        2 => Ok(eig2(
            Complex64::new(m.get(0, 0), 0.0),
            Complex64::new(m.get(0, 1), 0.0),
            Complex64::new(m.get(1, 0), 0.0),
            Complex64::new(m.get(1, 1), 0.0),
        )
        .to_vec()),
        _ => qr_eigenvalues(hessenberg(m)),
    }
}

/// Largest eigenvalue modulus; 0 for the empty matrix.
pub fn spectral_radius(m: &Matrix) -> Result<f64, Error> {
    Ok(eigenvalues(m)?
        .iter()
        .fold(0.0f64, |acc, l| acc.max(l.norm())))
}

/// Eigenvalues of a 2x2 complex matrix [[a, b], [c, d]].
fn eig2(a: Complex64, b: Complex64, c: Complex64, d: Complex64) -> [Complex64; 2] {
    let tr = a + d;
    let det = a * d - b * c;
    let disc = (tr * tr - det * 4.0).sqrt();
    let l1 = (tr + disc) * 0.5;
    let l2 = (tr - disc) * 0.5;
    [l1, l2]
}

/// Reduces a real square matrix to upper Hessenberg form (similarity
/// transform, eigenvalues preserved) and returns it as a complex matrix.
fn hessenberg(m: &Matrix) -> Vec<Complex64> {
    let n = m.rows();
    let mut h: Vec<f64> = m.data().to_vec();
    let idx = |i: usize, j: usize| i * n + j;

    for k in 0..n.saturating_sub(2) {
        // Householder vector annihilating column k below the subdiagonal.
        let mut norm2 = 0.0;
        for i in (k + 1)..n {
            norm2 += h[idx(i, k)] * h[idx(i, k)];
        }
        let norm = norm2.sqrt();
        if norm <= f64::EPSILON * h.iter().fold(0.0f64, |a, v| a.max(v.abs())) {
            continue;
        }
        let x0 = h[idx(k + 1, k)];
        let alpha = if x0 >= 0.0 { -norm } else { norm };
        let mut v = vec![0.0; n - k - 1];
        v[0] = x0 - alpha;
        for i in (k + 2)..n {
            v[i - k - 1] = h[idx(i, k)];
        }
        let vnorm2: f64 = v.iter().map(|x| x * x).sum();
        if vnorm2 == 0.0 {
            continue;
        }

        // H <- P H with P = I - 2 v v^T / (v^T v), rows k+1..n.
        for j in 0..n {
            let mut dot = 0.0;
            for i in (k + 1)..n {
                dot += v[i - k - 1] * h[idx(i, j)];
            }
            let f = 2.0 * dot / vnorm2;
            for i in (k + 1)..n {
                h[idx(i, j)] -= f * v[i - k - 1];
            }
        }
        // H <- H P, columns k+1..n.
        for i in 0..n {
            let mut dot = 0.0;
            for j in (k + 1)..n {
                dot += h[idx(i, j)] * v[j - k - 1];
            }
            let f = 2.0 * dot / vnorm2;
            for j in (k + 1)..n {
                h[idx(i, j)] -= f * v[j - k - 1];
            }
        }
        // Explicitly zero what the reflector eliminated.
        h[idx(k + 1, k)] = alpha;
        for i in (k + 2)..n {
            h[idx(i, k)] = 0.0;
        }
    }

    h.into_iter().map(|v| Complex64::new(v, 0.0)).collect()
}

/// Shifted QR iteration on an upper Hessenberg complex matrix (flat row-major
/// of size n*n).
fn qr_eigenvalues(mut h: Vec<Complex64>) -> Result<Vec<Complex64>, Error> {
    let n = (h.len() as f64).sqrt().round() as usize;
    debug_assert_eq!(n * n, h.len());
    let idx = |i: usize, j: usize| i * n + j;
    let mut eigs = Vec::with_capacity(n);
    let mut hi = n; // active block is rows/cols 0..hi
    let mut iters_on_block = 0usize;
    let mut total_iters = 0usize;
    let max_total = 60 * n.max(1);

    while hi > 0 {
        // Deflate trailing 1x1 and 2x2 blocks whenever the subdiagonal allows.
        if hi == 1 {
            eigs.push(h[idx(0, 0)]);
            hi = 0;
            continue;
        }
        let sub = h[idx(hi - 1, hi - 2)].norm();
        let local = h[idx(hi - 1, hi - 1)].norm() + h[idx(hi - 2, hi - 2)].norm();
        if sub <= f64::EPSILON * local.max(f64::MIN_POSITIVE) {
            eigs.push(h[idx(hi - 1, hi - 1)]);
            hi -= 1;
            iters_on_block = 0;
            continue;
        }
        if hi >= 2 {
            let deflate2 = if hi == 2 {
                true
            } else {
                let sub2 = h[idx(hi - 2, hi - 3)].norm();
                let local2 = h[idx(hi - 2, hi - 2)].norm() + h[idx(hi - 3, hi - 3)].norm();
                sub2 <= f64::EPSILON * local2.max(f64::MIN_POSITIVE)
            };
            if deflate2 {
                let [l1, l2] = eig2(
                    h[idx(hi - 2, hi - 2)],
                    h[idx(hi - 2, hi - 1)],
                    h[idx(hi - 1, hi - 2)],
                    h[idx(hi - 1, hi - 1)],
                );
                eigs.push(l1);
                eigs.push(l2);
                hi -= 2;
                iters_on_block = 0;
                continue;
            }
        }

        // Find the start of the active unreduced block.
        let mut lo = hi - 1;
        while lo > 0 {
            let s = h[idx(lo, lo - 1)].norm();
            let d = h[idx(lo, lo)].norm() + h[idx(lo - 1, lo - 1)].norm();
            if s <= f64::EPSILON * d.max(f64::MIN_POSITIVE) {
                h[idx(lo, lo - 1)] = Complex64::new(0.0, 0.0);
                break;
            }
            lo -= 1;
        }

        total_iters += 1;
        iters_on_block += 1;
        if total_iters > max_total {
            return Err(Error::numerical(format!(
                "QR eigenvalue iteration did not converge after {} sweeps (n = {})",
                max_total, n
            )));
        }

        // Wilkinson shift from the trailing 2x2; exceptional shift when stuck.
        let shift = if iters_on_block.is_multiple_of(16) {
            let mag = h[idx(hi - 1, hi - 2)].norm() + h[idx(hi - 1, hi - 1)].norm();
            Complex64::new(1.5 * mag, 0.0)
        } else {
            let a = h[idx(hi - 2, hi - 2)];
            let b = h[idx(hi - 2, hi - 1)];
            let c = h[idx(hi - 1, hi - 2)];
            let d = h[idx(hi - 1, hi - 1)];
            let [l1, l2] = eig2(a, b, c, d);
            if (l1 - d).norm() <= (l2 - d).norm() {
                l1
            } else {
                l2
            }
        };

        // Explicit shifted QR step on the block [lo, hi): H - sI = QR, then
        // H <- RQ + sI via Givens rotations.
        for i in lo..hi {
            h[idx(i, i)] -= shift;
        }
        let m = hi - lo;
        let mut rot = Vec::with_capacity(m.saturating_sub(1));
        for i in lo..(hi - 1) {
            let a = h[idx(i, i)];
            let b = h[idx(i + 1, i)];
            let (c, s) = givens(a, b);
            rot.push((c, s));
            // Apply G to rows i, i+1 across the block columns.
            for j in i..hi {
                let hi_j = h[idx(i, j)];
                let lo_j = h[idx(i + 1, j)];
                h[idx(i, j)] = c * hi_j + s * lo_j;
                h[idx(i + 1, j)] = -s.conj() * hi_j + c * lo_j;
            }
        }
        for (k, (c, s)) in rot.iter().enumerate() {
            let i = lo + k;
            // Apply G^H to columns i, i+1 across the block rows.
            for r in lo..(i + 2).min(hi) {
                let ri = h[idx(r, i)];
                let rj = h[idx(r, i + 1)];
                h[idx(r, i)] = ri * c + rj * s.conj();
                h[idx(r, i + 1)] = -ri * *s + rj * c;
            }
        }
        for i in lo..hi {
            h[idx(i, i)] += shift;
        }
    }

    Ok(eigs)
}

/// Complex Givens rotation: returns (c real-as-complex, s) with
/// [c s; -conj(s) c] * [a; b] = [r; 0].
fn givens(a: Complex64, b: Complex64) -> (Complex64, Complex64) {
    let an = a.norm();
    let bn = b.norm();
    if bn == 0.0 {
        return (Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0));
    }
    let r = an.hypot(bn);
    if an == 0.0 {
        return (Complex64::new(0.0, 0.0), b.conj() / bn);
    }
    let c = Complex64::new(an / r, 0.0);
    let s = (a / an) * b.conj() / r;
    (c, s)
}
