//! Discrete-time LTI state-space algebra.
//!
//! Systems are quadruples (A, B, C, D) over the unit sample period. The
//! module provides the predicates and constructions everything else builds
//! on: Schur stability, entrywise positivity, frequency response, the
//! filtering error system, and a discrete Lyapunov solver.

mod eig;
mod lyapunov;
mod matrix;

pub use eig::{eigenvalues, spectral_radius};
pub use lyapunov::solve_discrete_lyapunov;
pub use matrix::{solve_complex, CMatrix, Matrix};

use num_complex::Complex64;

use crate::error::Error;

/// True iff rho(m) < 1 - margin.
pub fn is_schur_stable(m: &Matrix, margin: f64) -> Result<bool, Error> {
    Ok(spectral_radius(m)? < 1.0 - margin)
}

/// Discrete-time LTI system x+ = A x + B u, y = C x + D u.
///
/// n = 0 is allowed and denotes a static system whose transfer function is
/// the constant D.
#[derive(Debug, Clone, PartialEq)]
pub struct StateSpace {
    a: Matrix,
    b: Matrix,
    c: Matrix,
    d: Matrix,
}

impl StateSpace {
    pub fn new(a: Matrix, b: Matrix, c: Matrix, d: Matrix) -> Result<Self, Error> {
        if !a.is_square() {
            return Err(Error::dim(format!(
                "A must be square, got {}x{}",
                a.rows(),
                a.cols()
            )));
        }
        let n = a.rows();
        if b.rows() != n {
            return Err(Error::dim(format!(
                "B must have {} rows, got {}",
                n,
                b.rows()
            )));
        }
        if c.cols() != n {
            return Err(Error::dim(format!(
                "C must have {} columns, got {}",
                n,
                c.cols()
            )));
        }
        if d.rows() != c.rows() || d.cols() != b.cols() {
            return Err(Error::dim(format!(
                "D must be {}x{}, got {}x{}",
                c.rows(),
                b.cols(),
                d.rows(),
                d.cols()
            )));
        }
        Ok(StateSpace { a, b, c, d })
    }

    /// Static system with constant transfer function D.
    pub fn from_static(d: Matrix) -> Self {
        let p = d.rows();
        let m = d.cols();
        StateSpace {
            a: Matrix::zeros(0, 0),
            b: Matrix::zeros(0, m),
            c: Matrix::zeros(p, 0),
            d,
        }
    }

    pub fn a(&self) -> &Matrix {
        &self.a
    }

    pub fn b(&self) -> &Matrix {
        &self.b
    }

    pub fn c(&self) -> &Matrix {
        &self.c
    }

    pub fn d(&self) -> &Matrix {
        &self.d
    }

    /// Number of states.
    pub fn order(&self) -> usize {
        self.a.rows()
    }

    pub fn inputs(&self) -> usize {
        self.b.cols()
    }

    pub fn outputs(&self) -> usize {
        self.c.rows()
    }

    /// Entrywise nonnegativity of all four blocks, within tol.
    pub fn is_positive(&self, tol: f64) -> bool {
        let min = self
            .a
            .min_entry()
            .min(self.b.min_entry())
            .min(self.c.min_entry())
            .min(self.d.min_entry());
        // Empty blocks have min +inf, which passes trivially.
        min >= -tol
    }

    /// Transfer function value C (e^{jw} I - A)^{-1} B + D.
    pub fn frequency_response(&self, omega: f64) -> Result<CMatrix, Error> {
        let n = self.order();
        if n == 0 {
            return Ok(self.d.to_complex());
        }
        let z = Complex64::from_polar(1.0, omega);
        let mut m = CMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                let a_ij = self.a.get(i, j);
                let v = if i == j {
                    z - a_ij
                } else {
                    Complex64::new(-a_ij, 0.0)
                };
                m.set(i, j, v);
            }
        }
        let x = solve_complex(&m, &self.b.to_complex(), omega)?;
        // out = C x + D, accumulated directly.
        let (p, q) = (self.outputs(), self.inputs());
        let mut out = self.d.to_complex();
        for i in 0..p {
            for k in 0..n {
                let c_ik = self.c.get(i, k);
                if c_ik == 0.0 {
                    continue;
                }
                for j in 0..q {
                    let add = x.get(k, j) * c_ik;
                    out.set(i, j, out.get(i, j) + add);
                }
            }
        }
        Ok(out)
    }
}

/// Filtering plant: a stable system with a disturbance input, a channel to
/// estimate (z) and a measured output (y).
#[derive(Debug, Clone, PartialEq)]
pub struct FilteringPlant {
    a: Matrix,
    b: Matrix,
    c_z: Matrix,
    d_z: Matrix,
    c_y: Matrix,
    d_y: Matrix,
}

impl FilteringPlant {
    pub fn new(
        a: Matrix,
        b: Matrix,
        c_z: Matrix,
        d_z: Matrix,
        c_y: Matrix,
        d_y: Matrix,
    ) -> Result<Self, Error> {
        if !a.is_square() {
            return Err(Error::dim(format!(
                "plant A must be square, got {}x{}",
                a.rows(),
                a.cols()
            )));
        }
        let n = a.rows();
        let m_w = b.cols();
        if b.rows() != n {
            return Err(Error::dim(format!(
                "plant B must have {} rows, got {}",
                n,
                b.rows()
            )));
        }
        for (name, m_ref, want_cols) in [("C_z", &c_z, n), ("C_y", &c_y, n)] {
            if m_ref.cols() != want_cols {
                return Err(Error::dim(format!(
                    "plant {} must have {} columns, got {}",
                    name,
                    want_cols,
                    m_ref.cols()
                )));
            }
        }
        if d_z.rows() != c_z.rows() || d_z.cols() != m_w {
            return Err(Error::dim(format!(
                "plant D_z must be {}x{}, got {}x{}",
                c_z.rows(),
                m_w,
                d_z.rows(),
                d_z.cols()
            )));
        }
        if d_y.rows() != c_y.rows() || d_y.cols() != m_w {
            return Err(Error::dim(format!(
                "plant D_y must be {}x{}, got {}x{}",
                c_y.rows(),
                m_w,
                d_y.rows(),
                d_y.cols()
            )));
        }
        let rho = spectral_radius(&a)?;
        if rho >= 1.0 {
            return Err(Error::Unstable { rho });
        }
        Ok(FilteringPlant {
            a,
            b,
            c_z,
            d_z,
            c_y,
            d_y,
        })
    }

    pub fn a(&self) -> &Matrix {
        &self.a
    }

    pub fn b(&self) -> &Matrix {
        &self.b
    }

    pub fn c_z(&self) -> &Matrix {
        &self.c_z
    }

    pub fn d_z(&self) -> &Matrix {
        &self.d_z
    }

    pub fn c_y(&self) -> &Matrix {
        &self.c_y
    }

    pub fn d_y(&self) -> &Matrix {
        &self.d_y
    }

    pub fn order(&self) -> usize {
        self.a.rows()
    }

    pub fn disturbances(&self) -> usize {
        self.b.cols()
    }

    pub fn measured_outputs(&self) -> usize {
        self.c_y.rows()
    }

    pub fn estimated_outputs(&self) -> usize {
        self.c_z.rows()
    }
}

/// Builds the filtering error system mapping disturbance w to the estimation
/// error e = z - z_hat, for a filter driven by the measured output y.
///
/// State is [x; x_hat]:
///   A_e = [[A, 0], [Bf C_y, Af]],  B_e = [[B], [Bf D_y]],
///   C_e = [C_z - Df C_y, -Cf],     D_e = D_z - Df D_y.
pub fn error_system(plant: &FilteringPlant, filt: &StateSpace) -> Result<StateSpace, Error> {
    let p_y = plant.measured_outputs();
    let p_z = plant.estimated_outputs();
    if filt.inputs() != p_y {
        return Err(Error::dim(format!(
            "filter B block: expected {} inputs (measured outputs), got {}",
            p_y,
            filt.inputs()
        )));
    }
    if filt.outputs() != p_z {
        return Err(Error::dim(format!(
            "filter C block: expected {} outputs (estimated channel), got {}",
            p_z,
            filt.outputs()
        )));
    }
    let n = plant.order();
    let nf = filt.order();
    let m_w = plant.disturbances();

    let bf_cy = filt.b().mul(&plant.c_y)?;
    let bf_dy = filt.b().mul(&plant.d_y)?;
    let df_cy = filt.d().mul(&plant.c_y)?;
    let df_dy = filt.d().mul(&plant.d_y)?;

    let mut a_e = Matrix::zeros(n + nf, n + nf);
    for i in 0..n {
        for j in 0..n {
            a_e.set(i, j, plant.a.get(i, j));
        }
    }
    for i in 0..nf {
        for j in 0..n {
            a_e.set(n + i, j, bf_cy.get(i, j));
        }
        for j in 0..nf {
            a_e.set(n + i, n + j, filt.a().get(i, j));
        }
    }

    let mut b_e = Matrix::zeros(n + nf, m_w);
    for i in 0..n {
        for j in 0..m_w {
            b_e.set(i, j, plant.b.get(i, j));
        }
    }
    for i in 0..nf {
        for j in 0..m_w {
            b_e.set(n + i, j, bf_dy.get(i, j));
        }
    }

    let cz_part = plant.c_z.sub(&df_cy)?;
    let mut c_e = Matrix::zeros(p_z, n + nf);
    for i in 0..p_z {
        for j in 0..n {
            c_e.set(i, j, cz_part.get(i, j));
        }
        for j in 0..nf {
            c_e.set(i, n + j, -filt.c().get(i, j));
        }
    }

    let d_e = plant.d_z.sub(&df_dy)?;
    StateSpace::new(a_e, b_e, c_e, d_e)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Rng;

    fn random_plant(rng: &mut Rng, n: usize, m_w: usize, p_z: usize, p_y: usize) -> FilteringPlant {
        let raw = Matrix::new(n, n, (0..n * n).map(|_| rng.normal()).collect()).unwrap();
        let rho = spectral_radius(&raw).unwrap();
        let a = raw.scale(0.7 / rho.max(1e-9));
        let rand_m = |rng: &mut Rng, r: usize, c: usize| {
            Matrix::new(r, c, (0..r * c).map(|_| rng.normal()).collect()).unwrap()
        };
        FilteringPlant::new(
            a,
            rand_m(rng, n, m_w),
            rand_m(rng, p_z, n),
            rand_m(rng, p_z, m_w),
            rand_m(rng, p_y, n),
            rand_m(rng, p_y, m_w),
        )
        .unwrap()
    }

    fn random_filter(rng: &mut Rng, nf: usize, p_y: usize, p_z: usize) -> StateSpace {
        let raw = Matrix::new(nf, nf, (0..nf * nf).map(|_| rng.normal()).collect()).unwrap();
        let rho = spectral_radius(&raw).unwrap();
        let a = raw.scale(0.6 / rho.max(1e-9));
        let rand_m = |rng: &mut Rng, r: usize, c: usize| {
            Matrix::new(r, c, (0..r * c).map(|_| rng.normal()).collect()).unwrap()
        };
        StateSpace::new(
            a,
            rand_m(rng, nf, p_y),
            rand_m(rng, p_z, nf),
            rand_m(rng, p_z, p_y),
        )
        .unwrap()
    }

    #[test]
    fn schur_stability_boundary() {
        assert!(is_schur_stable(&Matrix::scalar(0.0561), 0.0).unwrap());
        assert!(!is_schur_stable(&Matrix::scalar(1.0), 0.0).unwrap());
        assert!(!is_schur_stable(&Matrix::scalar(0.95), 0.1).unwrap());
    }

    #[test]
    fn spectral_radius_examples() {
        assert_eq!(spectral_radius(&Matrix::zeros(0, 0)).unwrap(), 0.0);
        assert!((spectral_radius(&Matrix::scalar(0.22819)).unwrap() - 0.22819).abs() < 1e-14);
        // Characteristic polynomial l^2 = 1.
        let m = Matrix::from_rows(&[vec![0.0, 2.0], vec![0.5, 0.0]]).unwrap();
        assert!((spectral_radius(&m).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn positivity_tolerance_window() {
        let sys = StateSpace::new(
            Matrix::scalar(0.5),
            Matrix::scalar(-1e-9),
            Matrix::scalar(1.0),
            Matrix::scalar(0.0),
        )
        .unwrap();
        assert!(!sys.is_positive(0.0));
        assert!(sys.is_positive(1e-8));
    }

    #[test]
    fn positivity_monotone_in_tol() {
        let mut rng = Rng::new(5);
        for _ in 0..20 {
            let entries: Vec<f64> = (0..4).map(|_| rng.range(-1.0, 1.0)).collect();
            let sys = StateSpace::new(
                Matrix::scalar(entries[0]),
                Matrix::scalar(entries[1]),
                Matrix::scalar(entries[2]),
                Matrix::scalar(entries[3]),
            )
            .unwrap();
            let tols = [0.0, 1e-6, 1e-3, 0.1, 2.0];
            let mut prev = false;
            for t in tols {
                let now = sys.is_positive(t);
                assert!(!prev || now, "positivity not monotone in tol");
                prev = now;
            }
        }
    }

    #[test]
    fn static_frequency_response_is_d() {
        let d = Matrix::from_rows(&[vec![0.17889, 0.34404]]).unwrap();
        let sys = StateSpace::from_static(d.clone());
        for omega in [0.0, 1.0, std::f64::consts::PI] {
            let r = sys.frequency_response(omega).unwrap();
            for j in 0..2 {
                assert_eq!(r.get(0, j).re, d.get(0, j));
                assert_eq!(r.get(0, j).im, 0.0);
            }
        }
    }

    #[test]
    fn scalar_resolvent_closed_form() {
        let sys = StateSpace::new(
            Matrix::scalar(0.5),
            Matrix::scalar(1.0),
            Matrix::scalar(1.0),
            Matrix::scalar(0.0),
        )
        .unwrap();
        let r0 = sys.frequency_response(0.0).unwrap().get(0, 0);
        assert!((r0 - Complex64::new(2.0, 0.0)).norm() < 1e-14);
        let rpi = sys.frequency_response(std::f64::consts::PI).unwrap().get(0, 0);
        assert!((rpi - Complex64::new(-2.0 / 3.0, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn response_conjugate_symmetry_at_endpoints() {
        // Real systems have real response at omega = 0 and omega = pi.
        let mut rng = Rng::new(77);
        for _ in 0..10 {
            let plant = random_plant(&mut rng, 4, 2, 1, 2);
            let filt = random_filter(&mut rng, 2, 2, 1);
            let sys = error_system(&plant, &filt).unwrap();
            for omega in [0.0, std::f64::consts::PI] {
                let r = sys.frequency_response(omega).unwrap();
                for v in r.data() {
                    assert!(v.im.abs() < 1e-10 * (1.0 + v.re.abs()));
                }
            }
        }
    }

    #[test]
    fn error_system_spectrum_is_union() {
        let mut rng = Rng::new(123);
        for _ in 0..10 {
            let plant = random_plant(&mut rng, 3, 2, 1, 2);
            let filt = random_filter(&mut rng, 2, 2, 1);
            let sys = error_system(&plant, &filt).unwrap();
            let mut expected: Vec<_> = eigenvalues(plant.a()).unwrap();
            expected.extend(eigenvalues(filt.a()).unwrap());
            let mut got = eigenvalues(sys.a()).unwrap();
            // Greedy match within tolerance.
            for e in expected {
                let (k, dist) = got
                    .iter()
                    .enumerate()
                    .map(|(k, g)| (k, (g - e).norm()))
                    .min_by(|a, b| a.1.partial_cmp(&b.1).unwrap())
                    .unwrap();
                assert!(dist < 1e-8, "eigenvalue {e} unmatched (nearest {dist})");
                got.swap_remove(k);
            }
            assert!(got.is_empty());
        }
    }

    #[test]
    fn static_filter_error_system() {
        let mut rng = Rng::new(9);
        let plant = random_plant(&mut rng, 3, 2, 1, 2);
        let d_hat = Matrix::from_rows(&[vec![0.3, 0.4]]).unwrap();
        let filt = StateSpace::from_static(d_hat.clone());
        let sys = error_system(&plant, &filt).unwrap();
        assert_eq!(sys.order(), 3);
        let want_c = plant.c_z().sub(&d_hat.mul(plant.c_y()).unwrap()).unwrap();
        let want_d = plant.d_z().sub(&d_hat.mul(plant.d_y()).unwrap()).unwrap();
        assert_eq!(sys.c(), &want_c);
        assert_eq!(sys.d(), &want_d);
    }

    #[test]
    fn zero_filter_reproduces_plant_channel() {
        let mut rng = Rng::new(10);
        let plant = random_plant(&mut rng, 3, 2, 1, 2);
        let filt = StateSpace::new(
            Matrix::zeros(1, 1),
            Matrix::zeros(1, 2),
            Matrix::zeros(1, 1),
            Matrix::zeros(1, 2),
        )
        .unwrap();
        let sys = error_system(&plant, &filt).unwrap();
        let channel = StateSpace::new(
            plant.a().clone(),
            plant.b().clone(),
            plant.c_z().clone(),
            plant.d_z().clone(),
        )
        .unwrap();
        for omega in [0.0, 0.3, 1.2, 2.9] {
            let r1 = sys.frequency_response(omega).unwrap();
            let r2 = channel.frequency_response(omega).unwrap();
            for (v1, v2) in r1.data().iter().zip(r2.data()) {
                assert!((v1 - v2).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn error_system_dimension_mismatch_names_block() {
        let mut rng = Rng::new(11);
        let plant = random_plant(&mut rng, 3, 2, 1, 2);
        let filt = random_filter(&mut rng, 1, 3, 1); // wrong p_y
        let err = error_system(&plant, &filt).unwrap_err();
        assert!(err.to_string().contains("filter B block"));
    }
}
