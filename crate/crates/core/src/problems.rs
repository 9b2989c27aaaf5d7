//! Objective functionals over decision vectors.
//!
//! The central one is the positive H-infinity (or H2) filtering objective:
//! decode a decision vector into filter matrices, form the filtering error
//! system against a fixed plant, and return its norm — with an extreme
//! barrier (+inf) for any vector violating positivity or Schur stability.
//! Synthetic nonsmooth test problems live here too, including the
//! two-variable stall example that coordinate descent cannot leave.

use crate::error::Error;
use crate::norms::{h2_norm, hinf_norm, NormOptions};
use crate::rng::Rng;
use crate::statespace::{error_system, spectral_radius, FilteringPlant, Matrix, StateSpace};

/// A deterministic extended-real objective: equal inputs give equal outputs,
/// infeasibility is exactly +inf, and NaN is never returned.
pub trait Objective: Sync + Send {
    fn dim(&self) -> usize;
    fn name(&self) -> &str;
    fn value(&self, x: &[f64]) -> f64;
}

/// Objective built from a closure.
pub struct FnObjective<F: Fn(&[f64]) -> f64 + Sync + Send> {
    dim: usize,
    name: String,
    f: F,
}

impl<F: Fn(&[f64]) -> f64 + Sync + Send> FnObjective<F> {
    pub fn new(dim: usize, name: impl Into<String>, f: F) -> Self {
        FnObjective {
            dim,
            name: name.into(),
            f,
        }
    }
}

impl<F: Fn(&[f64]) -> f64 + Sync + Send> Objective for FnObjective<F> {
    fn dim(&self) -> usize {
        self.dim
    }

    fn name(&self) -> &str {
        &self.name
    }

    fn value(&self, x: &[f64]) -> f64 {
        assert_eq!(x.len(), self.dim, "objective '{}' dimension", self.name);
        let v = (self.f)(x);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    }
}

/// Filter dimensions: order, measured inputs, estimated outputs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FilterDims {
    pub order: usize,
    pub inputs: usize,
    pub outputs: usize,
}

impl FilterDims {
    /// Length of the flattened decision vector.
    pub fn decision_len(&self) -> usize {
        self.order * self.order
            + self.order * self.inputs
            + self.outputs * self.order
            + self.outputs * self.inputs
    }
}

/// Filter decision variables as matrices.
#[derive(Debug, Clone, PartialEq)]
pub struct FilterParams {
    pub a_hat: Matrix,
    pub b_hat: Matrix,
    pub c_hat: Matrix,
    pub d_hat: Matrix,
}

impl FilterParams {
    pub fn dims(&self) -> FilterDims {
        FilterDims {
            order: self.a_hat.rows(),
            inputs: self.b_hat.cols(),
            outputs: self.c_hat.rows(),
        }
    }

    pub fn to_state_space(&self) -> Result<StateSpace, Error> {
        StateSpace::new(
            self.a_hat.clone(),
            self.b_hat.clone(),
            self.c_hat.clone(),
            self.d_hat.clone(),
        )
    }

    pub fn is_positive(&self, tol: f64) -> bool {
        self.a_hat.min_entry().min(self.b_hat.min_entry()) >= -tol
            && self.c_hat.min_entry().min(self.d_hat.min_entry()) >= -tol
    }
}

/// Unflattens a decision vector: A-hat row-major, then B-hat, C-hat, D-hat.
pub fn decode(x: &[f64], dims: FilterDims) -> Result<FilterParams, Error> {
    if x.len() != dims.decision_len() {
        return Err(Error::dim(format!(
            "decision vector has length {}, dims require {}",
            x.len(),
            dims.decision_len()
        )));
    }
    let (nf, py, pz) = (dims.order, dims.inputs, dims.outputs);
    let mut pos = 0usize;
    let mut take = |r: usize, c: usize| -> Result<Matrix, Error> {
        let m = Matrix::new(r, c, x[pos..pos + r * c].to_vec());
        pos += r * c;
        m
    };
    Ok(FilterParams {
        a_hat: take(nf, nf)?,
        b_hat: take(nf, py)?,
        c_hat: take(pz, nf)?,
        d_hat: take(pz, py)?,
    })
}

/// Flattens filter matrices back into a decision vector; inverse of [`decode`].
pub fn encode(params: &FilterParams) -> Vec<f64> {
    let mut x = Vec::with_capacity(params.dims().decision_len());
    x.extend_from_slice(params.a_hat.data());
    x.extend_from_slice(params.b_hat.data());
    x.extend_from_slice(params.c_hat.data());
    x.extend_from_slice(params.d_hat.data());
    x
}

/// Which system norm the synthesis objective minimizes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ObjectiveKind {
    HinfError,
    H2Error,
}

/// Whether the filter must be entrywise nonnegative.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Positivity {
    Required,
    Off,
}

/// A complete synthesis problem: plant, filter structure, constraints, and
/// the norm to minimize.
#[derive(Debug, Clone)]
pub struct SynthesisProblem {
    pub id: String,
    pub plant: FilteringPlant,
    pub dims: FilterDims,
    pub objective: ObjectiveKind,
    pub positivity: Positivity,
    pub positivity_tol: f64,
    pub stability_margin: f64,
    pub norm_options: NormOptions,
}

impl SynthesisProblem {
    pub fn validate(&self) -> Result<(), Error> {
        if self.dims.inputs != self.plant.measured_outputs() {
            return Err(Error::dim(format!(
                "filter inputs {} must equal plant measured outputs {}",
                self.dims.inputs,
                self.plant.measured_outputs()
            )));
        }
        if self.dims.outputs != self.plant.estimated_outputs() {
            return Err(Error::dim(format!(
                "filter outputs {} must equal plant estimated channels {}",
                self.dims.outputs,
                self.plant.estimated_outputs()
            )));
        }
        if self.positivity_tol < 0.0 || self.stability_margin < 0.0 {
            return Err(Error::parse(
                "positivity_tol and stability_margin must be >= 0",
            ));
        }
        self.norm_options.validate()
    }
}

/// The synthesis objective: norm of the filtering error system with extreme
/// barrier constraint handling.
pub struct FilterObjective {
    problem: SynthesisProblem,
    name: String,
}

impl FilterObjective {
    pub fn problem(&self) -> &SynthesisProblem {
        &self.problem
    }
}

impl Objective for FilterObjective {
    fn dim(&self) -> usize {
        self.problem.dims.decision_len()
    }

    fn name(&self) -> &str {
        &self.name
    }

    fn value(&self, x: &[f64]) -> f64 {
        assert_eq!(x.len(), self.dim(), "objective '{}' dimension", self.name);
        let params = match decode(x, self.problem.dims) {
            Ok(p) => p,
            Err(_) => return f64::INFINITY,
        };
        if matches!(self.problem.positivity, Positivity::Required)
            && !params.is_positive(self.problem.positivity_tol)
        {
            return f64::INFINITY;
        }
        if self.problem.dims.order > 0 {
            match spectral_radius(&params.a_hat) {
                Ok(rho) if rho < 1.0 - self.problem.stability_margin => {}
                _ => return f64::INFINITY,
            }
        }
        let filt = match params.to_state_space() {
            Ok(f) => f,
            Err(_) => return f64::INFINITY,
        };
        let sys = match error_system(&self.problem.plant, &filt) {
            Ok(s) => s,
            Err(_) => return f64::INFINITY,
        };
        let value = match self.problem.objective {
            ObjectiveKind::HinfError => {
                hinf_norm(&sys, &self.problem.norm_options).map(|r| r.value)
            }
            ObjectiveKind::H2Error => h2_norm(&sys),
        };
        match value {
            Ok(v) if !v.is_nan() => v,
            _ => f64::INFINITY,
        }
    }
}

/// Builds the extreme-barrier synthesis objective for a problem.
pub fn make_filter_objective(problem: &SynthesisProblem) -> Result<FilterObjective, Error> {
    problem.validate()?;
    let name = format!(
        "{}-filter-error[{}]",
        match problem.objective {
            ObjectiveKind::HinfError => "hinf",
            ObjectiveKind::H2Error => "h2",
        },
        problem.id
    );
    Ok(FilterObjective {
        problem: problem.clone(),
        name,
    })
}

/// The order-1 positive filter reported for the [LLS10] positive-filtering
/// benchmark; its dynamic part is nearly cancelled by the tiny B-hat entries.
pub fn lls10_filter() -> FilterParams {
    FilterParams {
        a_hat: Matrix::scalar(0.22819),
        b_hat: Matrix::from_rows(&[vec![0.00003, 0.00003]]).expect("b_hat"),
        c_hat: Matrix::scalar(0.14130),
        d_hat: Matrix::from_rows(&[vec![0.17889, 0.34404]]).expect("d_hat"),
    }
}

/// An order-1 positive filter for the same benchmark obtained by
/// derivative-free search; it sits strictly inside the feasible set.
pub fn dfo_filter() -> FilterParams {
    FilterParams {
        a_hat: Matrix::scalar(0.0561),
        b_hat: Matrix::from_rows(&[vec![0.2686, 1.0749]]).expect("b_hat"),
        c_hat: Matrix::scalar(0.3094),
        d_hat: Matrix::from_rows(&[vec![0.1521, 0.1089]]).expect("d_hat"),
    }
}

/// Two-variable objective on which alternating coordinate minimization
/// stalls: f(x, y) = |x - y| + 0.1 (x + y)^2.
///
/// Global minimum 0 at the origin. Along either coordinate at (t, t) with
/// |0.4 t| < 1 the one-sided slopes are +-1 + 0.4 t, so no single-coordinate
/// move can descend, while the diagonal direction (-1, -1)/sqrt(2) descends
/// at rate 0.8 t / sqrt(2).
pub fn stall_objective() -> impl Objective {
    FnObjective::new(2, "stall", |x: &[f64]| {
        (x[0] - x[1]).abs() + 0.1 * (x[0] + x[1]).powi(2)
    })
}

/// One named problem of the synthetic suite.
pub struct SuiteEntry {
    pub objective: Box<dyn Objective>,
    /// Known global minimum value, when available analytically.
    pub best_known: Option<f64>,
}

/// Max of three seeded positive-definite quadratics in dimension 4;
/// nonsmooth on the crossing surfaces, nonnegative everywhere.
struct MaxQuad {
    centers: Vec<Vec<f64>>,
    quads: Vec<Matrix>,
}

impl MaxQuad {
    fn seeded() -> Self {
        let mut rng = Rng::new(0x9A8D);
        let dim = 4;
        let mut centers = Vec::new();
        let mut quads = Vec::new();
        for _ in 0..3 {
            let g = Matrix::new(dim, dim, (0..dim * dim).map(|_| rng.normal()).collect())
                .expect("gaussian block");
            let mut q = g.mul(&g.transpose()).expect("gram");
            for i in 0..dim {
                q.set(i, i, q.get(i, i) + 0.5);
            }
            quads.push(q);
            centers.push((0..dim).map(|_| rng.range(-1.0, 1.0)).collect());
        }
        MaxQuad { centers, quads }
    }
}

impl Objective for MaxQuad {
    fn dim(&self) -> usize {
        4
    }

    fn name(&self) -> &str {
        "max-of-quadratics"
    }

    fn value(&self, x: &[f64]) -> f64 {
        assert_eq!(x.len(), 4);
        let mut best = f64::NEG_INFINITY;
        for (c, q) in self.centers.iter().zip(&self.quads) {
            let dx: Vec<f64> = x.iter().zip(c).map(|(a, b)| a - b).collect();
            let mut acc = 0.0;
            for i in 0..4 {
                for j in 0..4 {
                    acc += dx[i] * q.get(i, j) * dx[j];
                }
            }
            best = best.max(acc);
        }
        best
    }
}

/// Smooth and locally-Lipschitz test objectives with their known minima.
pub fn synthetic_suite() -> Vec<SuiteEntry> {
    vec![
        SuiteEntry {
            objective: Box::new(FnObjective::new(4, "sphere", |x: &[f64]| {
                x.iter().map(|v| v * v).sum()
            })),
            best_known: Some(0.0),
        },
        SuiteEntry {
            objective: Box::new(MaxQuad::seeded()),
            best_known: None,
        },
        SuiteEntry {
            objective: Box::new(stall_objective()),
            best_known: Some(0.0),
        },
    ]
}

/// Samples a feasible start: entries uniform on [0, 1), then the A-hat block
/// rescaled by 0.9 / max(1, rho(A-hat)) so the initial filter is Schur stable
/// with margin at least 0.1.
pub fn random_initial(problem: &SynthesisProblem, rng: &mut Rng) -> Vec<f64> {
    let dims = problem.dims;
    let mut x: Vec<f64> = (0..dims.decision_len()).map(|_| rng.uniform()).collect();
    let nf = dims.order;
    if nf > 0 {
        let a = Matrix::new(nf, nf, x[..nf * nf].to_vec()).expect("a_hat block");
        let rho = spectral_radius(&a).expect("finite entries");
        let factor = 0.9 / rho.max(1.0);
        for v in x[..nf * nf].iter_mut() {
            *v *= factor;
        }
    }
    x
}

/// Fixed seed for the shipped benchmark plant, chosen so the alternating
/// coordinate-descent baseline stalls well short of the joint optimum on
/// essentially every random start (the separation the benchmark exists to
/// measure), while restarted Nelder-Mead reaches the consensus best from all
/// of them.
const SYNTHETIC_PLANT_SEED: u64 = 16;

/// Generates an order-n stable positive plant with one disturbance input,
/// one estimated channel and one measured output, from the given seed.
pub(crate) fn generate_positive_plant(
    seed: u64,
    n: usize,
    rho_target: f64,
    dz_scale: f64,
    dy_scale: f64,
) -> FilteringPlant {
    let mut rng = Rng::new(seed);
    let raw = Matrix::new(n, n, (0..n * n).map(|_| rng.uniform()).collect()).expect("A block");
    let rho = spectral_radius(&raw).expect("finite");
    let a = raw.scale(rho_target / rho.max(1e-9));
    let block = |rng: &mut Rng, r: usize, c: usize| {
        Matrix::new(r, c, (0..r * c).map(|_| rng.uniform()).collect()).expect("block")
    };
    let b = block(&mut rng, n, 1);
    let c_z = block(&mut rng, 1, n);
    let d_z = block(&mut rng, 1, 1).scale(dz_scale);
    let c_y = block(&mut rng, 1, n);
    let d_y = block(&mut rng, 1, 1).scale(dy_scale);
    FilteringPlant::new(a, b, c_z, d_z, c_y, d_y).expect("generated plant is valid")
}

/// The shipped desk-scale benchmark: order-3 stable positive plant (spectral
/// radius 0.9, no direct disturbance feedthrough on the estimated channel),
/// order-1 positive filter, H-infinity error objective.
pub fn synthetic_problem() -> SynthesisProblem {
    SynthesisProblem {
        id: "synthetic-positive-filtering".into(),
        plant: generate_positive_plant(SYNTHETIC_PLANT_SEED, 3, 0.9, 0.0, 0.5),
        dims: FilterDims {
            order: 1,
            inputs: 1,
            outputs: 1,
        },
        objective: ObjectiveKind::HinfError,
        positivity: Positivity::Required,
        positivity_tol: 0.0,
        stability_margin: 0.0,
        norm_options: NormOptions {
            coarse_grid_points: 256,
            refine_top_k: 5,
            refine_tolerance: 1e-9,
            stability_margin: 0.0,
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::statespace::is_schur_stable;

    fn dims12() -> FilterDims {
        FilterDims {
            order: 1,
            inputs: 2,
            outputs: 1,
        }
    }

    #[test]
    fn decision_len_formula() {
        assert_eq!(dims12().decision_len(), 6);
        let d0 = FilterDims {
            order: 0,
            inputs: 2,
            outputs: 1,
        };
        assert_eq!(d0.decision_len(), 2);
    }

    #[test]
    fn decode_reproduces_published_filter() {
        let x = [0.0561, 0.2686, 1.0749, 0.3094, 0.1521, 0.1089];
        let p = decode(&x, dims12()).unwrap();
        assert_eq!(p, dfo_filter());
    }

    #[test]
    fn decode_static_filter() {
        let x = [0.17889, 0.34404];
        let p = decode(
            &x,
            FilterDims {
                order: 0,
                inputs: 2,
                outputs: 1,
            },
        )
        .unwrap();
        assert_eq!(p.d_hat, lls10_filter().d_hat);
        assert_eq!(p.a_hat.rows(), 0);
    }

    #[test]
    fn decode_rejects_wrong_length() {
        assert!(matches!(
            decode(&[1.0, 2.0], dims12()),
            Err(Error::Dimension(_))
        ));
    }

    #[test]
    fn encode_decode_roundtrip() {
        let mut rng = Rng::new(404);
        for _ in 0..20 {
            let dims = FilterDims {
                order: (rng.next_u64() % 3) as usize,
                inputs: 1 + (rng.next_u64() % 3) as usize,
                outputs: 1 + (rng.next_u64() % 2) as usize,
            };
            let x: Vec<f64> = (0..dims.decision_len()).map(|_| rng.normal()).collect();
            let p = decode(&x, dims).unwrap();
            assert_eq!(encode(&p), x);
        }
    }

    #[test]
    fn published_filters_match_printed_values() {
        let lls = lls10_filter();
        assert_eq!(lls.a_hat.get(0, 0), 0.22819);
        assert_eq!(lls.b_hat.data(), &[0.00003, 0.00003]);
        assert_eq!(lls.c_hat.get(0, 0), 0.14130);
        assert_eq!(lls.d_hat.data(), &[0.17889, 0.34404]);
        let dfo = dfo_filter();
        assert_eq!(dfo.a_hat.get(0, 0), 0.0561);
        assert_eq!(dfo.b_hat.data(), &[0.2686, 1.0749]);
        assert_eq!(dfo.c_hat.get(0, 0), 0.3094);
        assert_eq!(dfo.d_hat.data(), &[0.1521, 0.1089]);
    }

    #[test]
    fn published_filters_are_feasible() {
        for p in [lls10_filter(), dfo_filter()] {
            assert!(p.is_positive(0.0));
            assert!(p.to_state_space().unwrap().is_positive(0.0));
            assert!(is_schur_stable(&p.a_hat, 0.0).unwrap());
        }
    }

    #[test]
    fn barrier_rejects_negative_entry_and_unstable_a() {
        let problem = synthetic_problem();
        let obj = make_filter_objective(&problem).unwrap();
        let feasible = [0.3, 0.4, 0.2, 0.1];
        assert!(obj.value(&feasible).is_finite());
        let negative = [0.3, -0.4, 0.2, 0.1];
        assert_eq!(obj.value(&negative), f64::INFINITY);
        let boundary = [1.0, 0.4, 0.2, 0.1];
        assert_eq!(obj.value(&boundary), f64::INFINITY);
    }

    #[test]
    fn barrier_soundness_exhaustive_cases() {
        let problem = synthetic_problem();
        let obj = make_filter_objective(&problem).unwrap();
        let cases = [
            ([0.5, 0.1, 0.1, 0.1], true),
            ([0.999, 0.0, 0.0, 0.0], true),
            ([1.001, 0.1, 0.1, 0.1], false),
            ([0.5, -1e-9, 0.1, 0.1], false),
            ([0.5, 0.1, -0.2, 0.1], false),
            ([0.5, 0.1, 0.1, -0.3], false),
        ];
        for (x, feasible) in cases {
            let v = obj.value(&x);
            assert_eq!(
                v.is_finite(),
                feasible,
                "barrier mismatch at {:?}: value {}",
                x,
                v
            );
        }
    }

    #[test]
    fn objective_deterministic_bitwise() {
        let problem = synthetic_problem();
        let obj = make_filter_objective(&problem).unwrap();
        let x = [0.37, 0.21, 0.55, 0.13];
        let v1 = obj.value(&x);
        let v2 = obj.value(&x);
        assert_eq!(v1.to_bits(), v2.to_bits());
    }

    #[test]
    fn stall_objective_values() {
        let f = stall_objective();
        assert_eq!(f.value(&[0.0, 0.0]), 0.0);
        assert!((f.value(&[1.0, 1.0]) - 0.4).abs() < 1e-15);
    }

    #[test]
    fn stall_coordinate_lock_and_diagonal_descent() {
        let f = stall_objective();
        let h = 1e-7;
        for t in [0.5, 1.0, 1.999] {
            // No decreasing step in any of the four signed coordinate
            // directions.
            for (dx, dy) in [(h, 0.0), (-h, 0.0), (0.0, h), (0.0, -h)] {
                let q = (f.value(&[t + dx, t + dy]) - f.value(&[t, t])) / h;
                assert!(q > 1e-9, "coordinate step descends at t={t}: quotient {q}");
            }
            // The diagonal toward the origin descends.
            let s = 1e-7;
            let q = (f.value(&[t * (1.0 - s), t * (1.0 - s)]) - f.value(&[t, t])) / s;
            assert!(q < -1e-9, "diagonal does not descend at t={t}");
        }
    }

    #[test]
    fn suite_contents() {
        let suite = synthetic_suite();
        assert_eq!(suite.len(), 3);
        let sphere = &suite[0];
        assert_eq!(sphere.objective.value(&[0.0; 4]), 0.0);
        assert_eq!(sphere.best_known, Some(0.0));
        let maxquad = &suite[1];
        let mut rng = Rng::new(8);
        for _ in 0..50 {
            let x: Vec<f64> = (0..4).map(|_| rng.range(-2.0, 2.0)).collect();
            assert!(maxquad.objective.value(&x) >= 0.0);
        }
    }

    #[test]
    fn random_initial_feasible_and_deterministic() {
        let problem = synthetic_problem();
        let obj = make_filter_objective(&problem).unwrap();
        let mut rng = Rng::new(2024);
        for _ in 0..20 {
            let x = random_initial(&problem, &mut rng);
            assert!(x.iter().all(|v| *v >= 0.0));
            let a = Matrix::new(1, 1, x[..1].to_vec()).unwrap();
            assert!(spectral_radius(&a).unwrap() <= 0.9 + 1e-12);
            assert!(obj.value(&x).is_finite());
        }
        let mut r1 = Rng::new(55);
        let mut r2 = Rng::new(55);
        assert_eq!(
            random_initial(&problem, &mut r1),
            random_initial(&problem, &mut r2)
        );
    }

    #[test]
    fn synthetic_plant_is_stable_and_positive() {
        let p = synthetic_problem();
        assert!(spectral_radius(p.plant.a()).unwrap() < 1.0);
        for m in [
            p.plant.a(),
            p.plant.b(),
            p.plant.c_z(),
            p.plant.d_z(),
            p.plant.c_y(),
            p.plant.d_y(),
        ] {
            assert!(m.min_entry() >= 0.0);
        }
        p.validate().unwrap();
    }
}
