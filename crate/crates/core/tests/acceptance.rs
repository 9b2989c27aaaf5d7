//! Acceptance suite: every release-gating behavior, one pass/fail line each.
//!
//! Run with `cargo test -p dfokit --test acceptance -- --nocapture` to see
//! the per-criterion lines. The criteria run sequentially inside one test so
//! their wall-clock budgets are not distorted by the harness's thread pool.

use std::time::Instant;

use rayon::prelude::*;

use dfokit::cli::{bench_run, stall_demo_run, LoadedProblem};
use dfokit::norms::{h2_norm, hinf_norm, hinf_norm_oracle, NormOptions};
use dfokit::problems::{
    dfo_filter, lls10_filter, synthetic_problem, FnObjective,
};
use dfokit::rng::Rng;
use dfokit::statespace::{is_schur_stable, spectral_radius, Matrix, StateSpace};
use dfokit::stationarity::{probe, ProbeConfig};

struct Outcome {
    number: usize,
    name: &'static str,
    pass: bool,
    detail: String,
}

fn report(results: &mut Vec<Outcome>, number: usize, name: &'static str, pass: bool, detail: String) {
    println!(
        "criterion {number} ({name}): {} — {detail}",
        if pass { "PASS" } else { "FAIL" }
    );
    results.push(Outcome {
        number,
        name,
        pass,
        detail,
    });
}

fn random_stable_system(rng: &mut Rng, n: usize, m: usize, p: usize) -> StateSpace {
    let raw = Matrix::new(n, n, (0..n * n).map(|_| rng.normal()).collect()).unwrap();
    let rho_target = rng.range(0.3, 0.95);
    let rho = spectral_radius(&raw).unwrap();
    let a = raw.scale(rho_target / rho.max(1e-9));
    let rand_m = |rng: &mut Rng, r: usize, c: usize| {
        Matrix::new(r, c, (0..r * c).map(|_| rng.normal()).collect()).unwrap()
    };
    StateSpace::new(a, rand_m(rng, n, m), rand_m(rng, p, n), rand_m(rng, p, m)).unwrap()
}

/// Truncated impulse-response H2 oracle: sum ||C A^k B||_F^2 + ||D||_F^2
/// until rho(A)^k drops below 1e-14.
fn h2_impulse_oracle(sys: &StateSpace) -> f64 {
    let rho = spectral_radius(sys.a()).unwrap();
    let mut total: f64 = sys
        .d()
        .data()
        .iter()
        .map(|v| v * v)
        .sum();
    if sys.order() > 0 {
        let mut ak_b = sys.b().clone();
        let mut rho_k = 1.0f64;
        loop {
            let term = sys.c().mul(&ak_b).unwrap();
            total += term.data().iter().map(|v| v * v).sum::<f64>();
            rho_k *= rho.max(1e-6);
            if rho_k <= 1e-14 {
                break;
            }
            ak_b = sys.a().mul(&ak_b).unwrap();
        }
    }
    total.max(0.0).sqrt()
}

fn median(values: &[f64]) -> f64 {
    let mut s = values.to_vec();
    s.sort_by(|a, b| a.partial_cmp(b).expect("no NaN"));
    if s.len() % 2 == 1 {
        s[s.len() / 2]
    } else {
        0.5 * (s[s.len() / 2 - 1] + s[s.len() / 2])
    }
}

#[test]
fn acceptance_criteria() {
    let mut results = Vec::new();

    // 1. Norm oracle equivalence on 50 seeded random stable systems.
    {
        let t0 = Instant::now();
        let mut systems = Vec::new();
        let mut rng = Rng::new(0xACCE_0001);
        for _ in 0..50 {
            let n = 1 + (rng.next_u64() % 8) as usize;
            let m = 1 + (rng.next_u64() % 3) as usize;
            let p = 1 + (rng.next_u64() % 3) as usize;
            systems.push(random_stable_system(&mut rng, n, m, p));
        }
        let opts = NormOptions::default();
        let rels: Vec<f64> = systems
            .par_iter()
            .map(|sys| {
                let adaptive = hinf_norm(sys, &opts).unwrap().value;
                let oracle = hinf_norm_oracle(sys, 1_000_000).unwrap();
                (adaptive - oracle).abs() / oracle.max(1e-300)
            })
            .collect();
        let worst = rels.iter().cloned().fold(0.0f64, f64::max);
        let elapsed = t0.elapsed();
        let pass = worst <= 1e-6 && elapsed.as_secs_f64() <= 60.0;
        report(
            &mut results,
            1,
            "norm oracle equivalence",
            pass,
            format!(
                "worst relative gap {worst:.3e} over 50 systems vs 1e6-point oracle, {:.1}s (limit 60s)",
                elapsed.as_secs_f64()
            ),
        );
    }

    // 2. Closed-form norms for the scalar system a=0.5, b=c=1, d=0.
    {
        let sys = StateSpace::new(
            Matrix::scalar(0.5),
            Matrix::scalar(1.0),
            Matrix::scalar(1.0),
            Matrix::scalar(0.0),
        )
        .unwrap();
        let hinf = hinf_norm(&sys, &NormOptions::default()).unwrap().value;
        let hinf_err = (hinf - 2.0).abs();
        let h2 = h2_norm(&sys).unwrap();
        let h2_closed = (4.0f64 / 3.0).sqrt();
        let h2_oracle = h2_impulse_oracle(&sys);
        let h2_err = (h2 - h2_oracle).abs() / h2_oracle;
        let pass = hinf_err <= 1e-9 && h2_err <= 1e-8 && (h2 - h2_closed).abs() <= 1e-8;
        report(
            &mut results,
            2,
            "closed-form norms",
            pass,
            format!("|Hinf - 2| = {hinf_err:.3e}, H2 vs impulse oracle rel {h2_err:.3e}"),
        );
    }

    // 3. Stall separation: coordinate descent stalls at 0.4, its probe finds
    //    the joint descent direction, MADS and restarted NM escape.
    {
        let t0 = Instant::now();
        let demo = stall_demo_run(50_000, 0).unwrap();
        let elapsed = t0.elapsed();
        let cd_ok = (demo.cd_trace.final_value - 0.4).abs() <= 1e-6;
        let probe_ok = demo.cd_probe.min_estimate.is_some_and(|m| m <= -0.4);
        let nm_ok = demo.nm_restart_trace.final_value <= 1e-4;
        let mads_ok = demo.mads_trace.final_value <= 1e-4;
        let pass = demo.separation_holds
            && cd_ok
            && probe_ok
            && nm_ok
            && mads_ok
            && elapsed.as_secs_f64() <= 5.0;
        report(
            &mut results,
            3,
            "stall separation",
            pass,
            format!(
                "cd {:.9} (target 0.4), probe min {:.3}, nm-restart {:.2e}, mads {:.2e}, {:.2}s (limit 5s)",
                demo.cd_trace.final_value,
                demo.cd_probe.min_estimate.unwrap_or(f64::NAN),
                demo.nm_restart_trace.final_value,
                demo.mads_trace.final_value,
                elapsed.as_secs_f64()
            ),
        );
    }

    // 4 + 5 + 7 share one benchmark on the shipped synthetic problem:
    // 100 shared seeded starts, three methods, equal budgets.
    let loaded = LoadedProblem {
        problem: synthetic_problem(),
        notes: String::new(),
    };
    let bench_t0 = Instant::now();
    let bench = bench_run(
        &loaded,
        &["nm-restart".into(), "cd".into(), "mads".into()],
        100,
        0,
        3000,
    )
    .unwrap();
    let bench_elapsed = bench_t0.elapsed();
    let nm: Vec<f64> = bench
        .records
        .iter()
        .filter(|r| r.method == "nm-restart")
        .map(|r| r.f.0)
        .collect();
    let cd: Vec<f64> = bench
        .records
        .iter()
        .filter(|r| r.method == "cd")
        .map(|r| r.f.0)
        .collect();

    // 4. Paired dominance on the first 50 shared starts.
    {
        let wins = nm[..50]
            .iter()
            .zip(&cd[..50])
            .filter(|(a, b)| a <= b)
            .count();
        let med_nm = median(&nm[..50]);
        let med_cd = median(&cd[..50]);
        let gap = (med_cd - med_nm) / med_cd;
        let pass = wins >= 45 && gap >= 0.05 && bench_elapsed.as_secs_f64() <= 600.0;
        report(
            &mut results,
            4,
            "paired benchmark dominance",
            pass,
            format!(
                "nm-restart <= cd on {wins}/50 starts, medians {med_nm:.6} vs {med_cd:.6} ({:.1}% apart), bench {:.0}s (limit 600s)",
                100.0 * gap,
                bench_elapsed.as_secs_f64()
            ),
        );
    }

    // 5. Multistart success mirror: nm-restart within 1% of the cross-method
    //    best on at least 90 of 100 starts.
    {
        let best = bench.summary.best_overall;
        let hits = nm.iter().filter(|f| **f <= best * 1.01).count();
        let pass = hits >= 90;
        report(
            &mut results,
            5,
            "multistart success mirror",
            pass,
            format!(
                "nm-restart within 1% of cross-method best {best:.6} on {hits}/100 starts"
            ),
        );
    }

    // 6. Determinism: identical record streams from identical master seeds.
    {
        let small = |seed: u64| {
            bench_run(
                &loaded,
                &["nm-restart".into(), "mads".into()],
                5,
                seed,
                400,
            )
            .unwrap()
        };
        let a = dfokit::cli::records_to_string(&small(11).records).unwrap();
        let b = dfokit::cli::records_to_string(&small(11).records).unwrap();
        let demo_a = dfokit::cli::records_to_string(&stall_demo_run(20_000, 5).unwrap().records)
            .unwrap();
        let demo_b = dfokit::cli::records_to_string(&stall_demo_run(20_000, 5).unwrap().records)
            .unwrap();
        let pass = a == b && demo_a == demo_b;
        report(
            &mut results,
            6,
            "determinism",
            pass,
            format!(
                "bench records {} bytes, stall-demo records {} bytes, both byte-identical across reruns",
                a.len(),
                demo_a.len()
            ),
        );
    }

    // 7. Trace invariants over all benchmark runs: monotone incumbents,
    //    budget compliance, and mesh below tolerance on MADS ToleranceX stops.
    {
        let pass = bench.violations.is_empty();
        report(
            &mut results,
            7,
            "trace invariants",
            pass,
            format!(
                "{} violations across {} traces",
                bench.violations.len(),
                bench.traces.len()
            ),
        );
    }

    // 8. Probe calibration on seeded quadratics with known gradients.
    {
        let mut rng = Rng::new(0xACCE_0008);
        let mut worst_rel = 0.0f64;
        let mut checked = 0usize;
        while checked < 10 {
            let dim = 2 + (rng.next_u64() % 3) as usize;
            let center: Vec<f64> = (0..dim).map(|_| rng.range(-1.0, 1.0)).collect();
            let scales: Vec<f64> = (0..dim).map(|_| rng.range(0.5, 2.0)).collect();
            let point: Vec<f64> = (0..dim).map(|_| rng.range(-1.0, 1.0)).collect();
            let grad_norm: f64 = point
                .iter()
                .zip(&center)
                .zip(&scales)
                .map(|((x, c), s)| (s * (x - c)).powi(2))
                .sum::<f64>()
                .sqrt();
            if grad_norm < 0.1 {
                continue;
            }
            checked += 1;
            let (c, s) = (center.clone(), scales.clone());
            let f = FnObjective::new(dim, "calibration-quadratic", move |x: &[f64]| {
                x.iter()
                    .zip(&c)
                    .zip(&s)
                    .map(|((xi, ci), si)| 0.5 * si * (xi - ci) * (xi - ci))
                    .sum()
            });
            let cfg = ProbeConfig {
                n_directions: 512,
                radii: vec![1e-6],
                seed: rng.next_u64(),
                descent_threshold: -1e-3,
            };
            let rep = probe(&f, &point, &cfg).unwrap();
            let min = rep.min_estimate.unwrap();
            worst_rel = worst_rel.max((min - (-grad_norm)).abs() / grad_norm);
        }
        let pass = worst_rel <= 0.10;
        report(
            &mut results,
            8,
            "probe calibration",
            pass,
            format!("worst |min estimate + |grad|| / |grad| = {:.3}% over 10 quadratics", 100.0 * worst_rel),
        );
    }

    // 9. Published-constant fidelity.
    {
        let lls = lls10_filter();
        let dfo = dfo_filter();
        let exact = lls.a_hat.get(0, 0) == 0.22819
            && lls.b_hat.data() == [0.00003, 0.00003]
            && lls.c_hat.get(0, 0) == 0.14130
            && lls.d_hat.data() == [0.17889, 0.34404]
            && dfo.a_hat.get(0, 0) == 0.0561
            && dfo.b_hat.data() == [0.2686, 1.0749]
            && dfo.c_hat.get(0, 0) == 0.3094
            && dfo.d_hat.data() == [0.1521, 0.1089];
        let feasible = lls.is_positive(0.0)
            && dfo.is_positive(0.0)
            && is_schur_stable(&lls.a_hat, 0.0).unwrap()
            && is_schur_stable(&dfo.a_hat, 0.0).unwrap();
        let pass = exact && feasible;
        report(
            &mut results,
            9,
            "published-constant fidelity",
            pass,
            format!("exact entries: {exact}, positive and Schur stable: {feasible}"),
        );
    }

    let failures: Vec<String> = results
        .iter()
        .filter(|r| !r.pass)
        .map(|r| format!("criterion {} ({}): {}", r.number, r.name, r.detail))
        .collect();
    assert!(
        failures.is_empty(),
        "acceptance criteria failed:\n{}",
        failures.join("\n")
    );
}
