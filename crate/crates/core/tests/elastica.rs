mod common;

use std::f64::consts::PI;
use std::sync::OnceLock;

use dcone_core::elastica::diagnostics::{
    arclength_data, classify_runs, lifted_runs, obstacle_curvature, tol_active, tol_el,
};
use dcone_core::elastica::{
    bump_init, diagnostics, discrete_energy, fit_multiplier, minimize, sweep_epsilon, GraphCurve,
    Init, Solution, SolverConfig,
};
use dcone_core::linear_problem::LinearSolution;
use dcone_core::Error;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn linear() -> &'static LinearSolution {
    static LIN: OnceLock<LinearSolution> = OnceLock::new();
    LIN.get_or_init(|| LinearSolution::solve().unwrap())
}

fn solution_005() -> &'static Solution {
    static SOL: OnceLock<Solution> = OnceLock::new();
    SOL.get_or_init(|| minimize(0.05, 2048, &SolverConfig::default()).unwrap())
}

#[test]
fn gradient_matches_central_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for _ in 0..50 {
        let eps = rng.random_range(0.01..0.2);
        let alpha = common::random_feasible(&mut rng, 256, eps);
        let v = common::random_direction(&mut rng, 256);
        let err = common::gradient_fd_error(&alpha, &v);
        assert!(err < 1e-6, "eps {eps}: {err:e}");
    }
}

#[test]
fn gradient_matches_curve_first_variation() {
    let mut rng = ChaCha8Rng::seed_from_u64(22);
    for _ in 0..50 {
        let eps = rng.random_range(0.01..0.2);
        let alpha = common::random_smooth_lifted(&mut rng, 512, eps);
        let v = common::smooth_direction(&mut rng, 512);
        let lambda = rng.random_range(-1.0..20.0);
        let gap = common::first_variation_gap(&alpha, eps, &v, lambda);
        assert!(gap < 1e-4, "eps {eps} lambda {lambda}: {gap:e}");
    }
}

#[test]
fn parallel_satisfies_height_equation() {
    for eps in [0.01, 0.05, 0.2] {
        let c = GraphCurve::parallel(eps, 1024).unwrap();
        let r = diagnostics(&c, 0.0).unwrap();
        assert!(r.height_residual <= 1e-8, "{}", r.height_residual);
        assert!(r.lift_intervals.is_empty());
        let (k, _) = c.curvature();
        assert!(k.iter().all(|k| (k - obstacle_curvature(eps)).abs() < 1e-12));
    }
}

#[test]
fn multiplier_fit_recovers_pure_cosine() {
    let lam0: f64 = 3.8;
    let s: Vec<f64> = (0..200).map(|i| -1.0 + 2.0 * i as f64 / 199.0).collect();
    let k: Vec<f64> = s.iter().map(|s| (lam0 * s).cos()).collect();
    let kss: Vec<f64> = k.iter().map(|k| -lam0 * lam0 * k).collect();
    let lam = fit_multiplier(&k, &kss, false).unwrap();
    assert!((lam - (lam0 * lam0 - 1.0)).abs() < 1e-6, "{lam}");
    assert!(matches!(fit_multiplier(&k[..5], &kss[..5], false), Err(Error::InsufficientData(_))));
}

#[test]
fn multiplier_fit_is_stable_under_smooth_noise() {
    let lam0: f64 = 3.8;
    let s: Vec<f64> = (0..400).map(|i| -1.2 + 2.4 * i as f64 / 399.0).collect();
    let base = fit_multiplier(
        &s.iter().map(|s| (lam0 * s).cos()).collect::<Vec<_>>(),
        &s.iter().map(|s| -lam0 * lam0 * (lam0 * s).cos()).collect::<Vec<_>>(),
        false,
    )
    .unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        // amplitude-1e-3 perturbation from six random modes
        let modes: Vec<(f64, f64, f64)> = (1..=6)
            .map(|k| (k as f64, rng.random_range(-1.0..1.0), rng.random_range(0.0..2.0 * PI)))
            .collect();
        let norm: f64 = modes.iter().map(|m| m.1.abs()).sum();
        let amp = 1e-3 / norm;
        let k: Vec<f64> = s
            .iter()
            .map(|&x| {
                (lam0 * x).cos()
                    + amp * modes.iter().map(|(w, a, p)| a * (w * x + p).sin()).sum::<f64>()
            })
            .collect();
        let kss: Vec<f64> = s
            .iter()
            .map(|&x| {
                -lam0 * lam0 * (lam0 * x).cos()
                    - amp * modes.iter().map(|(w, a, p)| w * w * a * (w * x + p).sin()).sum::<f64>()
            })
            .collect();
        worst = worst.max((fit_multiplier(&k, &kss, false).unwrap() - base).abs());
    }
    assert!(worst <= 0.1, "{worst}");
}

#[test]
fn one_bump_solution_matches_linear_fold() {
    let eps = 0.05;
    let sol = solution_005();
    let r = &sol.report;
    let lin = linear();
    assert!(r.converged, "{}", r.message);
    assert_eq!(r.lift_intervals.len(), 1);
    let iv = &r.lift_intervals[0];
    let fold = lin.fold_length();
    assert!((iv.theta_length - fold).abs() <= 0.05 * fold, "{}", iv.theta_length);
    let l2 = lin.lambda * lin.lambda;
    assert!(1.0 + r.lambda_hat > 0.9 * l2 && 1.0 + r.lambda_hat < 1.1 * l2);
    assert!(((r.lambda_multiplier - r.lambda_hat) / r.lambda_hat).abs() < 1e-2);

    // rescaled height against the linear profile, lift interval centred at node 0
    let c = &sol.curve;
    let d = arclength_data(c);
    let n = c.len();
    let total = d.s[n - 1] + 0.5 * c.dtheta() * (d.speed[n - 1] + d.speed[0]);
    let mut dev: f64 = 0.0;
    let mut peak: f64 = 0.0;
    for i in 0..n {
        let s = if d.s[i] > 0.5 * total { d.s[i] - total } else { d.s[i] };
        dev = dev.max((c.alpha[i] / eps - lin.h(s)).abs());
        peak = peak.max(lin.h(s) - 1.0);
    }
    assert!(dev <= 0.05 * peak, "{dev} vs {peak}");
}

#[test]
fn one_bump_solution_satisfies_stationarity_diagnostics() {
    let eps = 0.05;
    let sol = solution_005();
    let r = &sol.report;
    assert!(r.length_residual.abs() <= 1e-10);
    assert!(sol.curve.alpha.iter().all(|&a| a >= eps));
    assert!(r.kkt_residual <= SolverConfig::default().tol, "{}", r.kkt_residual);
    assert!(r.max_objective_increase <= 1e-10, "{}", r.max_objective_increase);
    assert!(r.symmetry_defect <= 1e-8, "{}", r.symmetry_defect);
    assert!(r.conserved_drift <= 1e-3);
    assert!(r.el_residual <= tol_el(eps), "{}", r.el_residual);
    assert!(r.height_residual <= tol_el(eps));
    assert!(r.sum_a2_l3 >= r.sum_a2_l3_bound);
    assert!((r.sum_a2_l3_bound - 0.25 * eps * eps).abs() < 1e-15);
    assert!(r.endpoint_curvature_ok);
    for iv in &r.lift_intervals {
        for k in iv.kappa_endpoints {
            assert!(k >= obstacle_curvature(eps) - tol_el(eps), "{k}");
        }
    }
    // exactly the reported interval nodes are above the active tolerance
    let n = sol.curve.len();
    let iv = &r.lift_intervals[0];
    let inside: Vec<usize> = (0..iv.nodes).map(|k| (iv.first + k) % n).collect();
    for &i in &inside {
        assert!(sol.curve.alpha[i] > eps + tol_active(eps));
    }
    assert_eq!(lifted_runs(&sol.curve.alpha, eps).len(), 1 + r.unresolved_runs);
}

#[test]
fn solution_lifts_off_the_parallel() {
    let sol = minimize(0.05, 512, &SolverConfig::default()).unwrap();
    let (_, l) = discrete_energy(&vec![0.05; 512]);
    assert!(l < 2.0 * PI);
    assert!(!sol.report.lift_intervals.is_empty());
}

#[test]
fn two_fold_stationary_point_has_higher_energy() {
    let cfg = SolverConfig { init: Some(Init::TwoBump), ..Default::default() };
    let two = minimize(0.05, 2048, &cfg).unwrap();
    assert!(two.report.converged, "{}", two.report.message);
    assert_eq!(two.report.lift_intervals.len(), 2);
    assert!(two.report.final_energy > solution_005().report.final_energy);
}

#[test]
fn conserved_drift_converges_under_refinement() {
    // fourth-order truncation dominates below about 1000 nodes; above that
    // the drift sits at the rounding level of the third derivative
    let drift = |n| minimize(0.05, n, &SolverConfig::default()).unwrap().report.conserved_drift;
    let (d1, d2) = (drift(256), drift(512));
    let order = (d1 / d2).log2();
    assert!(order >= 1.5, "{d1:e} {d2:e} order {order}");
    assert!(drift(4096) <= 1e-3);
}

#[test]
fn budget_exhaustion_is_reported() {
    let cfg = SolverConfig { max_iters: 3, ..Default::default() };
    let sol = minimize(0.05, 512, &cfg).unwrap();
    assert!(!sol.report.converged);
    assert!(sol.report.message.contains("budget"), "{}", sol.report.message);
}

#[test]
fn out_of_range_problems_are_rejected() {
    let cfg = SolverConfig::default();
    assert!(matches!(minimize(0.9, 1024, &cfg), Err(Error::Regime(_))));
    assert!(matches!(minimize(0.0, 1024, &cfg), Err(Error::Regime(_))));
    assert!(matches!(minimize(0.05, 128, &cfg), Err(Error::Resolution(_))));
    let bad = SolverConfig { tol: 0.0, ..Default::default() };
    assert!(matches!(minimize(0.05, 512, &bad), Err(Error::InvalidConfig(_))));
    let odd = SolverConfig { init: Some(Init::TwoBump), ..Default::default() };
    assert!(matches!(minimize(0.05, 513, &odd), Err(Error::InvalidConfig(_))));
}

#[test]
fn profile_start_with_wrong_length_is_rejected() {
    let cfg = SolverConfig { init: Some(Init::Profile(vec![0.1; 300])), ..Default::default() };
    assert!(matches!(minimize(0.05, 512, &cfg), Err(Error::DimensionMismatch { .. })));
}

#[test]
fn sweep_rejects_bad_lists() {
    let cfg = SolverConfig::default();
    assert!(matches!(sweep_epsilon(&[], 512, &cfg), Err(Error::InvalidConfig(_))));
    assert!(matches!(sweep_epsilon(&[0.05, 0.1], 512, &cfg), Err(Error::InvalidConfig(_))));
    assert!(matches!(sweep_epsilon(&[0.3, 0.1], 512, &cfg), Err(Error::Regime(_))));
}

#[test]
fn coarse_sweep_reports_one_fold_rows() {
    let table = sweep_epsilon(&[0.1, 0.05], 1024, &SolverConfig::default()).unwrap();
    assert_eq!(table.rows.len(), 2);
    assert!(table.rows.iter().all(|r| r.converged && r.lift_count == 1));
    let mut csv = Vec::new();
    table.write_csv(&mut csv).unwrap();
    let text = String::from_utf8(csv).unwrap();
    assert_eq!(text.lines().count(), 3);
    assert!(text.starts_with("epsilon,converged,lift_count,lift_length"));
}

#[test]
fn bump_start_has_length_two_pi_to_leading_order() {
    for eps in [0.01, 0.05] {
        let a = bump_init(eps, 2048, &[0.0]);
        let (_, l) = discrete_energy(&a);
        assert!((l - 2.0 * PI).abs() <= 2.0 * eps.powi(3), "{eps}: {}", l - 2.0 * PI);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn energy_is_invariant_under_grid_rotation_and_reflection(seed in any::<u64>(), shift in 0usize..256) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = common::random_feasible(&mut rng, 256, 0.05);
        let (e, l) = discrete_energy(&a);
        let mut r = a.clone();
        r.rotate_left(shift);
        let (er, lr) = discrete_energy(&r);
        let m: Vec<f64> = (0..256).map(|i| a[(256 - i) % 256]).collect();
        let (em, lm) = discrete_energy(&m);
        prop_assert!(e >= 0.0);
        prop_assert!(((er - e) / e).abs() < 1e-12 && ((em - e) / e).abs() < 1e-12);
        prop_assert!((lr - l).abs() < 1e-12 && (lm - l).abs() < 1e-12);
    }

    #[test]
    fn lifted_runs_partition_the_raised_nodes(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let eps = 0.05;
        let a = common::random_feasible(&mut rng, 300, eps);
        let runs = lifted_runs(&a, eps);
        let mut mark = vec![0u32; a.len()];
        for &(first, nodes) in &runs {
            for k in 0..nodes {
                mark[(first + k) % a.len()] += 1;
            }
        }
        for (i, &m) in mark.iter().enumerate() {
            prop_assert_eq!(m, u32::from(a[i] > eps + tol_active(eps)));
        }
        let (kept, dropped) = classify_runs(&a, eps);
        prop_assert_eq!(kept.len() + dropped.len(), runs.len());
    }

    #[test]
    fn iterates_stay_feasible_and_objective_does_not_rise(seed in any::<u64>(), iters in 1usize..8) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let eps = rng.random_range(0.02..0.2);
        let start = common::random_feasible(&mut rng, 256, eps);
        let cfg = SolverConfig { max_iters: iters, init: Some(Init::Profile(start)), ..Default::default() };
        let sol = minimize(eps, 256, &cfg).unwrap();
        prop_assert!(sol.curve.alpha.iter().all(|&a| a >= eps));
        prop_assert!(sol.report.max_objective_increase <= 1e-10);
    }
}
