//! End-to-end acceptance run: one PASS/FAIL line per criterion, non-zero exit
//! if any criterion fails.

mod common;

use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use dcone_core::elastica::diagnostics::{obstacle_curvature, tol_el};
use dcone_core::elastica::{minimize, sweep_epsilon, SolverConfig};
use dcone_core::linear_problem::{global_minimizer_search, spot_checks, LinearSolution};
use dcone_core::recovery::{energy_e0, recovery_convergence, SLOPE_TOL};
use dcone_core::sphere_curve::{arclength_curve_from_graph, random_closed_curve};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const SWEEP_EPS: [f64; 4] = [0.1, 0.05, 0.02, 0.01];
const SWEEP_N: usize = 4096;
const H_LIST: [f64; 4] = [1e-2, 1e-3, 1e-4, 1e-5];

struct Verdict {
    ok: bool,
    detail: String,
}

fn verdict(ok: bool, detail: String) -> Verdict {
    Verdict { ok, detail }
}

fn timed(budget: Duration, f: impl FnOnce() -> Verdict) -> Verdict {
    let t = Instant::now();
    let v = f();
    let dt = t.elapsed();
    verdict(
        v.ok && dt < budget,
        format!("{}; {:.2}s of {}s", v.detail, dt.as_secs_f64(), budget.as_secs()),
    )
}

fn linear_exactness() -> Verdict {
    let s = LinearSolution::solve().expect("one-fold solve");
    let ok = s.s_hat > 1.21
        && s.s_hat < 1.215
        && s.lambda > 3.79
        && s.lambda < 3.82
        && s.fold_length() > 2.42
        && s.fold_length() < 2.43;
    verdict(
        ok,
        format!("s_hat={:.6} Lambda={:.6} fold={:.6}", s.s_hat, s.lambda, s.fold_length()),
    )
}

fn energy_separation() -> Verdict {
    let (winner, cert) = global_minimizer_search().expect("search");
    let e1 = cert.one_fold.energy;
    let e2 = cert.best_two_fold.as_ref().map_or(f64::INFINITY, |c| c.energy);
    let ok = e1 <= 67.4
        && e2 >= 80.0
        && cert.two_fold_bound >= 80.0
        && cert.oracle_mismatch <= 1e-6
        && winner.folds() == 1;
    verdict(
        ok,
        format!(
            "E1={e1:.4} E2={e2:.4} two-fold bound={:.4} oracle mismatch={:.1e}",
            cert.two_fold_bound, cert.oracle_mismatch
        ),
    )
}

fn spot_checks_hold() -> Verdict {
    let checks = spot_checks().expect("spot checks");
    let failed: Vec<&str> = checks.iter().filter(|c| !c.passed).map(|c| c.name.as_str()).collect();
    verdict(
        failed.is_empty(),
        format!("{} of {} hold{}", checks.len() - failed.len(), checks.len(), if failed.is_empty() {
            String::new()
        } else {
            format!("; failed: {}", failed.join(", "))
        }),
    )
}

fn nonlinear_convergence() -> Verdict {
    let t = sweep_epsilon(&SWEEP_EPS, SWEEP_N, &SolverConfig::default()).expect("sweep");
    let lin = LinearSolution::solve().expect("linear");
    let last = t.rows.last().expect("rows");
    let one_interval = t.rows.iter().filter(|r| r.epsilon <= 0.05).all(|r| r.lift_count == 1);
    let converged = t.rows.iter().all(|r| r.converged);
    let len_ok = last.lift_length > 2.42 - 0.05 && last.lift_length < 2.43 + 0.05;
    let e_dev = (last.energy_ratio - 2.0 * lin.energy).abs() / (2.0 * lin.energy);
    let l2 = lin.lambda * lin.lambda;
    let m_dev = ((1.0 + last.lambda_hat) - l2).abs() / l2;
    let failed: Vec<&str> = t.checks.iter().filter(|c| !c.passed).map(|c| c.name.as_str()).collect();
    verdict(
        converged && one_interval && len_ok && e_dev <= 0.03 && m_dev <= 0.05 && failed.is_empty(),
        format!(
            "lift length {:.4}, energy dev {:.2}%, multiplier dev {:.2}%, lifts {:?}{}",
            last.lift_length,
            100.0 * e_dev,
            100.0 * m_dev,
            t.rows.iter().map(|r| r.lift_count).collect::<Vec<_>>(),
            if failed.is_empty() { String::new() } else { format!("; failed: {}", failed.join(", ")) }
        ),
    )
}

fn ode_diagnostics() -> Verdict {
    let mut ok = true;
    let mut worst = (0.0f64, 0.0f64);
    for eps in SWEEP_EPS {
        let r = minimize(eps, SWEEP_N, &SolverConfig::default()).expect("solve").report;
        let floor = obstacle_curvature(eps) - tol_el(eps);
        let endpoints = r
            .lift_intervals
            .iter()
            .all(|iv| iv.kappa_endpoints.iter().all(|&k| k >= floor));
        let per_interval = r.lift_intervals.iter().all(|iv| iv.conserved_drift <= 1e-3);
        let run_ok = r.converged
            && !r.lift_intervals.is_empty()
            && per_interval
            && r.height_residual <= tol_el(eps)
            && endpoints
            && r.endpoint_curvature_ok
            && r.sum_a2_l3 >= 0.25 * eps * eps;
        if !run_ok {
            println!("    eps={eps}: {r:?}");
        }
        ok &= run_ok;
        worst.0 = worst.0.max(r.conserved_drift);
        worst.1 = worst.1.max(r.height_residual / eps);
    }
    verdict(
        ok,
        format!("max drift {:.2e}, max height residual / eps {:.2e}", worst.0, worst.1),
    )
}

fn gradient_correctness() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let mut g_worst = 0.0f64;
    for _ in 0..50 {
        let eps = rng.random_range(0.01..0.2);
        let alpha = common::random_feasible(&mut rng, 256, eps);
        let v = common::random_direction(&mut rng, 256);
        g_worst = g_worst.max(common::gradient_fd_error(&alpha, &v));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(22);
    let mut v_worst = 0.0f64;
    for _ in 0..50 {
        let eps = rng.random_range(0.01..0.2);
        let alpha = common::random_smooth_lifted(&mut rng, 512, eps);
        let v = common::smooth_direction(&mut rng, 512);
        let lambda = rng.random_range(-1.0..20.0);
        v_worst = v_worst.max(common::first_variation_gap(&alpha, eps, &v, lambda));
    }
    verdict(
        g_worst <= 1e-6 && v_worst <= 1e-4,
        format!("gradient {g_worst:.2e}, first variation {v_worst:.2e}"),
    )
}

fn gamma_limit() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let mut worst = 0.0f64;
    for _ in 0..20 {
        let c = random_closed_curve(&mut rng, 512).expect("curve");
        let e = energy_e0(&c).expect("limit energy");
        worst = worst.max((e.annulus - e.circle).abs() / e.circle);
    }
    let sol = minimize(0.05, 2048, &SolverConfig::default()).expect("solve");
    let gamma = arclength_curve_from_graph(&sol.curve.alpha, 2048).expect("resample");
    let t = recovery_convergence(&gamma, &H_LIST).expect("recovery");
    verdict(
        worst <= 1e-4 && (t.slope - 1.0).abs() <= SLOPE_TOL && t.bound_ok && t.monotone,
        format!("annulus identity {worst:.2e}, slope {:.6}, a={:.4}", t.slope, t.fitted_a),
    )
}

fn determinism() -> Verdict {
    let run = || {
        Command::new(env!("CARGO_BIN_EXE_dcone"))
            .arg("selftest")
            .output()
            .expect("selftest runs")
    };
    let (a, b) = (run(), run());
    let same = a.stdout == b.stdout && !a.stdout.is_empty();
    verdict(
        same && a.status.success() && b.status.success(),
        format!("{} bytes, identical: {same}", a.stdout.len()),
    )
}

fn main() -> ExitCode {
    let criteria: [(&str, Duration, fn() -> Verdict); 8] = [
        ("linear problem exactness", Duration::from_secs(1), linear_exactness),
        ("energy separation", Duration::from_secs(10), energy_separation),
        ("inequality spot checks", Duration::from_secs(1), spot_checks_hold),
        ("nonlinear-to-linear convergence", Duration::from_secs(600), nonlinear_convergence),
        ("ODE diagnostics", Duration::from_secs(600), ode_diagnostics),
        ("gradient correctness", Duration::from_secs(60), gradient_correctness),
        ("limit identity and recovery rate", Duration::from_secs(300), gamma_limit),
        ("selftest determinism", Duration::from_secs(600), determinism),
    ];
    let mut failures = 0;
    for (k, (name, budget, f)) in criteria.into_iter().enumerate() {
        let v = timed(budget, f);
        println!(
            "criterion {} {}: {name}: {}",
            k + 1,
            if v.ok { "PASS" } else { "FAIL" },
            v.detail
        );
        failures += usize::from(!v.ok);
    }
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
