//! A fixed, seeded battery of checks across all modules with a deterministic
//! report.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::elastica::{discrete_energy, evaluate, minimize, SolveReport, SolverConfig};
use crate::error::Result;
use crate::linear_problem::{
    global_minimizer_search, interval_checks, spot_checks, IntervalCheck, LinearSolution,
};
use crate::recovery::{energy_e0, recovery_convergence, ProfileF, RecoveryTable};
use crate::sphere_curve::{random_closed_curve, DiscreteCurve, ParameterKind};

const SEED: u64 = 20_240_611;
const GRADIENT_STATES: usize = 10;
const RANDOM_CURVES: usize = 5;
const ELASTICA_EPS: f64 = 0.1;
const ELASTICA_N: usize = 512;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelftestReport {
    pub version: String,
    pub linear: LinearSolution,
    pub elastica: SolveReport,
    pub recovery: RecoveryTable,
    pub checks: Vec<IntervalCheck>,
}

impl SelftestReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

fn gradient_error(rng: &mut ChaCha8Rng, n: usize, eps: f64) -> f64 {
    let coef: Vec<f64> = (0..6).map(|_| rng.random_range(-0.5..0.5)).collect();
    let alpha: Vec<f64> = (0..n)
        .map(|i| {
            let t = 2.0 * PI * i as f64 / n as f64;
            let v = 1.5 + coef[0] * t.cos() + coef[1] * t.sin() + coef[2] * (2.0 * t).cos()
                + coef[3] * (2.0 * t).sin() + coef[4] * (3.0 * t).cos() + coef[5] * (3.0 * t).sin();
            (eps * v).max(eps)
        })
        .collect();
    let dir: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
    let step = 1e-7;
    let at = |t: f64| -> f64 {
        let a: Vec<f64> = alpha.iter().zip(&dir).map(|(a, d)| a + t * d).collect();
        discrete_energy(&a).0
    };
    let fd = (at(step) - at(-step)) / (2.0 * step);
    let g = evaluate(&alpha, false).grad_energy;
    let exact: f64 = g.iter().zip(&dir).map(|(g, d)| g * d).sum();
    let scale: f64 = g.iter().zip(&dir).map(|(g, d)| (g * d).abs()).sum();
    (fd - exact).abs() / scale
}

/// Runs the battery. Errors come only from failures to set up a check; a
/// check that runs and fails is recorded in the report.
pub fn selftest() -> Result<SelftestReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let linear = LinearSolution::solve()?;
    let mut checks = interval_checks(&linear);
    checks.extend(spot_checks()?);
    let (_, cert) = global_minimizer_search()?;
    checks.extend(cert.checks);

    let worst = (0..GRADIENT_STATES)
        .map(|_| gradient_error(&mut rng, 256, 0.05))
        .fold(0.0, f64::max);
    checks.push(IntervalCheck::less_eq("gradient against central differences", worst, 1e-6));

    let sol = minimize(ELASTICA_EPS, ELASTICA_N, &SolverConfig::default())?;
    let elastica = sol.report;
    checks.push(IntervalCheck::greater_eq(
        "elastica converged",
        f64::from(u8::from(elastica.converged)),
        1.0,
    ));
    checks.push(IntervalCheck::less_eq(
        "elastica length residual",
        elastica.length_residual.abs(),
        1e-10,
    ));
    checks.push(IntervalCheck::greater_eq(
        "elastica lift intervals",
        elastica.lift_intervals.len() as f64,
        1.0,
    ));

    let mut worst = 0.0f64;
    for _ in 0..RANDOM_CURVES {
        let c = random_closed_curve(&mut rng, 256)?;
        let e = energy_e0(&c)?;
        worst = worst.max((e.annulus - e.circle).abs() / e.circle.max(f64::MIN_POSITIVE));
    }
    checks.push(IntervalCheck::less_eq("cone annulus identity", worst, 1e-4));

    let bound = ProfileF.derivative_bound(4.0, 4000);
    checks.push(IntervalCheck::less("profile derivative bound", bound, 100.0));

    let equator = DiscreteCurve::parallel(0.0, 512, ParameterKind::Arclength)?;
    let recovery = recovery_convergence(&equator, &[1e-2, 1e-3])?;
    checks.push(IntervalCheck::less_eq(
        "equator recovery slope deviation",
        (recovery.slope - 1.0).abs(),
        crate::recovery::SLOPE_TOL,
    ));

    Ok(SelftestReport {
        version: env!("CARGO_PKG_VERSION").into(),
        linear,
        elastica,
        recovery,
        checks,
    })
}
