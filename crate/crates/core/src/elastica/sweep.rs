//! Solutions over a decreasing sequence of obstacle heights, compared with the
//! linearized problem.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::io::Write;

use super::solver::{check_problem, minimize, SolverConfig};
use crate::error::{Error, Result};
use crate::linear_problem::{IntervalCheck, LinearSolution};
use crate::sphere_curve::fmt_f64;

/// Allowed distance of the final lift length from the fold-length interval.
pub const LIFT_LENGTH_SLACK: f64 = 0.05;
/// Allowed relative deviation of `energy / epsilon^2` from the linear value.
pub const ENERGY_RATIO_TOL: f64 = 0.03;
/// Allowed relative deviation of `1 + lambda_hat` from `Lambda^2`.
pub const MULTIPLIER_TOL: f64 = 0.05;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub epsilon: f64,
    pub converged: bool,
    pub lift_count: usize,
    /// Arclength of the longest lift interval.
    pub lift_length: f64,
    pub lift_theta_length: f64,
    pub lambda_hat: f64,
    pub max_alpha_ratio: f64,
    pub max_alpha2_ratio: f64,
    pub max_kappa_ratio: f64,
    pub energy_ratio: f64,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepTable {
    pub n: usize,
    pub rows: Vec<SweepRow>,
    pub checks: Vec<IntervalCheck>,
}

impl SweepTable {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record([
            "epsilon",
            "converged",
            "lift_count",
            "lift_length",
            "lift_theta_length",
            "lambda_hat",
            "max_alpha_ratio",
            "max_alpha2_ratio",
            "max_kappa_ratio",
            "energy_ratio",
        ])?;
        for r in &self.rows {
            w.write_record([
                fmt_f64(r.epsilon),
                r.converged.to_string(),
                r.lift_count.to_string(),
                fmt_f64(r.lift_length),
                fmt_f64(r.lift_theta_length),
                fmt_f64(r.lambda_hat),
                fmt_f64(r.max_alpha_ratio),
                fmt_f64(r.max_alpha2_ratio),
                fmt_f64(r.max_kappa_ratio),
                fmt_f64(r.energy_ratio),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

fn failed_row(epsilon: f64, e: &Error) -> SweepRow {
    SweepRow {
        epsilon,
        converged: false,
        lift_count: 0,
        lift_length: f64::NAN,
        lift_theta_length: f64::NAN,
        lambda_hat: f64::NAN,
        max_alpha_ratio: f64::NAN,
        max_alpha2_ratio: f64::NAN,
        max_kappa_ratio: f64::NAN,
        energy_ratio: f64::NAN,
        error: Some(e.to_string()),
    }
}

fn run(epsilon: f64, n: usize, config: &SolverConfig) -> SweepRow {
    match minimize(epsilon, n, config) {
        Ok(sol) => {
            let r = &sol.report;
            let longest = r
                .lift_intervals
                .iter()
                .max_by(|a, b| a.arclength.total_cmp(&b.arclength));
            SweepRow {
                epsilon,
                converged: r.converged,
                lift_count: r.lift_intervals.len(),
                lift_length: longest.map_or(0.0, |iv| iv.arclength),
                lift_theta_length: longest.map_or(0.0, |iv| iv.theta_length),
                lambda_hat: r.lambda_hat,
                max_alpha_ratio: r.max_alpha_ratio,
                max_alpha2_ratio: r.max_alpha2_ratio,
                max_kappa_ratio: r.max_kappa_ratio,
                energy_ratio: r.final_energy / (epsilon * epsilon),
                error: (!r.converged).then(|| r.message.clone()),
            }
        }
        Err(e) => failed_row(epsilon, &e),
    }
}

/// Trend checks on a finished table against the linearized solution.
pub fn sweep_checks(rows: &[SweepRow], lin: &LinearSolution) -> Vec<IntervalCheck> {
    let mut checks = Vec::new();
    let all_ok = rows.iter().all(|r| r.converged);
    checks.push(IntervalCheck::greater_eq(
        "converged runs",
        rows.iter().filter(|r| r.converged).count() as f64,
        rows.len() as f64,
    ));
    if !all_ok || rows.is_empty() {
        return checks;
    }
    for r in rows.iter().filter(|r| r.epsilon <= 0.05) {
        checks.push(IntervalCheck::less_eq(
            &format!("lift intervals at eps={}", r.epsilon),
            r.lift_count as f64,
            1.0,
        ));
        checks.push(IntervalCheck::greater_eq(
            &format!("lift intervals at eps={} (nonempty)", r.epsilon),
            r.lift_count as f64,
            1.0,
        ));
    }
    for (k, w) in rows.windows(3).enumerate() {
        let d0 = (w[1].lift_length - w[0].lift_length).abs();
        let d1 = (w[2].lift_length - w[1].lift_length).abs();
        let slack = 2.0 * std::f64::consts::PI / 4096.0;
        checks.push(IntervalCheck::less_eq(
            &format!("lift length difference {}", k + 1),
            d1,
            d0 + slack,
        ));
    }
    let last = rows.last().expect("nonempty");
    checks.push(IntervalCheck::greater(
        "final lift length lower",
        last.lift_length,
        2.42 - LIFT_LENGTH_SLACK,
    ));
    checks.push(IntervalCheck::less(
        "final lift length upper",
        last.lift_length,
        2.43 + LIFT_LENGTH_SLACK,
    ));
    let raw = 2.0 * lin.energy;
    checks.push(IntervalCheck::less_eq(
        "final energy/eps^2 relative deviation",
        (last.energy_ratio - raw).abs() / raw,
        ENERGY_RATIO_TOL,
    ));
    let l2 = lin.lambda * lin.lambda;
    checks.push(IntervalCheck::less_eq(
        "final 1+lambda relative deviation",
        ((1.0 + last.lambda_hat) - l2).abs() / l2,
        MULTIPLIER_TOL,
    ));
    for (name, vals) in [
        ("max alpha/eps spread", rows.iter().map(|r| r.max_alpha_ratio).collect::<Vec<_>>()),
        ("max alpha''/eps spread", rows.iter().map(|r| r.max_alpha2_ratio).collect()),
    ] {
        let (mn, mx) = vals
            .iter()
            .fold((f64::MAX, f64::MIN), |(a, b), &x| (a.min(x), b.max(x)));
        checks.push(IntervalCheck::less_eq(name, mx / mn, 2.0));
    }
    checks
}

/// Solves for each `epsilon` in parallel on the current rayon pool. Failed
/// solves become rows with `error` set; the sweep continues.
pub fn sweep_epsilon(eps_list: &[f64], n: usize, config: &SolverConfig) -> Result<SweepTable> {
    if eps_list.is_empty() {
        return Err(Error::InvalidConfig("empty epsilon list".into()));
    }
    if eps_list.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(Error::InvalidConfig("epsilon list must be decreasing".into()));
    }
    for &e in eps_list {
        check_problem(e, n)?;
    }
    let rows: Vec<SweepRow> = eps_list.par_iter().map(|&e| run(e, n, config)).collect();
    let lin = LinearSolution::solve()?;
    let checks = sweep_checks(&rows, &lin);
    Ok(SweepTable { n, rows, checks })
}
