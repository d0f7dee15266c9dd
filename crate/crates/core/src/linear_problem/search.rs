use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use super::{
    bisect, branch_lambda, constraint_rhs, equal_fold_defect, equal_fold_limit, g_function,
    one_fold_rhs, tan_ratio_gap, FoldConfig, LinearSolution,
};
use crate::error::{Error, Result};

/// Grid points per equal-fold family.
pub const SEARCH_GRID: usize = 20_000;
const SEARCH_START: f64 = 0.05;
const UNEQUAL_GRID: usize = 2_000;

/// A named numerical inequality and whether it holds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntervalCheck {
    pub name: String,
    pub value: f64,
    pub relation: String,
    pub bound: f64,
    pub passed: bool,
}

impl IntervalCheck {
    pub fn less(name: &str, value: f64, bound: f64) -> Self {
        Self::make(name, value, "<", bound, value < bound)
    }

    pub fn less_eq(name: &str, value: f64, bound: f64) -> Self {
        Self::make(name, value, "<=", bound, value <= bound)
    }

    pub fn greater(name: &str, value: f64, bound: f64) -> Self {
        Self::make(name, value, ">", bound, value > bound)
    }

    pub fn greater_eq(name: &str, value: f64, bound: f64) -> Self {
        Self::make(name, value, ">=", bound, value >= bound)
    }

    fn make(name: &str, value: f64, relation: &str, bound: f64, passed: bool) -> Self {
        Self {
            name: name.into(),
            value,
            relation: relation.into(),
            bound,
            passed,
        }
    }
}

/// Output of [`global_minimizer_search`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub one_fold: FoldConfig,
    pub best_two_fold: Option<FoldConfig>,
    pub energy_gap: f64,
    /// `sqrt(E_1 / pi)`, an upper bound for `Lambda` at any minimizer.
    pub lambda_upper: f64,
    pub lambda_1_at_1225: f64,
    pub lambda_2_at_1225: f64,
    /// Root of `s tan s = 2 - 2 / 3.75^2`, a lower bound for the common half-length.
    pub s_bar_lower: f64,
    /// Minimum over `(pi/3, 1.225)` of `(1.43 pi / s)^2 [pi + 2 (tan s - s)]`.
    pub two_fold_bound: f64,
    /// Smallest energy among unequal two-fold configurations on branch pairs
    /// `(1, 2)` and `(2, 2)`, if any exist.
    pub unequal_two_fold_energy: Option<f64>,
    /// Largest of the differences in `(s, Lambda, energy)` between the grid
    /// winner and the bisection solution.
    pub oracle_mismatch: f64,
    pub checks: Vec<IntervalCheck>,
}

impl Certificate {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> Vec<&IntervalCheck> {
        self.checks.iter().filter(|c| !c.passed).collect()
    }
}

/// Narrows a sign change of `f` on `[a, b]` by repeated sampling on a
/// 16-point subgrid, until the bracket spans a few ulps.
fn zoom_root<F>(f: F, mut a: f64, mut b: f64) -> Result<f64>
where
    F: Fn(f64) -> Result<f64>,
{
    const SUB: usize = 16;
    let mut fa = f(a)?;
    while b - a > 4.0 * f64::EPSILON * b.abs() {
        let mut next = None;
        for k in 1..=SUB {
            let x = if k == SUB {
                b
            } else {
                a + (b - a) * k as f64 / SUB as f64
            };
            let fx = f(x)?;
            if fx == 0.0 {
                return Ok(x);
            }
            if fx.signum() != fa.signum() {
                let x0 = a + (b - a) * (k - 1) as f64 / SUB as f64;
                next = Some((x0, x));
                break;
            }
        }
        let (x0, x1) = next.ok_or_else(|| Error::Bracketing {
            what: "zoom".into(),
            lo: a,
            hi: b,
        })?;
        if x0 <= a && x1 >= b {
            break;
        }
        a = x0;
        b = x1;
        fa = f(a)?;
    }
    Ok(0.5 * (a + b))
}

/// Configurations of `N` equal folds on branch 1, found by sign changes of the
/// cleared constraint on a uniform grid of `grid` points followed by local
/// grid refinement.
pub fn equal_fold_roots(n_folds: usize, grid: usize) -> Result<Vec<FoldConfig>> {
    let limit = equal_fold_limit(n_folds)?.min(PI / n_folds as f64);
    let xs: Vec<f64> = (0..=grid)
        .map(|k| SEARCH_START + (limit - SEARCH_START) * k as f64 / grid as f64)
        .collect();
    let vals: Vec<f64> = xs
        .par_iter()
        .map(|&s| equal_fold_defect(n_folds, s))
        .collect::<Result<_>>()?;
    let brackets: Vec<(f64, f64)> = (0..grid)
        .filter(|&k| vals[k] != 0.0 && vals[k].signum() != vals[k + 1].signum())
        .map(|k| (xs[k], xs[k + 1]))
        .collect();
    brackets
        .into_par_iter()
        .map(|(a, b)| {
            let s = zoom_root(|s| equal_fold_defect(n_folds, s), a, b)?;
            let lambda = branch_lambda(1, s)?;
            FoldConfig::new(vec![s; n_folds], vec![1; n_folds], lambda)
        })
        .collect()
}

/// `min_{s in (pi/3, 1.225)} (1.43 pi / s)^2 [pi + 2 (tan s - s)]` on a dense grid,
/// endpoints included.
pub fn two_fold_lower_bound(grid: usize) -> f64 {
    let f = |s: f64| (1.43 * PI / s).powi(2) * (PI + 2.0 * (s.tan() - s));
    (0..=grid)
        .map(|k| f(PI / 3.0 + (1.225 - PI / 3.0) * k as f64 / grid as f64))
        .fold(f64::INFINITY, f64::min)
}

/// Half-length `s` in `(0, pi/2)` with `Lambda_{j,s} = lambda`, if any.
fn partner_half_length(j: u32, lambda: f64) -> Option<f64> {
    // Lambda_{j,s} falls from infinity to 2j + 1 as s runs over (0, pi/2)
    if !(lambda > (2 * j + 1) as f64) {
        return None;
    }
    bisect(
        |s| Ok(branch_lambda(j, s)? - lambda),
        1e-6,
        PI / 2.0 - 1e-9,
        "partner half-length",
    )
    .ok()
}

fn unequal_two_fold(j1: u32, j2: u32) -> Result<Vec<FoldConfig>> {
    let defect = |s1: f64| -> Result<Option<f64>> {
        let lambda = branch_lambda(j1, s1)?;
        let Some(s2) = partner_half_length(j2, lambda) else {
            return Ok(None);
        };
        if s1 + s2 >= PI {
            return Ok(None);
        }
        match constraint_rhs(&[s1, s2]) {
            Ok(rhs) => Ok(Some(lambda * lambda - rhs)),
            Err(Error::InfeasibleConfig(_)) => Ok(None),
            Err(e) => Err(e),
        }
    };
    let xs: Vec<f64> = (0..=UNEQUAL_GRID)
        .map(|k| SEARCH_START + (PI / 2.0 - 1e-3 - SEARCH_START) * k as f64 / UNEQUAL_GRID as f64)
        .collect();
    let vals: Vec<Option<f64>> = xs.par_iter().map(|&s| defect(s)).collect::<Result<_>>()?;
    let mut out = Vec::new();
    for k in 0..UNEQUAL_GRID {
        if let (Some(a), Some(b)) = (vals[k], vals[k + 1]) {
            if a.signum() != b.signum() {
                let s1 = zoom_root(
                    |s| defect(s)?.ok_or(Error::InfeasibleConfig("left feasible set".into())),
                    xs[k],
                    xs[k + 1],
                )?;
                let lambda = branch_lambda(j1, s1)?;
                if let Some(s2) = partner_half_length(j2, lambda) {
                    out.push(FoldConfig::new(vec![s1, s2], vec![j1, j2], lambda)?);
                }
            }
        }
    }
    Ok(out)
}

fn pick_best(configs: &[FoldConfig]) -> Option<FoldConfig> {
    configs
        .iter()
        .min_by(|a, b| {
            a.energy
                .total_cmp(&b.energy)
                .then(a.half_lengths[0].total_cmp(&b.half_lengths[0]))
        })
        .cloned()
}

/// Statements used to pin down the one-fold solution, evaluated directly.
pub fn interval_checks(sol: &LinearSolution) -> Vec<IntervalCheck> {
    let s = sol.s_hat;
    let l = sol.lambda;
    vec![
        IntervalCheck::greater("s_hat > 1.21", s, 1.21),
        IntervalCheck::less("s_hat < 1.215", s, 1.215),
        IntervalCheck::greater("Lambda > 3.79", l, 3.79),
        IntervalCheck::less("Lambda < 3.82", l, 3.82),
        IntervalCheck::greater("fold length > 2.42", 2.0 * s, 2.42),
        IntervalCheck::less("fold length < 2.43", 2.0 * s, 2.43),
    ]
}

/// The inequalities behind the one-fold certificate, each evaluated in
/// double precision.
pub fn spot_checks() -> Result<Vec<IntervalCheck>> {
    let gap = |l: f64, s: f64| tan_ratio_gap(l * s, s);
    Ok(vec![
        IntervalCheck::greater("g(1.225) > 2 pi", g_function(1.225)?, 2.0 * PI),
        IntervalCheck::greater_eq("Lambda_{1,1.225} >= 3.75", branch_lambda(1, 1.225)?, 3.75),
        IntervalCheck::greater_eq("Lambda_{2,1.225} >= 6.35", branch_lambda(2, 1.225)?, 6.35),
        IntervalCheck::less(
            "tan(1.43 pi)/(1.43 pi) < 1",
            (1.43 * PI).tan() / (1.43 * PI),
            1.0,
        ),
        IntervalCheck::less("L(1.21) < 3.81^2", one_fold_rhs(1.21)?, 3.81 * 3.81),
        IntervalCheck::greater("L(1.215) > 3.8^2", one_fold_rhs(1.215)?, 3.8 * 3.8),
        IntervalCheck::less("y(3.81*1.21) - y(1.21) < 0", gap(3.81, 1.21), 0.0),
        IntervalCheck::greater("y(3.82*1.21) - y(1.21) > 0", gap(3.82, 1.21), 0.0),
        IntervalCheck::less("y(3.79*1.215) - y(1.215) < 0", gap(3.79, 1.215), 0.0),
        IntervalCheck::greater("y(3.8*1.215) - y(1.215) > 0", gap(3.8, 1.215), 0.0),
        IntervalCheck::less("y(3.75*1.225) - y(1.225) < 0", gap(3.75, 1.225), 0.0),
        IntervalCheck::less("y(6.35*1.225) - y(1.225) < 0", gap(6.35, 1.225), 0.0),
        IntervalCheck::greater("3.75*1.225 > pi", 3.75 * 1.225, PI),
        IntervalCheck::less("3.75*1.225 < 2 pi", 3.75 * 1.225, 2.0 * PI),
        IntervalCheck::greater("6.35*1.225 > 2 pi", 6.35 * 1.225, 2.0 * PI),
        IntervalCheck::less("6.35*1.225 < 3 pi", 6.35 * 1.225, 3.0 * PI),
        IntervalCheck::less_eq(
            "3.82^2 [pi + tan(1.215) - 1.215] <= 67.4",
            3.82 * 3.82 * (PI + 1.215f64.tan() - 1.215),
            67.4,
        ),
    ])
}

/// Searches one- and two-fold configurations on branch 1 and certifies that
/// the single fold has the lowest energy.
pub fn global_minimizer_search() -> Result<(FoldConfig, Certificate)> {
    let sol = LinearSolution::solve()?;
    let one = equal_fold_roots(1, SEARCH_GRID)?;
    let two = equal_fold_roots(2, SEARCH_GRID)?;
    let best_one = pick_best(&one).ok_or_else(|| {
        Error::NonConvergence("no one-fold configuration on the search grid".into())
    })?;
    let best_two = pick_best(&two);
    let winner = pick_best(&[one, two].concat()).expect("at least one configuration");

    let oracle_mismatch = (best_one.half_lengths[0] - sol.s_hat)
        .abs()
        .max((best_one.lambda - sol.lambda).abs())
        .max((best_one.energy - sol.energy).abs());

    let lambda_upper = (sol.energy / PI).sqrt();
    let lambda_1_at_1225 = branch_lambda(1, 1.225)?;
    let lambda_2_at_1225 = branch_lambda(2, 1.225)?;
    let s_bar_lower = bisect(
        |s| Ok(s * s.tan() - (2.0 - 2.0 / (3.75 * 3.75))),
        0.5,
        1.5,
        "s tan s bound",
    )?;
    let two_fold_bound = two_fold_lower_bound(100_000);
    let crit = |s: f64| s * s.tan().powi(2) - (PI + 2.0 * (s.tan() - s));

    let mut unequal = unequal_two_fold(1, 2)?;
    unequal.extend(unequal_two_fold(2, 2)?);
    let unequal_two_fold_energy = pick_best(&unequal).map(|c| c.energy);

    let two_energy = best_two.as_ref().map_or(f64::INFINITY, |c| c.energy);
    let mut checks = interval_checks(&sol);
    checks.extend(spot_checks()?);
    checks.extend([
        IntervalCheck::less_eq("N=1 energy <= 67.4", best_one.energy, 67.4),
        IntervalCheck::greater_eq("N=2 energy >= 80", two_energy, 80.0),
        IntervalCheck::less("winner has one fold", winner.folds() as f64, 2.0),
        IntervalCheck::less_eq("Lambda <= sqrt(E/pi) <= 4.64", lambda_upper, 4.64),
        IntervalCheck::less("4.64 < Lambda_{2,1.225}", 4.64, lambda_2_at_1225),
        IntervalCheck::greater("s_bar > pi/3", s_bar_lower, PI / 3.0),
        IntervalCheck::greater_eq("two-fold lower bound >= 80", two_fold_bound, 80.0),
        IntervalCheck::less("critical condition at 1.13 < 0", crit(1.13), 0.0),
        IntervalCheck::greater("critical condition at 1.14 > 0", crit(1.14), 0.0),
        IntervalCheck::greater(
            "(1.43 pi)^2 tan(1.13)^2 / 1.13 > 80",
            (1.43 * PI).powi(2) * 1.13f64.tan().powi(2) / 1.13,
            80.0,
        ),
        IntervalCheck::less_eq("grid oracle agrees with bisection", oracle_mismatch, 1e-6),
    ]);
    if let Some(e) = unequal_two_fold_energy {
        checks.push(IntervalCheck::greater(
            "unequal two-fold energy > N=1",
            e,
            best_one.energy,
        ));
    }

    let cert = Certificate {
        energy_gap: two_energy - best_one.energy,
        one_fold: best_one,
        best_two_fold: best_two,
        lambda_upper,
        lambda_1_at_1225,
        lambda_2_at_1225,
        s_bar_lower,
        two_fold_bound,
        unequal_two_fold_energy,
        oracle_mismatch,
        checks,
    };
    Ok((winner, cert))
}
