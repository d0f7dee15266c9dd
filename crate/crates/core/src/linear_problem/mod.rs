//! Closed-form solution of the linearized obstacle problem for the rescaled
//! height `h >= 1` of a fold: transcendental branch equations, the length
//! constraint, fold energies and the global one-fold certificate.
//!
//! Every transcendental equation is solved in a pole-free sin/cos form by
//! bisection down to adjacent floating-point numbers.

mod profile;
mod search;

pub use profile::{linear_constraint_check, LinearSolution, ProfileSamples};
pub use search::{
    equal_fold_roots, global_minimizer_search, interval_checks, spot_checks, two_fold_lower_bound,
    Certificate, IntervalCheck,
};

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Residual tolerance for the compatibility and constraint relations.
pub const CONFIG_TOL: f64 = 1e-10;

/// Bisection on a bracket with a sign change, run until the bracket cannot be
/// split any further in floating point.
pub fn bisect<F>(mut f: F, lo: f64, hi: f64, what: &str) -> Result<f64>
where
    F: FnMut(f64) -> Result<f64>,
{
    let (mut a, mut b) = (lo, hi);
    let (fa, fb) = (f(a)?, f(b)?);
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if fa.signum() == fb.signum() || fa.is_nan() || fb.is_nan() {
        return Err(Error::Bracketing {
            what: what.to_string(),
            lo,
            hi,
        });
    }
    let neg_at_a = fa < 0.0;
    loop {
        let m = 0.5 * (a + b);
        if m <= a || m >= b {
            break;
        }
        let fm = f(m)?;
        if fm == 0.0 {
            return Ok(m);
        }
        if (fm < 0.0) == neg_at_a {
            a = m;
        } else {
            b = m;
        }
    }
    Ok(0.5 * (a + b))
}

/// `G(x) = sin x - (tan s / s) x cos x`; its roots are the solutions of
/// `tan x / x = tan s / s`.
pub fn compatibility(s: f64, x: f64) -> f64 {
    x.sin() - (s.tan() / s) * x * x.cos()
}

/// `tan(x)/x - tan(s)/s`, the quantity whose sign pins down branch roots.
pub fn tan_ratio_gap(x: f64, s: f64) -> f64 {
    x.tan() / x - s.tan() / s
}

/// `Lambda_{j,s}`: the root of `tan(s Lambda) = Lambda tan(s)` with
/// `s Lambda` in `(j pi, (j + 1) pi)`.
pub fn branch_lambda(j: u32, s: f64) -> Result<f64> {
    if j == 0 {
        return Err(Error::Domain("branch index must be at least 1".into()));
    }
    if !(s > 0.0 && s < PI) || (s - PI / 2.0).abs() < 1e-12 {
        return Err(Error::Domain(format!(
            "half-length {s} outside (0, pi) minus pi/2"
        )));
    }
    let lo = j as f64 * PI;
    let hi = (j + 1) as f64 * PI;
    let x = bisect(
        |x| Ok(compatibility(s, x)),
        lo,
        hi,
        &format!("branch {j} at s = {s}"),
    )?;
    if !(x > lo && x < hi) {
        return Err(Error::Bracketing {
            what: format!("branch {j} at s = {s}"),
            lo,
            hi,
        });
    }
    Ok(x / s)
}

/// `g(z) = z tan^2 z - 2 (tan z - z)`.
pub fn g_function(z: f64) -> Result<f64> {
    if !(z > 0.0 && z < PI / 2.0) {
        return Err(Error::Domain(format!("z = {z} outside (0, pi/2)")));
    }
    let t = z.tan();
    Ok(z * t * t - 2.0 * (t - z))
}

/// Largest admissible half-length: the root of `g(s) = 2 pi` in `(1, 1.225)`.
pub fn critical_s() -> f64 {
    bisect(|z| Ok(g_function(z)? - 2.0 * PI), 1.0, 1.225, "g(s) = 2 pi")
        .expect("g - 2 pi changes sign on (1, 1.225)")
}

/// Right-hand side `L(s)` of the length constraint for folds of half-lengths
/// `s_i`: `(2 pi + sum(tan s_i - s_i)) / (2 pi - sum g(s_i))`.
pub fn constraint_rhs(half_lengths: &[f64]) -> Result<f64> {
    let mut num = 2.0 * PI;
    let mut den = 2.0 * PI;
    for &s in half_lengths {
        num += s.tan() - s;
        den -= g_function(s)?;
    }
    if !(den > 0.0) {
        return Err(Error::InfeasibleConfig(format!(
            "constraint denominator {den} is not positive"
        )));
    }
    Ok(num / den)
}

/// `L(s)` for a single fold.
pub fn one_fold_rhs(s: f64) -> Result<f64> {
    constraint_rhs(&[s])
}

/// Energy `Lambda^2 (pi + sum(tan s_i - s_i))`.
pub fn energy_formula(lambda: f64, half_lengths: &[f64]) -> f64 {
    lambda * lambda * (PI + half_lengths.iter().map(|s| s.tan() - s).sum::<f64>())
}

/// `int kappa^2` over the circle for the profile of a configuration:
/// `2 pi + sum(E_i - 2 s_i)` with `E_i = tan s_i + s_i (1 + Lambda^2 tan^2 s_i)`.
pub fn raw_bending(lambda: f64, half_lengths: &[f64]) -> f64 {
    let l2 = lambda * lambda;
    2.0 * PI
        + half_lengths
            .iter()
            .map(|&s| {
                let t = s.tan();
                t + s * (1.0 + l2 * t * t) - 2.0 * s
            })
            .sum::<f64>()
}

/// Candidate configuration of the linear problem.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldConfig {
    pub half_lengths: Vec<f64>,
    pub branch: Vec<u32>,
    #[serde(rename = "Lambda")]
    pub lambda: f64,
    pub energy: f64,
}

impl FoldConfig {
    /// Builds a configuration and fills in its energy. No relation is checked.
    pub fn new(half_lengths: Vec<f64>, branch: Vec<u32>, lambda: f64) -> Result<Self> {
        if half_lengths.len() != branch.len() {
            return Err(Error::DimensionMismatch {
                expected: half_lengths.len(),
                got: branch.len(),
            });
        }
        let energy = energy_formula(lambda, &half_lengths);
        Ok(Self {
            half_lengths,
            branch,
            lambda,
            energy,
        })
    }

    pub fn folds(&self) -> usize {
        self.half_lengths.len()
    }

    /// Largest `|G(Lambda s_i)|` over the folds, together with a check that
    /// `Lambda s_i` lies on the declared branch.
    pub fn compatibility_residual(&self) -> Result<f64> {
        let mut worst: f64 = 0.0;
        for (&s, &j) in self.half_lengths.iter().zip(&self.branch) {
            let x = self.lambda * s;
            if !(x > j as f64 * PI && x < (j + 1) as f64 * PI) {
                return Err(Error::InvalidConfig(format!(
                    "Lambda s = {x} not on branch {j}"
                )));
            }
            worst = worst.max(compatibility(s, x).abs());
        }
        Ok(worst)
    }

    pub fn validate(&self) -> Result<()> {
        let total: f64 = self.half_lengths.iter().sum();
        if !(total < PI) {
            return Err(Error::InvalidConfig(format!(
                "sum of half-lengths {total} >= pi"
            )));
        }
        if !(self.lambda > 1.0) {
            return Err(Error::InvalidConfig(format!(
                "Lambda = {} <= 1",
                self.lambda
            )));
        }
        let comp = self.compatibility_residual()?;
        if comp > CONFIG_TOL {
            return Err(Error::InvalidConfig(format!(
                "compatibility residual {comp:.3e}"
            )));
        }
        let cons = constraint_residual(self)?;
        if cons.abs() > CONFIG_TOL {
            return Err(Error::InvalidConfig(format!(
                "constraint residual {cons:.3e}"
            )));
        }
        Ok(())
    }
}

/// `Lambda^2 - L(s_1, ..., s_N)`.
pub fn constraint_residual(config: &FoldConfig) -> Result<f64> {
    for &s in &config.half_lengths {
        if !(s > 0.0 && s < PI / 2.0) {
            return Err(Error::Domain(format!("half-length {s} outside (0, pi/2)")));
        }
    }
    Ok(config.lambda * config.lambda - constraint_rhs(&config.half_lengths)?)
}

/// Energy of a valid configuration.
///
/// The energy is half of `int kappa^2`; on the constraint surface the two
/// agree exactly up to that factor, which is checked here.
pub fn config_energy(config: &FoldConfig) -> Result<f64> {
    config.validate()?;
    let e = energy_formula(config.lambda, &config.half_lengths);
    let raw = raw_bending(config.lambda, &config.half_lengths);
    let gap = (raw - 2.0 * e).abs() / raw.abs().max(1.0);
    if gap > 1e-9 {
        return Err(Error::InvalidConfig(format!(
            "bending integral {raw} disagrees with twice the energy {e}"
        )));
    }
    Ok(e)
}

/// One fold of half-length `s` on branch 1, `Lambda = Lambda_{1,s}`. The
/// length constraint is not imposed.
pub fn one_fold_candidate(s: f64) -> Result<FoldConfig> {
    FoldConfig::new(vec![s], vec![1], branch_lambda(1, s)?)
}

/// `(2 pi + N(tan s - s)) - Lambda_{1,s}^2 (2 pi - N g(s))`: the length
/// constraint for `N` equal folds with the denominator cleared, so that it
/// stays finite where the denominator vanishes.
pub fn equal_fold_defect(n_folds: usize, s: f64) -> Result<f64> {
    let lam = branch_lambda(1, s)?;
    let nf = n_folds as f64;
    Ok((2.0 * PI + nf * (s.tan() - s)) - lam * lam * (2.0 * PI - nf * g_function(s)?))
}

/// Largest half-length with a positive constraint denominator for `N`
/// equal folds: the root of `N g(s) = 2 pi`.
pub fn equal_fold_limit(n_folds: usize) -> Result<f64> {
    let nf = n_folds as f64;
    bisect(
        |z| Ok(nf * g_function(z)? - 2.0 * PI),
        1e-3,
        PI / 2.0 - 1e-9,
        "N g(s) = 2 pi",
    )
}
