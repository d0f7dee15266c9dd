//! Minimization of the discrete bending energy over graph curves of length
//! `2 pi` lying above the obstacle `alpha >= epsilon`.
//!
//! The length constraint is handled by an augmented Lagrangian
//! `F + mu (L - 2 pi) + rho/2 (L - 2 pi)^2`, each subproblem by a projected
//! Newton method with an active set on the lower bound and Armijo
//! backtracking along the projection arc.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use super::band::solve_free;
use super::diagnostics::{diagnostics, estimate_multiplier, SolveReport};
use super::graph::{evaluate, Band, GraphCurve};
use crate::error::{Error, Result};

/// Largest obstacle height the solver accepts.
pub const MAX_EPSILON: f64 = 0.2;
/// Smallest grid the solver accepts.
pub const MIN_NODES: usize = 256;
/// Target for `|L - 2 pi|`.
pub const LENGTH_TOL: f64 = 1e-10;

const BUMP_WIDTH: f64 = 2.4;
const ARMIJO: f64 = 1e-4;
const MAX_OUTER: usize = 40;
/// Relative size of objective changes treated as rounding noise.
const FLOOR: f64 = 1e3 * f64::EPSILON;
/// Smallest line-search step.
const MIN_STEP: f64 = 1e-10;
/// A failed line search with a Newton step below `STALL_FACTOR * tol * epsilon`
/// counts as stationarity at rounding level.
const STALL_FACTOR: f64 = 1e3;
/// A failed line search whose full Newton step predicts a relative decrease
/// below this also counts as stationarity at rounding level; the rounding
/// noise of the objective grows with the grid size.
const STALL_DECREASE: f64 = 1e-10;
/// Growth steps of the Levenberg shift while factorizing.
const MAX_SHIFTS: usize = 40;
/// Line searches per Newton iteration, each with a larger shift.
const MAX_RETRIES: usize = 8;
/// Re-solves with blocked obstacle nodes held fixed.
const MAX_FIX_ROUNDS: usize = 6;

#[derive(Debug, Clone, PartialEq)]
pub enum Init {
    /// One smooth even bump of width 2.4 centred at `theta = 0`.
    OneBump,
    /// Two such bumps, centred at `0` and `pi`. The solve is restricted to
    /// profiles of period `pi`, which keeps it on the two-fold branch.
    TwoBump,
    /// Explicit heights, raised onto the obstacle where needed.
    Profile(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverConfig {
    /// Budget of Newton iterations over all multiplier updates.
    pub max_iters: usize,
    /// Stopping threshold on the projected Newton step, relative to epsilon.
    pub tol: f64,
    /// Penalty weight in units of `1 / epsilon^2`.
    pub penalty0: f64,
    #[serde(skip)]
    pub init: Option<Init>,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self { max_iters: 500, tol: 1e-9, penalty0: 10.0, init: None }
    }
}

/// Converged (or last) iterate with its report.
#[derive(Debug, Clone)]
pub struct Solution {
    pub curve: GraphCurve,
    pub report: SolveReport,
}

/// `cos^4(pi theta / w)` on `|theta| < w / 2`, zero elsewhere.
fn bump(theta: f64, center: f64) -> f64 {
    let t = (theta - center + PI).rem_euclid(2.0 * PI) - PI;
    if t.abs() < BUMP_WIDTH / 2.0 {
        (PI * t / BUMP_WIDTH).cos().powi(4)
    } else {
        0.0
    }
}

/// Heights `epsilon (1 + A b)` with `A` chosen so that the length is `2 pi`
/// to leading order in `epsilon`: `A^2 (int b'^2 - int b^2) - 2 A int b - 2 pi = 0`.
pub fn bump_init(epsilon: f64, n: usize, centers: &[f64]) -> Vec<f64> {
    let h = 2.0 * PI / n as f64;
    let b: Vec<f64> = (0..n)
        .map(|i| centers.iter().map(|&c| bump(i as f64 * h, c)).sum())
        .collect();
    let bp = crate::stencil::d1_periodic(&b, h);
    let ib: f64 = b.iter().sum::<f64>() * h;
    let ib2: f64 = b.iter().map(|x| x * x).sum::<f64>() * h;
    let ibp2: f64 = bp.iter().map(|x| x * x).sum::<f64>() * h;
    let qa = ibp2 - ib2;
    let amp = (ib + (ib * ib + 2.0 * PI * qa).sqrt()) / qa;
    b.iter().map(|x| epsilon * (1.0 + amp * x)).collect()
}

struct Objective {
    epsilon: f64,
    mu: f64,
    rho: f64,
    /// Restrict steps to profiles of period `pi`.
    half_period: bool,
}

impl Objective {
    fn value(&self, alpha: &[f64]) -> f64 {
        let (f, l) = super::graph::discrete_energy(alpha);
        let c = l - 2.0 * PI;
        f + self.mu * c + 0.5 * self.rho * c * c
    }
}

#[derive(Debug, Default, Clone, Copy)]
struct Counters {
    newton: usize,
    outer: usize,
    max_increase: f64,
}

enum InnerOutcome {
    Converged,
    Budget,
    Failed(String),
}

fn project(x: f64, eps: f64) -> f64 {
    if x < eps {
        eps
    } else {
        x
    }
}

fn combined_hessian(hf: &Band, hl: &Band, m: f64) -> Band {
    hf.iter()
        .zip(hl)
        .map(|(a, b)| std::array::from_fn(|k| a[k] + m * b[k]))
        .collect()
}

/// Projected Newton direction: the shifted Newton system on the free nodes,
/// a diagonally scaled gradient step on the active ones. The shift starts at
/// `sigma` and grows until the free system is positive definite.
#[allow(clippy::too_many_arguments)]
fn newton_direction(
    hess: &Band,
    diag: &[f64],
    grad: &[f64],
    grad_length: &[f64],
    active: &[bool],
    rho: f64,
    mut sigma: f64,
    sigma0: f64,
) -> Option<(Vec<f64>, f64)> {
    let n = grad.len();
    let free: Vec<usize> = (0..n).filter(|&i| !active[i]).collect();
    let rhs: Vec<f64> = free.iter().map(|&i| -grad[i]).collect();
    for _ in 0..MAX_SHIFTS {
        if let Some(x) = solve_free(hess, &free, grad_length, rho, sigma, &rhs) {
            let mut dir: Vec<f64> = (0..n).map(|i| -grad[i] / diag[i]).collect();
            for (k, &i) in free.iter().enumerate() {
                dir[i] = x[k];
            }
            return Some((dir, sigma));
        }
        sigma = if sigma == 0.0 { sigma0 } else { 4.0 * sigma };
    }
    None
}

/// Removes from the step on the free nodes its component along the rotation
/// generator `alpha'`. Rotations in theta leave the energy unchanged, so the
/// shifted Newton system amplifies rounding noise along this direction.
fn remove_rotation(dir: &mut [f64], rotation: &[f64], fixed: &[bool]) {
    let (mut dt, mut tt) = (0.0, 0.0);
    for i in (0..dir.len()).filter(|&i| !fixed[i]) {
        dt += dir[i] * rotation[i];
        tt += rotation[i] * rotation[i];
    }
    if tt > 0.0 {
        let c = dt / tt;
        for i in (0..dir.len()).filter(|&i| !fixed[i]) {
            dir[i] -= c * rotation[i];
        }
    }
}

/// Armijo backtracking along the projection arc `max(alpha + t dir, epsilon)`.
fn line_search(
    alpha: &[f64],
    dir: &[f64],
    grad: &[f64],
    phi0: f64,
    obj: &Objective,
) -> Option<(Vec<f64>, f64)> {
    let eps = obj.epsilon;
    let full: Vec<f64> = alpha.iter().zip(dir).map(|(a, d)| project(a + d, eps)).collect();
    let pred_full: f64 = (0..alpha.len()).map(|i| grad[i] * (full[i] - alpha[i])).sum();
    if pred_full.abs() <= FLOOR * phi0.abs() && full.iter().all(|a| a * a < 1.0) {
        // the decrease is below the resolution of the objective: take the
        // Newton step unguarded
        let phi = obj.value(&full);
        return Some((full, phi));
    }
    let mut t = 1.0;
    while t >= MIN_STEP {
        let trial: Vec<f64> =
            alpha.iter().zip(dir).map(|(a, d)| project(a + t * d, eps)).collect();
        if trial.iter().all(|a| a * a < 1.0) {
            let phi = obj.value(&trial);
            let pred: f64 = (0..alpha.len()).map(|i| grad[i] * (trial[i] - alpha[i])).sum();
            if phi < phi0 + ARMIJO * pred.min(0.0) {
                return Some((trial, phi));
            }
        }
        t *= 0.5;
    }
    None
}

fn inner_solve(
    alpha: &mut [f64],
    obj: &Objective,
    tol: f64,
    budget: usize,
    counters: &mut Counters,
) -> InnerOutcome {
    let n = alpha.len();
    let eps = obj.epsilon;
    let dtheta = 2.0 * PI / n as f64;
    let mut prev_active: Option<Vec<bool>> = None;
    loop {
        if counters.newton >= budget {
            return InnerOutcome::Budget;
        }
        counters.newton += 1;
        let ev = evaluate(alpha, true);
        let c = ev.length - 2.0 * PI;
        let m = obj.mu + obj.rho * c;
        let grad: Vec<f64> = ev
            .grad_energy
            .iter()
            .zip(&ev.grad_length)
            .map(|(a, b)| a + m * b)
            .collect();
        let phi0 = ev.energy + obj.mu * c + 0.5 * obj.rho * c * c;
        let hess = combined_hessian(
            ev.hess_energy.as_ref().expect("requested"),
            ev.hess_length.as_ref().expect("requested"),
            m,
        );
        let diag_floor = hess.iter().fold(0.0f64, |a, r| a.max(r[0].abs())) * 1e-12;
        let diag: Vec<f64> = hess.iter().map(|r| r[0].max(diag_floor).max(1e-300)).collect();

        let proj_res = (0..n)
            .map(|i| (alpha[i] - project(alpha[i] - grad[i] / diag[i], eps)).abs())
            .fold(0.0f64, f64::max);
        let delta = (1e-6 * eps).min(proj_res);
        let active: Vec<bool> = (0..n)
            .map(|i| alpha[i] <= eps + delta && grad[i] > 0.0)
            .collect();
        let same_active = prev_active.as_ref() == Some(&active);

        let rotation = crate::stencil::d1_periodic(alpha, dtheta);
        let sigma0 = 0.1 * m.abs().max(1.0) * dtheta;
        let mut sigma = 0.0;
        let mut accepted = None;
        let mut full_step = f64::INFINITY;
        let mut pred_full = 0.0;
        for attempt in 0..MAX_RETRIES {
            let mut fixed = active.clone();
            let mut found = None;
            for _ in 0..MAX_FIX_ROUNDS {
                let Some((dir, used)) = newton_direction(
                    &hess, &diag, &grad, &ev.grad_length, &fixed, obj.rho, sigma, sigma0,
                ) else {
                    return InnerOutcome::Failed("could not regularize the Newton system".into());
                };
                // free nodes on the obstacle whose step points into it are held
                // in place and the free system is solved again
                let blocked: Vec<usize> = (0..n)
                    .filter(|&i| !fixed[i] && alpha[i] <= eps && dir[i] < 0.0)
                    .collect();
                let done = blocked.is_empty();
                for &i in &blocked {
                    fixed[i] = true;
                }
                found = Some((dir, used));
                if done {
                    break;
                }
            }
            let (mut dir, used) = found.expect("at least one round");
            for i in 0..n {
                if fixed[i] && !active[i] {
                    dir[i] = 0.0;
                }
            }
            remove_rotation(&mut dir, &rotation, &fixed);
            if obj.half_period {
                let half = n / 2;
                for i in 0..half {
                    let v = 0.5 * (dir[i] + dir[i + half]);
                    dir[i] = v;
                    dir[i + half] = v;
                }
            }
            if attempt == 0 {
                full_step = (0..n)
                    .map(|i| (project(alpha[i] + dir[i], eps) - alpha[i]).abs())
                    .fold(0.0f64, f64::max);
                if full_step <= tol * eps && same_active {
                    return InnerOutcome::Converged;
                }
                let pred: f64 = (0..n)
                    .map(|i| grad[i] * (project(alpha[i] + dir[i], eps) - alpha[i]))
                    .sum();
                pred_full = pred;
                if pred.abs() <= FLOOR * phi0.abs() && full_step <= STALL_FACTOR * tol * eps {
                    // stationary to the resolution of the objective
                    return InnerOutcome::Converged;
                }
            }
            if let Some(hit) = line_search(alpha, &dir, &grad, phi0, obj) {
                accepted = Some(hit);
                break;
            }
            // shift towards a scaled gradient step
            sigma = 16.0 * used.max(sigma0);
        }
        prev_active = Some(active);
        let Some((trial, phi)) = accepted else {
            if full_step <= STALL_FACTOR * tol * eps || pred_full.abs() <= STALL_DECREASE * phi0.abs() {
                // the objective cannot resolve the remaining decrease
                return InnerOutcome::Converged;
            }
            return InnerOutcome::Failed(format!(
                "line search failed with Newton step {full_step:.3e}"
            ));
        };
        if phi > phi0 {
            counters.max_increase = counters.max_increase.max((phi - phi0) / phi0.abs());
        }
        alpha.copy_from_slice(&trial);
        if phi0 - phi <= FLOOR * phi0.abs() && full_step <= STALL_FACTOR * tol * eps {
            // progress has dropped to the resolution of the objective
            return InnerOutcome::Converged;
        }
    }
}

fn initial_alpha(epsilon: f64, n: usize, init: &Init) -> Result<Vec<f64>> {
    match init {
        Init::OneBump => Ok(bump_init(epsilon, n, &[0.0])),
        Init::TwoBump => Ok(bump_init(epsilon, n, &[0.0, PI])),
        Init::Profile(a) => {
            if a.len() != n {
                return Err(Error::DimensionMismatch { expected: n, got: a.len() });
            }
            let out: Vec<f64> = a.iter().map(|&x| project(x, epsilon)).collect();
            if out.iter().any(|x| !(x * x < 1.0)) {
                return Err(Error::Regime("initial profile leaves the graph regime".into()));
            }
            Ok(out)
        }
    }
}

/// Checks the admissible range of `epsilon` and `n`.
pub fn check_problem(epsilon: f64, n: usize) -> Result<()> {
    if !(epsilon > 0.0 && epsilon <= MAX_EPSILON) {
        return Err(Error::Regime(format!(
            "obstacle height {epsilon} outside (0, {MAX_EPSILON}]"
        )));
    }
    if n < MIN_NODES {
        return Err(Error::Resolution(format!("{n} nodes, at least {MIN_NODES} required")));
    }
    Ok(())
}

/// Minimizes the discrete bending energy at obstacle height `epsilon` on `n`
/// nodes. A run that exhausts its iteration budget still returns the last
/// iterate, with `converged = false` in its report.
pub fn minimize(epsilon: f64, n: usize, config: &SolverConfig) -> Result<Solution> {
    check_problem(epsilon, n)?;
    if !(config.tol > 0.0 && config.penalty0 > 0.0 && config.max_iters > 0) {
        return Err(Error::InvalidConfig(format!("{config:?}")));
    }
    let init = config.init.clone().unwrap_or(Init::OneBump);
    if init == Init::TwoBump && !n.is_multiple_of(2) {
        return Err(Error::InvalidConfig("the two-bump start needs an even number of nodes".into()));
    }
    let mut counters = Counters::default();
    let (mut alpha, mut mu) = match init {
        Init::Profile(_) => (initial_alpha(epsilon, n, &init)?, None),
        _ => coarse_start(epsilon, n, &init, config, &mut counters)?,
    };
    let (multiplier, outcome) =
        augmented_lagrangian(&mut alpha, epsilon, mu.take(), config, &mut counters)?;
    let (converged, mut message) = match outcome {
        Outcome::Converged => (true, String::new()),
        Outcome::Budget => (false, format!("iteration budget {} exhausted", config.max_iters)),
        Outcome::Unresolved => (
            false,
            format!("length constraint unresolved after {MAX_OUTER} multiplier updates"),
        ),
        Outcome::Failed(msg) => (false, msg),
    };

    let raw = GraphCurve::new(alpha, epsilon)?;
    let curve = super::diagnostics::phase_normalize(&raw);
    let lambda_hat = match estimate_multiplier(&curve) {
        Ok(l) => l,
        Err(e) => {
            // fall back to the length multiplier of the solver
            message = if message.is_empty() { e.to_string() } else { format!("{message}; {e}") };
            -0.5 * multiplier
        }
    };
    let mut report = diagnostics(&curve, lambda_hat)?;
    report.lambda_multiplier = -0.5 * multiplier;
    report.symmetry_defect = super::diagnostics::symmetry_defect(&raw.alpha);
    report.iterations = counters.newton;
    report.outer_iterations = counters.outer;
    report.max_objective_increase = counters.max_increase;
    report.kkt_residual = kkt_residual(&curve.alpha, epsilon, multiplier);
    report.converged = converged;
    report.message = message;
    Ok(Solution { curve, report })
}

enum Outcome {
    Converged,
    Budget,
    Unresolved,
    Failed(String),
}

/// Smallest grid used for the coarse start.
const COARSEST: usize = 512;

/// Solves on successively halved grids down to [`COARSEST`] nodes and
/// interpolates the result, so that the contact set is nearly settled before
/// the fine solve starts. Falls back to the plain initial guess when a coarse
/// level fails.
fn coarse_start(
    epsilon: f64,
    n: usize,
    init: &Init,
    config: &SolverConfig,
    counters: &mut Counters,
) -> Result<(Vec<f64>, Option<f64>)> {
    let mut levels = vec![n];
    while levels.last().is_some_and(|&m| m % 2 == 0 && m / 2 >= COARSEST) {
        levels.push(levels.last().unwrap() / 2);
    }
    let fallback = || Ok((initial_alpha(epsilon, n, init)?, None));
    if levels.len() == 1 {
        return fallback();
    }
    let coarsest = *levels.last().unwrap();
    let mut alpha = initial_alpha(epsilon, coarsest, init)?;
    let mut mu = None;
    for &m in levels[1..].iter().rev() {
        if m != alpha.len() {
            alpha = prolong(&alpha, epsilon);
        }
        match augmented_lagrangian(&mut alpha, epsilon, mu, config, counters) {
            Ok((mult, Outcome::Converged)) => mu = Some(mult),
            _ => return fallback(),
        }
    }
    Ok((prolong(&alpha, epsilon), mu))
}

/// Doubles the grid with four-point interpolation at the midpoints.
fn prolong(alpha: &[f64], epsilon: f64) -> Vec<f64> {
    let n = alpha.len();
    let mut out = Vec::with_capacity(2 * n);
    for i in 0..n {
        let at = |k: isize| alpha[crate::stencil::wrap(i as isize + k, n)];
        out.push(alpha[i]);
        let mid = (-at(-1) + 9.0 * at(0) + 9.0 * at(1) - at(2)) / 16.0;
        out.push(project(mid, epsilon));
    }
    out
}

/// `mu = -2 lambda` of the linearized problem, the small-epsilon limit of the
/// length multiplier.
fn linear_multiplier() -> Result<f64> {
    let lin = crate::linear_problem::LinearSolution::solve()?;
    Ok(-2.0 * (lin.lambda * lin.lambda - 1.0))
}

/// Outer multiplier loop. Returns the final multiplier estimate `mu + rho c`.
fn augmented_lagrangian(
    alpha: &mut [f64],
    epsilon: f64,
    mu0: Option<f64>,
    config: &SolverConfig,
    counters: &mut Counters,
) -> Result<(f64, Outcome)> {
    let ev = evaluate(alpha, false);
    let mu = match mu0 {
        Some(mu) => mu,
        None => linear_multiplier()?,
    };
    let mut obj = Objective {
        epsilon,
        mu,
        rho: config.penalty0 / (epsilon * epsilon),
        half_period: config.init == Some(Init::TwoBump),
    };
    let mut c_prev = (ev.length - 2.0 * PI).abs();
    let mut outcome = Outcome::Unresolved;
    for _ in 0..MAX_OUTER {
        counters.outer += 1;
        let inner = inner_solve(alpha, &obj, config.tol, config.max_iters, counters);
        let c = super::graph::discrete_energy(alpha).1 - 2.0 * PI;
        match inner {
            InnerOutcome::Converged => {}
            InnerOutcome::Budget => {
                outcome = Outcome::Budget;
                break;
            }
            InnerOutcome::Failed(msg) => {
                outcome = Outcome::Failed(msg);
                break;
            }
        }
        if c.abs() <= LENGTH_TOL {
            outcome = Outcome::Converged;
            break;
        }
        obj.mu += obj.rho * c;
        if c.abs() > 0.25 * c_prev {
            obj.rho *= 10.0;
        }
        c_prev = c.abs();
    }
    let c = super::graph::discrete_energy(alpha).1 - 2.0 * PI;
    Ok((obj.mu + obj.rho * c, outcome))
}

/// Diagonally scaled projected-gradient step `|alpha - P(alpha - D^{-1} G)|_inf / epsilon`
/// for `G` the gradient of `F + m L` and `D` the diagonal of its Hessian.
/// Zero exactly at a stationary point of the obstacle problem: on free nodes
/// `G` vanishes, on contact nodes it points into the obstacle.
pub fn kkt_residual(alpha: &[f64], epsilon: f64, m: f64) -> f64 {
    let ev = evaluate(alpha, true);
    let hf = ev.hess_energy.as_ref().expect("requested");
    let hl = ev.hess_length.as_ref().expect("requested");
    let mut worst: f64 = 0.0;
    for i in 0..alpha.len() {
        let g = ev.grad_energy[i] + m * ev.grad_length[i];
        let d = (hf[i][0] + m * hl[i][0]).abs().max(f64::MIN_POSITIVE);
        worst = worst.max((alpha[i] - project(alpha[i] - g / d, epsilon)).abs());
    }
    worst / epsilon
}
