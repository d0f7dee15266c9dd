//! Stationarity diagnostics of graph curves, evaluated in arclength.
//!
//! Arclength derivatives are obtained from the theta-derivatives by the chain
//! rule `d/ds = v^{-1} d/dtheta`, `d^2/ds^2 = v^{-2} (d^2/dtheta^2 - (v'/v) d/dtheta)`,
//! with `v = |gamma'(theta)|` and its derivative in closed form.

use serde::{Deserialize, Serialize};
use std::io::Write;

use super::graph::GraphCurve;
use crate::error::{Error, Result};
use crate::sphere_curve::fmt_f64;
use crate::stencil::{d1_periodic, d2_periodic};

/// Nodes within this distance of a contact node are excluded from the
/// residuals of the free equations.
pub const EDGE_EXCLUSION: usize = 6;
/// Fewest grid cells an interval needs to enter the multiplier fit.
pub const MIN_FIT_CELLS: usize = 10;

pub fn tol_active(epsilon: f64) -> f64 {
    1e-9 * epsilon
}

pub fn tol_el(epsilon: f64) -> f64 {
    1e-2 * epsilon
}

/// Curvature of the parallel at the obstacle height.
pub fn obstacle_curvature(epsilon: f64) -> f64 {
    epsilon / (1.0 - epsilon * epsilon).sqrt()
}

/// A maximal cyclic run of lifted nodes, `first..first + nodes` modulo `n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LiftInterval {
    pub first: usize,
    pub nodes: usize,
    /// Endpoints in theta, refined below the grid spacing; `end` may exceed
    /// `2 pi` for an interval that wraps around.
    pub theta_start: f64,
    pub theta_end: f64,
    pub theta_length: f64,
    pub arclength: f64,
    /// `A_i = max |kappa|` over the interval.
    pub max_abs_kappa: f64,
    /// Curvature at the first and last lifted node.
    pub kappa_endpoints: [f64; 2],
    pub conserved_drift: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub epsilon: f64,
    pub n: usize,
    pub final_energy: f64,
    pub length_residual: f64,
    pub lift_intervals: Vec<LiftInterval>,
    /// Lifted runs lower than [`resolution_floor`], not counted as intervals.
    pub unresolved_runs: usize,
    /// `1 + lambda_hat` is the squared frequency of the curvature equation.
    pub lambda_hat: f64,
    /// Multiplier read off the augmented Lagrangian, same convention.
    pub lambda_multiplier: f64,
    pub el_residual: f64,
    pub height_residual: f64,
    pub conserved_drift: f64,
    pub max_height_ratio: f64,
    pub max_alpha_ratio: f64,
    pub max_alpha2_ratio: f64,
    pub max_kappa_ratio: f64,
    pub sum_a2_l: f64,
    pub sum_a2_l3: f64,
    pub sum_a2_l3_bound: f64,
    pub min_lift_length: f64,
    pub endpoint_curvature_ok: bool,
    pub symmetry_defect: f64,
    pub kkt_residual: f64,
    pub max_objective_increase: f64,
    pub iterations: usize,
    pub outer_iterations: usize,
    pub converged: bool,
    pub message: String,
}

impl SolveReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

/// Nodal curvature, speed and their arclength derivatives.
pub struct ArclengthData {
    pub kappa: Vec<f64>,
    pub kappa_s: Vec<f64>,
    pub kappa_ss: Vec<f64>,
    pub speed: Vec<f64>,
    pub height_s: Vec<f64>,
    pub height_ss: Vec<f64>,
    /// Cumulative arclength from node 0 (trapezoid rule).
    pub s: Vec<f64>,
}

pub fn arclength_data(curve: &GraphCurve) -> ArclengthData {
    let h = curve.dtheta();
    let (a1, a2) = curve.derivatives();
    let (kappa, speed) = curve.curvature();
    let k1 = d1_periodic(&kappa, h);
    let k2 = d2_periodic(&kappa, h);
    let n = curve.len();
    let mut out = ArclengthData {
        kappa,
        kappa_s: vec![0.0; n],
        kappa_ss: vec![0.0; n],
        speed,
        height_s: vec![0.0; n],
        height_ss: vec![0.0; n],
        s: vec![0.0; n],
    };
    for i in 0..n {
        let (a, d1, d2) = (curve.alpha[i], a1[i], a2[i]);
        let c2 = 1.0 - a * a;
        let v = out.speed[i];
        let vt = (-a * d1 + d1 * d2 / c2 + a * d1.powi(3) / (c2 * c2)) / v;
        out.kappa_s[i] = k1[i] / v;
        out.kappa_ss[i] = (k2[i] - vt / v * k1[i]) / (v * v);
        out.height_s[i] = d1 / v;
        out.height_ss[i] = (d2 - vt / v * d1) / (v * v);
        if i > 0 {
            out.s[i] = out.s[i - 1] + 0.5 * h * (out.speed[i - 1] + v);
        }
    }
    out
}

/// Maximal cyclic runs of nodes with `alpha > epsilon + tol_active`, as
/// `(first, count)`, ordered by first node. A curve lifted everywhere gives
/// one run of `n` nodes starting at 0.
pub fn lifted_runs(alpha: &[f64], epsilon: f64) -> Vec<(usize, usize)> {
    let n = alpha.len();
    let thr = epsilon + tol_active(epsilon);
    let up: Vec<bool> = alpha.iter().map(|&a| a > thr).collect();
    let Some(start) = (0..n).find(|&i| !up[i]) else {
        return vec![(0, n)];
    };
    let mut runs = Vec::new();
    let mut k = 0;
    while k < n {
        let i = (start + k) % n;
        if up[i] {
            let mut len = 0;
            while len < n && up[(i + len) % n] {
                len += 1;
            }
            runs.push((i, len));
            k += len;
        } else {
            k += 1;
        }
    }
    runs.sort_unstable();
    runs
}

/// Height `epsilon dtheta^2` below which an excursion is not resolved by the
/// grid. The difference stencils leave oscillations of order `dtheta^3`
/// just outside a contact point, which would otherwise count as lift.
pub fn resolution_floor(epsilon: f64, n: usize) -> f64 {
    let h = 2.0 * std::f64::consts::PI / n as f64;
    epsilon * h * h
}

/// Runs from [`lifted_runs`] split into resolved lift intervals and
/// sub-resolution excursions.
pub fn classify_runs(alpha: &[f64], epsilon: f64) -> (Vec<(usize, usize)>, Vec<(usize, usize)>) {
    let n = alpha.len();
    let floor = resolution_floor(epsilon, n);
    lifted_runs(alpha, epsilon).into_iter().partition(|&(first, nodes)| {
        (0..nodes).any(|k| alpha[(first + k) % n] - epsilon > floor)
    })
}

/// Distance in grid cells from a boundary lifted node back to the contact
/// point, assuming `alpha - epsilon` grows like the cube of the distance.
fn contact_gap(d_near: f64, d_far: f64) -> f64 {
    let (r0, r1) = (d_near.max(0.0).cbrt(), d_far.max(0.0).cbrt());
    if r1 > r0 {
        (r0 / (r1 - r0)).clamp(0.0, 1.0)
    } else {
        0.5
    }
}

/// Interior nodes of a run, skipping `EDGE_EXCLUSION` nodes at each end.
fn interior(first: usize, nodes: usize, n: usize) -> impl Iterator<Item = usize> {
    let skip = if nodes == n { 0 } else { EDGE_EXCLUSION };
    (skip..nodes.saturating_sub(skip)).map(move |k| (first + k) % n)
}

/// `lambda` minimizing the squared residual of
/// `kappa'' + (1 + lambda) kappa + [kappa^3 / 2]` over the samples.
pub fn fit_multiplier(kappa: &[f64], kappa_ss: &[f64], cubic: bool) -> Result<f64> {
    if kappa.len() != kappa_ss.len() {
        return Err(Error::DimensionMismatch { expected: kappa.len(), got: kappa_ss.len() });
    }
    if kappa.len() < MIN_FIT_CELLS {
        return Err(Error::InsufficientData(format!("{} samples", kappa.len())));
    }
    let mut num = 0.0;
    let mut den = 0.0;
    for (&k, &kss) in kappa.iter().zip(kappa_ss) {
        let rest = if cubic { kss + 0.5 * k * k * k } else { kss };
        num += k * rest;
        den += k * k;
    }
    if !(den > 0.0) {
        return Err(Error::InsufficientData("curvature vanishes on the samples".into()));
    }
    Ok(-num / den - 1.0)
}

fn fit_nodes(curve: &GraphCurve) -> Vec<usize> {
    let n = curve.len();
    classify_runs(&curve.alpha, curve.epsilon)
        .0
        .into_iter()
        .filter(|&(_, nodes)| nodes == n || nodes >= MIN_FIT_CELLS + 2 * EDGE_EXCLUSION)
        .flat_map(|(first, nodes)| interior(first, nodes, n))
        .collect()
}

/// Least-squares multiplier from the curvature equation on the interior of
/// the lift set.
pub fn estimate_multiplier(curve: &GraphCurve) -> Result<f64> {
    let nodes = fit_nodes(curve);
    if nodes.is_empty() {
        return Err(Error::InsufficientData(
            "no lift interval long enough for the multiplier fit".into(),
        ));
    }
    let d = arclength_data(curve);
    let k: Vec<f64> = nodes.iter().map(|&i| d.kappa[i]).collect();
    let kss: Vec<f64> = nodes.iter().map(|&i| d.kappa_ss[i]).collect();
    fit_multiplier(&k, &kss, true)
}

/// `max |alpha_i - alpha_{-i}|`.
pub fn symmetry_defect(alpha: &[f64]) -> f64 {
    let n = alpha.len();
    (0..n)
        .map(|i| (alpha[i] - alpha[(n - i) % n]).abs())
        .fold(0.0, f64::max)
}

/// Rotates the grid so that the longest lift interval is centred at node 0.
pub fn phase_normalize(curve: &GraphCurve) -> GraphCurve {
    let n = curve.len();
    let runs = classify_runs(&curve.alpha, curve.epsilon).0;
    let Some(&(first, nodes)) = runs.iter().filter(|r| r.1 < n).max_by_key(|r| (r.1, usize::MAX - r.0))
    else {
        return curve.clone();
    };
    let center = (first + (nodes - 1) / 2) % n;
    let mut alpha = curve.alpha.clone();
    alpha.rotate_left(center);
    GraphCurve { alpha, epsilon: curve.epsilon }
}

/// Full report for `curve` with the given multiplier; solver bookkeeping is
/// left at its defaults.
pub fn diagnostics(curve: &GraphCurve, lambda_hat: f64) -> Result<SolveReport> {
    let n = curve.len();
    let eps = curve.epsilon;
    let h = curve.dtheta();
    if curve.alpha.iter().any(|a| !(a * a < 1.0)) {
        return Err(Error::Regime("curve leaves the graph regime".into()));
    }
    let d = arclength_data(curve);
    let (a1, a2) = curve.derivatives();
    let (energy, length) = super::graph::discrete_energy(&curve.alpha);
    let big = 1.0 + lambda_hat;

    let height_residual = (0..n)
        .map(|i| {
            let a = curve.alpha[i];
            let c2 = 1.0 - a * a;
            (d.height_ss[i] + a - d.kappa[i] * c2 / d.speed[i]).abs()
        })
        .fold(0.0, f64::max);

    let kappa_obs = obstacle_curvature(eps);
    let mut intervals = Vec::new();
    let mut el_residual: f64 = 0.0;
    let mut endpoint_ok = true;
    let (runs, unresolved) = classify_runs(&curve.alpha, eps);
    for (first, nodes) in runs {
        let idx = |k: usize| (first + k) % n;
        let last = idx(nodes - 1);
        let whole = nodes == n;
        let (lo, hi) = if whole {
            (0.0, 0.0)
        } else if nodes == 1 {
            (0.5, 0.5)
        } else {
            (
                contact_gap(curve.alpha[first] - eps, curve.alpha[idx(1)] - eps),
                contact_gap(curve.alpha[last] - eps, curve.alpha[idx(nodes - 2)] - eps),
            )
        };
        let theta_start = first as f64 * h - lo * h;
        let theta_length = if whole { 2.0 * std::f64::consts::PI } else { ((nodes - 1) as f64 + lo + hi) * h };
        let mut arclength = 0.0;
        for k in 0..nodes.saturating_sub(1) {
            arclength += 0.5 * h * (d.speed[idx(k)] + d.speed[idx(k + 1)]);
        }
        if whole {
            arclength += 0.5 * h * (d.speed[last] + d.speed[first]);
        } else {
            arclength += lo * h * d.speed[first] + hi * h * d.speed[last];
        }
        let max_abs_kappa = (0..nodes).map(|k| d.kappa[idx(k)].abs()).fold(0.0, f64::max);
        let q: Vec<f64> = interior(first, nodes, n)
            .map(|i| {
                let k = d.kappa[i];
                d.kappa_s[i].powi(2) + big * k * k + 0.25 * k.powi(4)
            })
            .collect();
        let conserved_drift = if q.is_empty() {
            0.0
        } else {
            let (mn, mx) = q.iter().fold((f64::MAX, f64::MIN), |(a, b), &x| (a.min(x), b.max(x)));
            let mean = q.iter().sum::<f64>() / q.len() as f64;
            if mean.abs() > 0.0 { (mx - mn) / mean.abs() } else { 0.0 }
        };
        for i in interior(first, nodes, n) {
            let k = d.kappa[i];
            el_residual = el_residual.max((d.kappa_ss[i] + big * k + 0.5 * k * k * k).abs());
        }
        let kappa_endpoints = [d.kappa[first], d.kappa[last]];
        if !whole && kappa_endpoints.iter().any(|&k| k < kappa_obs - tol_el(eps)) {
            endpoint_ok = false;
        }
        intervals.push(LiftInterval {
            first,
            nodes,
            theta_start,
            theta_end: theta_start + theta_length,
            theta_length,
            arclength,
            max_abs_kappa,
            kappa_endpoints,
            conserved_drift,
        });
    }

    let sum_a2_l = intervals.iter().map(|iv| iv.max_abs_kappa.powi(2) * iv.arclength).sum();
    let sum_a2_l3 = intervals.iter().map(|iv| iv.max_abs_kappa.powi(2) * iv.arclength.powi(3)).sum();
    let lip = (0..n)
        .map(|i| (a2[(i + 1) % n] - a2[i]).abs() / h)
        .fold(0.0, f64::max);
    let sup = |v: &[f64]| v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let max_alpha_ratio = sup(&curve.alpha) / eps;
    let max_alpha2_ratio = sup(&a2) / eps;
    let max_height_ratio = (sup(&curve.alpha) + sup(&a1) + sup(&a2) + lip) / eps;

    Ok(SolveReport {
        epsilon: eps,
        n,
        final_energy: energy,
        length_residual: length - 2.0 * std::f64::consts::PI,
        conserved_drift: intervals.iter().map(|iv| iv.conserved_drift).fold(0.0, f64::max),
        min_lift_length: intervals.iter().map(|iv| iv.arclength).fold(f64::INFINITY, f64::min),
        lift_intervals: intervals,
        unresolved_runs: unresolved.len(),
        lambda_hat,
        lambda_multiplier: lambda_hat,
        el_residual,
        height_residual,
        max_height_ratio,
        max_alpha_ratio,
        max_alpha2_ratio,
        max_kappa_ratio: sup(&d.kappa) / eps,
        sum_a2_l,
        sum_a2_l3,
        sum_a2_l3_bound: 0.25 * eps * eps,
        endpoint_curvature_ok: endpoint_ok,
        symmetry_defect: symmetry_defect(&curve.alpha),
        kkt_residual: 0.0,
        max_objective_increase: 0.0,
        iterations: 0,
        outer_iterations: 0,
        converged: false,
        message: String::new(),
    })
}

/// Writes `theta,alpha,kappa,s`.
pub fn write_profile_csv<W: Write>(curve: &GraphCurve, out: W) -> Result<()> {
    let d = arclength_data(curve);
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["theta", "alpha", "kappa", "s"])?;
    for i in 0..curve.len() {
        w.write_record([
            fmt_f64(curve.theta(i)),
            fmt_f64(curve.alpha[i]),
            fmt_f64(d.kappa[i]),
            fmt_f64(d.s[i]),
        ])?;
    }
    w.flush()?;
    Ok(())
}
