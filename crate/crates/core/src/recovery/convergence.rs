//! Normalized sheet energy of smoothed cones `h f(r/h) gamma(theta)` against
//! the limit energy as the thickness `h` decreases.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::io::Write;

use super::limit::energy_e0;
use super::profile::ProfileF;
use super::sheet::{energy_eh, PolarGrid, SheetField};
use crate::error::{Error, Result};
use crate::sphere_curve::{fmt_f64, DiscreteCurve};

/// Allowed distance of the fitted log-log slope from 1.
pub const SLOPE_TOL: f64 = 0.15;
/// Uniform cells inside `B_h`.
const CORE_CELLS: usize = 64;
/// Largest ratio of successive radii outside `B_h`.
const OUTER_RATIO: f64 = 1.02;
/// Relative slack on the fitted coefficient in the per-row bound.
const BOUND_MARGIN: f64 = 0.1;
const MAX_H: f64 = 0.1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecoveryRow {
    pub h: f64,
    pub normalized_energy: f64,
    pub bending: f64,
    pub stretching: f64,
    /// `normalized_energy - E_0`.
    pub gap: f64,
    /// `sup |Du|` and `h sup |D^2 u|` inside `B_h`.
    pub core_gradient: f64,
    pub core_hessian: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecoveryTable {
    pub limit_energy: f64,
    pub rows: Vec<RecoveryRow>,
    /// Least-squares `a` in `gap = a / |log h|`.
    pub fitted_a: f64,
    /// Root-mean-square residual of that fit.
    pub fit_residual: f64,
    /// Slope of `log gap` against `log(1 / |log h|)`.
    pub slope: f64,
    /// Every row satisfies `|gap| <= (a + margin) / |log h|`.
    pub bound_ok: bool,
    /// The gap shrinks with every decrease of `h`.
    pub monotone: bool,
}

impl RecoveryTable {
    pub fn slope_ok(&self) -> bool {
        (self.slope - 1.0).abs() <= SLOPE_TOL
    }

    pub fn passed(&self) -> bool {
        self.slope_ok() && self.bound_ok && self.monotone
    }

    /// Writes `h,normalized_energy,bending,stretching,gap`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["h", "normalized_energy", "bending", "stretching", "gap"])?;
        for r in &self.rows {
            w.write_record([
                fmt_f64(r.h),
                fmt_f64(r.normalized_energy),
                fmt_f64(r.bending),
                fmt_f64(r.stretching),
                fmt_f64(r.gap),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

fn row(gamma: &DiscreteCurve, h: f64, e0: f64) -> Result<RecoveryRow> {
    let grid = PolarGrid::graded(h, CORE_CELLS, OUTER_RATIO, gamma.len())?;
    let f = ProfileF;
    let field = SheetField::radial_product(grid, gamma.points(), |r| h * f.value(r / h))?;
    let e = energy_eh(&field, h)?;
    Ok(RecoveryRow {
        h,
        normalized_energy: e.normalized,
        bending: e.bending,
        stretching: e.stretching,
        gap: e.normalized - e0,
        core_gradient: e.core_gradient,
        core_hessian: e.core_hessian,
    })
}

/// Evaluates the smoothed cones over `gamma` for each `h` in `h_list`
/// (decreasing, inside `(0, 0.1]`) and fits the gap to `a / |log h|`.
pub fn recovery_convergence(gamma: &DiscreteCurve, h_list: &[f64]) -> Result<RecoveryTable> {
    if h_list.len() < 2 {
        return Err(Error::InvalidConfig("at least two thicknesses are needed".into()));
    }
    if h_list.iter().any(|&h| !(h > 0.0 && h <= MAX_H)) {
        return Err(Error::Domain(format!("thicknesses must lie in (0, {MAX_H}]")));
    }
    if h_list.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(Error::InvalidConfig("thicknesses must decrease".into()));
    }
    let e0 = energy_e0(gamma)?.circle;
    let rows: Vec<RecoveryRow> = h_list
        .par_iter()
        .map(|&h| row(gamma, h, e0))
        .collect::<Result<_>>()?;

    let x: Vec<f64> = rows.iter().map(|r| 1.0 / r.h.ln().abs()).collect();
    let sxx: f64 = x.iter().map(|v| v * v).sum();
    let a = rows.iter().zip(&x).map(|(r, v)| r.gap * v).sum::<f64>() / sxx;
    let fit_residual = (rows.iter().zip(&x).map(|(r, v)| (r.gap - a * v).powi(2)).sum::<f64>()
        / rows.len() as f64)
        .sqrt();
    let slope = if rows.iter().all(|r| r.gap > 0.0) {
        let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
        let ly: Vec<f64> = rows.iter().map(|r| r.gap.ln()).collect();
        let k = lx.len() as f64;
        let (mx, my) = (lx.iter().sum::<f64>() / k, ly.iter().sum::<f64>() / k);
        let cov: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
        let var: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
        cov / var
    } else {
        f64::NAN
    };
    let bound_ok = rows
        .iter()
        .zip(&x)
        .all(|(r, v)| r.gap.abs() <= (a.abs() * (1.0 + BOUND_MARGIN)) * v);
    let monotone = rows.windows(2).all(|w| w[1].gap < w[0].gap);
    Ok(RecoveryTable { limit_energy: e0, rows, fitted_a: a, fit_residual, slope, bound_ok, monotone })
}
