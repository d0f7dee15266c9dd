//! Bending energy of the cone over a unit-speed spherical curve.

use std::f64::consts::{LN_2, PI};

use super::sheet::{PolarGrid, SheetField};
use crate::error::{Error, Result};
use crate::sphere_curve::{bending_energy, DiscreteCurve, ParameterKind};
use crate::stencil::d2_periodic_vec;
use crate::vec3;

/// Radial cells of the annulus quadrature.
const ANNULUS_CELLS: usize = 64;
/// Relative agreement required of the annulus quadrature.
const ANNULUS_TOL: f64 = 1e-4;
/// Relative agreement required of the curvature form.
const CURVATURE_TOL: f64 = 1e-6;
const LENGTH_TOL: f64 = 1e-6;

/// The limit energy in three forms that agree for unit-speed curves.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LimitEnergy {
    /// `int |gamma'' + gamma|^2 dtheta`.
    pub circle: f64,
    /// `(1 / log 2) int_{1/2 < r < 1} |D^2 (r gamma)|^2 dx`.
    pub annulus: f64,
    /// `int kappa^2 ds`.
    pub bending: f64,
}

/// Limit energy of the cone `r gamma(theta)` over a unit-speed curve of
/// length `2 pi`. Fails if the three forms disagree beyond their tolerances.
pub fn energy_e0(gamma: &DiscreteCurve) -> Result<LimitEnergy> {
    if gamma.kind() != ParameterKind::Arclength {
        return Err(Error::InvalidCurve("the limit energy needs a unit-speed curve".into()));
    }
    if (gamma.period() - 2.0 * PI).abs() > LENGTH_TOL * 2.0 * PI {
        return Err(Error::InvalidCurve(format!("length {} is not 2 pi", gamma.period())));
    }
    let n = gamma.len();
    let h = gamma.period() / n as f64;
    let g2 = d2_periodic_vec(gamma.points(), h);
    let circle: f64 = gamma
        .points()
        .iter()
        .zip(&g2)
        .map(|(p, q)| {
            let v = vec3::add(*p, *q);
            vec3::dot(v, v)
        })
        .sum::<f64>()
        * h;

    let grid = PolarGrid::uniform(0.5, 1.0, ANNULUS_CELLS, n)?;
    let cone = SheetField::radial_product(grid, gamma.points(), |r| r)?;
    let annulus = cone.integrals(0.5, 1.0)[0] / LN_2;
    let bending = bending_energy(gamma);

    let out = LimitEnergy { circle, annulus, bending };
    let scale = circle.abs().max(f64::MIN_POSITIVE);
    if (annulus - circle).abs() > ANNULUS_TOL * scale + 1e-12 {
        return Err(Error::Consistency(format!(
            "annulus form {annulus} differs from circle form {circle}"
        )));
    }
    if (bending - circle).abs() > CURVATURE_TOL * scale + 1e-12 {
        return Err(Error::Consistency(format!(
            "curvature form {bending} differs from circle form {circle}"
        )));
    }
    Ok(out)
}
