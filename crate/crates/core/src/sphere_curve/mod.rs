//! Discrete differential geometry of closed curves on the unit sphere.
//!
//! A [`DiscreteCurve`] samples a closed curve at uniform parameter values on a
//! periodic grid. Derivatives use fourth-order periodic central differences;
//! integrals use the periodic trapezoid rule against the discrete length
//! element `|gamma'| dt`.

mod io;
mod series;

pub use io::fmt_f64;
pub use io::{read_curve_csv, read_curve_json, write_curve_csv, write_curve_json, CurveRecord};
pub use series::{arclength_curve_from_graph, graph_length, random_closed_curve, PeriodicSeries};

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::stencil::{d1_periodic_vec, d2_periodic_vec};
use crate::vec3::{self, Vec3};

/// Smallest accepted number of samples.
pub const MIN_NODES: usize = 16;
/// Tolerance on `|gamma| = 1` at every node.
pub const UNIT_NORM_TOL: f64 = 1e-12;
/// Tolerance on the discrete speed of curves declared arclength-parametrized.
pub const UNIT_SPEED_TOL: f64 = 1e-5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ParameterKind {
    Arclength,
    CylindricalAngle,
}

/// Closed curve on the unit sphere sampled on a uniform periodic grid.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteCurve {
    points: Vec<Vec3>,
    kind: ParameterKind,
    period: f64,
}

/// Per-node moving frame and scalar fields of a [`DiscreteCurve`].
#[derive(Debug, Clone)]
pub struct CurveFrame {
    pub tangent: Vec<Vec3>,
    /// `gamma x tangent`, the unit normal to the cone over the curve.
    pub normal: Vec<Vec3>,
    pub kappa: Vec<f64>,
    /// `gamma . e3`
    pub height: Vec<f64>,
    /// `|gamma'|` with respect to the grid parameter.
    pub speed: Vec<f64>,
}

impl DiscreteCurve {
    pub fn new(points: Vec<Vec3>, kind: ParameterKind, period: f64) -> Result<Self> {
        if points.len() < MIN_NODES {
            return Err(Error::Resolution(format!(
                "{} nodes, at least {MIN_NODES} required",
                points.len()
            )));
        }
        if !(period.is_finite() && period > 0.0) {
            return Err(Error::InvalidCurve(format!(
                "period {period} must be positive"
            )));
        }
        for (i, p) in points.iter().enumerate() {
            let r = vec3::norm(*p);
            if !r.is_finite() || (r - 1.0).abs() > UNIT_NORM_TOL {
                return Err(Error::InvalidCurve(format!("node {i} has norm {r}")));
            }
        }
        let curve = Self {
            points,
            kind,
            period,
        };
        if kind == ParameterKind::Arclength {
            let worst = curve
                .speeds()
                .iter()
                .map(|v| (v - 1.0).abs())
                .fold(0.0, f64::max);
            if worst > UNIT_SPEED_TOL {
                return Err(Error::InvalidCurve(format!(
                    "arclength curve has speed defect {worst:.3e}"
                )));
            }
        }
        Ok(curve)
    }

    /// Curve `(sqrt(1 - a^2) cos t, sqrt(1 - a^2) sin t, a)` over the cylindrical
    /// angle `t` sampled uniformly on `[0, 2 pi)`.
    pub fn from_graph(alpha: &[f64]) -> Result<Self> {
        let n = alpha.len();
        let dt = 2.0 * PI / n as f64;
        let mut pts = Vec::with_capacity(n);
        for (i, &a) in alpha.iter().enumerate() {
            if !(a * a < 1.0) {
                return Err(Error::Regime(format!("alpha[{i}] = {a}")));
            }
            let t = i as f64 * dt;
            let c = (1.0 - a * a).sqrt();
            pts.push([c * t.cos(), c * t.sin(), a]);
        }
        Self::new(pts, ParameterKind::CylindricalAngle, 2.0 * PI)
    }

    /// Parallel of latitude at height `a`, parametrized either by the
    /// cylindrical angle or by arclength.
    pub fn parallel(a: f64, n: usize, kind: ParameterKind) -> Result<Self> {
        match kind {
            ParameterKind::CylindricalAngle => Self::from_graph(&vec![a; n]),
            ParameterKind::Arclength => {
                if !(a * a < 1.0) {
                    return Err(Error::Domain(format!("parallel height {a}")));
                }
                let r = (1.0 - a * a).sqrt();
                let period = 2.0 * PI * r;
                let pts = (0..n)
                    .map(|i| {
                        let t = 2.0 * PI * i as f64 / n as f64;
                        [r * t.cos(), r * t.sin(), a]
                    })
                    .collect();
                Self::new(pts, kind, period)
            }
        }
    }

    pub fn equator(n: usize) -> Self {
        Self::from_graph(&vec![0.0; n]).expect("equator is a valid curve")
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[Vec3] {
        &self.points
    }

    pub fn kind(&self) -> ParameterKind {
        self.kind
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    pub fn step(&self) -> f64 {
        self.period / self.points.len() as f64
    }

    pub fn param(&self, i: usize) -> f64 {
        i as f64 * self.step()
    }

    pub fn speeds(&self) -> Vec<f64> {
        d1_periodic_vec(&self.points, self.step())
            .into_iter()
            .map(vec3::norm)
            .collect()
    }

    pub fn frame(&self) -> CurveFrame {
        let h = self.step();
        let d1 = d1_periodic_vec(&self.points, h);
        let d2 = d2_periodic_vec(&self.points, h);
        let n = self.len();
        let mut frame = CurveFrame {
            tangent: Vec::with_capacity(n),
            normal: Vec::with_capacity(n),
            kappa: Vec::with_capacity(n),
            height: Vec::with_capacity(n),
            speed: Vec::with_capacity(n),
        };
        for i in 0..n {
            let g = self.points[i];
            let v = vec3::norm(d1[i]);
            let t = vec3::scale(d1[i], 1.0 / v);
            let big_n = vec3::cross(g, t);
            frame
                .kappa
                .push(vec3::dot(d2[i], vec3::cross(g, d1[i])) / (v * v * v));
            frame.tangent.push(t);
            frame.normal.push(big_n);
            frame.height.push(g[2]);
            frame.speed.push(v);
        }
        frame
    }
}

/// Geodesic curvature `gamma'' . (gamma x gamma') / |gamma'|^3` at every node.
pub fn geodesic_curvature(curve: &DiscreteCurve) -> Vec<f64> {
    curve.frame().kappa
}

/// `int kappa^2 ds` by the periodic trapezoid rule.
pub fn bending_energy(curve: &DiscreteCurve) -> f64 {
    let f = curve.frame();
    let h = curve.step();
    f.kappa
        .iter()
        .zip(&f.speed)
        .map(|(k, v)| k * k * v)
        .sum::<f64>()
        * h
}

pub fn curve_length(curve: &DiscreteCurve) -> f64 {
    curve.speeds().iter().sum::<f64>() * curve.step()
}

/// Rate `d theta / ds` of the cylindrical angle along a unit-speed spherical
/// curve with height `h` and height slope `h_prime`.
pub fn theta_speed(h: f64, h_prime: f64) -> Result<f64> {
    let c2 = 1.0 - h * h;
    if !(c2 > 0.0) {
        return Err(Error::Domain(format!("height {h} outside (-1, 1)")));
    }
    let inner = 1.0 - h_prime * h_prime / c2;
    if !(inner > 0.0) {
        return Err(Error::Domain(format!(
            "slope {h_prime} too steep at height {h}"
        )));
    }
    Ok((inner / c2).sqrt())
}

/// Projects `psi` onto the tangent plane of the sphere at each curve node.
pub fn project_tangent(curve: &DiscreteCurve, psi: &[Vec3]) -> Vec<Vec3> {
    curve
        .points()
        .iter()
        .zip(psi)
        .map(|(g, p)| vec3::sub(*p, vec3::scale(*g, vec3::dot(*p, *g))))
        .collect()
}

/// Radial projection of `gamma + delta psi` back onto the sphere.
pub fn perturb(curve: &DiscreteCurve, psi: &[Vec3], delta: f64) -> Result<DiscreteCurve> {
    if psi.len() != curve.len() {
        return Err(Error::DimensionMismatch {
            expected: curve.len(),
            got: psi.len(),
        });
    }
    let pts = curve
        .points()
        .iter()
        .zip(psi)
        .map(|(g, p)| vec3::normalize(vec3::add(*g, vec3::scale(*p, delta))))
        .collect();
    // the perturbed curve is generally not unit speed any more
    let kind = match curve.kind() {
        ParameterKind::Arclength => ParameterKind::CylindricalAngle,
        k => k,
    };
    DiscreteCurve::new(pts, kind, curve.period())
}

/// First variation of `int kappa^2 ds` with the multiplier term, in direction
/// `psi` (projected tangent to the sphere first):
///
/// `2 int (kappa N . psi'' - 3/2 kappa^2 T . psi' + (1 + lambda) kappa N . psi) ds`,
///
/// with derivatives taken in arclength. Since the length changes at first
/// order by `-int kappa N . psi ds`, this equals the directional derivative of
/// `F - 2 lambda Length`; `lambda` is the multiplier of the curvature ODE
/// `kappa'' + (1 + lambda) kappa + kappa^3 / 2 = 0`.
pub fn first_variation(curve: &DiscreteCurve, psi: &[Vec3], lambda: f64) -> Result<f64> {
    if psi.len() != curve.len() {
        return Err(Error::DimensionMismatch {
            expected: curve.len(),
            got: psi.len(),
        });
    }
    let psi = project_tangent(curve, psi);
    let h = curve.step();
    let frame = curve.frame();
    let g2 = d2_periodic_vec(curve.points(), h);
    let p1 = d1_periodic_vec(&psi, h);
    let p2 = d2_periodic_vec(&psi, h);
    let mut acc = 0.0;
    for i in 0..curve.len() {
        let v = frame.speed[i];
        let t = frame.tangent[i];
        let nrm = frame.normal[i];
        let k = frame.kappa[i];
        // d|gamma'|/dt = T . gamma''
        let v_t = vec3::dot(t, g2[i]);
        let ps = vec3::scale(p1[i], 1.0 / v);
        let pss = vec3::scale(vec3::sub(p2[i], vec3::scale(p1[i], v_t / v)), 1.0 / (v * v));
        let integrand = k * vec3::dot(nrm, pss) - 1.5 * k * k * vec3::dot(t, ps)
            + (1.0 + lambda) * k * vec3::dot(nrm, psi[i]);
        acc += integrand * v;
    }
    Ok(2.0 * acc * h)
}
