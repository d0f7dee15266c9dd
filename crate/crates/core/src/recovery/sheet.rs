//! Maps from the unit disc sampled on polar grids, and their bending and
//! stretching energies.
//!
//! Radial derivatives use three-point differences on the (non-uniform)
//! radii, angular derivatives the fourth-order periodic stencils. In polar
//! coordinates, per component,
//! `|D^2 u|^2 = u_rr^2 + 2 ((u_t / r)_r)^2 + (u_r / r + u_tt / r^2)^2`,
//! and the gradient in the orthonormal frame `(e_r, e_t)` is `[u_r, u_t / r]`.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::stencil::{d1_periodic_vec, d2_periodic_vec};
use crate::vec3::{self, Vec3};

/// Rings required inside `B_h` for the scale `h` to count as resolved.
pub const MIN_CORE_RINGS: usize = 8;
const ORIGIN_TOL: f64 = 1e-12;
const BOUNDARY_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct PolarGrid {
    radii: Vec<f64>,
    n_theta: usize,
}

impl PolarGrid {
    /// `radii` strictly increasing from `r0 >= 0`, at least three rings;
    /// `n_theta >= 16` uniform angles on `[0, 2 pi)`.
    pub fn new(radii: Vec<f64>, n_theta: usize) -> Result<Self> {
        if radii.len() < 3 || n_theta < 16 {
            return Err(Error::Resolution(format!(
                "{} rings and {n_theta} angles, at least 3 and 16 required",
                radii.len()
            )));
        }
        if !(radii[0] >= 0.0) || radii.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidConfig("radii must increase from a nonnegative value".into()));
        }
        Ok(Self { radii, n_theta })
    }

    /// `cells + 1` equally spaced radii on `[r0, r1]`.
    pub fn uniform(r0: f64, r1: f64, cells: usize, n_theta: usize) -> Result<Self> {
        let radii = (0..=cells).map(|j| r0 + (r1 - r0) * j as f64 / cells as f64).collect();
        Self::new(radii, n_theta)
    }

    /// Uniform rings on `[0, h]`, `core_rings` cells, then geometric rings with
    /// ratio at most `ratio` up to 1.
    pub fn graded(h: f64, core_rings: usize, ratio: f64, n_theta: usize) -> Result<Self> {
        if !(h > 0.0 && h < 1.0) || !(ratio > 1.0) || core_rings == 0 {
            return Err(Error::InvalidConfig(format!(
                "graded grid with h = {h}, ratio = {ratio}, {core_rings} core rings"
            )));
        }
        let mut radii: Vec<f64> = (0..=core_rings).map(|j| h * j as f64 / core_rings as f64).collect();
        let steps = ((1.0 / h).ln() / ratio.ln()).ceil().max(1.0) as usize;
        let q = (1.0 / h).powf(1.0 / steps as f64);
        for k in 1..steps {
            radii.push(h * q.powi(k as i32));
        }
        radii.push(1.0);
        Self::new(radii, n_theta)
    }

    pub fn radii(&self) -> &[f64] {
        &self.radii
    }

    pub fn n_theta(&self) -> usize {
        self.n_theta
    }

    pub fn dtheta(&self) -> f64 {
        2.0 * PI / self.n_theta as f64
    }

    pub fn theta(&self, k: usize) -> f64 {
        self.dtheta() * k as f64
    }

    /// Weights `w_j` with `sum_j w_j phi(r_j) ~ int phi(r) r dr`: the
    /// trapezoid rule in `log r` on cells away from the origin (exact for
    /// `phi ~ r^-2`), the plain trapezoid rule in `r` on a cell touching it.
    fn radial_weights(&self) -> Vec<f64> {
        let r = &self.radii;
        let mut w = vec![0.0; r.len()];
        for j in 0..r.len() - 1 {
            if r[j] == 0.0 {
                w[j + 1] += 0.5 * (r[j + 1] - r[j]) * r[j + 1];
            } else {
                let dt = 0.5 * (r[j + 1] / r[j]).ln();
                w[j] += dt * r[j] * r[j];
                w[j + 1] += dt * r[j + 1] * r[j + 1];
            }
        }
        w
    }

    /// [`Self::radial_weights`] restricted to the cells inside `[r_lo, r_hi]`.
    fn radial_weights_between(&self, r_lo: f64, r_hi: f64) -> Vec<f64> {
        let inside: Vec<f64> = self
            .radii
            .iter()
            .copied()
            .filter(|&r| r >= r_lo && r <= r_hi)
            .collect();
        if inside.len() < 2 {
            return vec![0.0; self.radii.len()];
        }
        let sub = PolarGrid { radii: inside, n_theta: self.n_theta };
        let w = sub.radial_weights();
        let first = self.radii.iter().position(|&r| r >= r_lo).expect("nonempty");
        let mut out = vec![0.0; self.radii.len()];
        out[first..first + w.len()].copy_from_slice(&w);
        out
    }

    /// Number of rings strictly inside `(0, h)`.
    pub fn rings_below(&self, h: f64) -> usize {
        self.radii.iter().filter(|&&r| r > 0.0 && r < h).count()
    }
}

/// Samples `u(r_j, theta_k)`, ring-major.
#[derive(Debug, Clone)]
pub struct SheetField {
    grid: PolarGrid,
    values: Vec<Vec3>,
}

impl SheetField {
    /// Checks `u(0) = 0` when the grid contains the origin and `|u| = 1` on
    /// the outer ring when it is the unit circle.
    pub fn new(grid: PolarGrid, values: Vec<Vec3>) -> Result<Self> {
        let m = grid.n_theta;
        let rings = grid.radii.len();
        if values.len() != rings * m {
            return Err(Error::DimensionMismatch { expected: rings * m, got: values.len() });
        }
        if grid.radii[0] == 0.0 && values[..m].iter().any(|u| vec3::norm(*u) > ORIGIN_TOL) {
            return Err(Error::InvalidConfig("map does not vanish at the origin".into()));
        }
        if grid.radii[rings - 1] == 1.0 {
            if let Some(u) = values[(rings - 1) * m..].iter().find(|u| (vec3::norm(**u) - 1.0).abs() > BOUNDARY_TOL) {
                return Err(Error::InvalidConfig(format!(
                    "boundary value of norm {} is off the sphere",
                    vec3::norm(*u)
                )));
            }
        }
        Ok(Self { grid, values })
    }

    pub fn from_fn(grid: PolarGrid, f: impl Fn(f64, f64) -> Vec3) -> Result<Self> {
        let mut values = Vec::with_capacity(grid.radii.len() * grid.n_theta);
        for &r in &grid.radii {
            for k in 0..grid.n_theta {
                values.push(f(r, grid.theta(k)));
            }
        }
        Self::new(grid, values)
    }

    /// `u = g(r) gamma_k` with `gamma` sampled on the angular grid.
    pub fn radial_product(grid: PolarGrid, gamma: &[Vec3], g: impl Fn(f64) -> f64) -> Result<Self> {
        if gamma.len() != grid.n_theta {
            return Err(Error::DimensionMismatch { expected: grid.n_theta, got: gamma.len() });
        }
        let mut values = Vec::with_capacity(grid.radii.len() * grid.n_theta);
        for &r in &grid.radii {
            let s = g(r);
            values.extend(gamma.iter().map(|p| vec3::scale(*p, s)));
        }
        Self::new(grid, values)
    }

    pub fn grid(&self) -> &PolarGrid {
        &self.grid
    }

    pub fn values(&self) -> &[Vec3] {
        &self.values
    }

    pub fn at(&self, ring: usize, k: usize) -> Vec3 {
        self.values[ring * self.grid.n_theta + k]
    }

    /// Pointwise `(|D^2 u|^2, dist^2(Du, O(2,3)), |Du|^2)`, ring-major; zero
    /// on a ring at the origin, where the polar formulas degenerate.
    pub fn densities(&self) -> Vec<[f64; 3]> {
        let r = &self.grid.radii;
        let m = self.grid.n_theta;
        let rings = r.len();
        let dt = self.grid.dtheta();
        let ring = |j: usize| &self.values[j * m..(j + 1) * m];
        let u_t: Vec<Vec<Vec3>> = (0..rings).map(|j| d1_periodic_vec(ring(j), dt)).collect();
        let u_tt: Vec<Vec<Vec3>> = (0..rings).map(|j| d2_periodic_vec(ring(j), dt)).collect();
        // u_t / r, the angular column of the gradient
        let w: Vec<Vec<Vec3>> = (0..rings)
            .map(|j| {
                let inv = if r[j] > 0.0 { 1.0 / r[j] } else { 0.0 };
                u_t[j].iter().map(|v| vec3::scale(*v, inv)).collect()
            })
            .collect();
        let mut out = vec![[0.0; 3]; rings * m];
        for j in 0..rings {
            if r[j] == 0.0 {
                continue;
            }
            let su = stencil_rows(r, j, 0);
            // u_t / r has no value at the origin
            let sw = stencil_rows(r, j, usize::from(r[0] == 0.0));
            for k in 0..m {
                let comb = |st: &((usize, usize, usize), [f64; 3], [f64; 3]), f: &dyn Fn(usize) -> Vec3| -> (Vec3, Vec3) {
                    let ((a0, a1, a2), b, c) = *st;
                    let (p, q, s) = (f(a0), f(a1), f(a2));
                    let d1 = std::array::from_fn(|i| b[0] * p[i] + b[1] * q[i] + b[2] * s[i]);
                    let d2 = std::array::from_fn(|i| c[0] * p[i] + c[1] * q[i] + c[2] * s[i]);
                    (d1, d2)
                };
                let (u_r, u_rr) = comb(&su, &|jj| self.values[jj * m + k]);
                let (w_r, _) = comb(&sw, &|jj| w[jj][k]);
                let wk = w[j][k];
                let lap = vec3::add(vec3::scale(u_r, 1.0 / r[j]), vec3::scale(u_tt[j][k], 1.0 / (r[j] * r[j])));
                let hess = vec3::dot(u_rr, u_rr) + 2.0 * vec3::dot(w_r, w_r) + vec3::dot(lap, lap);
                // singular values of the 3x2 gradient [u_r, u_t / r]
                let (g11, g12, g22) = (vec3::dot(u_r, u_r), vec3::dot(u_r, wk), vec3::dot(wk, wk));
                let half_tr = 0.5 * (g11 + g22);
                let disc = (0.25 * (g11 - g22).powi(2) + g12 * g12).sqrt();
                let s1 = (half_tr + disc).max(0.0).sqrt();
                let s2 = (half_tr - disc).max(0.0).sqrt();
                let dist2 = (s1 - 1.0).powi(2) + (s2 - 1.0).powi(2);
                out[j * m + k] = [hess, dist2, g11 + g22];
            }
        }
        out
    }

    /// `int_{r_lo <= r <= r_hi} phi dx` of each density.
    pub fn integrals(&self, r_lo: f64, r_hi: f64) -> [f64; 3] {
        let dens = self.densities();
        let wr = self.grid.radial_weights_between(r_lo, r_hi);
        let m = self.grid.n_theta;
        let dt = self.grid.dtheta();
        let mut acc = [0.0; 3];
        for (j, w) in wr.iter().enumerate() {
            if *w == 0.0 {
                continue;
            }
            let mut ring = [0.0; 3];
            for k in 0..m {
                for c in 0..3 {
                    ring[c] += dens[j * m + k][c];
                }
            }
            for c in 0..3 {
                acc[c] += w * dt * ring[c];
            }
        }
        acc
    }
}

/// Ring indices and first/second derivative weights of the three-point
/// stencil at ring `j >= lo` using rings `lo..`: centred inside, one-sided at
/// the ends.
fn stencil_rows(r: &[f64], j: usize, lo: usize) -> ((usize, usize, usize), [f64; 3], [f64; 3]) {
    let n = r.len();
    let (a, b, c) = if j == lo {
        (j, j + 1, j + 2)
    } else if j == n - 1 {
        (n - 3, n - 2, n - 1)
    } else {
        (j - 1, j, j + 1)
    };
    let x = r[j];
    let (x0, x1, x2) = (r[a], r[b], r[c]);
    // Lagrange basis derivatives at x
    let l0d = ((x - x1) + (x - x2)) / ((x0 - x1) * (x0 - x2));
    let l1d = ((x - x0) + (x - x2)) / ((x1 - x0) * (x1 - x2));
    let l2d = ((x - x0) + (x - x1)) / ((x2 - x0) * (x2 - x1));
    let l0dd = 2.0 / ((x0 - x1) * (x0 - x2));
    let l1dd = 2.0 / ((x1 - x0) * (x1 - x2));
    let l2dd = 2.0 / ((x2 - x0) * (x2 - x1));
    ((a, b, c), [l0d, l1d, l2d], [l0dd, l1dd, l2dd])
}

/// Parts of `E_h(u) = h^2 int |D^2 u|^2 + int dist^2(Du, O(2,3))` and the
/// normalized value `E_h / (h^2 |log h|)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SheetEnergy {
    pub bending: f64,
    pub stretching: f64,
    pub normalized: f64,
    /// `sup |Du|` and `h sup |D^2 u|` over the rings inside `B_h`.
    pub core_gradient: f64,
    pub core_hessian: f64,
}

pub fn energy_eh(field: &SheetField, h: f64) -> Result<SheetEnergy> {
    if !(h > 0.0 && h < 1.0) {
        return Err(Error::Domain(format!("thickness {h} outside (0, 1)")));
    }
    let grid = field.grid();
    if grid.radii[0] != 0.0 || *grid.radii.last().expect("rings") != 1.0 {
        return Err(Error::InvalidConfig("the grid must cover the unit disc".into()));
    }
    let core = grid.rings_below(h);
    if core < MIN_CORE_RINGS {
        return Err(Error::Resolution(format!(
            "{core} rings inside r < {h}, at least {MIN_CORE_RINGS} required"
        )));
    }
    let [hess, dist2, _] = field.integrals(0.0, 1.0);
    let dens = field.densities();
    let m = grid.n_theta;
    let (mut cg, mut ch) = (0.0f64, 0.0f64);
    for (j, &r) in grid.radii.iter().enumerate() {
        if r > 0.0 && r <= h {
            for d in &dens[j * m..(j + 1) * m] {
                cg = cg.max(d[2].sqrt());
                ch = ch.max(h * d[0].sqrt());
            }
        }
    }
    let bending = h * h * hess;
    Ok(SheetEnergy {
        bending,
        stretching: dist2,
        normalized: (bending + dist2) / (h * h * h.ln().abs()),
        core_gradient: cg,
        core_hessian: ch,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn three_point_weights_are_exact_for_quadratics() {
        let r = [0.0, 0.1, 0.25, 0.45, 1.0];
        for j in 0..r.len() {
            let (idx, d1, d2) = stencil_rows(&r, j, 0);
            let f = |x: f64| 3.0 - 2.0 * x + 5.0 * x * x;
            let v = [f(r[idx.0]), f(r[idx.1]), f(r[idx.2])];
            let got1: f64 = (0..3).map(|i| d1[i] * v[i]).sum();
            let got2: f64 = (0..3).map(|i| d2[i] * v[i]).sum();
            assert!((got1 - (-2.0 + 10.0 * r[j])).abs() < 1e-12);
            assert!((got2 - 10.0).abs() < 1e-10);
        }
    }

    #[test]
    fn log_weights_integrate_inverse_square_exactly() {
        let g = PolarGrid::graded(1e-3, 16, 1.1, 16).unwrap();
        let w = g.radial_weights_between(1e-3, 1.0);
        let s: f64 = w.iter().zip(g.radii()).filter(|(w, _)| **w > 0.0).map(|(w, r)| w / (r * r)).sum();
        assert!((s - (1e3f64).ln()).abs() < 1e-12, "{s}");
    }

    #[test]
    fn quadratic_map_has_constant_hessian() {
        // u = (x^2, xy, 0): |D^2 u|^2 = 4 + 2
        let g = PolarGrid::uniform(0.0, 0.5, 200, 64).unwrap();
        let f = SheetField::from_fn(g, |r, t| {
            let (x, y) = (r * t.cos(), r * t.sin());
            [x * x, x * y, 0.0]
        })
        .unwrap();
        let [hess, _, _] = f.integrals(0.0, 0.5);
        let area = PI * 0.25;
        assert!((hess / area - 6.0).abs() < 1e-3, "{}", hess / area);
    }
}
