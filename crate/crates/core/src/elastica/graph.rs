//! Graph curves `theta -> (sqrt(1 - a^2) cos theta, sqrt(1 - a^2) sin theta, a)`
//! and their discrete bending energy and length as functions of the nodal
//! heights.
//!
//! In these coordinates the geodesic curvature is
//! `kappa = (a'' + a (1 - a^2) + 3 a a'^2 / (1 - a^2)) / v^3` with
//! `v^2 = 1 - a^2 + a'^2 / (1 - a^2)`, so only `a'` and `a''` are taken from
//! difference stencils.

use std::f64::consts::PI;
use std::ops::{Add, Mul, Sub};

use crate::error::{Error, Result};
use crate::sphere_curve::DiscreteCurve;
use crate::stencil::{wrap, D1, D2};

/// Heights over a uniform periodic grid of the cylindrical angle, bounded
/// below by the obstacle height `epsilon`.
#[derive(Debug, Clone, PartialEq)]
pub struct GraphCurve {
    pub alpha: Vec<f64>,
    pub epsilon: f64,
}

impl GraphCurve {
    pub fn new(alpha: Vec<f64>, epsilon: f64) -> Result<Self> {
        if alpha.len() < 16 {
            return Err(Error::Resolution(format!("{} nodes", alpha.len())));
        }
        if !(epsilon > 0.0 && epsilon < 1.0) {
            return Err(Error::Domain(format!("obstacle height {epsilon}")));
        }
        for (i, &a) in alpha.iter().enumerate() {
            if !(a * a < 1.0) {
                return Err(Error::Regime(format!("alpha[{i}] = {a}")));
            }
            if a < epsilon {
                return Err(Error::InvalidCurve(format!(
                    "alpha[{i}] = {a} below the obstacle {epsilon}"
                )));
            }
        }
        Ok(Self { alpha, epsilon })
    }

    /// The parallel at the obstacle height.
    pub fn parallel(epsilon: f64, n: usize) -> Result<Self> {
        Self::new(vec![epsilon; n], epsilon)
    }

    pub fn len(&self) -> usize {
        self.alpha.len()
    }

    pub fn is_empty(&self) -> bool {
        self.alpha.is_empty()
    }

    pub fn dtheta(&self) -> f64 {
        2.0 * PI / self.alpha.len() as f64
    }

    pub fn theta(&self, i: usize) -> f64 {
        i as f64 * self.dtheta()
    }

    pub fn to_curve(&self) -> Result<DiscreteCurve> {
        DiscreteCurve::from_graph(&self.alpha)
    }

    pub fn energy(&self) -> f64 {
        discrete_energy(&self.alpha).0
    }

    pub fn length(&self) -> f64 {
        discrete_energy(&self.alpha).1
    }

    /// Nodal `(a', a'')` from the fourth-order stencils.
    pub fn derivatives(&self) -> (Vec<f64>, Vec<f64>) {
        let h = self.dtheta();
        (
            crate::stencil::d1_periodic(&self.alpha, h),
            crate::stencil::d2_periodic(&self.alpha, h),
        )
    }

    /// Nodal geodesic curvature and speed `|gamma'(theta)|`.
    pub fn curvature(&self) -> (Vec<f64>, Vec<f64>) {
        let (a1, a2) = self.derivatives();
        self.alpha
            .iter()
            .zip(a1.iter().zip(&a2))
            .map(|(&a, (&d1, &d2))| {
                let (num, w) = curvature_terms(a, d1, d2);
                let v = w.sqrt();
                (num / (w * v), v)
            })
            .unzip()
    }
}

/// `(kappa v^3, v^2)` at one node.
pub fn curvature_terms(a: f64, a1: f64, a2: f64) -> (f64, f64) {
    let c2 = 1.0 - a * a;
    (a2 + a * c2 + 3.0 * a * a1 * a1 / c2, c2 + a1 * a1 / c2)
}

/// Value, gradient and Hessian of a function of `(a, a', a'')`.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Jet {
    pub v: f64,
    pub g: [f64; 3],
    pub h: [[f64; 3]; 3],
}

impl Jet {
    fn cst(v: f64) -> Self {
        Self { v, g: [0.0; 3], h: [[0.0; 3]; 3] }
    }

    fn var(v: f64, k: usize) -> Self {
        let mut j = Self::cst(v);
        j.g[k] = 1.0;
        j
    }

    /// Composition with a scalar function given its first two derivatives.
    fn chain(self, f: f64, df: f64, d2f: f64) -> Self {
        let mut out = Self::cst(f);
        for r in 0..3 {
            out.g[r] = df * self.g[r];
            for c in 0..3 {
                out.h[r][c] = df * self.h[r][c] + d2f * self.g[r] * self.g[c];
            }
        }
        out
    }

    fn powf(self, p: f64) -> Self {
        let x = self.v;
        self.chain(x.powf(p), p * x.powf(p - 1.0), p * (p - 1.0) * x.powf(p - 2.0))
    }

    fn recip(self) -> Self {
        let x = self.v;
        self.chain(1.0 / x, -1.0 / (x * x), 2.0 / (x * x * x))
    }
}

impl Add for Jet {
    type Output = Jet;
    fn add(mut self, o: Jet) -> Jet {
        self.v += o.v;
        for r in 0..3 {
            self.g[r] += o.g[r];
            for c in 0..3 {
                self.h[r][c] += o.h[r][c];
            }
        }
        self
    }
}

impl Sub for Jet {
    type Output = Jet;
    fn sub(self, o: Jet) -> Jet {
        self + o * -1.0
    }
}

impl Mul for Jet {
    type Output = Jet;
    fn mul(self, o: Jet) -> Jet {
        let mut out = Jet::cst(self.v * o.v);
        for r in 0..3 {
            out.g[r] = self.g[r] * o.v + self.v * o.g[r];
            for c in 0..3 {
                out.h[r][c] = self.h[r][c] * o.v
                    + self.v * o.h[r][c]
                    + self.g[r] * o.g[c]
                    + o.g[r] * self.g[c];
            }
        }
        out
    }
}

impl Mul<f64> for Jet {
    type Output = Jet;
    fn mul(mut self, s: f64) -> Jet {
        self.v *= s;
        for r in 0..3 {
            self.g[r] *= s;
            for c in 0..3 {
                self.h[r][c] *= s;
            }
        }
        self
    }
}

impl Add<f64> for Jet {
    type Output = Jet;
    fn add(mut self, s: f64) -> Jet {
        self.v += s;
        self
    }
}

/// Local integrands `kappa^2 v` and `v` as jets in `(a, a', a'')`.
pub(crate) fn local_jets(a: f64, a1: f64, a2: f64) -> (Jet, Jet) {
    let (x, x1, x2) = (Jet::var(a, 0), Jet::var(a1, 1), Jet::var(a2, 2));
    let c2 = x * x * -1.0 + 1.0;
    let ic2 = c2.recip();
    let num = x2 + x * c2 + x * x1 * x1 * ic2 * 3.0;
    let w = c2 + x1 * x1 * ic2;
    (num * num * w.powf(-2.5), w.powf(0.5))
}

/// Derivative stencils as rows of the map from `alpha[i-2..=i+2]` to
/// `(a, a', a'')` at node `i`.
pub(crate) fn stencil_rows(h: f64) -> [[f64; 5]; 3] {
    let mut s = [[0.0; 5]; 3];
    s[0][2] = 1.0;
    for k in 0..5 {
        s[1][k] = D1[k] / (12.0 * h);
        s[2][k] = D2[k] / (12.0 * h * h);
    }
    s
}

/// Symmetric periodic band matrix of half-width 4: `band[i][k] = H(i, i + k)`.
pub type Band = Vec<[f64; 5]>;

/// Discrete bending energy `dtheta sum kappa_i^2 v_i` and length
/// `dtheta sum v_i`, with gradients and, on request, Hessians.
#[derive(Debug, Clone)]
pub struct EnergyEval {
    pub energy: f64,
    pub length: f64,
    pub grad_energy: Vec<f64>,
    pub grad_length: Vec<f64>,
    pub hess_energy: Option<Band>,
    pub hess_length: Option<Band>,
}

/// Compensated running sum.
#[derive(Debug, Default, Clone, Copy)]
struct Neumaier {
    sum: f64,
    comp: f64,
}

impl Neumaier {
    fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    fn value(self) -> f64 {
        self.sum + self.comp
    }
}

/// Values only. Sums are compensated so that `L - 2 pi` keeps its digits.
pub fn discrete_energy(alpha: &[f64]) -> (f64, f64) {
    let n = alpha.len();
    let h = 2.0 * PI / n as f64;
    let s = stencil_rows(h);
    let (mut e, mut l) = (Neumaier::default(), Neumaier::default());
    for i in 0..n {
        let mut x = [0.0; 3];
        for k in 0..5 {
            let ak = alpha[wrap(i as isize + k as isize - 2, n)];
            x[1] += s[1][k] * ak;
            x[2] += s[2][k] * ak;
        }
        let (num, w) = curvature_terms(alpha[i], x[1], x[2]);
        e.add(num * num * w.powf(-2.5));
        l.add(w.sqrt());
    }
    (e.value() * h, l.value() * h)
}

pub fn evaluate(alpha: &[f64], with_hessian: bool) -> EnergyEval {
    let n = alpha.len();
    let h = 2.0 * PI / n as f64;
    let s = stencil_rows(h);
    let mut out = EnergyEval {
        energy: 0.0,
        length: 0.0,
        grad_energy: vec![0.0; n],
        grad_length: vec![0.0; n],
        hess_energy: with_hessian.then(|| vec![[0.0; 5]; n]),
        hess_length: with_hessian.then(|| vec![[0.0; 5]; n]),
    };
    let (mut energy, mut length) = (Neumaier::default(), Neumaier::default());
    for i in 0..n {
        let idx: [usize; 5] = std::array::from_fn(|k| wrap(i as isize + k as isize - 2, n));
        let mut x = [alpha[i], 0.0, 0.0];
        for k in 0..5 {
            x[1] += s[1][k] * alpha[idx[k]];
            x[2] += s[2][k] * alpha[idx[k]];
        }
        let (fe, fl) = local_jets(x[0], x[1], x[2]);
        energy.add(fe.v);
        length.add(fl.v);
        for (jet, grad, hess) in [
            (&fe, &mut out.grad_energy, out.hess_energy.as_mut()),
            (&fl, &mut out.grad_length, out.hess_length.as_mut()),
        ] {
            // chain to nodal values: g_loc = S^T g, H_loc = S^T H S
            let mut gl = [0.0; 5];
            for k in 0..5 {
                gl[k] = (0..3).map(|r| jet.g[r] * s[r][k]).sum();
                grad[idx[k]] += h * gl[k];
            }
            if let Some(band) = hess {
                let mut hs = [[0.0; 5]; 3];
                for r in 0..3 {
                    for k in 0..5 {
                        hs[r][k] = (0..3).map(|c| jet.h[r][c] * s[c][k]).sum();
                    }
                }
                for a in 0..5 {
                    for b in a..5 {
                        let v: f64 = (0..3).map(|r| s[r][a] * hs[r][b]).sum();
                        band[idx[a]][b - a] += h * v;
                    }
                }
            }
        }
    }
    out.energy = energy.value() * h;
    out.length = length.value() * h;
    out
}

/// `y = H x` for a periodic band matrix.
pub fn band_mul(band: &Band, x: &[f64]) -> Vec<f64> {
    let n = x.len();
    let mut y = vec![0.0; n];
    for i in 0..n {
        y[i] += band[i][0] * x[i];
        for k in 1..5 {
            let j = (i + k) % n;
            y[i] += band[i][k] * x[j];
            y[j] += band[i][k] * x[i];
        }
    }
    y
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sphere_curve::{bending_energy, curve_length, geodesic_curvature};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn smooth_alpha(rng: &mut ChaCha8Rng, n: usize, eps: f64) -> Vec<f64> {
        let coef: Vec<(f64, f64)> = (1..=5)
            .map(|k| {
                let a = 0.3 * eps / k as f64;
                (rng.random_range(-a..a), rng.random_range(-a..a))
            })
            .collect();
        (0..n)
            .map(|i| {
                let t = 2.0 * PI * i as f64 / n as f64;
                let mut v = 2.0 * eps;
                for (k, (a, b)) in coef.iter().enumerate() {
                    let kf = (k + 1) as f64;
                    v += a * (kf * t).cos() + b * (kf * t).sin();
                }
                v
            })
            .collect()
    }

    #[test]
    fn closed_form_curvature_matches_cartesian_kernel() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let alpha = smooth_alpha(&mut rng, 2048, 0.1);
        let g = GraphCurve::new(alpha.clone(), 0.01).unwrap();
        let (k, _) = g.curvature();
        let kc = geodesic_curvature(&g.to_curve().unwrap());
        for (a, b) in k.iter().zip(&kc) {
            assert!((a - b).abs() < 1e-8);
        }
        let (e, l) = discrete_energy(&alpha);
        let c = g.to_curve().unwrap();
        assert!((e - bending_energy(&c)).abs() < 1e-8);
        assert!((l - curve_length(&c)).abs() < 1e-10);
    }

    #[test]
    fn parallel_energy_and_length() {
        let eps: f64 = 0.05;
        let (e, l) = discrete_energy(&vec![eps; 256]);
        let c = (1.0 - eps * eps).sqrt();
        assert!((l - 2.0 * PI * c).abs() < 1e-13);
        assert!((e - 2.0 * PI * eps * eps / c).abs() < 1e-13);
    }

    #[test]
    fn gradient_and_hessian_match_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let n = 256;
        let alpha = smooth_alpha(&mut rng, n, 0.1);
        let ev = evaluate(&alpha, true);
        let hb = ev.hess_energy.as_ref().unwrap();
        let dir: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let step = 1e-7;
        let shifted = |t: f64| -> Vec<f64> {
            alpha.iter().zip(&dir).map(|(a, d)| a + t * d).collect()
        };
        let fd = (discrete_energy(&shifted(step)).0 - discrete_energy(&shifted(-step)).0)
            / (2.0 * step);
        let exact: f64 = ev.grad_energy.iter().zip(&dir).map(|(g, d)| g * d).sum();
        let size: f64 = ev.grad_energy.iter().zip(&dir).map(|(g, d)| (g * d).abs()).sum();
        assert!((fd - exact).abs() < 1e-6 * size, "{fd} {exact}");

        let gp = evaluate(&shifted(step), false).grad_energy;
        let gm = evaluate(&shifted(-step), false).grad_energy;
        let hd = band_mul(hb, &dir);
        let scale = hd.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        for i in 0..n {
            let fd = (gp[i] - gm[i]) / (2.0 * step);
            assert!((fd - hd[i]).abs() < 1e-5 * scale, "node {i}: {fd} vs {}", hd[i]);
        }
        let lb = ev.hess_length.as_ref().unwrap();
        let lp = evaluate(&shifted(step), false).grad_length;
        let lm = evaluate(&shifted(-step), false).grad_length;
        let ld = band_mul(lb, &dir);
        let scale = ld.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        for i in 0..n {
            let fd = (lp[i] - lm[i]) / (2.0 * step);
            assert!((fd - ld[i]).abs() < 1e-5 * scale);
        }
    }

    #[test]
    fn rejects_points_below_obstacle_or_outside_graph_regime() {
        assert!(matches!(
            GraphCurve::new(vec![0.05; 32], 0.1),
            Err(Error::InvalidCurve(_))
        ));
        assert!(matches!(
            GraphCurve::new(vec![1.0; 32], 0.1),
            Err(Error::Regime(_))
        ));
    }
}
