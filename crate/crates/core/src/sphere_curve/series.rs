//! Trigonometric interpolation of periodic samples and arclength resampling
//! of graph curves `theta -> (sqrt(1 - a^2) cos theta, sqrt(1 - a^2) sin theta, a)`.

use rand::Rng;
use rustfft::{num_complex::Complex, FftPlanner};
use std::f64::consts::PI;

use super::{DiscreteCurve, ParameterKind};
use crate::error::{Error, Result};

/// `f(t) = a0 + sum_k (cos[k-1] cos kt + sin[k-1] sin kt)` on `[0, 2 pi)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PeriodicSeries {
    a0: f64,
    cos: Vec<f64>,
    sin: Vec<f64>,
}

impl PeriodicSeries {
    pub fn from_coefficients(a0: f64, cos: Vec<f64>, sin: Vec<f64>) -> Result<Self> {
        if cos.len() != sin.len() {
            return Err(Error::DimensionMismatch {
                expected: cos.len(),
                got: sin.len(),
            });
        }
        Ok(Self { a0, cos, sin })
    }

    /// Trigonometric interpolant of samples at `t_i = 2 pi i / n`.
    pub fn from_samples(samples: &[f64]) -> Self {
        let n = samples.len();
        let mut buf: Vec<Complex<f64>> = samples.iter().map(|&x| Complex::new(x, 0.0)).collect();
        FftPlanner::new().plan_fft_forward(n).process(&mut buf);
        let scale = 1.0 / n as f64;
        let half = n / 2;
        let mut cos = Vec::with_capacity(half);
        let mut sin = Vec::with_capacity(half);
        for k in 1..=half {
            let z = buf[k] * scale;
            if 2 * k == n {
                cos.push(z.re);
                sin.push(0.0);
            } else {
                cos.push(2.0 * z.re);
                sin.push(-2.0 * z.im);
            }
        }
        Self {
            a0: buf[0].re * scale,
            cos,
            sin,
        }
    }

    pub fn modes(&self) -> usize {
        self.cos.len()
    }

    /// Value, first and second derivative at `t`.
    pub fn eval(&self, t: f64) -> [f64; 3] {
        let (s1, c1) = t.sin_cos();
        let (mut ck, mut sk) = (1.0, 0.0);
        let mut out = [self.a0, 0.0, 0.0];
        for (k, (a, b)) in self.cos.iter().zip(&self.sin).enumerate() {
            (ck, sk) = (ck * c1 - sk * s1, sk * c1 + ck * s1);
            let kf = (k + 1) as f64;
            let v = a * ck + b * sk;
            out[0] += v;
            out[1] += kf * (b * ck - a * sk);
            out[2] -= kf * kf * v;
        }
        out
    }
}

// 4-point Gauss-Legendre nodes and weights on [-1, 1]
const GL_X: [f64; 4] = [
    -0.861_136_311_594_052_6,
    -0.339_981_043_584_856_3,
    0.339_981_043_584_856_3,
    0.861_136_311_594_052_6,
];
const GL_W: [f64; 4] = [
    0.347_854_845_137_453_9,
    0.652_145_154_862_546_1,
    0.652_145_154_862_546_1,
    0.347_854_845_137_453_9,
];

struct GraphArclength<'a> {
    series: &'a PeriodicSeries,
    cells: usize,
    cumulative: Vec<f64>,
}

fn graph_speed(series: &PeriodicSeries, t: f64) -> Result<f64> {
    let [a, ap, _] = series.eval(t);
    let c2 = 1.0 - a * a;
    if !(c2 > 0.0) {
        return Err(Error::Regime(format!("height {a} at theta = {t}")));
    }
    Ok((c2 + ap * ap / c2).sqrt())
}

impl<'a> GraphArclength<'a> {
    fn new(series: &'a PeriodicSeries, cells: usize) -> Result<Self> {
        let dt = 2.0 * PI / cells as f64;
        let mut cumulative = Vec::with_capacity(cells + 1);
        cumulative.push(0.0);
        let mut acc = 0.0;
        for c in 0..cells {
            acc += Self::segment(series, c as f64 * dt, (c + 1) as f64 * dt)?;
            cumulative.push(acc);
        }
        Ok(Self {
            series,
            cells,
            cumulative,
        })
    }

    fn segment(series: &PeriodicSeries, a: f64, b: f64) -> Result<f64> {
        let (mid, half) = (0.5 * (a + b), 0.5 * (b - a));
        let mut acc = 0.0;
        for (x, w) in GL_X.iter().zip(GL_W) {
            acc += w * graph_speed(series, mid + half * x)?;
        }
        Ok(acc * half)
    }

    fn total(&self) -> f64 {
        self.cumulative[self.cells]
    }

    fn s_of(&self, t: f64) -> Result<f64> {
        let dt = 2.0 * PI / self.cells as f64;
        let c = ((t / dt).floor() as usize).min(self.cells - 1);
        Ok(self.cumulative[c] + Self::segment(self.series, c as f64 * dt, t)?)
    }

    fn theta_of(&self, s: f64) -> Result<f64> {
        let c = self
            .cumulative
            .partition_point(|&x| x <= s)
            .clamp(1, self.cells)
            - 1;
        let dt = 2.0 * PI / self.cells as f64;
        let (lo, hi) = (c as f64 * dt, (c + 1) as f64 * dt);
        let frac = (s - self.cumulative[c]) / (self.cumulative[c + 1] - self.cumulative[c]);
        let mut t = lo + frac * dt;
        for _ in 0..50 {
            let r = self.s_of(t)? - s;
            let step = r / graph_speed(self.series, t)?;
            t = (t - step).clamp(lo, hi);
            if step.abs() < 1e-15 {
                break;
            }
        }
        Ok(t)
    }
}

/// Total length of the graph curve with height `series`.
pub fn graph_length(series: &PeriodicSeries, cells: usize) -> Result<f64> {
    Ok(GraphArclength::new(series, cells)?.total())
}

/// Resamples the graph curve with height samples `alpha` (uniform in the
/// cylindrical angle) at `m` points equally spaced in arclength. The heights
/// are interpolated trigonometrically.
pub fn arclength_curve_from_graph(alpha: &[f64], m: usize) -> Result<DiscreteCurve> {
    let series = PeriodicSeries::from_samples(alpha);
    arclength_curve_from_series(&series, alpha.len().max(64), m)
}

pub(crate) fn arclength_curve_from_series(
    series: &PeriodicSeries,
    cells: usize,
    m: usize,
) -> Result<DiscreteCurve> {
    let arc = GraphArclength::new(series, cells)?;
    let total = arc.total();
    let mut pts = Vec::with_capacity(m);
    for k in 0..m {
        let t = arc.theta_of(total * k as f64 / m as f64)?;
        let a = series.eval(t)[0];
        let c = (1.0 - a * a).sqrt();
        pts.push([c * t.cos(), c * t.sin(), a]);
    }
    DiscreteCurve::new(pts, ParameterKind::Arclength, total)
}

/// Random smooth unit-speed curve of length `2 pi`: a graph over the
/// cylindrical angle with a few random low modes, shifted vertically so the
/// length is exactly `2 pi`, then resampled by arclength at `n` points.
pub fn random_closed_curve<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Result<DiscreteCurve> {
    const MODES: usize = 4;
    let mut cos = vec![0.0; MODES];
    let mut sin = vec![0.0; MODES];
    for k in 1..=MODES {
        let amp = 0.05 / (k * k) as f64;
        cos[k - 1] = rng.random_range(-amp..amp);
        sin[k - 1] = rng.random_range(-amp..amp);
    }
    // a definite second mode keeps the length above 2 pi at zero offset
    let r2 = rng.random_range(0.004..0.0125);
    let phase: f64 = rng.random_range(0.0..2.0 * PI);
    cos[1] = r2 * phase.cos();
    sin[1] = r2 * phase.sin();

    let cells = 256;
    let excess = |a0: f64| -> Result<f64> {
        let s = PeriodicSeries::from_coefficients(a0, cos.clone(), sin.clone())?;
        Ok(graph_length(&s, cells)? - 2.0 * PI)
    };
    let (mut lo, mut hi) = (0.0, 0.5);
    if excess(lo)? <= 0.0 || excess(hi)? >= 0.0 {
        return Err(Error::Bracketing {
            what: "length offset".into(),
            lo,
            hi,
        });
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if excess(mid)? > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let series = PeriodicSeries::from_coefficients(0.5 * (lo + hi), cos, sin)?;
    arclength_curve_from_series(&series, cells, n)
}
