//! Radial profile of the smoothed cone.

/// Even profile with `f(s) = s^2` on `[0, 1/2]`, `f(s) = s` on `[1, inf)` and
/// the quintic matching value, slope and curvature at both ends in between.
#[derive(Debug, Clone, Copy, Default)]
pub struct ProfileF;

/// Coefficients of the blend in powers of `t = s - 1/2`.
const BLEND: [f64; 6] = [0.25, 1.0, 1.0, 14.0, -48.0, 40.0];

impl ProfileF {
    /// `[f, f', f'']` at `s`.
    pub fn eval(&self, s: f64) -> [f64; 3] {
        let a = s.abs();
        let sign = if s < 0.0 { -1.0 } else { 1.0 };
        let [v, d1, d2] = if a <= 0.5 {
            [a * a, 2.0 * a, 2.0]
        } else if a >= 1.0 {
            [a, 1.0, 0.0]
        } else {
            let t = a - 0.5;
            let mut out = [0.0; 3];
            for c in BLEND.iter().rev() {
                out[2] = out[2] * t + out[1] * 2.0;
                out[1] = out[1] * t + out[0];
                out[0] = out[0] * t + c;
            }
            out
        };
        [v, sign * d1, d2]
    }

    pub fn value(&self, s: f64) -> f64 {
        self.eval(s)[0]
    }

    /// `sup (|f''| + |(f/s)'| + |f'/s| + |f/s^2|)` over `samples` points of
    /// `(0, s_max]`.
    pub fn derivative_bound(&self, s_max: f64, samples: usize) -> f64 {
        (1..=samples)
            .map(|i| {
                let s = s_max * i as f64 / samples as f64;
                let [f, f1, f2] = self.eval(s);
                f2.abs() + ((f1 * s - f) / (s * s)).abs() + (f1 / s).abs() + (f / (s * s)).abs()
            })
            .fold(0.0, f64::max)
    }
}
