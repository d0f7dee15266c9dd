//! Fourth-order central differences and quadrature on uniform periodic grids.

/// Weights of the first-derivative stencil at offsets -2..=2 (divide by 12 h).
pub const D1: [f64; 5] = [1.0, -8.0, 0.0, 8.0, -1.0];
/// Weights of the second-derivative stencil at offsets -2..=2 (divide by 12 h^2).
pub const D2: [f64; 5] = [-1.0, 16.0, -30.0, 16.0, -1.0];

#[inline]
pub(crate) fn wrap(i: isize, n: usize) -> usize {
    i.rem_euclid(n as isize) as usize
}

pub fn d1_periodic(f: &[f64], h: f64) -> Vec<f64> {
    apply(f, &D1, 1.0 / (12.0 * h))
}

pub fn d2_periodic(f: &[f64], h: f64) -> Vec<f64> {
    apply(f, &D2, 1.0 / (12.0 * h * h))
}

fn apply(f: &[f64], w: &[f64; 5], scale: f64) -> Vec<f64> {
    let n = f.len();
    (0..n)
        .map(|i| {
            let mut acc = 0.0;
            for (k, wk) in w.iter().enumerate() {
                if *wk != 0.0 {
                    acc += wk * f[wrap(i as isize + k as isize - 2, n)];
                }
            }
            acc * scale
        })
        .collect()
}

pub fn d1_periodic_vec(f: &[[f64; 3]], h: f64) -> Vec<[f64; 3]> {
    apply_vec(f, &D1, 1.0 / (12.0 * h))
}

pub fn d2_periodic_vec(f: &[[f64; 3]], h: f64) -> Vec<[f64; 3]> {
    apply_vec(f, &D2, 1.0 / (12.0 * h * h))
}

fn apply_vec(f: &[[f64; 3]], w: &[f64; 5], scale: f64) -> Vec<[f64; 3]> {
    let n = f.len();
    (0..n)
        .map(|i| {
            let mut acc = [0.0; 3];
            for (k, wk) in w.iter().enumerate() {
                if *wk != 0.0 {
                    let p = f[wrap(i as isize + k as isize - 2, n)];
                    for c in 0..3 {
                        acc[c] += wk * p[c];
                    }
                }
            }
            [acc[0] * scale, acc[1] * scale, acc[2] * scale]
        })
        .collect()
}

/// Periodic trapezoid rule: `h * sum(f)`.
pub fn trapezoid_periodic(f: &[f64], h: f64) -> f64 {
    h * f.iter().sum::<f64>()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn stencils_converge_at_fourth_order() {
        let err = |n: usize| {
            let h = 2.0 * PI / n as f64;
            let f: Vec<f64> = (0..n).map(|i| (3.0 * i as f64 * h).sin()).collect();
            let d1 = d1_periodic(&f, h);
            let d2 = d2_periodic(&f, h);
            let mut e: f64 = 0.0;
            for i in 0..n {
                let t = i as f64 * h;
                e = e.max((d1[i] - 3.0 * (3.0 * t).cos()).abs());
                e = e.max((d2[i] + 9.0 * (3.0 * t).sin()).abs());
            }
            e
        };
        let order = (err(64) / err(128)).log2();
        assert!(order > 3.8, "order {order}");
    }

    #[test]
    fn trapezoid_is_exact_for_trig_polynomials() {
        let n = 32;
        let h = 2.0 * PI / n as f64;
        let f: Vec<f64> = (0..n).map(|i| (i as f64 * h).cos().powi(2)).collect();
        assert!((trapezoid_periodic(&f, h) - PI).abs() < 1e-14);
    }
}
