#![allow(dead_code)]

use std::f64::consts::PI;

use dcone_core::elastica::{discrete_energy, evaluate, GraphCurve};
use dcone_core::sphere_curve::first_variation;
use rand::Rng;

/// Smooth random heights with a few low modes, raised onto the obstacle where
/// they dip below it.
pub fn random_feasible<R: Rng>(rng: &mut R, n: usize, eps: f64) -> Vec<f64> {
    let coef: Vec<(f64, f64)> = (1..=5)
        .map(|k| {
            let a = 0.6 / k as f64;
            (rng.random_range(-a..a), rng.random_range(-a..a))
        })
        .collect();
    (0..n)
        .map(|i| {
            let t = 2.0 * PI * i as f64 / n as f64;
            let mut v = 1.2;
            for (k, (a, b)) in coef.iter().enumerate() {
                let kf = (k + 1) as f64;
                v += a * (kf * t).cos() + b * (kf * t).sin();
            }
            (eps * v).max(eps)
        })
        .collect()
}

pub fn random_direction<R: Rng>(rng: &mut R, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()
}

/// Relative error of the directional derivative `grad . v` of the discrete
/// energy against a central difference, scaled by `sum |g_i v_i|`.
pub fn gradient_fd_error(alpha: &[f64], v: &[f64]) -> f64 {
    let step = 1e-6;
    let at = |t: f64| -> f64 {
        let a: Vec<f64> = alpha.iter().zip(v).map(|(a, d)| a + t * d).collect();
        discrete_energy(&a).0
    };
    let fd = (at(step) - at(-step)) / (2.0 * step);
    let g = evaluate(alpha, false).grad_energy;
    let exact: f64 = g.iter().zip(v).map(|(g, d)| g * d).sum();
    let scale: f64 = g.iter().zip(v).map(|(g, d)| (g * d).abs()).sum();
    (fd - exact).abs() / scale
}

/// Relative gap between the curve first variation along the lift
/// `psi = d gamma / d alpha . v` and the graph gradient of `F - 2 lambda L`
/// along `v`.
pub fn first_variation_gap(alpha: &[f64], eps: f64, v: &[f64], lambda: f64) -> f64 {
    let n = alpha.len();
    let curve = GraphCurve::new(alpha.to_vec(), eps).unwrap().to_curve().unwrap();
    let psi: Vec<[f64; 3]> = (0..n)
        .map(|i| {
            let t = 2.0 * PI * i as f64 / n as f64;
            let a = alpha[i];
            let r = a / (1.0 - a * a).sqrt();
            [-r * t.cos() * v[i], -r * t.sin() * v[i], v[i]]
        })
        .collect();
    let fv = first_variation(&curve, &psi, lambda).unwrap();
    let ev = evaluate(alpha, false);
    let terms: Vec<f64> = (0..n)
        .map(|i| (ev.grad_energy[i] - 2.0 * lambda * ev.grad_length[i]) * v[i])
        .collect();
    let exact: f64 = terms.iter().sum();
    let scale: f64 = terms.iter().map(|x| x.abs()).sum();
    (fv - exact).abs() / scale
}

/// Random trigonometric polynomial of degree 6.
pub fn smooth_direction<R: Rng>(rng: &mut R, n: usize) -> Vec<f64> {
    let coef: Vec<(f64, f64)> = (0..=6)
        .map(|_| (rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
        .collect();
    (0..n)
        .map(|i| {
            let t = 2.0 * PI * i as f64 / n as f64;
            coef.iter()
                .enumerate()
                .map(|(k, (a, b))| a * (k as f64 * t).cos() + b * (k as f64 * t).sin())
                .sum()
        })
        .collect()
}

/// Smooth random heights strictly above the obstacle, between about
/// `1.5 eps` and `3.5 eps`.
pub fn random_smooth_lifted<R: Rng>(rng: &mut R, n: usize, eps: f64) -> Vec<f64> {
    let coef: Vec<(f64, f64)> = (1..=5)
        .map(|k| {
            let a = 0.3 / k as f64;
            (rng.random_range(-a..a), rng.random_range(-a..a))
        })
        .collect();
    (0..n)
        .map(|i| {
            let t = 2.0 * PI * i as f64 / n as f64;
            let mut v = 2.5;
            for (k, (a, b)) in coef.iter().enumerate() {
                let kf = (k + 1) as f64;
                v += a * (kf * t).cos() + b * (kf * t).sin();
            }
            eps * v
        })
        .collect()
}
