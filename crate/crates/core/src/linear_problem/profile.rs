use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::io::Write;

use super::{
    bisect, branch_lambda, config_energy, critical_s, equal_fold_defect, raw_bending, FoldConfig,
};
use crate::error::{Error, Result};
use crate::sphere_curve::fmt_f64;
use crate::stencil::d1_periodic;

/// The one-fold minimizer of the linear problem: a single lift interval
/// `(-s_hat, s_hat)` on which `h > 1`, with `h = kappa = 1` elsewhere.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearSolution {
    pub s_hat: f64,
    #[serde(rename = "Lambda")]
    pub lambda: f64,
    pub energy: f64,
    /// `int kappa^2` over the circle, twice `energy`.
    pub bending: f64,
}

/// Uniform samples of the assembled profile on `[-pi, pi)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileSamples {
    pub s_hat: f64,
    #[serde(rename = "Lambda")]
    pub lambda: f64,
    pub energy: f64,
    pub n: usize,
    #[serde(skip)]
    pub s: Vec<f64>,
    pub h: Vec<f64>,
    pub kappa: Vec<f64>,
}

impl LinearSolution {
    /// Finds the unique half-length in `(0.5, s_c)` where the length
    /// constraint meets the first branch.
    pub fn solve() -> Result<Self> {
        let sc = critical_s();
        let s_hat = bisect(|s| equal_fold_defect(1, s), 0.5, sc, "one-fold constraint")?;
        let lambda = branch_lambda(1, s_hat)?;
        let config = FoldConfig::new(vec![s_hat], vec![1], lambda)?;
        let energy = config_energy(&config)?;
        Ok(Self {
            s_hat,
            lambda,
            energy,
            bending: raw_bending(lambda, &[s_hat]),
        })
    }

    pub fn fold_length(&self) -> f64 {
        2.0 * self.s_hat
    }

    pub fn config(&self) -> FoldConfig {
        FoldConfig {
            half_lengths: vec![self.s_hat],
            branch: vec![1],
            lambda: self.lambda,
            energy: self.energy,
        }
    }

    fn denom(&self) -> f64 {
        let (s0, l) = (self.s_hat, self.lambda);
        s0.sin() * (l * s0).cos() - l * (l * s0).sin() * s0.cos()
    }

    fn wrap(s: f64) -> f64 {
        (s + PI).rem_euclid(2.0 * PI) - PI
    }

    /// Rescaled curvature, `cos(Lambda s)/cos(Lambda s_hat)` on the lift
    /// interval and 1 on the contact set. Periodic in `s`.
    pub fn kappa(&self, s: f64) -> f64 {
        let s = Self::wrap(s);
        if s.abs() >= self.s_hat {
            1.0
        } else {
            (self.lambda * s).cos() / (self.lambda * self.s_hat).cos()
        }
    }

    /// Rescaled height, periodic in `s`.
    pub fn h(&self, s: f64) -> f64 {
        let s = Self::wrap(s);
        if s.abs() >= self.s_hat {
            return 1.0;
        }
        let (s0, l) = (self.s_hat, self.lambda);
        (s0.sin() * (l * s).cos() - l * (l * s0).sin() * s.cos()) / self.denom()
    }

    pub fn h_prime(&self, s: f64) -> f64 {
        let s = Self::wrap(s);
        if s.abs() >= self.s_hat {
            return 0.0;
        }
        let (s0, l) = (self.s_hat, self.lambda);
        (-l * s0.sin() * (l * s).sin() + l * (l * s0).sin() * s.sin()) / self.denom()
    }

    /// `kappa(0) = 1 / cos(Lambda s_hat)`; the curvature is continuous with the
    /// contact value 1 at `+-s_hat`.
    pub fn kappa_at_center(&self) -> f64 {
        1.0 / (self.lambda * self.s_hat).cos()
    }

    pub fn sample(&self, n: usize) -> Result<ProfileSamples> {
        if n < 16 {
            return Err(Error::Resolution(format!("{n} samples")));
        }
        let s: Vec<f64> = (0..n)
            .map(|k| -PI + 2.0 * PI * k as f64 / n as f64)
            .collect();
        Ok(ProfileSamples {
            s_hat: self.s_hat,
            lambda: self.lambda,
            energy: self.energy,
            n,
            h: s.iter().map(|&x| self.h(x)).collect(),
            kappa: s.iter().map(|&x| self.kappa(x)).collect(),
            s,
        })
    }
}

impl ProfileSamples {
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["s", "h", "kappa"])?;
        for i in 0..self.n {
            w.write_record([
                fmt_f64(self.s[i]),
                fmt_f64(self.h[i]),
                fmt_f64(self.kappa[i]),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn write_json<W: Write>(&self, out: W) -> Result<()> {
        serde_json::to_writer_pretty(out, self)?;
        Ok(())
    }
}

/// `int (h'^2 - h^2) ds` over the circle for uniform periodic samples of `h`,
/// with fourth-order differences.
pub fn linear_constraint_check(h: &[f64]) -> f64 {
    let n = h.len();
    let ds = 2.0 * PI / n as f64;
    let hp = d1_periodic(h, ds);
    ds * h.iter().zip(&hp).map(|(v, d)| d * d - v * v).sum::<f64>()
}

#[cfg(test)]
mod tests {
    use super::*;

    const S_HAT: f64 = 1.212_874_080_115_992_3;
    const LAMBDA_HAT: f64 = 3.804_509_488_253_402_7;
    const ENERGY: f64 = 66.614_782_891_972_34;

    #[test]
    fn solution_matches_reference_and_intervals() {
        let sol = LinearSolution::solve().unwrap();
        assert!((sol.s_hat - S_HAT).abs() < 1e-14);
        assert!((sol.lambda - LAMBDA_HAT).abs() < 1e-12);
        assert!((sol.energy - ENERGY).abs() < 1e-9);
        assert!(sol.s_hat > 1.21 && sol.s_hat < 1.215);
        assert!(sol.lambda > 3.79 && sol.lambda < 3.82);
        assert!(sol.fold_length() > 2.42 && sol.fold_length() < 2.43);
    }

    #[test]
    fn boundary_conditions() {
        let sol = LinearSolution::solve().unwrap();
        let eps = 1e-12;
        for side in [-1.0, 1.0] {
            let s = side * (sol.s_hat - eps);
            assert!((sol.h(s) - 1.0).abs() < 1e-10);
            assert!(sol.h_prime(s).abs() < 1e-9);
            assert!((sol.kappa(s) - 1.0).abs() < 1e-9);
        }
        assert_eq!(sol.kappa(0.0), sol.kappa_at_center());
        assert!((sol.kappa_at_center() + 10.2206).abs() < 1e-4);
        assert!((sol.h(0.0) - 3.8248).abs() < 1e-4);
    }

    #[test]
    fn profile_odes_hold_on_lift_interval() {
        // 4096 nodes across the closed lift interval, interior stencils only
        let sol = LinearSolution::solve().unwrap();
        let n = 4096;
        let ds = 2.0 * sol.s_hat / (n - 1) as f64;
        let s: Vec<f64> = (0..n).map(|k| -sol.s_hat + k as f64 * ds).collect();
        let h: Vec<f64> = s.iter().map(|&x| sol.h(x)).collect();
        let k: Vec<f64> = s.iter().map(|&x| sol.kappa(x)).collect();
        let d2 = |f: &[f64], i: usize| {
            (-f[i - 2] + 16.0 * f[i - 1] - 30.0 * f[i] + 16.0 * f[i + 1] - f[i + 2])
                / (12.0 * ds * ds)
        };
        let l2 = sol.lambda * sol.lambda;
        // residuals relative to the size of the largest term, Lambda^2 max|kappa|
        let scale = l2 * k.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let mut worst: f64 = 0.0;
        for i in 2..n - 2 {
            worst = worst.max((d2(&h, i) + h[i] - k[i]).abs());
            worst = worst.max((d2(&k, i) + l2 * k[i]).abs());
        }
        assert!(worst / scale <= 1e-8, "{worst}");
    }

    #[test]
    fn assembled_profile_is_above_obstacle_and_satisfies_constraint() {
        let sol = LinearSolution::solve().unwrap();
        let p = sol.sample(8192).unwrap();
        for (s, h) in p.s.iter().zip(&p.h) {
            if s.abs() < sol.s_hat {
                assert!(*h > 1.0);
            } else {
                assert_eq!(*h, 1.0);
            }
        }
        let c = linear_constraint_check(&p.h);
        assert!(c.abs() <= 1e-6, "{c}");
    }

    #[test]
    fn constraint_check_trivial_cases() {
        let n = 1024;
        assert!((linear_constraint_check(&vec![1.0; n]) + 2.0 * PI).abs() < 1e-12);
        let delta = 1e-3;
        let h: Vec<f64> = (0..n)
            .map(|k| 1.0 + delta * (2.0 * PI * k as f64 / n as f64).cos())
            .collect();
        let c = linear_constraint_check(&h);
        // (delta^2 pi) - (2 pi + delta^2 pi), the linear term integrates to zero
        assert!((c + 2.0 * PI).abs() < 1e-10, "{c}");
    }

    #[test]
    fn csv_and_json_exports() {
        let sol = LinearSolution::solve().unwrap();
        let p = sol.sample(32).unwrap();
        let mut buf = Vec::new();
        p.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("s,h,kappa\n"));
        assert_eq!(text.lines().count(), 33);
        let mut buf = Vec::new();
        p.write_json(&mut buf).unwrap();
        let v: serde_json::Value = serde_json::from_slice(&buf).unwrap();
        assert_eq!(v["n"], 32);
        assert_eq!(v["h"].as_array().unwrap().len(), 32);
        assert!(v["Lambda"].as_f64().unwrap() > 3.79);
    }
}
