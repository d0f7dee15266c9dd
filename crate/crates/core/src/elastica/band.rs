//! Newton systems on the free nodes: a periodic band of half-width 4 restricted
//! to a subset of nodes, plus a rank-one penalty term.
//!
//! The system `(H_FF + sigma I + rho g g^T) x = r` is solved through the
//! bordered matrix
//!
//! ```text
//! [ A    B ]     A: band block on all but the last 4 free nodes
//! [ B^T  C ]     C: last 4 free nodes and the auxiliary unknown y = rho g.x
//! ```
//!
//! with corner entry `-1/rho`. The border absorbs both the periodic wrap and
//! the rank-one term. The bordered matrix has exactly one negative eigenvalue
//! iff the penalized free Hessian is positive definite, which is read off the
//! pivots of an unpivoted LDL^T factorization.

use super::graph::Band;

const BORDER: usize = 4;
const PIVOT_TOL: f64 = 1e-13;

struct BandLdl {
    d: Vec<f64>,
    l: Vec<[f64; 5]>,
}

impl BandLdl {
    /// `l[i][k] = L(i, i - k)`. Returns the factor and the number of negative
    /// pivots, or `None` on a pivot that vanishes relative to its diagonal entry.
    fn factor(a: &[[f64; 5]]) -> Option<(Self, usize)> {
        let m = a.len();
        let mut d = vec![0.0; m];
        let mut l = vec![[0.0; 5]; m];
        let mut neg = 0;
        for j in 0..m {
            let mut dj = a[j][0];
            for k in 1..=4.min(j) {
                dj -= l[j][k] * l[j][k] * d[j - k];
            }
            if !(dj.abs() > PIVOT_TOL * a[j][0].abs()) {
                return None;
            }
            if dj < 0.0 {
                neg += 1;
            }
            d[j] = dj;
            for i in j + 1..(j + 5).min(m) {
                let mut v = a[j][i - j];
                // sum over columns c < j with both L(i, c) and L(j, c) inside the band
                for c in i.saturating_sub(4)..j {
                    v -= l[i][i - c] * l[j][j - c] * d[c];
                }
                l[i][i - j] = v / dj;
            }
        }
        Some((Self { d, l }, neg))
    }

    fn solve(&self, b: &mut [f64]) {
        let m = b.len();
        for i in 0..m {
            for k in 1..=4.min(i) {
                b[i] -= self.l[i][k] * b[i - k];
            }
        }
        for i in 0..m {
            b[i] /= self.d[i];
        }
        for i in (0..m).rev() {
            for k in 1..=4.min(m - 1 - i) {
                b[i] -= self.l[i + k][k] * b[i + k];
            }
        }
    }
}

/// Dense LDL^T of a small symmetric matrix, in place; returns the number of
/// negative pivots.
fn dense_ldl<const N: usize>(s: &mut [[f64; N]; N]) -> Option<usize> {
    let mut neg = 0;
    for j in 0..N {
        let orig = s[j][j].abs();
        for k in 0..j {
            let ljk = s[j][k];
            s[j][j] -= ljk * ljk * s[k][k];
        }
        let dj = s[j][j];
        if !(dj.abs() > PIVOT_TOL * orig) {
            return None;
        }
        if dj < 0.0 {
            neg += 1;
        }
        for i in j + 1..N {
            let mut v = s[i][j];
            for k in 0..j {
                v -= s[i][k] * s[j][k] * s[k][k];
            }
            s[i][j] = v / dj;
        }
    }
    Some(neg)
}

fn dense_solve<const N: usize>(f: &[[f64; N]; N], b: &mut [f64; N]) {
    for i in 0..N {
        for k in 0..i {
            b[i] -= f[i][k] * b[k];
        }
    }
    for i in 0..N {
        b[i] /= f[i][i];
    }
    for i in (0..N).rev() {
        for k in i + 1..N {
            b[i] -= f[k][i] * b[k];
        }
    }
}

/// Solves `(H_FF + sigma I + rho g_F g_F^T) x = r` over the free nodes `free`
/// (increasing original indices). `r` and the result are indexed by position
/// in `free`. Returns `None` unless the matrix is positive definite.
pub(crate) fn solve_free(
    hess: &Band,
    free: &[usize],
    g: &[f64],
    rho: f64,
    sigma: f64,
    r: &[f64],
) -> Option<Vec<f64>> {
    let n = hess.len();
    let m = free.len();
    if m < 2 * BORDER + 1 || rho <= 0.0 {
        return None;
    }
    let nb = m - BORDER;
    let mut pos = vec![usize::MAX; n];
    for (i, &p) in free.iter().enumerate() {
        pos[p] = i;
    }
    let mut a = vec![[0.0; 5]; nb];
    let mut b = vec![[0.0; 5]; nb];
    let mut c = [[0.0; 5]; 5];
    let mut put = |i: usize, j: usize, v: f64| {
        let (lo, hi) = if i <= j { (i, j) } else { (j, i) };
        if hi < nb {
            debug_assert!(hi - lo <= 4);
            a[lo][hi - lo] += v;
        } else if lo < nb {
            b[lo][hi - nb] += v;
        } else {
            c[lo - nb][hi - nb] += v;
            if lo != hi {
                c[hi - nb][lo - nb] += v;
            }
        }
    };
    for (i, &p) in free.iter().enumerate() {
        put(i, i, hess[p][0] + sigma);
        for k in 1..5 {
            let j = pos[(p + k) % n];
            if j != usize::MAX {
                put(i, j, hess[p][k]);
            }
        }
    }
    for (i, &p) in free.iter().enumerate() {
        if i < nb {
            b[i][BORDER] = g[p];
        } else {
            c[i - nb][BORDER] = g[p];
            c[BORDER][i - nb] = g[p];
        }
    }
    c[BORDER][BORDER] = -1.0 / rho;

    let (fac, neg_a) = BandLdl::factor(&a)?;
    let mut z: Vec<f64> = r[..nb].to_vec();
    fac.solve(&mut z);
    let mut zb: Vec<Vec<f64>> = Vec::with_capacity(5);
    for col in 0..5 {
        let mut v: Vec<f64> = b.iter().map(|row| row[col]).collect();
        fac.solve(&mut v);
        zb.push(v);
    }
    let mut s = c;
    let mut rhs = [0.0; 5];
    for i in 0..5 {
        for j in 0..5 {
            s[i][j] -= (0..nb).map(|k| b[k][i] * zb[j][k]).sum::<f64>();
        }
        rhs[i] = if i < BORDER { r[nb + i] } else { 0.0 };
        rhs[i] -= (0..nb).map(|k| b[k][i] * z[k]).sum::<f64>();
    }
    let neg_s = dense_ldl(&mut s)?;
    if neg_a + neg_s != 1 {
        return None;
    }
    dense_solve(&s, &mut rhs);
    let mut x = z;
    for (k, xk) in x.iter_mut().enumerate() {
        *xk -= (0..5).map(|j| zb[j][k] * rhs[j]).sum::<f64>();
    }
    x.extend_from_slice(&rhs[..BORDER]);
    Some(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn dense_matrix(hess: &Band, free: &[usize], g: &[f64], rho: f64, sigma: f64) -> Vec<Vec<f64>> {
        let n = hess.len();
        let mut full = vec![vec![0.0; n]; n];
        for i in 0..n {
            full[i][i] += hess[i][0];
            for k in 1..5 {
                let j = (i + k) % n;
                full[i][j] += hess[i][k];
                full[j][i] += hess[i][k];
            }
        }
        free.iter()
            .map(|&p| {
                free.iter()
                    .map(|&q| full[p][q] + rho * g[p] * g[q] + if p == q { sigma } else { 0.0 })
                    .collect()
            })
            .collect()
    }

    fn random_band(rng: &mut ChaCha8Rng, n: usize, diag: f64) -> Band {
        (0..n)
            .map(|_| {
                let mut row = [0.0; 5];
                row[0] = diag + rng.random_range(0.0..1.0);
                for v in row.iter_mut().skip(1) {
                    *v = rng.random_range(-0.5..0.5);
                }
                row
            })
            .collect()
    }

    #[test]
    fn solves_against_dense_product() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let n = 40;
        let hess = random_band(&mut rng, n, 6.0);
        let g: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        for free in [
            (0..n).collect::<Vec<_>>(),
            (0..n).filter(|i| !(10..17).contains(i)).collect(),
            (0..n).filter(|i| *i > 1 && *i < n - 3).collect(),
            (0..n).filter(|i| i % 7 != 3).collect(),
        ] {
            let r: Vec<f64> = (0..free.len()).map(|_| rng.random_range(-1.0..1.0)).collect();
            let x = solve_free(&hess, &free, &g, 3.0, 0.25, &r).unwrap();
            let m = dense_matrix(&hess, &free, &g, 3.0, 0.25);
            for i in 0..free.len() {
                let y: f64 = (0..free.len()).map(|j| m[i][j] * x[j]).sum();
                assert!((y - r[i]).abs() < 1e-10, "{y} {}", r[i]);
            }
        }
    }

    #[test]
    fn indefinite_matrix_is_reported() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let n = 30;
        let mut hess = random_band(&mut rng, n, 6.0);
        hess[12][0] = -20.0;
        let g = vec![0.0; n];
        let free: Vec<usize> = (0..n).collect();
        let r = vec![1.0; n];
        assert!(solve_free(&hess, &free, &g, 1.0, 0.0, &r).is_none());
        assert!(solve_free(&hess, &free, &g, 1.0, 40.0, &r).is_some());
    }

    #[test]
    fn penalty_restores_definiteness_along_constraint_direction() {
        // H = I - 2 u u^T is indefinite along u; adding rho u u^T with rho > 2 fixes it
        let n = 24;
        let u: Vec<f64> = (0..n).map(|i| if i == 5 { 1.0 } else { 0.0 }).collect();
        let mut hess = vec![[0.0; 5]; n];
        for (i, row) in hess.iter_mut().enumerate() {
            row[0] = 1.0 - 2.0 * u[i] * u[i];
        }
        let free: Vec<usize> = (0..n).collect();
        let r = vec![1.0; n];
        assert!(solve_free(&hess, &free, &u, 1.0, 0.0, &r).is_none());
        let x = solve_free(&hess, &free, &u, 3.0, 0.0, &r).unwrap();
        assert!((x[5] - 0.5).abs() < 1e-12);
        assert!((x[0] - 1.0).abs() < 1e-12);
    }
}
