//! L² stability check of the second-order implicit upwind stencil.
//!
//! Collecting `Σ_j (g_{j+½} - g_{j-½}) ψ_j` over a 1-D grid gives `ψᵀ B ψ` with
//! `B` lower triangular (3/2 on the diagonal, -2 and 1/2 below). The scheme
//! dissipates the discrete energy iff the symmetric part `S = (B + Bᵀ)/2` is
//! positive definite.

use std::fmt::Write as _;

use crate::error::{Error, Result};

/// Symmetric pentadiagonal Toeplitz matrix `S`.
#[derive(Debug, Clone, PartialEq)]
pub struct EntropyMatrix {
    n: usize,
}

pub const DIAGONAL: f64 = 1.5;
pub const FIRST_OFF_DIAGONAL: f64 = -1.0;
pub const SECOND_OFF_DIAGONAL: f64 = 0.25;

impl EntropyMatrix {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        match i.abs_diff(j) {
            0 => DIAGONAL,
            1 => FIRST_OFF_DIAGONAL,
            2 => SECOND_OFF_DIAGONAL,
            _ => 0.0,
        }
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        (0..self.n).map(|i| (0..self.n).map(|j| self.get(i, j)).collect()).collect()
    }

    pub fn quadratic_form(&self, x: &[f64]) -> f64 {
        let mut s = 0.0;
        for i in 0..self.n {
            let lo = i.saturating_sub(2);
            let hi = (i + 2).min(self.n - 1);
            for j in lo..=hi {
                s += x[i] * self.get(i, j) * x[j];
            }
        }
        s
    }
}

pub fn build_entropy_matrix(n: usize) -> Result<EntropyMatrix> {
    if n < 3 {
        return Err(Error::InvalidArgument(format!("entropy matrix needs n >= 3, got {n}")));
    }
    Ok(EntropyMatrix { n })
}

/// The lower-triangular flux-difference matrix `B`.
pub fn stencil_matrix(n: usize) -> Vec<Vec<f64>> {
    let mut b = vec![vec![0.0; n]; n];
    for (j, row) in b.iter_mut().enumerate() {
        row[j] = 1.5;
        if j >= 1 {
            row[j - 1] = -2.0;
        }
        if j >= 2 {
            row[j - 2] = 0.5;
        }
    }
    b
}

/// Cholesky factorization of the band; `false` on a nonpositive pivot.
pub fn cholesky_succeeds(s: &EntropyMatrix) -> bool {
    let n = s.n;
    // l[i][k] for k in i-2..=i, stored as l[i][k - i + 2]
    let mut l = vec![[0.0f64; 3]; n];
    for i in 0..n {
        for k in i.saturating_sub(2)..=i {
            let mut sum = s.get(i, k);
            for m in i.saturating_sub(2).max(k.saturating_sub(2))..k {
                sum -= l[i][m + 2 - i] * l[k][m + 2 - k];
            }
            if k == i {
                if !(sum > 0.0) {
                    return false;
                }
                l[i][2] = sum.sqrt();
            } else {
                l[i][k + 2 - i] = sum / l[k][2];
            }
        }
    }
    true
}

/// Householder reduction of a dense symmetric matrix to tridiagonal form.
/// Returns `(diagonal, sub-diagonal)` with `e[0] = 0`.
fn tridiagonalize(mut a: Vec<Vec<f64>>) -> (Vec<f64>, Vec<f64>) {
    let n = a.len();
    let mut d = vec![0.0; n];
    let mut e = vec![0.0; n];
    for i in (1..n).rev() {
        let l = i - 1;
        let mut h = 0.0;
        if l > 0 {
            let scale: f64 = a[i][..=l].iter().map(|v| v.abs()).sum();
            if scale == 0.0 {
                e[i] = a[i][l];
            } else {
                for k in 0..=l {
                    a[i][k] /= scale;
                    h += a[i][k] * a[i][k];
                }
                let f = a[i][l];
                let g = if f >= 0.0 { -h.sqrt() } else { h.sqrt() };
                e[i] = scale * g;
                h -= f * g;
                a[i][l] = f - g;
                let mut f = 0.0;
                for j in 0..=l {
                    let mut g = 0.0;
                    for k in 0..=j {
                        g += a[j][k] * a[i][k];
                    }
                    for k in j + 1..=l {
                        g += a[k][j] * a[i][k];
                    }
                    e[j] = g / h;
                    f += e[j] * a[i][j];
                }
                let hh = f / (h + h);
                for j in 0..=l {
                    let f = a[i][j];
                    let g = e[j] - hh * f;
                    e[j] = g;
                    for k in 0..=j {
                        a[j][k] -= f * e[k] + g * a[i][k];
                    }
                }
            }
        } else {
            e[i] = a[i][l];
        }
        d[i] = h;
    }
    for (i, di) in d.iter_mut().enumerate() {
        *di = a[i][i];
    }
    (d, e)
}

/// Eigenvalues of a symmetric tridiagonal matrix by QL with implicit shifts.
fn tridiagonal_eigenvalues(mut d: Vec<f64>, mut e: Vec<f64>) -> Result<Vec<f64>> {
    let n = d.len();
    for i in 1..n {
        e[i - 1] = e[i];
    }
    if n > 0 {
        e[n - 1] = 0.0;
    }
    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            if iter > 60 {
                return Err(Error::Convergence {
                    solver: "tridiagonal QL",
                    iterations: iter,
                    residual: e[l].abs(),
                });
            }
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let (mut s, mut c, mut p) = (1.0, 1.0, 0.0);
            let mut underflow = false;
            for i in (l..m).rev() {
                let f = s * e[i];
                let b = c * e[i];
                let r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    underflow = true;
                    break;
                }
                s = f / r;
                c = g / r;
                let g2 = d[i + 1] - p;
                let r2 = (d[i] - g2) * s + 2.0 * c * b;
                p = s * r2;
                d[i + 1] = g2 + p;
                g = c * r2 - b;
            }
            if underflow {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
    d.sort_by(f64::total_cmp);
    Ok(d)
}

/// Ascending eigenvalues of a dense symmetric matrix.
pub fn symmetric_eigenvalues(a: Vec<Vec<f64>>) -> Result<Vec<f64>> {
    if a.iter().any(|row| row.len() != a.len()) {
        return Err(Error::InvalidArgument("matrix must be square".into()));
    }
    let (d, e) = tridiagonalize(a);
    tridiagonal_eigenvalues(d, e)
}

#[derive(Debug, Clone, PartialEq)]
pub struct StabilityReport {
    pub n: usize,
    /// Ascending.
    pub eigenvalues: Vec<f64>,
    pub smallest: f64,
    pub largest: f64,
    pub cholesky_ok: bool,
    /// Factorization succeeded and the smallest eigenvalue exceeds `1e-12`.
    pub positive_definite: bool,
}

impl StabilityReport {
    /// `index,eigenvalue` rows, ascending.
    pub fn spectrum_csv(&self, comments: &[String]) -> String {
        let mut out = String::new();
        for c in comments {
            writeln!(out, "# {c}").unwrap();
        }
        out.push_str("index,eigenvalue\n");
        for (k, v) in self.eigenvalues.iter().enumerate() {
            writeln!(out, "{k},{v:.17e}").unwrap();
        }
        out
    }
}

pub fn verify_positive_definite(s: &EntropyMatrix) -> Result<StabilityReport> {
    let eigenvalues = symmetric_eigenvalues(s.to_dense())?;
    let smallest = eigenvalues[0];
    let largest = *eigenvalues.last().unwrap();
    let cholesky_ok = cholesky_succeeds(s);
    Ok(StabilityReport {
        n: s.n,
        positive_definite: cholesky_ok && smallest > 1e-12,
        eigenvalues,
        smallest,
        largest,
        cholesky_ok,
    })
}
