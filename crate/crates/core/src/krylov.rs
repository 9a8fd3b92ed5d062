//! Matrix-free GMRES (full, no restarts).

use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct GmresOutcome {
    pub x: Vec<f64>,
    pub iterations: usize,
    /// Relative residual `||b - A x|| / ||b||` as estimated by the Arnoldi process.
    pub relative_residual: f64,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Solves `A x = b` from the initial guess `x0` using only applications of `A`.
///
/// Orthogonalization is modified Gram-Schmidt and the least-squares problem is
/// kept triangular with Givens rotations. Fails once `max_krylov` basis
/// vectors are exhausted.
pub fn gmres<F>(mut apply: F, b: &[f64], x0: &[f64], tol: f64, max_krylov: usize) -> Result<GmresOutcome>
where
    F: FnMut(&[f64], &mut [f64]) -> Result<()>,
{
    let n = b.len();
    if x0.len() != n {
        return Err(Error::InvalidArgument(format!(
            "initial guess has length {}, right-hand side {}",
            x0.len(),
            n
        )));
    }
    if !(tol > 0.0) || max_krylov == 0 {
        return Err(Error::InvalidArgument("GMRES needs tol > 0 and max_krylov > 0".into()));
    }
    let bnorm = norm(b);
    if bnorm == 0.0 {
        return Ok(GmresOutcome {
            x: vec![0.0; n],
            iterations: 0,
            relative_residual: 0.0,
        });
    }

    let mut ax = vec![0.0; n];
    apply(x0, &mut ax)?;
    let r0: Vec<f64> = b.iter().zip(&ax).map(|(b, a)| b - a).collect();
    let beta = norm(&r0);
    if beta / bnorm <= tol {
        return Ok(GmresOutcome {
            x: x0.to_vec(),
            iterations: 0,
            relative_residual: beta / bnorm,
        });
    }

    let mut basis: Vec<Vec<f64>> = vec![r0.iter().map(|v| v / beta).collect()];
    // column-major upper Hessenberg, already rotated to triangular form
    let mut h: Vec<Vec<f64>> = Vec::new();
    let mut cs: Vec<f64> = Vec::new();
    let mut sn: Vec<f64> = Vec::new();
    let mut g = vec![beta];
    let mut residual = beta;

    for j in 0..max_krylov {
        let mut w = vec![0.0; n];
        apply(&basis[j], &mut w)?;
        let mut col = vec![0.0; j + 2];
        for (i, v) in basis.iter().enumerate() {
            let hij = dot(&w, v);
            col[i] = hij;
            for (wk, vk) in w.iter_mut().zip(v) {
                *wk -= hij * vk;
            }
        }
        let hnext = norm(&w);
        col[j + 1] = hnext;

        for i in 0..j {
            let t = cs[i] * col[i] + sn[i] * col[i + 1];
            col[i + 1] = -sn[i] * col[i] + cs[i] * col[i + 1];
            col[i] = t;
        }
        let r = col[j].hypot(col[j + 1]);
        let (c, s) = if r == 0.0 { (1.0, 0.0) } else { (col[j] / r, col[j + 1] / r) };
        col[j] = r;
        col[j + 1] = 0.0;
        cs.push(c);
        sn.push(s);
        g.push(-s * g[j]);
        g[j] *= c;
        h.push(col);
        residual = g[j + 1].abs();

        let converged = residual / bnorm <= tol;
        let breakdown = hnext <= 1e-14 * bnorm;
        if converged || breakdown {
            let k = j + 1;
            let mut y = vec![0.0; k];
            for i in (0..k).rev() {
                let mut s = g[i];
                for (l, yl) in y.iter().enumerate().take(k).skip(i + 1) {
                    s -= h[l][i] * yl;
                }
                y[i] = s / h[i][i];
            }
            let mut x = x0.to_vec();
            for (v, yi) in basis.iter().zip(&y) {
                for (xk, vk) in x.iter_mut().zip(v) {
                    *xk += yi * vk;
                }
            }
            return Ok(GmresOutcome {
                x,
                iterations: k,
                relative_residual: residual / bnorm,
            });
        }
        basis.push(w.iter().map(|v| v / hnext).collect());
    }
    Err(Error::Convergence {
        solver: "GMRES",
        iterations: max_krylov,
        residual: residual / bnorm,
    })
}
