//! Scattering kernels and their discrete operators.
//!
//! The artificial kernel is the forward-peaked Gaussian
//!
//! ```text
//! s_ε(μ) = 2 / (√π ε erf(2/ε)) · exp(-(1 - μ)² / ε²),   ∫_{-1}^{1} s_ε dμ = 1,
//! ```
//!
//! with width `ε = β / N_q`. On the ordinates it becomes the row-stochastic
//! in-scattering matrix `S⁺_as(q, p) = w_p c_q s_ε(Ω_q · Ω_p)` where
//! `c_q = 1 / Σ_p w_p s_ε(Ω_q · Ω_p)`. Physical scattering is isotropic.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::quadrature::QuadratureSet;
use crate::special::{self, erf};
use crate::vec3::{self, Vec3};

/// Kernel values below this fraction of the peak `s_ε(1)` are not stored.
pub const SPARSITY_THRESHOLD: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArtificialKernelParams {
    pub beta: f64,
    pub sigma_as: f64,
    pub epsilon: f64,
}

impl ArtificialKernelParams {
    /// Parameters for a quadrature with `n_ordinates` directions, `ε = β / N_q`.
    pub fn new(beta: f64, sigma_as: f64, n_ordinates: usize) -> Result<Self> {
        if !(beta > 0.0 && beta.is_finite()) {
            return Err(Error::InvalidArgument(format!("beta must be positive, got {beta}")));
        }
        if !(sigma_as >= 0.0 && sigma_as.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "sigma_as must be nonnegative, got {sigma_as}"
            )));
        }
        if n_ordinates == 0 {
            return Err(Error::InvalidArgument("empty quadrature".into()));
        }
        Ok(Self {
            beta,
            sigma_as,
            epsilon: beta / n_ordinates as f64,
        })
    }

    pub fn is_active(&self) -> bool {
        self.sigma_as > 0.0
    }
}

fn kernel_norm(epsilon: f64) -> f64 {
    2.0 / (PI.sqrt() * epsilon * erf(2.0 / epsilon))
}

/// `exp(-(1 - μ)² / ε²)`, the kernel relative to its peak value.
#[inline]
fn relative_kernel(mu: f64, epsilon: f64) -> f64 {
    let y = (1.0 - mu) / epsilon;
    (-y * y).exp()
}

/// The normalized forward-peaked kernel `s_ε(μ)`.
pub fn s_eps(mu: f64, epsilon: f64) -> Result<f64> {
    if !(epsilon > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "kernel width must be positive, got {epsilon}"
        )));
    }
    if !(-1.0..=1.0).contains(&mu) {
        return Err(Error::InvalidArgument(format!("cosine {mu} outside [-1, 1]")));
    }
    Ok(kernel_norm(epsilon) * relative_kernel(mu, epsilon))
}

/// `p_{ε,i} = ∫ (1 - μ)^i s_ε(μ) dμ` in closed form,
/// `ε^i γ((1 + i)/2, 4/ε²) / (√π erf(2/ε))` with `γ = Γ - Γ(·, ·)`.
pub fn transport_coefficient(i: usize, epsilon: f64) -> f64 {
    if i == 0 {
        // γ(1/2, 4/ε²) = √π erf(2/ε) cancels the normalization exactly
        return 1.0;
    }
    let x = 4.0 / (epsilon * epsilon);
    let lower = special::lower_gamma_half_integer(i, x);
    epsilon.powi(i as i32) * lower / (PI.sqrt() * erf(2.0 / epsilon))
}

/// Legendre moment `k_{ε,n} = 2π ∫ s_ε(μ) P_n(μ) dμ`.
///
/// Gauss-Legendre quadrature with `max(200, 10 n)` nodes on the part of
/// `[-1, 1]` where the kernel exceeds `e^{-144}` of its peak.
pub fn legendre_moment(n: usize, epsilon: f64) -> f64 {
    let nodes = (10 * n).max(200);
    let (x, w) = special::gauss_legendre(nodes);
    let lo = (1.0 - 12.0 * epsilon).max(-1.0);
    let half = 0.5 * (1.0 - lo);
    let norm = kernel_norm(epsilon);
    let sum: f64 = x
        .iter()
        .zip(&w)
        .map(|(&t, &wt)| {
            let mu = lo + half * (t + 1.0);
            wt * norm * relative_kernel(mu, epsilon) * special::legendre(n, mu)
        })
        .sum();
    2.0 * PI * half * sum
}

/// Row-compressed discrete in-scattering operator.
#[derive(Debug, Clone, PartialEq)]
pub struct ScatteringMatrix {
    n: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
    row_norms: Vec<f64>,
}

impl ScatteringMatrix {
    fn from_kernel(quad: &QuadratureSet, kernel: impl Fn(f64) -> f64 + Sync, keep: f64) -> Self {
        let pts = quad.points();
        let w = quad.weights();
        let rows: Vec<(Vec<usize>, Vec<f64>, f64)> = pts
            .par_iter()
            .map(|oq| {
                let mut cols = Vec::new();
                let mut vals = Vec::new();
                for (p, op) in pts.iter().enumerate() {
                    let k = kernel(cosine(oq, op));
                    if k >= keep {
                        cols.push(p);
                        vals.push(w[p] * k);
                    }
                }
                let c = 1.0 / vals.iter().sum::<f64>();
                for v in &mut vals {
                    *v *= c;
                }
                (cols, vals, c)
            })
            .collect();

        let mut row_ptr = Vec::with_capacity(pts.len() + 1);
        row_ptr.push(0);
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        let mut row_norms = Vec::with_capacity(pts.len());
        for (c, v, norm) in rows {
            cols.extend(c);
            vals.extend(v);
            row_ptr.push(cols.len());
            row_norms.push(norm);
        }
        Self {
            n: pts.len(),
            row_ptr,
            cols,
            vals,
            row_norms,
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn row_nnz(&self, q: usize) -> usize {
        self.row_ptr[q + 1] - self.row_ptr[q]
    }

    /// Normalization factors `c_q`. For the artificial kernel these multiply
    /// the relative kernel `exp(-(1 - μ)²/ε²)`, i.e. they absorb `s_ε(1)`.
    pub fn row_norms(&self) -> &[f64] {
        &self.row_norms
    }

    /// Stored `(column, value)` pairs of row `q`.
    pub fn row(&self, q: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.row_ptr[q]..self.row_ptr[q + 1];
        self.cols[r.clone()].iter().copied().zip(self.vals[r].iter().copied())
    }

    pub fn get(&self, q: usize, p: usize) -> f64 {
        let r = self.row_ptr[q]..self.row_ptr[q + 1];
        match self.cols[r.clone()].binary_search(&p) {
            Ok(k) => self.vals[r.start + k],
            Err(_) => 0.0,
        }
    }

    pub fn row_sum(&self, q: usize) -> f64 {
        self.row(q).map(|(_, v)| v).sum()
    }

    /// `y = S x` for one ordinate vector.
    pub fn apply(&self, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.n);
        assert_eq!(y.len(), self.n);
        for (q, yq) in y.iter_mut().enumerate() {
            *yq = self.row(q).map(|(p, v)| v * x[p]).sum();
        }
    }

    /// Applies the operator to ordinate-major data: `input` and `output` are
    /// `N_q` contiguous slabs of `slab` values each (one slab per ordinate).
    pub fn apply_slabs(&self, input: &[f64], output: &mut [f64], slab: usize) {
        assert_eq!(input.len(), self.n * slab);
        assert_eq!(output.len(), self.n * slab);
        output
            .par_chunks_mut(slab)
            .enumerate()
            .for_each(|(q, out)| {
                out.fill(0.0);
                for (p, v) in self.row(q) {
                    let src = &input[p * slab..(p + 1) * slab];
                    for (o, s) in out.iter_mut().zip(src) {
                        *o += v * s;
                    }
                }
            });
    }

    /// Debug dump as `row,col,value`.
    pub fn export_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut out = String::from("row,col,value\n");
        for q in 0..self.n {
            for (p, v) in self.row(q) {
                writeln!(out, "{q},{p},{v:e}").unwrap();
            }
        }
        fs::write(path, out).map_err(|e| Error::io(path, e))
    }
}

#[inline]
fn cosine(a: &Vec3, b: &Vec3) -> f64 {
    vec3::dot(a, b).clamp(-1.0, 1.0)
}

/// Discrete artificial in-scattering operator `S⁺_as` for kernel width `epsilon`.
///
/// Kernel values below [`SPARSITY_THRESHOLD`] times the peak are dropped
/// before the row normalization, so rows stay exactly stochastic.
pub fn build_as_matrix(quad: &QuadratureSet, epsilon: f64) -> Result<ScatteringMatrix> {
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "kernel width must be positive, got {epsilon}"
        )));
    }
    // The peak factor 2/(√π ε erf) cancels in the normalization.
    Ok(ScatteringMatrix::from_kernel(
        quad,
        |mu| relative_kernel(mu, epsilon),
        SPARSITY_THRESHOLD,
    ))
}

/// Isotropic physical in-scattering `S⁺(q, p) = w_p c_q / (4π)`.
pub fn build_isotropic_matrix(quad: &QuadratureSet) -> ScatteringMatrix {
    ScatteringMatrix::from_kernel(quad, |_| 1.0 / (4.0 * PI), 0.0)
}

/// Ordinate/moment maps for real spherical harmonics.
///
/// `m` (row-major, `n_moments × N_q`) holds `√(4π) Y_k(Ω_q) w_q`, `o`
/// (row-major, `N_q × n_moments`) holds `Y_k(Ω_q) / √(4π)`. Moment 0 is
/// therefore the scalar flux and `M O = I` whenever the quadrature integrates
/// the products `Y_k Y_l` exactly.
#[derive(Debug, Clone)]
pub struct MomentMaps {
    pub n_moments: usize,
    pub n_ordinates: usize,
    pub m: Vec<f64>,
    pub o: Vec<f64>,
    /// Harmonic degree `l` of each moment.
    pub degrees: Vec<usize>,
    /// Diagonal coefficients of the (isotropic) physical kernel.
    pub sigma: Vec<f64>,
    /// `max |M O - I|`; a large value means the quadrature cannot resolve
    /// the requested harmonics.
    pub orthonormality_defect: f64,
}

impl MomentMaps {
    /// Diagonal coefficients of the artificial kernel, `k_{ε,l} / k_{ε,0}`
    /// (Funk-Hecke), normalized so that constants are preserved.
    pub fn artificial_sigma(&self, epsilon: f64) -> Vec<f64> {
        let k0 = legendre_moment(0, epsilon);
        self.degrees
            .iter()
            .map(|&l| legendre_moment(l, epsilon) / k0)
            .collect()
    }

    pub fn is_exact(&self, tol: f64) -> bool {
        self.orthonormality_defect <= tol
    }

    /// Moments of a single ordinate vector.
    pub fn to_moments(&self, psi: &[f64]) -> Vec<f64> {
        (0..self.n_moments)
            .map(|k| {
                let row = &self.m[k * self.n_ordinates..(k + 1) * self.n_ordinates];
                row.iter().zip(psi).map(|(a, b)| a * b).sum()
            })
            .collect()
    }

    /// Ordinate values of a single moment vector.
    pub fn to_ordinates(&self, phi: &[f64]) -> Vec<f64> {
        (0..self.n_ordinates)
            .map(|q| {
                let row = &self.o[q * self.n_moments..(q + 1) * self.n_moments];
                row.iter().zip(phi).map(|(a, b)| a * b).sum()
            })
            .collect()
    }
}

/// Real orthonormal spherical harmonics `Y_{l,m}` for `l <= lmax`, ordered
/// by `l` then `m = -l..=l`.
pub fn real_spherical_harmonics(lmax: usize, dir: &Vec3) -> Vec<f64> {
    let [x, y, z] = *dir;
    let mut out = Vec::with_capacity((lmax + 1) * (lmax + 1));
    // (x + i y)^m = sin^m θ e^{imφ}; the associated Legendre functions are
    // carried divided by sin^m θ so no division by sin θ is needed.
    let mut cs = vec![(1.0, 0.0); lmax + 1];
    for m in 1..=lmax {
        let (re, im) = cs[m - 1];
        cs[m] = (re * x - im * y, re * y + im * x);
    }
    // q[l][m] = P_l^m(z) / sin^m θ
    let mut q = vec![vec![0.0; lmax + 1]; lmax + 1];
    for m in 0..=lmax {
        let mut dfact = 1.0;
        for k in 1..=m {
            dfact *= (2 * k - 1) as f64;
        }
        q[m][m] = dfact;
        if m < lmax {
            q[m + 1][m] = z * (2 * m + 1) as f64 * dfact;
        }
        for l in (m + 2)..=lmax {
            q[l][m] = ((2 * l - 1) as f64 * z * q[l - 1][m] - (l + m - 1) as f64 * q[l - 2][m])
                / (l - m) as f64;
        }
    }
    for l in 0..=lmax {
        for m in -(l as i64)..=(l as i64) {
            let am = m.unsigned_abs() as usize;
            let mut ratio = 1.0; // (l - |m|)! / (l + |m|)!
            for k in (l - am + 1)..=(l + am) {
                ratio /= k as f64;
            }
            let norm = ((2 * l + 1) as f64 / (4.0 * PI) * ratio).sqrt();
            let v = match m.cmp(&0) {
                std::cmp::Ordering::Equal => norm * q[l][0],
                std::cmp::Ordering::Greater => 2f64.sqrt() * norm * q[l][am] * cs[am].0,
                std::cmp::Ordering::Less => 2f64.sqrt() * norm * q[l][am] * cs[am].1,
            };
            out.push(v);
        }
    }
    out
}

/// Moment maps with the first `n_moments` real harmonics. Requests beyond the
/// exactness of the quadrature are allowed and reported through
/// [`MomentMaps::orthonormality_defect`].
pub fn build_moment_maps(quad: &QuadratureSet, n_moments: usize) -> Result<MomentMaps> {
    if n_moments == 0 {
        return Err(Error::InvalidArgument("need at least one moment".into()));
    }
    let nq = quad.len();
    let lmax = (n_moments as f64).sqrt().ceil() as usize;
    let sqrt4pi = (4.0 * PI).sqrt();
    let mut m = vec![0.0; n_moments * nq];
    let mut o = vec![0.0; nq * n_moments];
    for (qi, (dir, &w)) in quad.points().iter().zip(quad.weights()).enumerate() {
        let y = real_spherical_harmonics(lmax, dir);
        for k in 0..n_moments {
            m[k * nq + qi] = sqrt4pi * y[k] * w;
            o[qi * n_moments + k] = y[k] / sqrt4pi;
        }
    }
    let degrees: Vec<usize> = (0..n_moments).map(|k| (k as f64).sqrt().floor() as usize).collect();
    let mut sigma = vec![0.0; n_moments];
    sigma[0] = 1.0;

    let mut defect = 0.0f64;
    for a in 0..n_moments {
        for b in 0..n_moments {
            let v: f64 = (0..nq).map(|qi| m[a * nq + qi] * o[qi * n_moments + b]).sum();
            let target = if a == b { 1.0 } else { 0.0 };
            defect = defect.max((v - target).abs());
        }
    }

    Ok(MomentMaps {
        n_moments,
        n_ordinates: nq,
        m,
        o,
        degrees,
        sigma,
        orthonormality_defect: defect,
    })
}
