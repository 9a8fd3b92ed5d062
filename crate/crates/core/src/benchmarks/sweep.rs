//! The `(σ_as, β)` parameter study.

use std::fmt::Write as _;

use rayon::prelude::*;

use super::metrics::error_metrics;
use crate::error::Result;
use crate::mesh::Field2D;

/// Default `σ_as` values of the parameter study: `0, 1, …, 10`.
pub fn default_sigma_as_values() -> Vec<f64> {
    (0..=10).map(f64::from).collect()
}

/// Default `β` values of the parameter study: `0.5, 1.0, …, 8.0`.
pub fn default_beta_values() -> Vec<f64> {
    (1..=16).map(|k| 0.5 * f64::from(k)).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub sigma_as: Vec<f64>,
    pub beta: Vec<f64>,
    /// `delta1[s][b]` for `sigma_as[s]`, `beta[b]`; NaN where the run failed.
    pub delta1: Vec<Vec<f64>>,
    /// δ1 of the plain S_N run.
    pub baseline: f64,
}

impl SweepResult {
    pub fn ratio(&self, s: usize, b: usize) -> f64 {
        if self.sigma_as[s] == 0.0 {
            1.0
        } else {
            self.delta1[s][b] / self.baseline
        }
    }

    /// Ratio at the grid point closest to `(sigma_as, beta)`.
    pub fn ratio_at(&self, sigma_as: f64, beta: f64) -> Option<f64> {
        let s = self.sigma_as.iter().position(|&v| (v - sigma_as).abs() < 1e-12)?;
        let b = self.beta.iter().position(|&v| (v - beta).abs() < 1e-12)?;
        Some(self.ratio(s, b))
    }

    /// `(σ_as, β, ratio)` of the smallest finite ratio.
    pub fn best(&self) -> Option<(f64, f64, f64)> {
        let mut best: Option<(f64, f64, f64)> = None;
        for (s, &sa) in self.sigma_as.iter().enumerate() {
            for (b, &be) in self.beta.iter().enumerate() {
                let r = self.ratio(s, b);
                if r.is_finite() && best.map_or(true, |x| r < x.2) {
                    best = Some((sa, be, r));
                }
            }
        }
        best
    }

    /// Heat-map table `sigma_as,beta,delta1,ratio`.
    pub fn to_csv(&self, comments: &[String]) -> String {
        let mut out = String::new();
        for c in comments {
            writeln!(out, "# {c}").unwrap();
        }
        out.push_str("sigma_as,beta,delta1,ratio\n");
        for (s, &sa) in self.sigma_as.iter().enumerate() {
            for (b, &be) in self.beta.iter().enumerate() {
                writeln!(out, "{sa},{be},{:e},{:e}", self.delta1[s][b], self.ratio(s, b)).unwrap();
            }
        }
        out
    }
}

/// Runs `run(σ_as, β)` over the grid of values and scores each final scalar
/// flux against `reference` by δ1.
///
/// `σ_as = 0` does not depend on β, so it is run once and shared by the whole
/// row. Failed runs become NaN entries; a failed baseline is an error.
pub fn parameter_sweep<F>(run: F, sigma_as: &[f64], beta: &[f64], reference: &Field2D) -> Result<SweepResult>
where
    F: Fn(f64, f64) -> Result<Field2D> + Sync,
{
    let score = |phi: Result<Field2D>| -> Result<f64> { Ok(error_metrics(&phi?, reference)?.0) };
    let baseline = score(run(0.0, beta.first().copied().unwrap_or(1.0)))?;
    let pairs: Vec<(usize, usize)> = (0..sigma_as.len())
        .flat_map(|s| (0..beta.len()).map(move |b| (s, b)))
        .filter(|&(s, _)| sigma_as[s] != 0.0)
        .collect();
    let scores: Vec<f64> = pairs
        .par_iter()
        .map(|&(s, b)| score(run(sigma_as[s], beta[b])).unwrap_or(f64::NAN))
        .collect();
    let mut delta1 = vec![vec![baseline; beta.len()]; sigma_as.len()];
    for (&(s, b), d) in pairs.iter().zip(scores) {
        delta1[s][b] = d;
    }
    Ok(SweepResult {
        sigma_as: sigma_as.to_vec(),
        beta: beta.to_vec(),
        delta1,
        baseline,
    })
}
