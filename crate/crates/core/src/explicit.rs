//! Second-order explicit finite-volume integrator.
//!
//! Streaming uses dimension-by-dimension upwind fluxes from minmod-limited
//! linear reconstructions, and time stepping is Heun's method. Scattering,
//! absorption and sources are evaluated pointwise per cell.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::mesh::{AngularFlux, Field2D, Grid2D};
use crate::problem::{scalar_flux_par, TransportProblem};

#[inline]
pub fn minmod(a: f64, b: f64) -> f64 {
    if a * b <= 0.0 {
        0.0
    } else if a.abs() < b.abs() {
        a
    } else {
        b
    }
}

/// Adds `-Ω · ∇ψ` of one ordinate slab to `out` (interior cells, row-major).
fn add_streaming(slab: &[f64], out: &mut [f64], g: &Grid2D, ox: f64, oy: f64, flux: &mut [f64]) {
    let pnx = g.padded_nx();
    if ox != 0.0 {
        let inv = 1.0 / g.dx;
        for j in 0..g.ny {
            let row = &slab[(j + 2) * pnx..(j + 3) * pnx];
            // flux[f]: face between padded cells f + 1 and f + 2
            for (f, fl) in flux[..=g.nx].iter_mut().enumerate() {
                let face = if ox > 0.0 {
                    let u = f + 1;
                    row[u] + 0.5 * minmod(row[u] - row[u - 1], row[u + 1] - row[u])
                } else {
                    let u = f + 2;
                    row[u] - 0.5 * minmod(row[u] - row[u - 1], row[u + 1] - row[u])
                };
                *fl = ox * face;
            }
            let dst = &mut out[j * g.nx..(j + 1) * g.nx];
            for (i, o) in dst.iter_mut().enumerate() {
                *o -= (flux[i + 1] - flux[i]) * inv;
            }
        }
    }
    if oy != 0.0 {
        let inv = 1.0 / g.dy;
        let (lower, upper) = flux.split_at_mut(g.nx);
        let upper = &mut upper[..g.nx];
        let face_row = |f: usize, dst: &mut [f64]| {
            // face between padded rows f + 1 and f + 2
            let u = if oy > 0.0 { f + 1 } else { f + 2 };
            let (rm, r0, rp) = (
                &slab[(u - 1) * pnx + 2..],
                &slab[u * pnx + 2..],
                &slab[(u + 1) * pnx + 2..],
            );
            for i in 0..g.nx {
                let s = minmod(r0[i] - rm[i], rp[i] - r0[i]);
                let face = if oy > 0.0 { r0[i] + 0.5 * s } else { r0[i] - 0.5 * s };
                dst[i] = oy * face;
            }
        };
        face_row(0, lower);
        for j in 0..g.ny {
            face_row(j + 1, upper);
            let dst = &mut out[j * g.nx..(j + 1) * g.nx];
            for i in 0..g.nx {
                dst[i] -= (upper[i] - lower[i]) * inv;
            }
            lower.copy_from_slice(upper);
        }
    }
}

/// Time derivative of the semi-discrete system,
/// `-Ω_q·∇ψ_q - (σ_t + σ_as) ψ_q + σ_s (S⁺ψ)_q + σ_as (S⁺_as ψ)_q + Q`.
///
/// `psi` must carry vacuum ghost values. The result has zero ghosts.
pub fn rhs(problem: &TransportProblem, psi: &AngularFlux, out: &mut AngularFlux) {
    let g = problem.grid;
    let weights = problem.quad.weights();
    let phi = scalar_flux_par(psi, weights);
    let iso = problem.isotropic_factor();
    let scattered = problem.artificial.as_ref().map(|art| {
        let mut s = problem.new_flux();
        art.matrix
            .apply_slabs(psi.data(), s.data_mut(), psi.slab_len());
        s
    });
    let mats = &problem.materials;
    let points = problem.quad.points();
    let slab_len = psi.slab_len();

    out.data_mut()
        .par_chunks_mut(slab_len)
        .enumerate()
        .for_each_init(
            || (vec![0.0; g.n_cells()], vec![0.0; g.nx.max(g.ny) * 2 + 2]),
            |(acc, flux), (q, out_slab)| {
                acc.fill(0.0);
                let slab = psi.slab(q);
                add_streaming(slab, acc, &g, points[q][0], points[q][1], flux);
                let art = scattered.as_ref().map(|s| s.slab(q));
                for j in 0..g.ny {
                    let p0 = g.padded_index(0, j);
                    for i in 0..g.nx {
                        let c = j * g.nx + i;
                        let p = p0 + i;
                        let sa = mats.sigma_as[c];
                        let mut v = acc[c] - (mats.sigma_t(c) + sa) * slab[p]
                            + mats.sigma_s[c] * iso * phi.values[c]
                            + mats.source[c];
                        if let Some(a) = art {
                            v += sa * a[p];
                        }
                        acc[c] = v;
                    }
                }
                out_slab.fill(0.0);
                for j in 0..g.ny {
                    let p0 = g.padded_index(0, j);
                    out_slab[p0..p0 + g.nx].copy_from_slice(&acc[j * g.nx..(j + 1) * g.nx]);
                }
            },
        );
}

#[derive(Debug, Clone)]
pub struct ExplicitState {
    pub psi: AngularFlux,
    pub time: f64,
    pub dt: f64,
    pub cfl: f64,
    pub steps: usize,
}

/// Forward-Euler positivity limit of the scheme, scaled by `cfl`:
///
/// ```text
/// Δt = cfl / (3/2 · max_q (|Ω_x|/Δx + |Ω_y|/Δy) + max_cells (σ_t + σ_as))
/// ```
///
/// Minmod face values are at most `3/2` of the upwind cell value, so for
/// `cfl ≤ 1` every stage is a nonnegative combination of old values; Heun
/// inherits this as a convex combination of Euler steps.
pub fn explicit_time_step(problem: &TransportProblem, cfl: f64) -> f64 {
    let g = problem.grid;
    let m = &problem.materials;
    let streaming = problem
        .quad
        .points()
        .iter()
        .map(|o| o[0].abs() / g.dx + o[1].abs() / g.dy)
        .fold(0.0, f64::max);
    let collision = (0..m.len())
        .map(|c| m.sigma_t(c) + m.sigma_as[c])
        .fold(0.0, f64::max);
    let rate = 1.5 * streaming + collision;
    if rate > 0.0 {
        cfl / rate
    } else {
        cfl * g.dx.min(g.dy)
    }
}

pub struct ExplicitSolver<'a> {
    problem: &'a TransportProblem,
    k: AngularFlux,
    stage: AngularFlux,
}

impl<'a> ExplicitSolver<'a> {
    pub fn new(problem: &'a TransportProblem) -> Self {
        Self {
            problem,
            k: problem.new_flux(),
            stage: problem.new_flux(),
        }
    }

    pub fn initial_state(&self, mut psi: AngularFlux, cfl: f64) -> Result<ExplicitState> {
        if !(cfl > 0.0 && cfl.is_finite()) {
            return Err(Error::InvalidArgument(format!("cfl must be positive, got {cfl}")));
        }
        psi.zero_ghosts();
        Ok(ExplicitState {
            psi,
            time: 0.0,
            dt: explicit_time_step(self.problem, cfl),
            cfl,
            steps: 0,
        })
    }

    /// One Heun step of size `h`:
    /// `ψ* = ψ + h f(ψ)`, `ψ ← ½ψ + ½(ψ* + h f(ψ*))`.
    pub fn step_heun(&mut self, state: &mut ExplicitState, h: f64) -> Result<()> {
        rhs(self.problem, &state.psi, &mut self.k);
        self.stage
            .data_mut()
            .par_iter_mut()
            .zip(state.psi.data().par_iter())
            .zip(self.k.data().par_iter())
            .for_each(|((s, &p), &k)| *s = p + h * k);
        rhs(self.problem, &self.stage, &mut self.k);
        state
            .psi
            .data_mut()
            .par_iter_mut()
            .zip(self.stage.data().par_iter())
            .zip(self.k.data().par_iter())
            .for_each(|((p, &s), &k)| *p = 0.5 * *p + 0.5 * (s + h * k));
        state.time += h;
        state.steps += 1;
        if !state.psi.is_finite() {
            return Err(Error::NonFinite { step: state.steps });
        }
        Ok(())
    }

    /// Integrates to `t_end`, shortening the last step to land on it exactly.
    pub fn advance_to(&mut self, state: &mut ExplicitState, t_end: f64) -> Result<()> {
        while state.time < t_end {
            let remaining = t_end - state.time;
            if remaining <= 1e-12 * t_end.max(1.0) {
                break;
            }
            let h = state.dt.min(remaining);
            self.step_heun(state, h)?;
            if h == remaining {
                state.time = t_end;
            }
        }
        state.time = t_end;
        Ok(())
    }
}

/// Runs the explicit solver from `psi0` to `t_end` and returns the final state.
pub fn run_explicit(problem: &TransportProblem, psi0: AngularFlux, cfl: f64, t_end: f64) -> Result<ExplicitState> {
    let mut solver = ExplicitSolver::new(problem);
    let mut state = solver.initial_state(psi0, cfl)?;
    solver.advance_to(&mut state, t_end)?;
    Ok(state)
}

/// Final scalar flux of an explicit run.
pub fn explicit_scalar_flux(problem: &TransportProblem, state: &ExplicitState) -> Field2D {
    scalar_flux_par(&state.psi, problem.quad.weights())
}
