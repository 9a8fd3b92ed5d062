//! Implicit Euler as-S_N solver.
//!
//! Streaming is discretized with an unlimited second-order upwind stencil and
//! inverted by sweeping. The artificial term is lagged in an inner source
//! iteration, and the isotropic physical scattering is resolved in moment
//! space (one moment per cell, the scalar flux) by matrix-free GMRES.
//!
//! Per ordinate and cell the discrete operator reads
//!
//! ```text
//! (L_Δ ψ)_ij = λx (g_{i+½} - g_{i-½}) + λy (g_{j+½} - g_{j-½}) + Δt σ_t ψ_ij,
//! g_{i+½} = 3/2 ψ_i - 1/2 ψ_{i-1}            (Ω_x > 0, mirrored for Ω_x < 0)
//! ```
//!
//! with `λ = Ω Δt / Δx` and `σ_t = σ_a + σ_s + σ_as + 1/Δt`.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::krylov::gmres;
use crate::mesh::{AngularFlux, Field2D, Grid2D};
use crate::problem::{scalar_flux_par, TransportProblem};

const A: f64 = 1.5;
const B: f64 = -0.5;

/// `L_Δ` for one time-step size.
#[derive(Debug, Clone)]
pub struct StreamingOperator {
    grid: Grid2D,
    dt: f64,
    /// `(|λx|, |λy|, sign Ω_x, sign Ω_y)` per ordinate.
    lambdas: Vec<(f64, f64, f64, f64)>,
    /// `Δt σ_t` on the padded layout, zero in ghosts.
    diag: Vec<f64>,
    /// `Δt σ_as` on the padded layout.
    dt_sigma_as: Vec<f64>,
}

impl StreamingOperator {
    pub fn new(problem: &TransportProblem, dt: f64) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::InvalidArgument(format!("time step must be positive, got {dt}")));
        }
        let g = problem.grid;
        let m = &problem.materials;
        let mut diag = vec![0.0; g.padded_len()];
        let mut dt_sigma_as = vec![0.0; g.padded_len()];
        for j in 0..g.ny {
            for i in 0..g.nx {
                let c = j * g.nx + i;
                let p = g.padded_index(i, j);
                diag[p] = dt * (m.sigma_a[c] + m.sigma_s[c] + m.sigma_as[c]) + 1.0;
                dt_sigma_as[p] = dt * m.sigma_as[c];
            }
        }
        let lambdas = problem
            .quad
            .points()
            .iter()
            .map(|o| {
                (
                    (o[0] * dt / g.dx).abs(),
                    (o[1] * dt / g.dy).abs(),
                    if o[0] >= 0.0 { 1.0 } else { -1.0 },
                    if o[1] >= 0.0 { 1.0 } else { -1.0 },
                )
            })
            .collect();
        Ok(Self {
            grid: g,
            dt,
            lambdas,
            diag,
            dt_sigma_as,
        })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// Padded offsets of the first and second upwind neighbour in x and y.
    fn upwind_offsets(&self, q: usize) -> (isize, isize) {
        let (_, _, sx, sy) = self.lambdas[q];
        let pnx = self.grid.padded_nx() as isize;
        (-(sx as isize), -(sy as isize) * pnx)
    }

    /// `out = L_Δ ψ` with vacuum ghosts.
    pub fn apply(&self, psi: &AngularFlux, out: &mut AngularFlux) {
        let g = self.grid;
        let slab_len = g.padded_len();
        out.data_mut()
            .par_chunks_mut(slab_len)
            .enumerate()
            .for_each(|(q, dst)| {
                let src = psi.slab(q);
                let (lx, ly, _, _) = self.lambdas[q];
                let (ox, oy) = self.upwind_offsets(q);
                for j in 0..g.ny {
                    for i in 0..g.nx {
                        let p = g.padded_index(i, j);
                        let at = |off: isize| src[(p as isize + off) as usize];
                        let v = src[p];
                        let gx = A * v + (B - A) * at(ox) - B * at(2 * ox);
                        let gy = A * v + (B - A) * at(oy) - B * at(2 * oy);
                        dst[p] = lx * gx + ly * gy + self.diag[p] * v;
                    }
                }
            });
    }

    /// Solves `L_Δ ψ = r` by marching each ordinate in its upwind order.
    /// Only interior entries of `out` are written.
    pub fn sweep(&self, r: &AngularFlux, out: &mut AngularFlux) {
        let g = self.grid;
        let slab_len = g.padded_len();
        out.data_mut()
            .par_chunks_mut(slab_len)
            .enumerate()
            .for_each(|(q, dst)| {
                let rhs = r.slab(q);
                let (lx, ly, sx, sy) = self.lambdas[q];
                let (ox, oy) = self.upwind_offsets(q);
                let base = A * (lx + ly);
                for jj in 0..g.ny {
                    let j = if sy > 0.0 { jj } else { g.ny - 1 - jj };
                    for ii in 0..g.nx {
                        let i = if sx > 0.0 { ii } else { g.nx - 1 - ii };
                        let p = g.padded_index(i, j);
                        let at = |off: isize| dst[(p as isize + off) as usize];
                        let upstream =
                            lx * ((B - A) * at(ox) - B * at(2 * ox)) + ly * ((B - A) * at(oy) - B * at(2 * oy));
                        dst[p] = (rhs[p] - upstream) / (base + self.diag[p]);
                    }
                }
            });
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SourceIterationConfig {
    pub eps_tol: f64,
    pub max_iters: usize,
    pub lipschitz_clamp: (f64, f64),
    /// Stop after a single sweep regardless of the residual.
    pub single_inner_iteration: bool,
}

impl Default for SourceIterationConfig {
    fn default() -> Self {
        Self {
            eps_tol: 1e-4,
            max_iters: 1000,
            lipschitz_clamp: (0.01, 0.99),
            single_inner_iteration: false,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct SourceIterationReport {
    pub iterations: usize,
    pub last_update: f64,
    pub lipschitz: f64,
}

fn diff_norm(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Solves `(L - σ_as S⁺_as) ψ = r` by iterating `L_Δ ψ⁺ = Δt (σ_as S⁺_as ψ + r)`
/// from `psi0`.
///
/// Stops once `||ψ⁺ - ψ||₂ < ϵ (1 - T) / T`, with `T` the ratio of successive
/// update norms (0.5 until two updates exist), clamped.
pub fn source_iteration(
    problem: &TransportProblem,
    op: &StreamingOperator,
    psi0: &AngularFlux,
    r: &AngularFlux,
    cfg: &SourceIterationConfig,
) -> Result<(AngularFlux, SourceIterationReport)> {
    let dt = op.dt;
    let mut rhs = problem.new_flux();
    let mut next = problem.new_flux();
    let Some(art) = problem.artificial.as_ref() else {
        scaled_into(r.data(), dt, rhs.data_mut());
        op.sweep(&rhs, &mut next);
        return Ok((
            next,
            SourceIterationReport {
                iterations: 1,
                ..Default::default()
            },
        ));
    };

    let slab = psi0.slab_len();
    let (lo, hi) = cfg.lipschitz_clamp;
    let mut prev = psi0.clone();
    prev.zero_ghosts();
    let mut prev_update: Option<f64> = None;
    let mut report = SourceIterationReport::default();
    loop {
        art.matrix.apply_slabs(prev.data(), rhs.data_mut(), slab);
        rhs.data_mut()
            .par_chunks_mut(slab)
            .zip(r.data().par_chunks(slab))
            .for_each(|(s, r)| {
                for ((s, r), sa) in s.iter_mut().zip(r).zip(&op.dt_sigma_as) {
                    *s = sa * *s + dt * r;
                }
            });
        op.sweep(&rhs, &mut next);
        report.iterations += 1;
        let update = diff_norm(next.data(), prev.data());
        let t = match prev_update {
            Some(p) if p > 0.0 => (update / p).clamp(lo, hi),
            Some(_) => lo,
            None => 0.5,
        };
        report.last_update = update;
        report.lipschitz = t;
        if cfg.single_inner_iteration || update < cfg.eps_tol * (1.0 - t) / t {
            return Ok((next, report));
        }
        if report.iterations >= cfg.max_iters {
            return Err(Error::Convergence {
                solver: "source iteration",
                iterations: report.iterations,
                residual: update,
            });
        }
        prev_update = Some(update);
        std::mem::swap(&mut prev, &mut next);
    }
}

fn scaled_into(src: &[f64], s: f64, dst: &mut [f64]) {
    dst.par_iter_mut().zip(src.par_iter()).for_each(|(d, v)| *d = s * v);
}

/// `Δt = cfl · min(Δx, Δy) / max_q max(|Ω_x|, |Ω_y|)`.
pub fn implicit_time_step(problem: &TransportProblem, cfl: f64) -> f64 {
    let h = problem.grid.dx.min(problem.grid.dy);
    let speed = problem.quad.max_planar_component();
    if speed > 0.0 {
        cfl * h / speed
    } else {
        cfl * h
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ImplicitConfig {
    pub cfl: f64,
    pub gmres_tol: f64,
    pub max_krylov: usize,
    pub inner: SourceIterationConfig,
}

impl Default for ImplicitConfig {
    fn default() -> Self {
        Self {
            cfl: 2.0,
            gmres_tol: 1.5e-8,
            max_krylov: 200,
            inner: SourceIterationConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ImplicitStats {
    pub gmres_iterations: Vec<usize>,
    pub source_iterations: usize,
    pub max_source_iterations: usize,
}

impl ImplicitStats {
    fn record(&mut self, r: &SourceIterationReport) {
        self.source_iterations += r.iterations;
        self.max_source_iterations = self.max_source_iterations.max(r.iterations);
    }
}

#[derive(Debug, Clone)]
pub struct ImplicitState {
    pub psi: AngularFlux,
    /// Scalar flux of the interior cells, row-major.
    pub phi: Vec<f64>,
    pub time: f64,
    pub dt: f64,
    pub steps: usize,
    pub stats: ImplicitStats,
}

impl ImplicitState {
    pub fn scalar_flux(&self) -> Field2D {
        Field2D {
            grid: *self.psi.grid(),
            values: self.phi.clone(),
        }
    }
}

pub struct ImplicitSolver<'a> {
    problem: &'a TransportProblem,
    config: ImplicitConfig,
}

impl<'a> ImplicitSolver<'a> {
    pub fn new(problem: &'a TransportProblem, config: ImplicitConfig) -> Result<Self> {
        if !(config.cfl > 0.0 && config.cfl.is_finite()) {
            return Err(Error::InvalidArgument(format!("cfl must be positive, got {}", config.cfl)));
        }
        if !(config.gmres_tol > 0.0) || !(config.inner.eps_tol > 0.0) {
            return Err(Error::InvalidArgument("tolerances must be positive".into()));
        }
        Ok(Self { problem, config })
    }

    pub fn config(&self) -> &ImplicitConfig {
        &self.config
    }

    /// `M ψ`: the scalar flux of each interior cell.
    pub fn to_moments(&self, psi: &AngularFlux) -> Vec<f64> {
        scalar_flux_par(psi, self.problem.quad.weights()).values
    }

    /// `r = σ_s O Σ φ + ψ_old / Δt + q`; each part is optional.
    pub fn source(&self, phi: Option<&[f64]>, psi_old: Option<(&AngularFlux, f64)>, with_q: bool) -> AngularFlux {
        let p = self.problem;
        let g = p.grid;
        let iso = p.isotropic_factor();
        let mats = &p.materials;
        let mut r = p.new_flux();
        let slab = r.slab_len();
        r.data_mut()
            .par_chunks_mut(slab)
            .enumerate()
            .for_each(|(q, dst)| {
                let old = psi_old.map(|(f, dt)| (f.slab(q), 1.0 / dt));
                for j in 0..g.ny {
                    for i in 0..g.nx {
                        let c = j * g.nx + i;
                        let pi = g.padded_index(i, j);
                        let mut v = 0.0;
                        if let Some(phi) = phi {
                            v += mats.sigma_s[c] * iso * phi[c];
                        }
                        if let Some((o, inv_dt)) = old {
                            v += o[pi] * inv_dt;
                        }
                        if with_q {
                            v += mats.source[c];
                        }
                        dst[pi] = v;
                    }
                }
            });
        r
    }

    /// `φ - M (L - σ_as S⁺_as)⁻¹ σ_s O Σ φ`, the inner solve started from `psi0`.
    pub fn lhs_apply(
        &self,
        op: &StreamingOperator,
        psi0: &AngularFlux,
        phi: &[f64],
        stats: &mut ImplicitStats,
    ) -> Result<Vec<f64>> {
        let r = self.source(Some(phi), None, false);
        let (psi, rep) = source_iteration(self.problem, op, psi0, &r, &self.config.inner)?;
        stats.record(&rep);
        let m = self.to_moments(&psi);
        Ok(phi.iter().zip(&m).map(|(a, b)| a - b).collect())
    }

    /// One implicit Euler step of size `dt`.
    pub fn step(&self, state: &mut ImplicitState, dt: f64) -> Result<()> {
        let op = StreamingOperator::new(self.problem, dt)?;
        let inner = &self.config.inner;
        let psi_old = &state.psi;
        let stats = &mut state.stats;

        let r = self.source(None, Some((psi_old, dt)), true);
        let (psi_b, rep) = source_iteration(self.problem, &op, psi_old, &r, inner)?;
        stats.record(&rep);
        let b = self.to_moments(&psi_b);

        let phi_new = if self.problem.materials.sigma_s.iter().any(|&s| s != 0.0) {
            let mut inner_stats = ImplicitStats::default();
            // Krylov directions are unrelated to ψ_old, so the inner solves start from zero
            let zero = self.problem.new_flux();
            let out = gmres(
                |x, y| {
                    let v = self.lhs_apply(&op, &zero, x, &mut inner_stats)?;
                    y.copy_from_slice(&v);
                    Ok(())
                },
                &b,
                &state.phi,
                self.config.gmres_tol,
                self.config.max_krylov,
            )?;
            stats.source_iterations += inner_stats.source_iterations;
            stats.max_source_iterations = stats.max_source_iterations.max(inner_stats.max_source_iterations);
            stats.gmres_iterations.push(out.iterations);
            out.x
        } else {
            stats.gmres_iterations.push(0);
            b
        };

        let r = self.source(Some(&phi_new), Some((psi_old, dt)), true);
        let (psi_new, rep) = source_iteration(self.problem, &op, psi_old, &r, inner)?;
        stats.record(&rep);

        state.steps += 1;
        if !psi_new.is_finite() {
            return Err(Error::NonFinite { step: state.steps });
        }
        state.phi = self.to_moments(&psi_new);
        state.psi = psi_new;
        state.time += dt;
        Ok(())
    }

    pub fn initial_state(&self, mut psi: AngularFlux) -> ImplicitState {
        psi.zero_ghosts();
        let phi = self.to_moments(&psi);
        ImplicitState {
            psi,
            phi,
            time: 0.0,
            dt: implicit_time_step(self.problem, self.config.cfl),
            steps: 0,
            stats: ImplicitStats::default(),
        }
    }

    /// Steps to `t_end`, shortening the last step to land on it exactly.
    pub fn advance_to(&self, state: &mut ImplicitState, t_end: f64) -> Result<()> {
        while t_end - state.time > 1e-12 * t_end.max(1.0) {
            let h = state.dt.min(t_end - state.time);
            self.step(state, h)?;
        }
        state.time = t_end;
        Ok(())
    }
}

pub fn run_implicit(
    problem: &TransportProblem,
    psi0: AngularFlux,
    config: ImplicitConfig,
    t_end: f64,
) -> Result<ImplicitState> {
    let solver = ImplicitSolver::new(problem, config)?;
    let mut state = solver.initial_state(psi0);
    solver.advance_to(&mut state, t_end)?;
    Ok(state)
}

#[cfg(test)]
mod tests {
    use std::f64::consts::PI;

    use super::*;
    use crate::mesh::{linesource_initial, MaterialField};
    use crate::quadrature::{build_icosahedron_quadrature, QuadratureSet};

    fn four_quadrants() -> QuadratureSet {
        let (a, b) = (0.6, 0.3);
        let c = (1.0f64 - a * a - b * b).sqrt();
        QuadratureSet::new(
            vec![[a, b, c], [-a, b, c], [a, -b, c], [-a, -b, c]],
            vec![PI; 4],
        )
        .unwrap()
    }

    fn smooth_flux(p: &TransportProblem) -> AngularFlux {
        let g = p.grid;
        let mut psi = p.new_flux();
        for q in 0..p.n_ordinates() {
            for j in 0..g.ny {
                for i in 0..g.nx {
                    let (x, y) = (g.x_center(i), g.y_center(j));
                    psi.set(q, i, j, (1.0 + q as f64) * (x * 3.0).sin() * (y * 2.0).cos() + 0.1 * x * y);
                }
            }
        }
        psi
    }

    #[test]
    fn sweep_inverts_streaming_operator_in_every_quadrant() {
        let g = Grid2D::new(16, 16, (0.0, 1.0), (0.0, 1.0)).unwrap();
        let p = TransportProblem::new(g, four_quadrants(), MaterialField::uniform(&g, 0.3, 0.7, 0.0, 0.0))
            .unwrap()
            .with_artificial_strength(2.0, 1.0)
            .unwrap();
        let op = StreamingOperator::new(&p, 0.17).unwrap();
        let psi = smooth_flux(&p);
        let mut r = p.new_flux();
        op.apply(&psi, &mut r);
        let mut back = p.new_flux();
        op.sweep(&r, &mut back);
        for k in 0..psi.data().len() {
            assert!((back.data()[k] - psi.data()[k]).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_source_sweeps_to_zero() {
        let g = Grid2D::linesource(8, 8).unwrap();
        let p = TransportProblem::new(g, four_quadrants(), MaterialField::linesource(&g, 0.0)).unwrap();
        let op = StreamingOperator::new(&p, 0.1).unwrap();
        let mut out = p.new_flux();
        op.sweep(&p.new_flux(), &mut out);
        assert!(out.data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn one_dimensional_sweep_reaches_recurrence_fixed_point() {
        let g = Grid2D::new(40, 1, (0.0, 1.0), (0.0, 1.0)).unwrap();
        let quad = QuadratureSet::new(vec![[0.8, 0.0, 0.6]], vec![4.0 * PI]).unwrap();
        let p = TransportProblem::new(g, quad, MaterialField::uniform(&g, 1.0, 0.0, 0.0, 0.0)).unwrap();
        let dt = 0.05;
        let op = StreamingOperator::new(&p, dt).unwrap();
        let mut r = p.new_flux();
        for i in 0..g.nx {
            r.set(0, i, 0, 2.0);
        }
        let mut psi = p.new_flux();
        op.sweep(&r, &mut psi);
        // at the fixed point the stencil terms cancel and only Δt σ_t remains
        let expected = 2.0 / (dt * 1.0 + 1.0);
        assert!((psi.get(0, g.nx - 1, 0) - expected).abs() < 1e-10);
    }

    #[test]
    fn source_iteration_without_artificial_term_is_one_sweep() {
        let g = Grid2D::linesource(8, 8).unwrap();
        let quad = build_icosahedron_quadrature(2).unwrap();
        let p = TransportProblem::new(g, quad, MaterialField::linesource(&g, 0.0)).unwrap();
        let op = StreamingOperator::new(&p, 0.2).unwrap();
        let r = smooth_flux(&p);
        let (psi, rep) = source_iteration(&p, &op, &p.new_flux(), &r, &SourceIterationConfig::default()).unwrap();
        assert_eq!(rep.iterations, 1);
        let mut scaled = r.clone();
        scaled.data_mut().iter_mut().for_each(|v| *v *= 0.2);
        let mut direct = p.new_flux();
        op.sweep(&scaled, &mut direct);
        assert_eq!(psi, direct);
    }

    #[test]
    fn source_iteration_solves_the_coupled_system() {
        let g = Grid2D::new(16, 16, (-1.0, 1.0), (-1.0, 1.0)).unwrap();
        let quad = build_icosahedron_quadrature(3).unwrap();
        let p = TransportProblem::new(g, quad, MaterialField::uniform(&g, 0.2, 1.0, 0.0, 0.0))
            .unwrap()
            .with_artificial_strength(5.0, 4.5)
            .unwrap();
        let op = StreamingOperator::new(&p, 0.1).unwrap();
        let r = smooth_flux(&p);
        let cfg = SourceIterationConfig {
            eps_tol: 1e-10,
            ..Default::default()
        };
        let (psi, rep) = source_iteration(&p, &op, &p.new_flux(), &r, &cfg).unwrap();
        // residual of (L_Δ - Δt σ_as S⁺) ψ = Δt r
        let mut lpsi = p.new_flux();
        op.apply(&psi, &mut lpsi);
        let mut s = p.new_flux();
        p.artificial.as_ref().unwrap().matrix.apply_slabs(psi.data(), s.data_mut(), psi.slab_len());
        let res: f64 = (0..lpsi.data().len())
            .map(|k| {
                let v = lpsi.data()[k] - 0.1 * 5.0 * s.data()[k] - 0.1 * r.data()[k];
                v * v
            })
            .sum::<f64>()
            .sqrt();
        let t = rep.lipschitz;
        assert!(res < 10.0 * 1e-10 * (1.0 - t) / t, "residual {res}");
    }

    #[test]
    fn contraction_ratio_matches_isotropic_estimate() {
        let g = Grid2D::new(30, 30, (-1.0, 1.0), (-1.0, 1.0)).unwrap();
        let quad = build_icosahedron_quadrature(3).unwrap();
        let (sa, ss, sas, dt) = (0.5, 1.0, 1.0, 0.2);
        let p = TransportProblem::new(g, quad, MaterialField::uniform(&g, sa, ss, 0.0, 0.0))
            .unwrap()
            .with_artificial_strength(sas, 4.5)
            .unwrap();
        let op = StreamingOperator::new(&p, dt).unwrap();
        let mut r = p.new_flux();
        for j in 0..g.ny {
            for i in 0..g.nx {
                r.fill_cell(i, j, 1.0);
            }
        }
        let cfg = SourceIterationConfig {
            eps_tol: 1e-12,
            ..Default::default()
        };
        let (_, rep) = source_iteration(&p, &op, &p.new_flux(), &r, &cfg).unwrap();
        let expected = sas / (sa + ss + sas + 1.0 / dt);
        assert!(
            rep.lipschitz < 2.0 * expected && rep.lipschitz > 0.5 * expected,
            "{} vs {}",
            rep.lipschitz,
            expected
        );
    }

    #[test]
    fn implicit_pure_decay_factor() {
        let g = Grid2D::linesource(3, 3).unwrap();
        let quad = QuadratureSet::new(vec![[0.0, 0.0, 1.0], [0.0, 0.0, -1.0]], vec![2.0 * PI; 2]).unwrap();
        let sigma = 3.0;
        let p = TransportProblem::new(g, quad, MaterialField::uniform(&g, sigma, 0.0, 0.0, 0.0)).unwrap();
        let solver = ImplicitSolver::new(&p, ImplicitConfig::default()).unwrap();
        let mut psi = p.new_flux();
        psi.fill_cell(1, 1, 1.0);
        let mut state = solver.initial_state(psi);
        let dt = 0.25;
        for n in 1..=3 {
            solver.step(&mut state, dt).unwrap();
            let expected = (1.0 + sigma * dt).powi(-n);
            assert!((state.psi.get(0, 1, 1) - expected).abs() < 1e-15);
        }
        assert_eq!(state.stats.gmres_iterations, vec![0, 0, 0]);
    }

    #[test]
    fn lhs_is_identity_without_scattering_and_linear_with_it() {
        let g = Grid2D::new(8, 8, (-1.0, 1.0), (-1.0, 1.0)).unwrap();
        let quad = build_icosahedron_quadrature(2).unwrap();
        let phi: Vec<f64> = (0..64).map(|k| ((k * 37) % 11) as f64 - 3.0).collect();

        let p0 = TransportProblem::new(g, quad.clone(), MaterialField::uniform(&g, 1.0, 0.0, 0.0, 0.0)).unwrap();
        let s0 = ImplicitSolver::new(&p0, ImplicitConfig::default()).unwrap();
        let op0 = StreamingOperator::new(&p0, 0.1).unwrap();
        let out = s0.lhs_apply(&op0, &p0.new_flux(), &phi, &mut ImplicitStats::default()).unwrap();
        assert_eq!(out, phi);

        let p = TransportProblem::new(g, quad, MaterialField::uniform(&g, 0.0, 1.0, 0.0, 0.0))
            .unwrap()
            .with_artificial_strength(5.0, 4.5)
            .unwrap();
        let mut cfg = ImplicitConfig::default();
        cfg.inner.eps_tol = 1e-14;
        let s = ImplicitSolver::new(&p, cfg).unwrap();
        let op = StreamingOperator::new(&p, 0.1).unwrap();
        let zero = p.new_flux();
        let alpha = -2.5;
        let a = s.lhs_apply(&op, &zero, &phi, &mut ImplicitStats::default()).unwrap();
        let scaled: Vec<f64> = phi.iter().map(|v| alpha * v).collect();
        let b = s.lhs_apply(&op, &zero, &scaled, &mut ImplicitStats::default()).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert!((alpha * x - y).abs() < 1e-12, "{} vs {}", alpha * x, y);
        }
    }

    #[test]
    fn streaming_only_step_needs_no_krylov_iterations() {
        let g = Grid2D::linesource(10, 10).unwrap();
        let quad = build_icosahedron_quadrature(2).unwrap();
        let p = TransportProblem::new(g, quad.clone(), MaterialField::uniform(&g, 0.0, 0.0, 0.0, 0.0)).unwrap();
        let state = run_implicit(&p, linesource_initial(&g, &quad), ImplicitConfig::default(), 0.3).unwrap();
        assert!(state.stats.gmres_iterations.iter().all(|&k| k <= 1));
        assert!(state.stats.max_source_iterations <= 1);
    }

    #[test]
    fn l2_norm_does_not_grow_for_one_dimensional_advection() {
        let g = Grid2D::new(60, 1, (0.0, 1.0), (0.0, 1.0)).unwrap();
        for cfl in [1.0, 2.0, 10.0] {
            for mu in [0.9, -0.9] {
                let quad = QuadratureSet::new(vec![[mu, 0.0, (1.0f64 - mu * mu).sqrt()]], vec![4.0 * PI]).unwrap();
                let p = TransportProblem::new(g, quad, MaterialField::uniform(&g, 0.0, 0.0, 0.0, 0.0)).unwrap();
                let mut psi = p.new_flux();
                for i in 0..g.nx {
                    let x = g.x_center(i);
                    psi.set(0, i, 0, if (0.3..0.6).contains(&x) { 1.0 } else { 0.0 });
                }
                let solver = ImplicitSolver::new(&p, ImplicitConfig { cfl, ..Default::default() }).unwrap();
                let mut state = solver.initial_state(psi);
                let mut prev = state.psi.interior_norm();
                for _ in 0..10 {
                    let dt = state.dt;
                    solver.step(&mut state, dt).unwrap();
                    let now = state.psi.interior_norm();
                    assert!(now <= prev * (1.0 + 1e-14), "cfl {cfl}: {now} > {prev}");
                    prev = now;
                }
            }
        }
    }

    #[test]
    fn line_source_step_converges_quickly() {
        let g = Grid2D::linesource(50, 50).unwrap();
        let quad = build_icosahedron_quadrature(2).unwrap();
        let p = TransportProblem::new(g, quad.clone(), MaterialField::linesource(&g, 0.0))
            .unwrap()
            .with_artificial_strength(7.0, 4.0)
            .unwrap();
        let solver = ImplicitSolver::new(&p, ImplicitConfig::default()).unwrap();
        let mut state = solver.initial_state(linesource_initial(&g, &quad));
        let dt = state.dt;
        solver.step(&mut state, dt).unwrap();
        assert!(state.stats.gmres_iterations[0] <= 50, "{:?}", state.stats);
        assert!(state.stats.max_source_iterations < 20, "{:?}", state.stats);
    }
}
