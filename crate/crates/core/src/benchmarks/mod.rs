//! Benchmark problems, their drivers, and the analysis used to compare runs.

mod metrics;
mod montecarlo;
mod sweep;

pub use metrics::{
    error_metrics, gradient, lineout, lineouts_csv, log_clipped_distance, ring_profile, ring_profile_about, rings_csv, Cut, Lineout,
    RingProfile, RING_SAMPLES,
};
pub use montecarlo::{default_tally_window, mc_reference, mc_reference_windowed, ReferenceSolution};
pub use sweep::{default_beta_values, default_sigma_as_values, parameter_sweep, SweepResult};

use crate::error::Result;
use crate::explicit::run_explicit;
use crate::implicit::{run_implicit, ImplicitConfig};
use crate::mesh::{lattice_layout, linesource_initial, AngularFlux, Field2D, Grid2D, MaterialField};
use crate::problem::TransportProblem;
use crate::quadrature::QuadratureSet;

pub const LINESOURCE_T_END: f64 = 1.0;
pub const LATTICE_T_END: f64 = 3.2;

/// Particle count and seed of the standard line-source reference.
pub const REFERENCE_PARTICLES: usize = 4_000_000;
pub const REFERENCE_SEED: u64 = 42;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SolverKind {
    Explicit,
    Implicit,
}

impl SolverKind {
    pub fn name(self) -> &'static str {
        match self {
            SolverKind::Explicit => "explicit",
            SolverKind::Implicit => "implicit",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ProblemKind {
    LineSource,
    Lattice,
}

impl ProblemKind {
    pub fn name(self) -> &'static str {
        match self {
            ProblemKind::LineSource => "linesource",
            ProblemKind::Lattice => "lattice",
        }
    }
}

/// Time integration settings shared by both solvers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunSettings {
    pub solver: SolverKind,
    pub t_end: f64,
    /// CFL number for the explicit solver; the implicit one uses `implicit.cfl`.
    pub cfl: f64,
    pub implicit: ImplicitConfig,
}

impl RunSettings {
    pub fn explicit(cfl: f64, t_end: f64) -> Self {
        Self {
            solver: SolverKind::Explicit,
            t_end,
            cfl,
            implicit: ImplicitConfig::default(),
        }
    }

    pub fn implicit(cfl: f64, t_end: f64) -> Self {
        Self {
            solver: SolverKind::Implicit,
            t_end,
            cfl,
            implicit: ImplicitConfig {
                cfl,
                ..Default::default()
            },
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub phi: Field2D,
    pub steps: usize,
    pub dt: f64,
    pub gmres_iterations: Vec<usize>,
    pub source_iterations: usize,
}

/// Integrates `problem` from `psi0` with the configured solver.
pub fn run_solver(problem: &TransportProblem, psi0: AngularFlux, s: &RunSettings) -> Result<RunOutcome> {
    match s.solver {
        SolverKind::Explicit => {
            let state = run_explicit(problem, psi0, s.cfl, s.t_end)?;
            Ok(RunOutcome {
                phi: crate::explicit::explicit_scalar_flux(problem, &state),
                steps: state.steps,
                dt: state.dt,
                gmres_iterations: Vec::new(),
                source_iterations: 0,
            })
        }
        SolverKind::Implicit => {
            let state = run_implicit(problem, psi0, s.implicit, s.t_end)?;
            Ok(RunOutcome {
                phi: state.scalar_flux(),
                steps: state.steps,
                dt: state.dt,
                gmres_iterations: state.stats.gmres_iterations.clone(),
                source_iterations: state.stats.source_iterations,
            })
        }
    }
}

/// Line source on `[-1.5, 1.5]²` with artificial strength `sigma_as` (0 for plain S_N).
pub fn linesource_problem(nx: usize, ny: usize, quad: QuadratureSet, sigma_as: f64, beta: f64) -> Result<TransportProblem> {
    let grid = Grid2D::linesource(nx, ny)?;
    TransportProblem::new(grid, quad, MaterialField::linesource(&grid, 0.0))?.with_artificial_strength(sigma_as, beta)
}

/// Lattice on `[0, 7]²`, starting from vacuum.
pub fn lattice_problem(nx: usize, ny: usize, quad: QuadratureSet, sigma_as: f64, beta: f64) -> Result<TransportProblem> {
    let grid = Grid2D::lattice(nx, ny)?;
    let mats = lattice_layout(&grid)?;
    TransportProblem::new(grid, quad, mats)?.with_artificial_strength(sigma_as, beta)
}

/// Builds and runs one benchmark and returns the final scalar flux.
pub fn run_benchmark(
    kind: ProblemKind,
    nx: usize,
    ny: usize,
    quad: &QuadratureSet,
    sigma_as: f64,
    beta: f64,
    settings: &RunSettings,
) -> Result<RunOutcome> {
    match kind {
        ProblemKind::LineSource => {
            let p = linesource_problem(nx, ny, quad.clone(), sigma_as, beta)?;
            let psi0 = linesource_initial(&p.grid, &p.quad);
            run_solver(&p, psi0, settings)
        }
        ProblemKind::Lattice => {
            let p = lattice_problem(nx, ny, quad.clone(), sigma_as, beta)?;
            let psi0 = p.new_flux();
            run_solver(&p, psi0, settings)
        }
    }
}
