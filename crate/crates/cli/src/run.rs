//! Run orchestration and output files.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use assn_core::benchmarks::{
    error_metrics, lineout, lineouts_csv, mc_reference, parameter_sweep, ring_profile_about, rings_csv, run_benchmark,
    Cut, ProblemKind, ReferenceSolution, RunSettings, SolverKind, SweepResult,
};
use assn_core::implicit::{ImplicitConfig, SourceIterationConfig};
use assn_core::quadrature::build_icosahedron_quadrature;
use assn_core::{Field2D, Grid2D};

use crate::config::{hash_text, SolverConfig};

/// Environment variable holding the worker thread count.
pub const THREADS_ENV: &str = "ASSN_THREADS";

/// Sizes the global rayon pool from [`THREADS_ENV`]; unset means all cores.
pub fn configure_threads() -> Result<usize> {
    let n = match std::env::var(THREADS_ENV) {
        Ok(v) => v
            .trim()
            .parse::<usize>()
            .ok()
            .filter(|&n| n > 0)
            .with_context(|| format!("{THREADS_ENV} must be a positive integer, got {v:?}"))?,
        Err(_) => std::thread::available_parallelism().map_or(1, |n| n.get()),
    };
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .context("thread pool already initialized")?;
    Ok(n)
}

pub fn hash_comment(hash: &str) -> Vec<String> {
    vec![format!("config-hash: {hash}")]
}

pub fn run_settings(cfg: &SolverConfig) -> RunSettings {
    let mut s = match cfg.solver {
        SolverKind::Explicit => RunSettings::explicit(cfg.cfl, cfg.t_end),
        SolverKind::Implicit => RunSettings::implicit(cfg.cfl, cfg.t_end),
    };
    s.implicit = ImplicitConfig {
        cfl: cfg.cfl,
        gmres_tol: cfg.gmres_tol,
        inner: SourceIterationConfig {
            eps_tol: cfg.eps_tol,
            ..Default::default()
        },
        ..Default::default()
    };
    s
}

fn grid_of(cfg: &SolverConfig) -> Result<Grid2D> {
    Ok(match cfg.problem {
        ProblemKind::LineSource => Grid2D::linesource(cfg.nx, cfg.ny)?,
        ProblemKind::Lattice => Grid2D::lattice(cfg.nx, cfg.ny)?,
    })
}

/// Centre and radii of the ring diagnostics.
fn rings_for(problem: ProblemKind) -> ((f64, f64), Vec<f64>) {
    match problem {
        ProblemKind::LineSource => ((0.0, 0.0), vec![0.2, 0.4, 0.6, 0.8]),
        ProblemKind::Lattice => ((3.5, 3.5), vec![1.0, 2.0, 3.0]),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub config_hash: String,
    pub min_phi: f64,
    pub max_phi: f64,
    pub steps: usize,
    pub dt: f64,
    pub gmres_iterations_total: usize,
    pub gmres_iterations_max: usize,
    pub source_iterations: usize,
    /// `(δ1, δ2)` against the configured reference.
    pub delta: Option<(f64, f64)>,
}

impl RunSummary {
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        writeln!(s, "# config-hash: {}", self.config_hash).unwrap();
        writeln!(s, "min_phi = {:e}", self.min_phi).unwrap();
        writeln!(s, "max_phi = {:e}", self.max_phi).unwrap();
        writeln!(s, "steps = {}", self.steps).unwrap();
        writeln!(s, "dt = {:e}", self.dt).unwrap();
        writeln!(s, "gmres_iterations_total = {}", self.gmres_iterations_total).unwrap();
        writeln!(s, "gmres_iterations_max = {}", self.gmres_iterations_max).unwrap();
        writeln!(s, "source_iterations = {}", self.source_iterations).unwrap();
        if let Some((d1, d2)) = self.delta {
            writeln!(s, "delta1 = {d1:e}").unwrap();
            writeln!(s, "delta2 = {d2:e}").unwrap();
        }
        s
    }
}

fn write(path: PathBuf, text: &str) -> Result<()> {
    fs::write(&path, text).with_context(|| format!("writing {}", path.display()))
}

pub fn load_reference(path: &Path) -> Result<Field2D> {
    Ok(ReferenceSolution::read(path)
        .with_context(|| format!("reading reference {}", path.display()))?
        .phi)
}

/// Runs the configured solver and writes `phi.csv`, `lineouts.csv`,
/// `rings.csv`, `rings_summary.csv` and `summary.txt` to the output directory.
pub fn run(cfg: &SolverConfig) -> Result<RunSummary> {
    let hash = cfg.hash();
    let comments = hash_comment(&hash);
    let reference = cfg.reference.as_deref().map(load_reference).transpose()?;
    let quad = build_icosahedron_quadrature(cfg.quad_order)?;
    let out = run_benchmark(cfg.problem, cfg.nx, cfg.ny, &quad, cfg.sigma_as, cfg.beta, &run_settings(cfg))
        .with_context(|| format!("{} {} solve failed", cfg.problem.name(), cfg.solver.name()))?;
    let phi = &out.phi;
    let delta = reference
        .as_ref()
        .map(|r| error_metrics(phi, r))
        .transpose()
        .context("comparing with the reference")?;

    let dir = &cfg.output_dir;
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    write(dir.join("phi.csv"), &phi.to_csv(&comments))?;
    let ((cx, cy), radii) = rings_for(cfg.problem);
    let lines: Vec<_> = [Cut::Horizontal(cy), Cut::Vertical(cx), Cut::Diagonal]
        .into_iter()
        .map(|c| lineout(phi, c))
        .collect();
    write(dir.join("lineouts.csv"), &lineouts_csv(&lines, &comments))?;
    let rings: Vec<_> = radii.iter().map(|&r| ring_profile_about(phi, (cx, cy), r)).collect();
    let (samples, summary) = rings_csv(&rings, &comments);
    write(dir.join("rings.csv"), &samples)?;
    write(dir.join("rings_summary.csv"), &summary)?;

    let s = RunSummary {
        config_hash: hash,
        min_phi: phi.min(),
        max_phi: phi.max(),
        steps: out.steps,
        dt: out.dt,
        gmres_iterations_total: out.gmres_iterations.iter().sum(),
        gmres_iterations_max: out.gmres_iterations.iter().copied().max().unwrap_or(0),
        source_iterations: out.source_iterations,
        delta,
    };
    write(dir.join("summary.txt"), &s.to_text())?;
    Ok(s)
}

/// Reference for a sweep: the configured file, or a fresh Monte-Carlo run.
pub fn sweep_reference(cfg: &SolverConfig, particles: usize) -> Result<Field2D> {
    if let Some(p) = &cfg.reference {
        return load_reference(p);
    }
    if cfg.problem != ProblemKind::LineSource {
        bail!("the Monte-Carlo reference only covers the line source; pass `reference` for {}", cfg.problem.name());
    }
    Ok(mc_reference(particles, &grid_of(cfg)?, cfg.t_end, cfg.seed)?.phi)
}

/// Parameter study over `sigma_as × beta`; writes `heatmap.csv`.
pub fn sweep(cfg: &SolverConfig, sigma_as: &[f64], beta: &[f64], reference: &Field2D) -> Result<SweepResult> {
    let mut text = cfg.canonical();
    writeln!(text, "sweep_sigma_as = {sigma_as:?}").unwrap();
    writeln!(text, "sweep_beta = {beta:?}").unwrap();
    let comments = hash_comment(&hash_text(&text));
    let quad = build_icosahedron_quadrature(cfg.quad_order)?;
    let settings = run_settings(cfg);
    let result = parameter_sweep(
        |sa, b| run_benchmark(cfg.problem, cfg.nx, cfg.ny, &quad, sa, b, &settings).map(|o| o.phi),
        sigma_as,
        beta,
        reference,
    )?;
    fs::create_dir_all(&cfg.output_dir).with_context(|| format!("creating {}", cfg.output_dir.display()))?;
    write(cfg.output_dir.join("heatmap.csv"), &result.to_csv(&comments))?;
    Ok(result)
}

/// Comma-separated list of reals.
pub fn parse_list(s: &str) -> Result<Vec<f64>> {
    let v = s
        .split(',')
        .map(|t| t.trim().parse::<f64>().with_context(|| format!("bad number {t:?} in list")))
        .collect::<Result<Vec<_>>>()?;
    if v.is_empty() || v.iter().any(|x| !x.is_finite()) {
        bail!("list {s:?} must hold finite numbers");
    }
    Ok(v)
}
