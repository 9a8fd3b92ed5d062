use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use assn_cli::config::{hash_text, parse_pairs};
use assn_cli::run::{hash_comment, parse_list, sweep_reference};
use assn_cli::{configure_threads, parse_layers, run, sweep, SolverConfig};
use assn_core::benchmarks::{default_beta_values, default_sigma_as_values, mc_reference, REFERENCE_PARTICLES};
use assn_core::quadrature::{build_icosahedron_quadrature, export_quadrature};
use assn_core::stability::{build_entropy_matrix, verify_positive_definite};
use assn_core::Grid2D;
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "assn", version, about = "Artificial-scattering S_N transport solvers")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one solver configuration and write Φ, lineouts, rings and a summary.
    Run(ConfigArgs),
    /// (σ_as, β) parameter study against a reference; writes heatmap.csv.
    Sweep {
        #[command(flatten)]
        cfg: ConfigArgs,
        /// Comma-separated σ_as values [default: 0,1,...,10]
        #[arg(long)]
        sigma_as_values: Option<String>,
        /// Comma-separated β values [default: 0.5,1.0,...,8.0]
        #[arg(long)]
        beta_values: Option<String>,
        /// Monte-Carlo particles when no reference file is given.
        #[arg(long, default_value_t = REFERENCE_PARTICLES)]
        particles: usize,
    },
    /// Export the icosahedral quadrature of the given order.
    Quadrature {
        #[arg(long)]
        order: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Check positivity of the upwind scheme's entropy matrix and write its spectrum.
    StabilityCheck {
        #[arg(long, default_value_t = 200)]
        n: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Monte-Carlo line-source reference.
    McReference {
        #[arg(long, default_value_t = 50)]
        nx: usize,
        #[arg(long, default_value_t = 50)]
        ny: usize,
        #[arg(long, default_value_t = 1.0)]
        t_end: f64,
        #[arg(long, default_value_t = REFERENCE_PARTICLES)]
        particles: usize,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
}

/// Config file plus one flag per key; flags win.
#[derive(Args)]
struct ConfigArgs {
    /// `key = value` file
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    problem: Option<String>,
    #[arg(long)]
    solver: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    quad_order: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    nx: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    ny: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    cfl: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    t_end: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    sigma_as: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    beta: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    eps_tol: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    gmres_tol: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    seed: Option<String>,
    #[arg(long)]
    output_dir: Option<String>,
    #[arg(long)]
    reference: Option<String>,
}

impl ConfigArgs {
    fn flags(&self) -> Vec<(String, String)> {
        [
            ("problem", &self.problem),
            ("solver", &self.solver),
            ("quad_order", &self.quad_order),
            ("nx", &self.nx),
            ("ny", &self.ny),
            ("cfl", &self.cfl),
            ("t_end", &self.t_end),
            ("sigma_as", &self.sigma_as),
            ("beta", &self.beta),
            ("eps_tol", &self.eps_tol),
            ("gmres_tol", &self.gmres_tol),
            ("seed", &self.seed),
            ("output_dir", &self.output_dir),
            ("reference", &self.reference),
        ]
        .into_iter()
        .filter_map(|(k, v)| v.as_ref().map(|v| (k.to_string(), v.clone())))
        .collect()
    }

    fn load(&self, preset: &[(String, String)]) -> Result<SolverConfig> {
        let file = match &self.config {
            Some(p) => {
                let text = std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
                parse_pairs(&text).with_context(|| format!("in {}", p.display()))?
            }
            None => Vec::new(),
        };
        Ok(parse_layers(&[preset, &file, &self.flags()])?)
    }
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    configure_threads()?;
    match cli.command {
        Command::Run(args) => {
            let cfg = args.load(&[])?;
            let summary = run(&cfg)?;
            print!("{}", summary.to_text());
            println!("outputs in {}", cfg.output_dir.display());
        }
        Command::Sweep {
            cfg,
            sigma_as_values,
            beta_values,
            particles,
        } => {
            // the coarse study configuration unless overridden
            let preset = [("quad_order", "2"), ("nx", "50"), ("ny", "50")].map(|(k, v)| (k.to_string(), v.to_string()));
            let cfg = cfg.load(&preset)?;
            let sa = sigma_as_values.as_deref().map(parse_list).transpose()?.unwrap_or_else(default_sigma_as_values);
            let beta = beta_values.as_deref().map(parse_list).transpose()?.unwrap_or_else(default_beta_values);
            let reference = sweep_reference(&cfg, particles)?;
            let result = sweep(&cfg, &sa, &beta, &reference)?;
            println!("baseline delta1 = {:e}", result.baseline);
            if let Some((s, b, r)) = result.best() {
                println!("best ratio {r:.4} at sigma_as = {s}, beta = {b}");
            }
            println!("heatmap in {}", cfg.output_dir.join("heatmap.csv").display());
        }
        Command::Quadrature { order, out } => {
            let q = build_icosahedron_quadrature(order)?;
            let hash = hash_text(&format!("quadrature order = {order}\n"));
            export_quadrature(&q, &out, &hash_comment(&hash))?;
            println!("{} ordinates written to {}", q.len(), out.display());
        }
        Command::StabilityCheck { n, out } => {
            let rep = verify_positive_definite(&build_entropy_matrix(n)?)?;
            let hash = hash_text(&format!("stability n = {n}\n"));
            std::fs::write(&out, rep.spectrum_csv(&hash_comment(&hash)))
                .with_context(|| format!("writing {}", out.display()))?;
            println!("n = {n}: smallest eigenvalue {:e}, largest {:e}", rep.smallest, rep.largest);
            if !rep.positive_definite {
                bail!("entropy matrix is not positive definite");
            }
        }
        Command::McReference {
            nx,
            ny,
            t_end,
            particles,
            seed,
            out,
        } => {
            let grid = Grid2D::linesource(nx, ny)?;
            let r = mc_reference(particles, &grid, t_end, seed)?;
            let hash = hash_text(&format!(
                "mc nx = {nx}\nny = {ny}\nt_end = {t_end:?}\nparticles = {particles}\nseed = {seed}\n"
            ));
            r.write(&out, &hash_comment(&hash))?;
            println!("reference written to {}", out.display());
        }
    }
    Ok(())
}
