//! `key = value` run configuration.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::PathBuf;

use assn_core::benchmarks::{ProblemKind, SolverKind, LATTICE_T_END, LINESOURCE_T_END, REFERENCE_SEED};
use sha2::{Digest, Sha256};

/// Every accepted key, in canonical order.
pub const KEYS: [&str; 14] = [
    "problem",
    "solver",
    "quad_order",
    "nx",
    "ny",
    "cfl",
    "t_end",
    "sigma_as",
    "beta",
    "eps_tol",
    "gmres_tol",
    "seed",
    "output_dir",
    "reference",
];

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum ConfigError {
    #[error("line {line}: expected `key = value`, found {text:?}")]
    Syntax { line: usize, text: String },
    #[error("unknown key `{0}`")]
    UnknownKey(String),
    #[error("key `{0}` given twice")]
    Duplicate(String),
    #[error("missing required key `{0}`")]
    Missing(&'static str),
    #[error("invalid value {value:?} for `{key}`: {reason}")]
    Value { key: String, value: String, reason: String },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub problem: ProblemKind,
    pub solver: SolverKind,
    pub quad_order: usize,
    pub nx: usize,
    pub ny: usize,
    pub cfl: f64,
    pub t_end: f64,
    pub sigma_as: f64,
    pub beta: f64,
    pub eps_tol: f64,
    pub gmres_tol: f64,
    pub seed: u64,
    pub output_dir: PathBuf,
    /// Reference scalar flux for δ1/δ2 in the run summary.
    pub reference: Option<PathBuf>,
}

impl SolverConfig {
    /// Headline settings for a problem/solver pair.
    pub fn defaults(problem: ProblemKind, solver: SolverKind) -> Self {
        let (n, t_end) = match problem {
            ProblemKind::LineSource => (200, LINESOURCE_T_END),
            ProblemKind::Lattice => (280, LATTICE_T_END),
        };
        let (cfl, sigma_as, beta) = match solver {
            SolverKind::Explicit => (0.95, 5.0, 4.5),
            SolverKind::Implicit => (2.0, 7.0, 4.0),
        };
        Self {
            problem,
            solver,
            quad_order: 4,
            nx: n,
            ny: n,
            cfl,
            t_end,
            sigma_as,
            beta,
            eps_tol: 1e-4,
            gmres_tol: 1.5e-8,
            seed: REFERENCE_SEED,
            output_dir: PathBuf::from("out"),
            reference: None,
        }
    }

    /// Canonical `key = value` text of every setting that affects results.
    pub fn canonical(&self) -> String {
        let mut s = String::new();
        writeln!(s, "problem = {}", self.problem.name()).unwrap();
        writeln!(s, "solver = {}", self.solver.name()).unwrap();
        writeln!(s, "quad_order = {}", self.quad_order).unwrap();
        writeln!(s, "nx = {}", self.nx).unwrap();
        writeln!(s, "ny = {}", self.ny).unwrap();
        writeln!(s, "cfl = {:?}", self.cfl).unwrap();
        writeln!(s, "t_end = {:?}", self.t_end).unwrap();
        writeln!(s, "sigma_as = {:?}", self.sigma_as).unwrap();
        writeln!(s, "beta = {:?}", self.beta).unwrap();
        writeln!(s, "eps_tol = {:?}", self.eps_tol).unwrap();
        writeln!(s, "gmres_tol = {:?}", self.gmres_tol).unwrap();
        writeln!(s, "seed = {}", self.seed).unwrap();
        if let Some(r) = &self.reference {
            writeln!(s, "reference = {}", r.display()).unwrap();
        }
        s
    }

    /// SHA-256 of [`canonical`](Self::canonical); the output directory is
    /// not part of it.
    pub fn hash(&self) -> String {
        hash_text(&self.canonical())
    }

    fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        match key {
            // resolved before defaults are chosen
            "problem" | "solver" => {}
            "quad_order" => self.quad_order = parse(key, value)?,
            "nx" => self.nx = parse(key, value)?,
            "ny" => self.ny = parse(key, value)?,
            "cfl" => self.cfl = parse(key, value)?,
            "t_end" => self.t_end = parse(key, value)?,
            "sigma_as" => self.sigma_as = parse(key, value)?,
            "beta" => self.beta = parse(key, value)?,
            "eps_tol" => self.eps_tol = parse(key, value)?,
            "gmres_tol" => self.gmres_tol = parse(key, value)?,
            "seed" => self.seed = parse(key, value)?,
            "output_dir" => self.output_dir = PathBuf::from(value),
            "reference" => self.reference = Some(PathBuf::from(value)),
            _ => return Err(ConfigError::UnknownKey(key.to_string())),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |key: &str, value: String, reason: &str| {
            Err(ConfigError::Value {
                key: key.into(),
                value,
                reason: reason.into(),
            })
        };
        if self.quad_order < 2 {
            return bad("quad_order", self.quad_order.to_string(), "must be at least 2");
        }
        if self.nx < 2 || self.ny < 2 {
            return bad("nx", format!("{}x{}", self.nx, self.ny), "grid needs at least 2 cells per direction");
        }
        for (key, v) in [
            ("cfl", self.cfl),
            ("t_end", self.t_end),
            ("beta", self.beta),
            ("eps_tol", self.eps_tol),
            ("gmres_tol", self.gmres_tol),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return bad(key, v.to_string(), "must be positive");
            }
        }
        if !(self.sigma_as >= 0.0 && self.sigma_as.is_finite()) {
            return bad("sigma_as", self.sigma_as.to_string(), "must be nonnegative");
        }
        Ok(())
    }
}

pub fn hash_text(text: &str) -> String {
    Sha256::digest(text.as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
}

fn parse<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, ConfigError>
where
    T::Err: std::fmt::Display,
{
    value.parse().map_err(|e: T::Err| ConfigError::Value {
        key: key.into(),
        value: value.into(),
        reason: e.to_string(),
    })
}

/// Flags are kebab-case versions of the keys.
pub fn normalize_key(key: &str) -> String {
    key.trim().trim_start_matches("--").replace('-', "_")
}

/// Splits config text into `(key, value)` pairs. Blank lines and `#`
/// comments are skipped; unknown and repeated keys are errors.
pub fn parse_pairs(text: &str) -> Result<Vec<(String, String)>, ConfigError> {
    let mut pairs: Vec<(String, String)> = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap().trim();
        if line.is_empty() {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            return Err(ConfigError::Syntax {
                line: idx + 1,
                text: raw.to_string(),
            });
        };
        let (k, v) = (normalize_key(k), v.trim().to_string());
        if k.is_empty() || v.is_empty() {
            return Err(ConfigError::Syntax {
                line: idx + 1,
                text: raw.to_string(),
            });
        }
        if !KEYS.contains(&k.as_str()) {
            return Err(ConfigError::UnknownKey(k));
        }
        if pairs.iter().any(|(p, _)| *p == k) {
            return Err(ConfigError::Duplicate(k));
        }
        pairs.push((k, v));
    }
    Ok(pairs)
}

fn parse_problem(v: &str) -> Result<ProblemKind, ConfigError> {
    match v {
        "linesource" | "line-source" => Ok(ProblemKind::LineSource),
        "lattice" => Ok(ProblemKind::Lattice),
        _ => Err(ConfigError::Value {
            key: "problem".into(),
            value: v.into(),
            reason: "expected linesource or lattice".into(),
        }),
    }
}

fn parse_solver(v: &str) -> Result<SolverKind, ConfigError> {
    match v {
        "explicit" => Ok(SolverKind::Explicit),
        "implicit" => Ok(SolverKind::Implicit),
        _ => Err(ConfigError::Value {
            key: "solver".into(),
            value: v.into(),
            reason: "expected explicit or implicit".into(),
        }),
    }
}

/// Builds a config from layers of `(key, value)` pairs, later layers winning.
/// `problem` and `solver` are required and select the defaults the other
/// keys override.
pub fn parse_layers(layers: &[&[(String, String)]]) -> Result<SolverConfig, ConfigError> {
    let mut merged: BTreeMap<String, String> = BTreeMap::new();
    for layer in layers {
        for (k, v) in layer.iter() {
            let k = normalize_key(k);
            if !KEYS.contains(&k.as_str()) {
                return Err(ConfigError::UnknownKey(k));
            }
            merged.insert(k, v.trim().to_string());
        }
    }
    let problem = parse_problem(merged.get("problem").ok_or(ConfigError::Missing("problem"))?)?;
    let solver = parse_solver(merged.get("solver").ok_or(ConfigError::Missing("solver"))?)?;
    let mut cfg = SolverConfig::defaults(problem, solver);
    for (k, v) in &merged {
        cfg.set(k, v)?;
    }
    cfg.validate()?;
    Ok(cfg)
}

/// Config file text (if any) overridden by command-line flags.
pub fn parse_config(file_text: Option<&str>, flags: &[(String, String)]) -> Result<SolverConfig, ConfigError> {
    let file = match file_text {
        Some(t) => parse_pairs(t)?,
        None => Vec::new(),
    };
    parse_layers(&[&file, flags])
}
