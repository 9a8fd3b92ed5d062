//! Analog Monte Carlo reference for the line source, and the on-disk
//! reference format.

use std::f64::consts::PI;
use std::fs;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::mesh::{Field2D, Grid2D};
use crate::vec3::Vec3;

/// Fixed partition of the particle histories; independent of the thread count.
const N_BATCHES: usize = 64;

#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceSolution {
    pub phi: Field2D,
    pub t_end: f64,
    pub seed: u64,
    pub provenance: String,
}

impl ReferenceSolution {
    pub fn grid(&self) -> &Grid2D {
        &self.phi.grid
    }

    pub fn meta_path(path: &Path) -> PathBuf {
        let mut s = path.as_os_str().to_owned();
        s.push(".meta");
        PathBuf::from(s)
    }

    fn meta_line(&self) -> String {
        let g = self.grid();
        format!(
            "nx={} ny={} xmin={:e} xmax={:e} ymin={:e} ymax={:e} t_end={:e} seed={} provenance={}",
            g.nx, g.ny, g.xmin, g.xmax, g.ymin, g.ymax, self.t_end, self.seed, self.provenance
        )
    }

    /// Writes `x,y,phi` to `path` and the metadata line to `path.meta`.
    pub fn write(&self, path: impl AsRef<Path>, comments: &[String]) -> Result<()> {
        let path = path.as_ref();
        self.phi.write_csv(path, comments)?;
        let meta = Self::meta_path(path);
        fs::write(&meta, self.meta_line() + "\n").map_err(|e| Error::io(meta, e))
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let meta_path = Self::meta_path(path);
        let meta = fs::read_to_string(&meta_path).map_err(|e| Error::io(&meta_path, e))?;
        let load_err = |p: &Path, line: usize, msg: String| Error::Load {
            path: p.to_path_buf(),
            line,
            msg,
        };

        let line = meta.lines().next().unwrap_or("");
        let (fields, provenance) = match line.split_once(" provenance=") {
            Some((f, p)) => (f, p.to_string()),
            None => return Err(load_err(&meta_path, 1, "missing provenance".into())),
        };
        let mut kv = std::collections::HashMap::new();
        for tok in fields.split_whitespace() {
            let (k, v) = tok
                .split_once('=')
                .ok_or_else(|| load_err(&meta_path, 1, format!("malformed field '{tok}'")))?;
            kv.insert(k, v);
        }
        let get = |k: &str| -> Result<&str> {
            kv.get(k)
                .copied()
                .ok_or_else(|| load_err(&meta_path, 1, format!("missing '{k}'")))
        };
        let num = |k: &str| -> Result<f64> {
            get(k)?
                .parse::<f64>()
                .map_err(|e| load_err(&meta_path, 1, format!("bad '{k}': {e}")))
        };
        let int = |k: &str| -> Result<u64> {
            get(k)?
                .parse::<u64>()
                .map_err(|e| load_err(&meta_path, 1, format!("bad '{k}': {e}")))
        };
        let grid = Grid2D::new(
            int("nx")? as usize,
            int("ny")? as usize,
            (num("xmin")?, num("xmax")?),
            (num("ymin")?, num("ymax")?),
        )?;

        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut phi = Field2D::zeros(&grid);
        let mut k = 0;
        let mut header = false;
        for (n, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if !header {
                if line != "x,y,phi" {
                    return Err(load_err(path, n + 1, format!("expected header 'x,y,phi', got '{line}'")));
                }
                header = true;
                continue;
            }
            let cols: Vec<&str> = line.split(',').collect();
            if cols.len() != 3 {
                return Err(load_err(path, n + 1, "expected 3 columns".into()));
            }
            let mut v = [0.0; 3];
            for (d, c) in v.iter_mut().zip(&cols) {
                *d = c
                    .trim()
                    .parse()
                    .map_err(|e| load_err(path, n + 1, format!("bad number '{c}': {e}")))?;
            }
            if k >= grid.n_cells() {
                return Err(load_err(path, n + 1, "more rows than grid cells".into()));
            }
            let (i, j) = (k % grid.nx, k / grid.nx);
            let tol = 1e-9 * (grid.dx + grid.dy);
            if (v[0] - grid.x_center(i)).abs() > tol || (v[1] - grid.y_center(j)).abs() > tol {
                return Err(load_err(path, n + 1, format!("row does not match cell ({i}, {j})")));
            }
            if !(v[2] >= 0.0) {
                return Err(load_err(path, n + 1, format!("negative or invalid flux {}", v[2])));
            }
            phi.values[k] = v[2];
            k += 1;
        }
        if k != grid.n_cells() {
            return Err(load_err(path, text.lines().count(), format!("{k} rows for {} cells", grid.n_cells())));
        }
        Ok(Self {
            phi,
            t_end: num("t_end")?,
            seed: int("seed")?,
            provenance,
        })
    }
}

/// Half the smaller cell width.
pub fn default_tally_window(grid: &Grid2D) -> f64 {
    0.5 * grid.dx.min(grid.dy)
}

/// Line-source reference with the default tally window.
pub fn mc_reference(n_particles: usize, grid: &Grid2D, t_end: f64, seed: u64) -> Result<ReferenceSolution> {
    mc_reference_windowed(n_particles, grid, t_end, seed, default_tally_window(grid))
}

fn isotropic(rng: &mut ChaCha8Rng) -> Vec3 {
    let mu = 2.0 * rng.gen::<f64>() - 1.0;
    let phi = 2.0 * PI * rng.gen::<f64>();
    let s = (1.0 - mu * mu).max(0.0).sqrt();
    [s * phi.cos(), s * phi.sin(), mu]
}

/// Adds `len` of straight track from `a` to `b` (in the plane) to the cells it
/// crosses, in proportion to the length inside each cell.
fn deposit_track(grid: &Grid2D, a: [f64; 2], b: [f64; 2], len: f64, tally: &mut [f64]) {
    let mut cuts = vec![0.0, 1.0];
    for (d, (h, lo)) in [(grid.dx, grid.xmin), (grid.dy, grid.ymin)].into_iter().enumerate() {
        let (p, q) = (a[d], b[d]);
        if p == q {
            continue;
        }
        let (s, e) = if p < q { (p, q) } else { (q, p) };
        let mut k = ((s - lo) / h).ceil();
        loop {
            let line = lo + k * h;
            if line >= e {
                break;
            }
            if line > s {
                cuts.push((line - p) / (q - p));
            }
            k += 1.0;
        }
    }
    cuts.sort_by(f64::total_cmp);
    for w in cuts.windows(2) {
        let frac = w[1] - w[0];
        if frac <= 0.0 {
            continue;
        }
        let mid = 0.5 * (w[0] + w[1]);
        let x = a[0] + mid * (b[0] - a[0]);
        let y = a[1] + mid * (b[1] - a[1]);
        if let Some((i, j)) = grid.locate(x, y) {
            tally[j * grid.nx + i] += frac * len;
        }
    }
}

fn history(grid: &Grid2D, t_end: f64, window: f64, rng: &mut ChaCha8Rng, tally: &mut [f64]) {
    let sigma_t = 1.0;
    let t0 = t_end - window;
    let mut t = 0.0;
    let mut pos = [0.0, 0.0];
    loop {
        let dir = isotropic(rng);
        let flight = -(1.0 - rng.gen::<f64>()).ln() / sigma_t;
        let t_next = (t + flight).min(t_end);
        if window > 0.0 {
            let (a, b) = (t.max(t0), t_next);
            if b > a {
                let pa = [pos[0] + dir[0] * (a - t), pos[1] + dir[1] * (a - t)];
                let pb = [pos[0] + dir[0] * (b - t), pos[1] + dir[1] * (b - t)];
                deposit_track(grid, pa, pb, b - a, tally);
            }
        }
        pos = [pos[0] + dir[0] * (t_next - t), pos[1] + dir[1] * (t_next - t)];
        t = t_next;
        if t >= t_end {
            break;
        }
    }
    if window == 0.0 {
        if let Some((i, j)) = grid.locate(pos[0], pos[1]) {
            tally[j * grid.nx + i] += 1.0;
        }
    }
}

/// Analog Monte Carlo for the line source in a purely scattering medium
/// (`σ_s = σ_t = 1`): particles start at the origin at `t = 0` with isotropic
/// directions and unit speed.
///
/// The scalar flux is the track length inside each cell during
/// `[t_end - window, t_end]`, divided by `window × cell area`; `window = 0`
/// counts particles present at `t_end` instead. The total is normalized to
/// `4π`, matching an isotropic `ψ` of unit mass. Every history draws from its
/// own ChaCha8 stream, so the result does not depend on the thread count.
pub fn mc_reference_windowed(
    n_particles: usize,
    grid: &Grid2D,
    t_end: f64,
    seed: u64,
    window: f64,
) -> Result<ReferenceSolution> {
    if n_particles == 0 {
        return Err(Error::InvalidArgument("need at least one particle".into()));
    }
    if !(t_end > 0.0) || !(0.0..=t_end).contains(&window) {
        return Err(Error::InvalidArgument(format!(
            "invalid tally window {window} for t_end {t_end}"
        )));
    }
    let n_cells = grid.n_cells();
    let per_batch = n_particles.div_ceil(N_BATCHES);
    let batches: Vec<Vec<f64>> = (0..N_BATCHES)
        .into_par_iter()
        .map(|b| {
            let mut tally = vec![0.0; n_cells];
            let start = b * per_batch;
            let end = ((b + 1) * per_batch).min(n_particles);
            for k in start..end {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(k as u64);
                history(grid, t_end, window, &mut rng, &mut tally);
            }
            tally
        })
        .collect();
    let mut phi = Field2D::zeros(grid);
    for t in &batches {
        for (p, v) in phi.values.iter_mut().zip(t) {
            *p += v;
        }
    }
    let per_unit = if window > 0.0 { window } else { 1.0 };
    let scale = 4.0 * PI / (n_particles as f64 * per_unit * grid.cell_area());
    phi.values.iter_mut().for_each(|v| *v *= scale);
    Ok(ReferenceSolution {
        phi,
        t_end,
        seed,
        provenance: format!("analog Monte Carlo, {n_particles} histories, tally window {window:e}"),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn track_deposit_splits_by_cell() {
        let g = Grid2D::new(4, 4, (0.0, 4.0), (0.0, 4.0)).unwrap();
        let mut t = vec![0.0; 16];
        deposit_track(&g, [0.5, 0.5], [2.5, 0.5], 2.0, &mut t);
        assert!((t[0] - 0.5).abs() < 1e-15);
        assert!((t[1] - 1.0).abs() < 1e-15);
        assert!((t[2] - 0.5).abs() < 1e-15);
        let mut t = vec![0.0; 16];
        deposit_track(&g, [0.5, 0.5], [1.5, 1.5], 3.0, &mut t);
        assert!((t[0] - 1.5).abs() < 1e-15 && (t[5] - 1.5).abs() < 1e-15);
        // leaving the grid drops the outside part
        let mut t = vec![0.0; 16];
        deposit_track(&g, [3.5, 0.5], [4.5, 0.5], 1.0, &mut t);
        assert!((t.iter().sum::<f64>() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn total_weight_is_conserved_and_causal() {
        let g = Grid2D::linesource(30, 30).unwrap();
        for window in [0.0, default_tally_window(&g)] {
            let r = mc_reference_windowed(20_000, &g, 1.0, 7, window).unwrap();
            let total: f64 = r.phi.values.iter().sum::<f64>() * g.cell_area();
            assert!((total - 4.0 * PI).abs() < 1e-9 * 4.0 * PI, "window {window}: {total}");
            let diag = g.dx.hypot(g.dy);
            for j in 0..g.ny {
                for i in 0..g.nx {
                    let r_c = g.x_center(i).hypot(g.y_center(j));
                    if r_c > 1.0 + diag {
                        assert_eq!(r.phi.at(i, j), 0.0);
                    }
                }
            }
        }
    }

    #[test]
    fn deterministic_for_fixed_seed() {
        let g = Grid2D::linesource(10, 10).unwrap();
        let a = mc_reference(5000, &g, 1.0, 3).unwrap();
        let b = mc_reference(5000, &g, 1.0, 3).unwrap();
        assert_eq!(a, b);
        let c = mc_reference(5000, &g, 1.0, 4).unwrap();
        assert_ne!(a.phi, c.phi);
    }

    #[test]
    fn reference_file_round_trip() {
        let g = Grid2D::linesource(6, 4).unwrap();
        let r = mc_reference(2000, &g, 1.0, 11).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("ref.csv");
        r.write(&path, &["test".into()]).unwrap();
        let back = ReferenceSolution::read(&path).unwrap();
        assert_eq!(back.grid(), r.grid());
        assert_eq!(back.seed, 11);
        assert_eq!(back.provenance, r.provenance);
        for (a, b) in back.phi.values.iter().zip(&r.phi.values) {
            assert!((a - b).abs() <= 1e-12 * b.abs().max(1e-300));
        }
    }

    #[test]
    fn reference_file_rejects_negative_flux() {
        let g = Grid2D::linesource(2, 2).unwrap();
        let mut r = mc_reference(100, &g, 1.0, 1).unwrap();
        r.phi.values[3] = -1.0;
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("ref.csv");
        r.write(&path, &[]).unwrap();
        let err = ReferenceSolution::read(&path).unwrap_err();
        assert!(matches!(err, Error::Load { line: 5, .. }), "{err}");
    }
}
