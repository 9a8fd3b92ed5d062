//! Error norms and ray-effect diagnostics on cell-centred fields.

use std::f64::consts::PI;
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::mesh::{Field2D, Grid2D};

pub const RING_SAMPLES: usize = 360;

fn check_same_grid(a: &Grid2D, b: &Grid2D) -> Result<()> {
    if a != b {
        return Err(Error::GridMismatch(format!(
            "{}x{} on [{}, {}]x[{}, {}] vs {}x{} on [{}, {}]x[{}, {}]",
            a.nx, a.ny, a.xmin, a.xmax, a.ymin, a.ymax, b.nx, b.ny, b.xmin, b.xmax, b.ymin, b.ymax
        )));
    }
    Ok(())
}

/// Central-difference gradient, one-sided in the first and last cell of each line.
pub fn gradient(f: &Field2D) -> (Vec<f64>, Vec<f64>) {
    let g = &f.grid;
    let d = |v: &dyn Fn(usize) -> f64, n: usize, k: usize, h: f64| -> f64 {
        if n == 1 {
            0.0
        } else if k == 0 {
            (v(1) - v(0)) / h
        } else if k == n - 1 {
            (v(n - 1) - v(n - 2)) / h
        } else {
            (v(k + 1) - v(k - 1)) / (2.0 * h)
        }
    };
    let mut gx = vec![0.0; g.n_cells()];
    let mut gy = vec![0.0; g.n_cells()];
    for j in 0..g.ny {
        for i in 0..g.nx {
            gx[j * g.nx + i] = d(&|k| f.at(k, j), g.nx, i, g.dx);
            gy[j * g.nx + i] = d(&|k| f.at(i, k), g.ny, j, g.dy);
        }
    }
    (gx, gy)
}

/// `(δ1, δ2)`: cell-area weighted L² norms of `Φ - Φ_ref` and of the
/// gradient mismatch.
pub fn error_metrics(phi: &Field2D, reference: &Field2D) -> Result<(f64, f64)> {
    check_same_grid(&phi.grid, &reference.grid)?;
    let g = phi.grid;
    let diff = Field2D {
        grid: g,
        values: phi.values.iter().zip(&reference.values).map(|(a, b)| a - b).collect(),
    };
    let area = g.cell_area();
    let d1 = (diff.values.iter().map(|v| v * v).sum::<f64>() * area).sqrt();
    let (gx, gy) = gradient(&diff);
    let d2 = (gx.iter().zip(&gy).map(|(a, b)| a * a + b * b).sum::<f64>() * area).sqrt();
    Ok((d1, d2))
}

/// L² distance of `log10(max(Φ, clip))` between two fields.
pub fn log_clipped_distance(a: &Field2D, b: &Field2D, clip: f64) -> Result<f64> {
    check_same_grid(&a.grid, &b.grid)?;
    if !(clip > 0.0) {
        return Err(Error::InvalidArgument(format!("clip must be positive, got {clip}")));
    }
    let s: f64 = a
        .values
        .iter()
        .zip(&b.values)
        .map(|(x, y)| {
            let d = x.max(clip).log10() - y.max(clip).log10();
            d * d
        })
        .sum();
    Ok((s * a.grid.cell_area()).sqrt())
}

/// Bilinear interpolation between cell centres, constant beyond the outermost centres.
pub fn interpolate(f: &Field2D, x: f64, y: f64) -> f64 {
    let g = &f.grid;
    let axis = |v: f64, lo: f64, h: f64, n: usize| -> (usize, usize, f64) {
        let s = ((v - lo) / h - 0.5).clamp(0.0, (n - 1) as f64);
        let k0 = (s.floor() as usize).min(n.saturating_sub(2));
        let k1 = (k0 + 1).min(n - 1);
        (k0, k1, s - k0 as f64)
    };
    let (i0, i1, tx) = axis(x, g.xmin, g.dx, g.nx);
    let (j0, j1, ty) = axis(y, g.ymin, g.dy, g.ny);
    let lo = f.at(i0, j0) * (1.0 - tx) + f.at(i1, j0) * tx;
    let hi = f.at(i0, j1) * (1.0 - tx) + f.at(i1, j1) * tx;
    lo * (1.0 - ty) + hi * ty
}

#[derive(Debug, Clone, PartialEq)]
pub struct RingProfile {
    pub radius: f64,
    pub angles: Vec<f64>,
    pub values: Vec<f64>,
    pub mean: f64,
    /// Population standard deviation around the ring; a measure of ray-effect amplitude.
    pub std: f64,
}

/// Samples `f` on the circle of radius `radius` about the origin at
/// [`RING_SAMPLES`] equally spaced angles.
pub fn ring_profile(f: &Field2D, radius: f64) -> RingProfile {
    ring_profile_about(f, (0.0, 0.0), radius)
}

pub fn ring_profile_about(f: &Field2D, (cx, cy): (f64, f64), radius: f64) -> RingProfile {
    let angles: Vec<f64> = (0..RING_SAMPLES)
        .map(|k| 2.0 * PI * k as f64 / RING_SAMPLES as f64)
        .collect();
    let values: Vec<f64> = angles
        .iter()
        .map(|a| interpolate(f, cx + radius * a.cos(), cy + radius * a.sin()))
        .collect();
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let std = (values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n).sqrt();
    RingProfile {
        radius,
        angles,
        values,
        mean,
        std,
    }
}

/// Cuts through the cell centres.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Cut {
    /// The row of cells containing `y`.
    Horizontal(f64),
    /// The column of cells containing `x`.
    Vertical(f64),
    /// Cells `(k, k)` from the lower-left corner.
    Diagonal,
}

impl Cut {
    pub fn label(&self) -> String {
        match self {
            Cut::Horizontal(y) => format!("horizontal(y={y})"),
            Cut::Vertical(x) => format!("vertical(x={x})"),
            Cut::Diagonal => "diagonal".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Lineout {
    pub cut: Cut,
    /// `(x, y, Φ)` at the sampled cell centres.
    pub points: Vec<(f64, f64, f64)>,
}

fn nearest(v: f64, lo: f64, h: f64, n: usize) -> usize {
    (((v - lo) / h).floor().max(0.0) as usize).min(n - 1)
}

pub fn lineout(f: &Field2D, cut: Cut) -> Lineout {
    let g = &f.grid;
    let cell = |i: usize, j: usize| (g.x_center(i), g.y_center(j), f.at(i, j));
    let points = match cut {
        Cut::Horizontal(y) => {
            let j = nearest(y, g.ymin, g.dy, g.ny);
            (0..g.nx).map(|i| cell(i, j)).collect()
        }
        Cut::Vertical(x) => {
            let i = nearest(x, g.xmin, g.dx, g.nx);
            (0..g.ny).map(|j| cell(i, j)).collect()
        }
        Cut::Diagonal => (0..g.nx.min(g.ny)).map(|k| cell(k, k)).collect(),
    };
    Lineout { cut, points }
}

/// `cut,x,y,phi` rows for every lineout.
pub fn lineouts_csv(lines: &[Lineout], comments: &[String]) -> String {
    let mut out = String::new();
    for c in comments {
        writeln!(out, "# {c}").unwrap();
    }
    out.push_str("cut,x,y,phi\n");
    for l in lines {
        let label = l.cut.label();
        for (x, y, v) in &l.points {
            writeln!(out, "{label},{x:e},{y:e},{v:e}").unwrap();
        }
    }
    out
}

/// Returns `(samples, summary)`: `radius,angle,phi` rows and `radius,mean,std` rows.
pub fn rings_csv(rings: &[RingProfile], comments: &[String]) -> (String, String) {
    let mut samples = String::new();
    let mut summary = String::new();
    for c in comments {
        writeln!(samples, "# {c}").unwrap();
        writeln!(summary, "# {c}").unwrap();
    }
    samples.push_str("radius,angle,phi\n");
    summary.push_str("radius,mean,std\n");
    for r in rings {
        for (a, v) in r.angles.iter().zip(&r.values) {
            writeln!(samples, "{:e},{a:e},{v:e}", r.radius).unwrap();
        }
        writeln!(summary, "{:e},{:e},{:e}", r.radius, r.mean, r.std).unwrap();
    }
    (samples, summary)
}
