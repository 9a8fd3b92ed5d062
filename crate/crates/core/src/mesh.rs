//! Regular 2-D grids, material maps, and angular-flux storage.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::quadrature::QuadratureSet;

/// Ghost layers on every side; the second-order stencils reach two cells upwind.
pub const N_GHOST: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid2D {
    pub nx: usize,
    pub ny: usize,
    pub xmin: f64,
    pub xmax: f64,
    pub ymin: f64,
    pub ymax: f64,
    pub dx: f64,
    pub dy: f64,
}

impl Grid2D {
    pub fn new(nx: usize, ny: usize, (xmin, xmax): (f64, f64), (ymin, ymax): (f64, f64)) -> Result<Self> {
        if nx == 0 || ny == 0 {
            return Err(Error::InvalidArgument(format!("grid must have cells, got {nx}x{ny}")));
        }
        if !(xmax > xmin && ymax > ymin) {
            return Err(Error::InvalidArgument("grid bounds must be increasing".into()));
        }
        Ok(Self {
            nx,
            ny,
            xmin,
            xmax,
            ymin,
            ymax,
            dx: (xmax - xmin) / nx as f64,
            dy: (ymax - ymin) / ny as f64,
        })
    }

    /// The `[-1.5, 1.5]²` line-source domain.
    pub fn linesource(nx: usize, ny: usize) -> Result<Self> {
        Self::new(nx, ny, (-1.5, 1.5), (-1.5, 1.5))
    }

    /// The `[0, 7]²` lattice domain.
    pub fn lattice(nx: usize, ny: usize) -> Result<Self> {
        Self::new(nx, ny, (0.0, 7.0), (0.0, 7.0))
    }

    pub fn n_cells(&self) -> usize {
        self.nx * self.ny
    }

    pub fn cell_area(&self) -> f64 {
        self.dx * self.dy
    }

    pub fn x_center(&self, i: usize) -> f64 {
        self.xmin + (i as f64 + 0.5) * self.dx
    }

    pub fn y_center(&self, j: usize) -> f64 {
        self.ymin + (j as f64 + 0.5) * self.dy
    }

    /// Row length of the padded (ghosted) storage.
    pub fn padded_nx(&self) -> usize {
        self.nx + 2 * N_GHOST
    }

    pub fn padded_ny(&self) -> usize {
        self.ny + 2 * N_GHOST
    }

    pub fn padded_len(&self) -> usize {
        self.padded_nx() * self.padded_ny()
    }

    /// Index of interior cell `(i, j)` in padded storage.
    #[inline]
    pub fn padded_index(&self, i: usize, j: usize) -> usize {
        (j + N_GHOST) * self.padded_nx() + i + N_GHOST
    }

    /// Cell containing the point, if it lies in the domain.
    pub fn locate(&self, x: f64, y: f64) -> Option<(usize, usize)> {
        let fi = (x - self.xmin) / self.dx;
        let fj = (y - self.ymin) / self.dy;
        if fi < 0.0 || fj < 0.0 {
            return None;
        }
        let (i, j) = (fi as usize, fj as usize);
        (i < self.nx && j < self.ny).then_some((i, j))
    }
}

/// Per-cell material data, row-major (`j * nx + i`).
#[derive(Debug, Clone, PartialEq)]
pub struct MaterialField {
    pub sigma_a: Vec<f64>,
    pub sigma_s: Vec<f64>,
    pub sigma_as: Vec<f64>,
    pub source: Vec<f64>,
}

impl MaterialField {
    pub fn uniform(grid: &Grid2D, sigma_a: f64, sigma_s: f64, sigma_as: f64, source: f64) -> Self {
        let n = grid.n_cells();
        Self {
            sigma_a: vec![sigma_a; n],
            sigma_s: vec![sigma_s; n],
            sigma_as: vec![sigma_as; n],
            source: vec![source; n],
        }
    }

    /// Purely scattering medium (`σ_s = σ_t = 1`) of the line-source problem.
    pub fn linesource(grid: &Grid2D, sigma_as: f64) -> Self {
        Self::uniform(grid, 0.0, 1.0, sigma_as, 0.0)
    }

    pub fn len(&self) -> usize {
        self.sigma_a.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sigma_a.is_empty()
    }

    /// Physical total cross section `σ_a + σ_s` of cell `c`.
    pub fn sigma_t(&self, c: usize) -> f64 {
        self.sigma_a[c] + self.sigma_s[c]
    }

    pub fn set_sigma_as(&mut self, value: f64) {
        self.sigma_as.fill(value);
    }

    pub fn has_artificial_scattering(&self) -> bool {
        self.sigma_as.iter().any(|&s| s != 0.0)
    }

    pub fn validate(&self, grid: &Grid2D) -> Result<()> {
        let n = grid.n_cells();
        for (name, f) in [
            ("sigma_a", &self.sigma_a),
            ("sigma_s", &self.sigma_s),
            ("sigma_as", &self.sigma_as),
            ("source", &self.source),
        ] {
            if f.len() != n {
                return Err(Error::InvalidArgument(format!("{name} has {} cells, grid has {n}", f.len())));
            }
            if let Some(v) = f.iter().find(|v| !(**v >= 0.0 && v.is_finite())) {
                return Err(Error::InvalidArgument(format!("{name} contains invalid value {v}")));
            }
        }
        Ok(())
    }
}

/// Material class of one unit square of the lattice problem.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LatticeMaterial {
    Scatterer,
    Absorber,
    Source,
}

/// Material of the unit square with lower-left corner `(col, row)` cm.
///
/// The inner 5×5 block (columns and rows 1..=5) is a checkerboard whose
/// "even" squares absorb. The centre square `(3, 3)` is the source and the
/// square above it, `(3, 5)`, scatters, which leaves eleven absorbers.
pub fn lattice_material(col: usize, row: usize) -> LatticeMaterial {
    if (col, row) == (3, 3) {
        return LatticeMaterial::Source;
    }
    let inner = (1..=5).contains(&col) && (1..=5).contains(&row);
    if inner && (col + row) % 2 == 0 && (col, row) != (3, 5) {
        LatticeMaterial::Absorber
    } else {
        LatticeMaterial::Scatterer
    }
}

/// Material map of the lattice problem on `[0, 7]²`.
pub fn lattice_layout(grid: &Grid2D) -> Result<MaterialField> {
    if grid.nx % 7 != 0 || grid.ny % 7 != 0 {
        return Err(Error::Config(format!(
            "lattice grid {}x{} must be divisible by 7 in both directions",
            grid.nx, grid.ny
        )));
    }
    let covers = |a: f64, b: f64| (a - 0.0).abs() < 1e-12 && (b - 7.0).abs() < 1e-12;
    if !(covers(grid.xmin, grid.xmax) && covers(grid.ymin, grid.ymax)) {
        return Err(Error::Config("lattice grid must cover [0, 7]²".into()));
    }
    let (cx, cy) = (grid.nx / 7, grid.ny / 7);
    let mut mats = MaterialField::uniform(grid, 0.0, 1.0, 0.0, 0.0);
    for j in 0..grid.ny {
        for i in 0..grid.nx {
            let c = j * grid.nx + i;
            match lattice_material(i / cx, j / cy) {
                LatticeMaterial::Scatterer => {}
                LatticeMaterial::Absorber => {
                    mats.sigma_a[c] = 10.0;
                    mats.sigma_s[c] = 0.0;
                }
                LatticeMaterial::Source => {
                    mats.sigma_a[c] = 10.0;
                    mats.sigma_s[c] = 0.0;
                    mats.source[c] = 1.0;
                }
            }
        }
    }
    Ok(mats)
}

/// Angular flux `ψ_q` on the padded grid, stored ordinate-major: one
/// contiguous `(ny + 4) × (nx + 4)` slab per ordinate.
#[derive(Debug, Clone, PartialEq)]
pub struct AngularFlux {
    n_ordinates: usize,
    grid: Grid2D,
    data: Vec<f64>,
}

impl AngularFlux {
    pub fn zeros(grid: &Grid2D, n_ordinates: usize) -> Self {
        Self {
            n_ordinates,
            grid: *grid,
            data: vec![0.0; n_ordinates * grid.padded_len()],
        }
    }

    pub fn n_ordinates(&self) -> usize {
        self.n_ordinates
    }

    pub fn grid(&self) -> &Grid2D {
        &self.grid
    }

    pub fn slab_len(&self) -> usize {
        self.grid.padded_len()
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn slab(&self, q: usize) -> &[f64] {
        let n = self.slab_len();
        &self.data[q * n..(q + 1) * n]
    }

    pub fn slab_mut(&mut self, q: usize) -> &mut [f64] {
        let n = self.slab_len();
        &mut self.data[q * n..(q + 1) * n]
    }

    #[inline]
    pub fn get(&self, q: usize, i: usize, j: usize) -> f64 {
        self.data[q * self.slab_len() + self.grid.padded_index(i, j)]
    }

    #[inline]
    pub fn set(&mut self, q: usize, i: usize, j: usize, v: f64) {
        let k = q * self.slab_len() + self.grid.padded_index(i, j);
        self.data[k] = v;
    }

    /// Sets every ordinate in interior cell `(i, j)` to `v`.
    pub fn fill_cell(&mut self, i: usize, j: usize, v: f64) {
        for q in 0..self.n_ordinates {
            self.set(q, i, j, v);
        }
    }

    /// Vacuum boundary: zero incoming flux, i.e. all ghost values zero.
    pub fn zero_ghosts(&mut self) {
        let g = self.grid;
        let (pnx, pny) = (g.padded_nx(), g.padded_ny());
        for slab in self.data.chunks_mut(g.padded_len()) {
            for jj in 0..pny {
                let row = &mut slab[jj * pnx..(jj + 1) * pnx];
                if jj < N_GHOST || jj >= N_GHOST + g.ny {
                    row.fill(0.0);
                } else {
                    row[..N_GHOST].fill(0.0);
                    row[N_GHOST + g.nx..].fill(0.0);
                }
            }
        }
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// Interior values of ordinate `q`, row-major.
    pub fn interior(&self, q: usize) -> impl Iterator<Item = f64> + '_ {
        let g = self.grid;
        let slab = self.slab(q);
        (0..g.ny).flat_map(move |j| {
            let start = g.padded_index(0, j);
            slab[start..start + g.nx].iter().copied()
        })
    }

    /// Euclidean norm over interior values of all ordinates.
    pub fn interior_norm(&self) -> f64 {
        (0..self.n_ordinates)
            .map(|q| self.interior(q).map(|v| v * v).sum::<f64>())
            .sum::<f64>()
            .sqrt()
    }
}

/// A cell-centred scalar field, row-major (`j * nx + i`).
#[derive(Debug, Clone, PartialEq)]
pub struct Field2D {
    pub grid: Grid2D,
    pub values: Vec<f64>,
}

impl Field2D {
    pub fn zeros(grid: &Grid2D) -> Self {
        Self {
            grid: *grid,
            values: vec![0.0; grid.n_cells()],
        }
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[j * self.grid.nx + i]
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// CSV with header `x,y,phi`, preceded by optional `#` comment lines.
    pub fn to_csv(&self, comments: &[String]) -> String {
        let g = &self.grid;
        let mut out = String::with_capacity(64 * g.n_cells());
        for c in comments {
            writeln!(out, "# {c}").unwrap();
        }
        out.push_str("x,y,phi\n");
        for j in 0..g.ny {
            for i in 0..g.nx {
                writeln!(out, "{:e},{:e},{:e}", g.x_center(i), g.y_center(j), self.at(i, j)).unwrap();
            }
        }
        out
    }

    pub fn write_csv(&self, path: impl AsRef<Path>, comments: &[String]) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_csv(comments)).map_err(|e| Error::io(path, e))
    }
}

/// Isotropic Gaussian pulse `max(1e-4, exp(-|x|²/(4δ)) / (4πδ))`, `δ = 0.03²`,
/// evaluated at cell centres.
pub fn linesource_initial(grid: &Grid2D, quad: &QuadratureSet) -> AngularFlux {
    let delta = 0.03f64 * 0.03;
    let mut psi = AngularFlux::zeros(grid, quad.len());
    for j in 0..grid.ny {
        for i in 0..grid.nx {
            let (x, y) = (grid.x_center(i), grid.y_center(j));
            let v = (1.0 / (4.0 * PI * delta) * (-(x * x + y * y) / (4.0 * delta)).exp()).max(1e-4);
            psi.fill_cell(i, j, v);
        }
    }
    psi
}

/// `Φ_ij = Σ_q w_q ψ_q,ij`, summed in ordinate order.
pub fn scalar_flux(psi: &AngularFlux, quad: &QuadratureSet) -> Field2D {
    assert_eq!(psi.n_ordinates(), quad.len(), "flux/quadrature size mismatch");
    let g = *psi.grid();
    let mut phi = Field2D::zeros(&g);
    for (q, &w) in quad.weights().iter().enumerate() {
        for (out, v) in phi.values.iter_mut().zip(psi.interior(q)) {
            *out += w * v;
        }
    }
    phi
}
