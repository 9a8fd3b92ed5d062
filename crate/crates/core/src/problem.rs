//! A fully assembled transport problem: grid, ordinates, materials, and the
//! optional artificial-scattering operator.

use rayon::prelude::*;

use crate::error::Result;
use crate::kernels::{build_as_matrix, ArtificialKernelParams, ScatteringMatrix};
use crate::mesh::{AngularFlux, Field2D, Grid2D, MaterialField};
use crate::quadrature::QuadratureSet;

#[derive(Debug, Clone)]
pub struct ArtificialScattering {
    pub params: ArtificialKernelParams,
    pub matrix: ScatteringMatrix,
}

#[derive(Debug, Clone)]
pub struct TransportProblem {
    pub grid: Grid2D,
    pub quad: QuadratureSet,
    pub materials: MaterialField,
    /// `None` when every cell has `σ_as = 0`; the artificial term is then
    /// skipped entirely.
    pub artificial: Option<ArtificialScattering>,
}

impl TransportProblem {
    /// Plain S_N problem; any `σ_as` stored in `materials` is ignored.
    pub fn new(grid: Grid2D, quad: QuadratureSet, mut materials: MaterialField) -> Result<Self> {
        materials.validate(&grid)?;
        materials.set_sigma_as(0.0);
        Ok(Self {
            grid,
            quad,
            materials,
            artificial: None,
        })
    }

    /// Adds artificial scattering with a spatially constant strength `params.sigma_as`.
    pub fn with_artificial(mut self, params: ArtificialKernelParams) -> Result<Self> {
        self.materials.set_sigma_as(params.sigma_as);
        self.artificial = if params.is_active() {
            Some(ArtificialScattering {
                params,
                matrix: build_as_matrix(&self.quad, params.epsilon)?,
            })
        } else {
            None
        };
        Ok(self)
    }

    /// Convenience: `ε = β / N_q` for this problem's quadrature.
    pub fn with_artificial_strength(self, sigma_as: f64, beta: f64) -> Result<Self> {
        let params = ArtificialKernelParams::new(beta, sigma_as, self.quad.len())?;
        self.with_artificial(params)
    }

    pub fn n_ordinates(&self) -> usize {
        self.quad.len()
    }

    /// Isotropic in-scattering factor `c_q / (4π) = 1 / Σ_p w_p`.
    pub fn isotropic_factor(&self) -> f64 {
        1.0 / self.quad.weight_sum()
    }

    pub fn new_flux(&self) -> AngularFlux {
        AngularFlux::zeros(&self.grid, self.n_ordinates())
    }
}

/// Scalar flux of interior cells, parallel over grid rows with a fixed
/// summation order (ordinate index) per cell.
pub fn scalar_flux_par(psi: &AngularFlux, weights: &[f64]) -> Field2D {
    let g = *psi.grid();
    let mut phi = Field2D::zeros(&g);
    phi.values
        .par_chunks_mut(g.nx)
        .enumerate()
        .for_each(|(j, row)| {
            let start = g.padded_index(0, j);
            for (q, &w) in weights.iter().enumerate() {
                let src = &psi.slab(q)[start..start + g.nx];
                for (o, v) in row.iter_mut().zip(src) {
                    *o += w * v;
                }
            }
        });
    phi
}
