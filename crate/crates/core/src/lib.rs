//! Discrete-ordinates radiative transfer on regular 2-D grids with an
//! artificial forward-peaked scattering term that smears ray effects.

pub mod benchmarks;
pub mod error;
pub mod explicit;
pub mod implicit;
pub mod krylov;
pub mod kernels;
pub mod mesh;
pub mod problem;
pub mod quadrature;
pub mod special;
pub mod stability;
pub mod vec3;

pub use error::{Error, Result};
pub use kernels::{ArtificialKernelParams, MomentMaps, ScatteringMatrix};
pub use mesh::{AngularFlux, Field2D, Grid2D, MaterialField};
pub use quadrature::QuadratureSet;
pub use problem::TransportProblem;
