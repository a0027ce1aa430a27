//! Grids on truncated cylinders, discrete differential operators, the two
//! extension operators and the discrete Helmholtz projection.
//!
//! Layout conventions (uniform staggered grid):
//!
//! * scalar fields are vertex-centered in `x` and cell-centered in the
//!   cross-section: values at `(x_i, y_{j+1/2}, z_{k+1/2})`. Axial Dirichlet
//!   data therefore sits exactly on grid values and `x = -a, 0, a` are grid
//!   points;
//! * pressures and divergences are cell-centered in all three directions;
//! * velocities use the MAC face layout: `u¹` at x-nodes (collocated with
//!   scalars), `u²` at y-faces, `u³` at z-faces. The discrete divergence is
//!   the conservative face-flux difference per cell and the Helmholtz
//!   projection makes it vanish identically.

pub mod dump;
pub mod extend;
pub mod grid;
pub mod ops;
pub mod project;
pub mod scalar;
pub mod vector;

pub use extend::{
    extend_temperature, extend_velocity, extension_epsilon, extension_lambdas, ExtensionReport,
};
pub use grid::ChannelGrid;
pub use ops::{advect_scalar, divergence, laplacian, AdvectionScheme, BoundaryTag};
pub use project::PoissonContext;
pub use scalar::{ScalarField, ScalarLayout};
pub use vector::VectorField;
