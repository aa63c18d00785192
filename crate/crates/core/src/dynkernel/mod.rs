//! Explicit planar systems, their derivatives, and numerical estimation of
//! the dominated splitting `E^cs + E^cu`.
//!
//! The manifold is the flat torus (cat maps) or the unit square (horseshoe),
//! so local charts are the identity and every curve computation happens in
//! plain coordinates.

mod splitting;
mod system;

pub use splitting::{
    domination_coefficient, estimate_splitting, estimate_splitting_with, ConstantSplitting,
    PowerSplitting, Splitting, SplittingField, DEFAULT_ANGLE_EPS,
};
pub use system::{cat_lambda_s, cat_lambda_u, Direction, SystemSpec, CAT_MATRIX};
