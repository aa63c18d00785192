//! Curves tangent to the centre-unstable cone field, hyperbolic pre-balls,
//! backward contraction and bounded distortion.
//!
//! Curves live on the universal cover and are stored as polylines whose
//! vertices carry the exact image of the seed tangent. Arc-length along the
//! polyline is the intrinsic distance on the disk.

mod curve;
mod preball;

pub use curve::{iterate_curve, iterate_curve_in_cone, iterate_history, CurveDisk, Seed};
pub use preball::{
    backward_contraction_check, c2_bound, distortion_ratio, distortion_telescoping,
    find_preball, find_preball_final, min_admissible_time, min_time_bound, tangent_series,
    ContractionReport, PreBall, TelescopingReport,
};
