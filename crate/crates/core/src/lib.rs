//! Numerical laboratory for partially hyperbolic dynamics on planar maps.
//!
//! The crate builds, on explicit two-dimensional systems, the constructive
//! ingredients behind the fact that smooth partially hyperbolic sets of
//! positive Lebesgue measure must contain unstable disks: dominated
//! splittings and cone fields ([`dynkernel`], [`conefield`]), hyperbolic
//! times and the Pliss selection ([`hyptimes`]), hyperbolic pre-balls and
//! bounded distortion along curves ([`diskflow`]), and the covering and
//! density argument together with trapped-set measures ([`covermeasure`]).
//!
//! Batch kernels run on rayon when the `parallel` feature is enabled (the
//! default) and fall back to sequential loops otherwise; see [`exec`].

pub mod conefield;
pub mod covermeasure;
pub mod diskflow;
pub mod dynkernel;
pub mod error;
pub mod exec;
pub mod geom;
pub mod hyptimes;
pub mod io;
pub mod rng;

pub use error::{Error, Result};
pub use exec::Exec;
pub use geom::{Mat2, Point2, Vec2};
