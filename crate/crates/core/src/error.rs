use thiserror::Error;

use crate::geom::Point2;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// The orbit left the square on which the horseshoe model is defined.
    #[error("point ({}, {}) escaped the domain", .0.x, .0.y)]
    DomainEscape(Point2),

    #[error("map is not invertible for {0}")]
    NotInvertible(String),

    #[error("splitting degenerate at ({}, {}): angle {angle:.3e} rad", .point.x, .point.y)]
    DegenerateSplitting { point: Point2, angle: f64 },

    #[error("zero vector has no cone membership")]
    ZeroVector,

    #[error("no zeta on the grid satisfies the domination inequality (best sup {best:.6})")]
    NoValidZeta { best: f64 },

    #[error("image tangent left the centre-unstable cone at vertex {vertex} (ratio {ratio:.4e} > width {width:.4e})")]
    ConeViolation { vertex: usize, ratio: f64, width: f64 },

    #[error("curve too short: image arc-radius {reached:.6e} < {needed:.6e}")]
    BoundaryHit { reached: f64, needed: f64 },

    #[error("{n} is not a {sigma}-hyperbolic time for the centre")]
    NotHyperbolicTime { n: usize, sigma: f64 },

    #[error("time {n} below the minimal admissible time {n0}")]
    TimeTooSmall { n: usize, n0: usize },

    #[error("inconsistent pre-ball windows: {0}")]
    InconsistentWindows(String),

    #[error("no hyperbolic times found up to {0}")]
    NoHyperbolicTimes(usize),

    #[error("grid resolution {h} too coarse: fewer than {min_cells} cells across a band of width {band}")]
    ResolutionTooCoarse { h: f64, band: f64, min_cells: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("parse error: {0}")]
    Parse(String),
}

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}
