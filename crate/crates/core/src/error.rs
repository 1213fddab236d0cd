//! Crate-wide error type.

use thiserror::Error;

/// Errors produced by geometry construction and queries.
#[derive(Debug, Error)]
pub enum Error {
    /// Parameters violate a documented invariant.
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    /// The slanted defect segment does not fit inside the block width.
    #[error("defect segment too long: horizontal extent {projection} must be < width {width}")]
    DefectTooLong { projection: f64, width: f64 },
    /// Point lies outside the queried region.
    #[error("point out of domain: {0}")]
    OutOfDomain(String),
    /// Arithmetic between points tagged with different charts.
    #[error("chart mismatch: {0}")]
    ChartMismatch(String),
    /// Query requires smooth structure at a point of the defect segment,
    /// where none exists.
    #[error("point lies on the defect segment: {0}")]
    OnDefectSegment(String),
    /// Mesh spacing too coarse for the geometry being meshed.
    #[error("mesh spacing {h} too coarse; must be < {limit}")]
    MeshTooCoarse { h: f64, limit: f64 },
    /// No path between query points (defensive; meshes are connected by
    /// construction).
    #[error("no path between query points")]
    NoPath,
    /// Rate fit attempted on fewer than three usable samples.
    #[error("rate fit needs >= 3 positive samples, got {0}")]
    DegenerateFit(usize),
    /// A Jacobian that must be orientation-preserving is not.
    #[error("jacobian not orientation-preserving (det = {det})")]
    OrientationReversed { det: f64 },
    /// Underlying I/O failure while writing a report.
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
