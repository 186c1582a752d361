use thiserror::Error;

/// Errors produced by the geometry, transform and solver layers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("malformed fan: {0}")]
    MalformedFan(String),

    #[error("polytope is not ample: {0}")]
    NotAmple(String),

    #[error("superpotential evaluation requires all coordinates nonzero")]
    ZeroCoordinate,

    #[error("numeric overflow: {0}")]
    NumericOverflow(String),

    #[error("moment map left the polytope interior: {0}")]
    OutsidePolytope(String),

    #[error("point is within the boundary margin of the polytope: {0}")]
    BoundaryPoint(String),

    #[error("iteration did not converge: {0}")]
    NoConvergence(String),

    #[error("grid field queried outside its box: {0}")]
    OutsideGridBox(String),

    #[error("tail samples grow without bound: {0}")]
    Diverging(String),

    #[error("tail fit residual above tolerance with no trend: {0}")]
    Oscillating(String),

    #[error("section is not in the image of the transform: {0}")]
    NotExtendable(String),

    #[error("empty lattice stratum (expected nonempty for an ample polytope): {0}")]
    EmptyStratum(String),

    #[error("quadrature refinement did not converge: {0}")]
    QuadratureFailure(String),

    #[error("linear solve failed: {0}")]
    SolverFailure(String),

    #[error("solver residual above tolerance: {0}")]
    ResidualTooLarge(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("unsupported: {0}")]
    Unsupported(String),
}

pub type Result<T> = std::result::Result<T, Error>;
