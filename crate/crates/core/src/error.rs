//! Error types shared across the crate.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// An input that must be finite was NaN or infinite.
    #[error("non-finite input: {0}")]
    NonFinite(String),

    /// A spec was constructed with parameters outside its valid range.
    #[error("invalid specification: {0}")]
    InvalidSpec(String),

    /// The requested evaluation is not defined at this point
    /// (e.g. a second derivative at a kink).
    #[error("unsupported evaluation point: {0}")]
    UnsupportedPoint(String),

    /// Vector/matrix dimensions do not agree.
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    /// A point violates the feasible set of the problem.
    #[error("infeasible point: {0}")]
    Infeasible(String),

    /// Schweppe weights are undefined when the scaled covariate vanishes.
    #[error("degenerate leverage: ||B x||_2 = 0")]
    DegenerateLeverage,

    /// The solver produced a non-finite gradient or failed to converge.
    #[error("solver failure at iteration {iteration}: {reason}")]
    SolverFailure { iteration: usize, reason: String },

    /// Backtracking exceeded its doubling budget without finding a
    /// majorizing step size.
    #[error("curvature estimation failure: {doublings} doublings without majorization")]
    CurvatureEstimation { doublings: usize },

    /// A theoretical-bound evaluation was requested outside its domain.
    #[error("assumption violated: {0}")]
    AssumptionViolated(String),

    /// An experiment or data configuration failed validation.
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}
