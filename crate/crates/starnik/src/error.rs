use thiserror::Error;

/// Errors surfaced by the construction and evaluation routines.
#[derive(Debug, Error)]
pub enum Error {
    /// A star-system invariant is violated; the message names the first
    /// offending constraint.
    #[error("invalid star system: {0}")]
    InvalidSystem(String),

    /// Evaluation point too close to a quadrature node or a cut.
    #[error("evaluation point within pole guard: min distance {min_dist:e} < {guard:e}")]
    PoleProximity { min_dist: f64, guard: f64 },

    /// Density kind not supported by the requested operation.
    #[error("unsupported density: {0}")]
    UnsupportedDensity(String),

    /// The orthogonality system for Q_n is numerically singular. Normality is
    /// a theorem for valid inputs, so this signals exhausted precision.
    #[error("normality check failed at n = {n}: pivot ratio {pivot_ratio:e} at precision {prec}")]
    NormalityFailure { n: usize, pivot_ratio: f64, prec: u32 },

    /// A structural statement (zero counts, zero location, sign pattern)
    /// failed to hold numerically.
    #[error("structural failure: {0}")]
    StructuralFailure(String),

    /// Iterative solver exhausted its budget.
    #[error("no convergence after {iters} iterations (residual {residual:e})")]
    NoConvergence { iters: usize, residual: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;
