//! Error type shared by all modules.

use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Clone, Error)]
pub enum Error {
    /// Exact integer arithmetic exceeded the range of the result type.
    /// Counts are never silently wrapped.
    #[error("integer overflow while computing {context}")]
    Overflow { context: &'static str },

    /// An argument lies outside the mathematical domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// The continuous layer parameter was not bracketed below the search
    /// ceiling; the requested `N_eff` needs a larger ceiling.
    #[error("continuous layer parameter not bracketed within [1, {limit:e}]")]
    BracketExceeded { limit: f64 },

    /// A coordinate grid does not cover the support of the state.
    #[error(
        "grid too small on axis {axis}: spans [{min}, {max}] but must reach at least +/-{required}"
    )]
    GridTooSmall {
        axis: usize,
        min: f64,
        max: f64,
        required: f64,
    },

    /// Mode index beyond the tabulated basis size.
    #[error("mode index {index} exceeds the basis limit {max}")]
    ModeOutOfRange { index: usize, max: usize },

    /// The minimizer placed weight on the last tabulated shell; the
    /// truncation `M` must be raised for a trustworthy result.
    #[error("minimizer support reached the truncation shell {shell}; raise the shell count")]
    Truncation { shell: usize },

    /// Iterative minimization returned with constraints out of tolerance.
    #[error(
        "minimization did not reach feasibility: trace residual {trace_residual:e}, \
         purity residual {purity_residual:e}"
    )]
    Convergence {
        trace_residual: f64,
        purity_residual: f64,
    },

    /// An internal consistency check failed. This signals a bug in the
    /// library, not bad input.
    #[error("internal consistency check failed: {0}")]
    Internal(String),
}

pub type Result<T> = std::result::Result<T, Error>;
