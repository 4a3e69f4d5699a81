use thiserror::Error;

/// Errors raised by the numerical and allocation routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("root not bracketed: f({lo}) = {f_lo}, f({hi}) = {f_hi}")]
    Bracket {
        lo: f64,
        hi: f64,
        f_lo: f64,
        f_hi: f64,
    },

    #[error("no convergence after {iterations} iterations")]
    Convergence { iterations: usize },

    #[error("infeasible target {target}: achievable range is ({low}, {high})")]
    Infeasible { target: f64, low: f64, high: f64 },

    #[error("derivative is singular: {0}")]
    Singularity(String),

    #[error("precondition violated: {0}")]
    Precondition(String),
}

pub type Result<T> = std::result::Result<T, Error>;
