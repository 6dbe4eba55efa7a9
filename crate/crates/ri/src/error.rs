//! Error type shared by every module in the crate.

use thiserror::Error;

/// Errors produced by grid construction, quadrature, closed-form solvers,
/// and the fixed-point solver.
#[derive(Debug, Error)]
pub enum RiError {
    /// Array lengths or grids do not line up.
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    /// An argument lies outside the mathematical domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A floating-point computation produced a non-finite or invalid value.
    #[error("numeric error: {0}")]
    Numeric(String),

    /// A grid does not span enough of the distribution's mass.
    #[error("grid coverage error: {0}")]
    Coverage(String),

    /// The multiplier bracket does not straddle the requested information budget.
    #[error("bracket error: information at bracket endpoints ({i_lo:.6} bits at lo, {i_hi:.6} bits at hi) does not straddle kappa = {kappa:.6} bits")]
    Bracket { i_lo: f64, i_hi: f64, kappa: f64 },

    /// A requested quantity does not exist (e.g. a divergent conditional mean).
    #[error("nonexistence: {0}")]
    Nonexistence(String),

    /// Malformed configuration file.
    #[error("config error at line {line}: {message}")]
    Config { line: usize, message: String },

    /// Command-line usage error (unknown key, missing required flag).
    #[error("usage error: {0}")]
    Usage(String),

    /// File I/O failure while writing result artifacts.
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, RiError>;
