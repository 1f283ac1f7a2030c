use thiserror::Error;

/// Errors raised by the library.
///
/// `Domain` covers parameter values outside their mathematical domain,
/// `Usage` covers structurally invalid calls (mismatched lengths, empty
/// inputs), `Integrity` covers forms evaluated against the wrong registry,
/// `Estimation` covers statistically underpowered requests, and `Solver`
/// covers root finding that cannot make progress.
#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("usage error: {0}")]
    Usage(String),

    #[error("integrity error: {0}")]
    Integrity(String),

    #[error("estimation error: {context}: need at least {required}, got {got}")]
    Estimation {
        context: String,
        required: usize,
        got: usize,
    },

    #[error("solver error: {0}")]
    Solver(String),
}

pub type Result<T> = std::result::Result<T, Error>;
