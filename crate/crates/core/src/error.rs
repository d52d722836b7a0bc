use thiserror::Error;

/// Errors reported by the library.
///
/// Every variant carries enough context to tell the caller which input was
/// rejected; the command line front end maps them onto exit codes.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// An argument lies outside the domain of the requested operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A root was requested in a temperature range where none exists.
    #[error("no solution: {0}")]
    NoSolution(String),

    /// The requested quantity is not defined in the current temperature regime.
    #[error("regime error: {0}")]
    Regime(String),

    /// A state space or grid would exceed the configured size cap.
    #[error("size error: {what} needs {needed} entries, cap is {cap}")]
    Size { what: String, needed: u128, cap: u128 },

    /// A grid is too coarse to resolve the structure being asked for.
    #[error("resolution error: {0}")]
    Resolution(String),

    /// A structural assumption (unique negative eigenvalue, real spectrum,
    /// bracket sign change, solver convergence) failed numerically.
    #[error("structural error: {0}")]
    Structural(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
