use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// Argument outside the mathematical domain of a function (e.g. negative radius).
    #[error("argument out of domain: {0}")]
    OutOfDomain(String),
    #[error("invalid argument: {0}")]
    Argument(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    /// A quadrature error estimate exceeded the requested tolerance.
    #[error("accuracy target not met: {0}")]
    Accuracy(String),
    /// The operation is not supported for this domain variant.
    #[error("unsupported operation: {0}")]
    Capability(String),
    #[error("integrand is not finite at {location:?}")]
    NonFinite { location: Vec<f64> },
    #[error("degenerate domain: {0}")]
    Degenerate(String),
}

pub type Result<T> = std::result::Result<T, Error>;
