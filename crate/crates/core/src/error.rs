use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An index or value outside the domain an operation accepts.
    #[error("input out of domain: {0}")]
    InputDomain(String),

    #[error("unsupported market size {0}: at least 4 sellers are required")]
    UnsupportedMarketSize(usize),

    /// NaN or infinite values where finite numbers are required, or a
    /// probability vector with no mass.
    #[error("invalid numeric input: {0}")]
    NumericInput(String),

    #[error("invalid configuration: {0}")]
    Configuration(String),

    #[error("cannot pair samples: {0}")]
    Pairing(String),

    /// Statistics that need spread were given constant samples.
    #[error("degenerate sample: {0}")]
    DegenerateSample(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("incomplete result set: {0}")]
    Completeness(String),
}
