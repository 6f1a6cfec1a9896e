use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    /// An argument lies outside the domain of the operation; the message names the constraint.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("pole of the gamma function at {0}")]
    Pole(f64),

    /// Adaptive quadrature ran out of subdivisions before meeting its tolerance.
    #[error("quadrature tolerance not met: estimate {estimate:e}, achieved error {error:e}")]
    ToleranceNotMet { estimate: f64, error: f64 },

    #[error("singular evaluation: {0}")]
    Singularity(String),

    #[error("rejection sampler gave up after {attempts} attempts")]
    RejectionBudgetExceeded { attempts: u64 },

    #[error("configuration error: {0}")]
    Config(String),
}

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
