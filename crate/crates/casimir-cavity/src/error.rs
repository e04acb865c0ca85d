use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("pole on the summation path: {0}")]
    PoleOnPath(String),
    #[error("no convergence after {terms} terms (estimated error {error:e}, wanted {wanted:e})")]
    NoConvergence { terms: usize, error: f64, wanted: f64 },
    #[error("domain error: {0}")]
    DomainError(String),
    #[error("closed form left an imaginary residue {imag:e} against real part {real:e}")]
    ImaginaryResidue { real: f64, imag: f64 },
    #[error("no sign change of the total force up to N = {n_max}")]
    NoCrossing { n_max: u64 },
    #[error("invalid input: {0}")]
    InvalidInput(String),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::DomainError(msg.into())
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }
}
