use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("mode index {index} out of range for {n_modes}-mode state")]
    Index { index: usize, n_modes: usize },

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("calibration error: {0}")]
    Calibration(String),

    #[error("feedforward gain too low: tap reflectivity {eps} would be >= 1")]
    GainTooLow { eps: f64 },

    #[error("unphysical input: {0}")]
    UnphysicalInput(String),

    #[error("no spectrum bins inside the averaging band")]
    EmptyBand,

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("truncation error: {0}")]
    Truncation(String),

    #[error("convergence error: {0}")]
    Convergence(String),
}

pub(crate) fn check_fraction(name: &str, value: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&value) {
        return Err(Error::InvalidArgument(format!(
            "{name} must lie in [0, 1], got {value}"
        )));
    }
    Ok(())
}
