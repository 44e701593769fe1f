use thiserror::Error;

/// Errors raised by the link model, detectors and experiment drivers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("bit string of length {len} is not a multiple of the {symbol_bits} bits carried per symbol")]
    BitLength { len: usize, symbol_bits: usize },

    /// A search space (sequence enumeration, trellis states, trial count)
    /// is larger than the configured bound.
    #[error("{what} needs {required} but the configured cap is {cap}")]
    CapExceeded {
        what: &'static str,
        required: u128,
        cap: u128,
    },

    #[error("unsupported: {0}")]
    Unsupported(String),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }

    /// True for refusals caused by a capability bound rather than bad input.
    pub fn is_capability_refusal(&self) -> bool {
        matches!(self, Error::CapExceeded { .. })
    }
}

pub type Result<T> = std::result::Result<T, Error>;
