use thiserror::Error;

/// Errors raised by the front-end blocks and the probe harness.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid geometry: {0}")]
    InvalidGeometry(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("invalid DoG parameters: {0}")]
    InvalidDog(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("kernel of {kernel} px does not fit an input of {input} px with reflective padding")]
    Size { kernel: usize, input: usize },

    #[error("invalid stimulus: {0}")]
    Stimulus(String),

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("bandwidth undefined: {0}")]
    UndefinedBandwidth(String),
}

pub type Result<T> = std::result::Result<T, Error>;
