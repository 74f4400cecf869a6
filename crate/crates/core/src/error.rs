use std::io;

use thiserror::Error;

/// Errors produced anywhere in the extractor.
#[derive(Debug, Error)]
pub enum HogError {
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),
    #[error("format error: {0}")]
    Format(String),
    #[error("layout error: {0}")]
    Layout(String),
    #[error("dimension error: {0}")]
    Dimension(String),
    #[error("fixed-point format mismatch: {0}")]
    FormatMismatch(String),
    #[error("out-of-order input: {0}")]
    Order(String),
    #[error("out of bounds: {0}")]
    OutOfBounds(String),
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("count mismatch: expected {expected}, found {found}")]
    CountMismatch { expected: usize, found: usize },
    #[error("tap {0:?} was not enabled for this run")]
    TapNotEnabled(crate::pipeline::Tap),
    #[error("invalid configuration: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, HogError>;
