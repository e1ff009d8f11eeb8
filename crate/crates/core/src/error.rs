use alloc::string::String;

/// Errors raised by the core algorithms.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("dimension error: {0}")]
    Dimension(String),
    #[error("image too small: {width}x{height}, minimum dimension is {min}")]
    ImageTooSmall {
        width: usize,
        height: usize,
        min: usize,
    },
    #[error("parameter error: {0}")]
    Parameter(String),
    #[error("codec error: {0}")]
    Codec(String),
    #[error("geometry error: {0}")]
    Geometry(String),
    #[error("insufficient data: need at least {needed} matches, got {got}")]
    InsufficientData { needed: usize, got: usize },
    #[error("degenerate geometry: {0}")]
    DegenerateGeometry(String),
    #[error("degenerate cell for class `{class}`: template has no features")]
    DegenerateCell { class: String },
    #[error("empty selection: {0}")]
    EmptySelection(String),
}

pub type Result<T, E = Error> = core::result::Result<T, E>;
