use thiserror::Error;

/// Crate-wide error type.
#[derive(Error, Debug)]
pub enum Error {
    #[error("grid mismatch: expected length {expected}, got {got}")]
    GridMismatch { expected: usize, got: usize },

    #[error("grid length must be at least 2, got {0}")]
    GridTooShort(usize),

    #[error("curve values length {got} does not match grid length {expected}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("non-finite value at index {0}")]
    NonFinite(usize),

    #[error("multi-curve must have at least one channel")]
    EmptyMultiCurve,

    #[error("channel count mismatch: expected {expected}, got {got}")]
    ChannelMismatch { expected: usize, got: usize },

    #[error("window length {window_len} exceeds recording length {len}")]
    EmptyWindow { window_len: usize, len: usize },

    #[error("channel {channel} is degenerate: centered norm {norm:.3e} below 1e-12")]
    DegenerateChannel { channel: usize, norm: f64 },

    #[error("rank-deficient local fit at grid index {point}: {got} window points, need at least {needed}")]
    RankDeficient {
        point: usize,
        needed: usize,
        got: usize,
    },

    #[error("coefficient length {got} does not match basis count {expected}")]
    CoeffLengthMismatch { expected: usize, got: usize },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("label {label} out of range 1..={classes}")]
    LabelOutOfRange { label: usize, classes: usize },

    #[error("csv error at line {line}: {msg}")]
    Csv { line: u64, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
