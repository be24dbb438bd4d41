use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("bad magic tag")]
    BadMagic,
    #[error("stream truncated: {0}")]
    TruncatedStream(&'static str),
    #[error("non-finite or unknown-flow value at pixel {index}")]
    NonFiniteValue { index: usize },
    #[error("malformed chain stream: {0}")]
    MalformedStream(String),
    #[error("value {value} outside quantisation range [{min}, {max}]")]
    OutOfRange { value: f64, min: f64, max: f64 },
    #[error("invalid parameter: {0}")]
    InvalidParams(String),
    #[error("inpainting problem is underdetermined: component containing pixel {pixel} has no known value")]
    Underdetermined { pixel: usize },
    #[error("conjugate gradients did not converge in {iterations} iterations (relative residual {relative_residual:e})")]
    MaxIterationsExceeded {
        iterations: usize,
        relative_residual: f64,
    },
    #[error("unsupported container version {0}")]
    VersionMismatch(u8),
    #[error("corrupt payload: {0}")]
    CorruptPayload(String),
    #[error("dimension mismatch: {0}x{1} vs {2}x{3}")]
    DimensionMismatch(usize, usize, usize, usize),
    #[error("no grid point reaches compression ratio {target}:1")]
    NoFeasiblePoint { target: f64 },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn corrupt(msg: impl Into<String>) -> Self {
        Error::CorruptPayload(msg.into())
    }

    pub(crate) fn malformed(msg: impl Into<String>) -> Self {
        Error::MalformedStream(msg.into())
    }
}
