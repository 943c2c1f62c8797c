use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("states live on different grids")]
    GridMismatch,

    #[error("channel sets differ: {left:?} vs {right:?}")]
    ChannelMismatch { left: Vec<String>, right: Vec<String> },

    #[error("grid coverage insufficient: {0}")]
    Coverage(String),

    #[error("momentum grid too coarse: norm changes by {defect:.3e} between the full and half-resolution rules")]
    Aliasing { defect: f64 },

    #[error("expectation value has imaginary part {imaginary:.3e}; the principal-value kernel is not antisymmetric")]
    NonHermitian { imaginary: f64 },

    #[error("tail density has not decayed by tau = {tau_min:.3e}: last octave contributed {last_octave:.3e}")]
    Truncation { tau_min: f64, last_octave: f64 },

    #[error("operation requires a logarithmic energy grid")]
    NotLogarithmic,

    #[error("spectral projection of the state onto the lower interval is empty")]
    EmptyProjection,

    #[error("energies must be distinct (repeated value {0})")]
    RepeatedEnergy(f64),

    #[error("spatial window too small: {0}")]
    Window(String),
}

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
