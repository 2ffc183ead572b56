use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension error: {0}")]
    Dimension(String),

    #[error("non-finite entry in {0}")]
    NonFinite(&'static str),

    #[error("direction is not a unit vector (norm {norm})")]
    NotUnit { norm: f64 },

    #[error("outcome must be +1 or -1, got {0}")]
    InvalidOutcome(i8),

    #[error("matrix is not Hermitian (max deviation {0:e})")]
    NonHermitian(f64),

    #[error("instrument is not trace non-increasing: branch probability {0}")]
    InvalidInstrument(f64),

    #[error("angle {value} rad outside [{min}, {max}]")]
    AngleOutOfRange { value: f64, min: f64, max: f64 },

    #[error("invalid pointer model: {0}")]
    InvalidPointer(String),

    #[error("no-signaling violated: {what} (deviation {deviation:e})")]
    Signaling { what: &'static str, deviation: f64 },

    #[error("visibility pair ({vis_zx}, {vis_diag}) not reachable by the noise model: {reason}")]
    InfeasibleVisibility {
        vis_zx: f64,
        vis_diag: f64,
        reason: &'static str,
    },

    #[error("no coincidences recorded for setting (x={x}, y1={y1}, y2={y2})")]
    EmptySetting { x: usize, y1: usize, y2: usize },

    #[error("circuit is not unitary (deviation {0:e})")]
    NonUnitary(f64),

    #[error("invalid configuration: field `{field}`: {reason}")]
    Config { field: &'static str, reason: String },
}
