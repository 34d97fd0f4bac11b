//! Error types shared across the toolkit.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Input validation failed (bad spec fields, inconsistent lengths, ...).
    #[error("invalid specification: {0}")]
    InvalidSpec(String),

    /// A dressed-state label could not be assigned with overlap above 0.5.
    #[error("ambiguous dressing for bare label {label:?}: max overlap {overlap:.4} <= 0.5")]
    AmbiguousDressing { label: (usize, usize, usize), overlap: f64 },

    /// A zero-point-shift denominator came too close to a pole.
    #[error("zero-point shift pole: denominator {denominator:.3e} GHz below threshold")]
    Singularity { denominator: f64 },

    /// No sign change of the residual ZZ on the search interval.
    #[error("no cancellation point on (0, {d_max:.4}] GHz: residual keeps sign of {residual_sign:+.0}")]
    NoCancellationPoint { d_max: f64, residual_sign: f64 },

    /// Derivative-free calibration stalled above tolerance.
    #[error("calibration failed to converge: best residual {residual:.3e}")]
    CalibrationFailure { residual: f64 },

    /// Optimizer stalled above the required error target.
    #[error("gate calibration stalled: best coherent error {error:.3e} (trace: {trace})")]
    GateCalibrationFailure { error: f64, trace: String },

    /// Integrator violated its norm/trace conservation tolerance.
    #[error("integrator failure: {0}")]
    IntegratorFailure(String),

    /// Population at the truncation boundary exceeded the allowed level.
    #[error("truncation boundary population {population:.3e} exceeds 1e-6")]
    TruncationError { population: f64 },

    /// Leakage too large for a meaningful phase reading.
    #[error("leakage {leakage:.3e} exceeds {limit:.1e}; phase reading invalid")]
    LeakageError { leakage: f64, limit: f64 },

    /// Requested Hilbert-space dimension above the configured cap.
    #[error("resource limit: dimension {dim} exceeds cap {cap}")]
    ResourceLimit { dim: usize, cap: usize },

    /// CR drive coefficient vanished; error-budget ratios are undefined.
    #[error("degenerate drive: effective CX rate is zero")]
    DegenerateDrive,

    /// Numerical routine failed to converge.
    #[error("numerical failure: {0}")]
    NumericalFailure(String),

    /// Config file could not be read or parsed.
    #[error("config error: {0}")]
    Config(String),

    /// Filesystem error while writing artifacts.
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Process exit code contract: 2 for validation problems, 3 for numerical ones.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidSpec(_) | Error::Config(_) | Error::ResourceLimit { .. } => 2,
            Error::Io(_) => 2,
            _ => 3,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
