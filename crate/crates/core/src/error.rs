use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Every failure mode surfaced by the toolkit.
///
/// Configuration problems (`Parse`, `Validation`, `UnknownKey`) are kept
/// apart from numerical ones so that callers such as the CLI can map them
/// onto distinct exit codes.
#[derive(Debug, Error)]
pub enum Error {
    #[error("evaluation outside metric domain at {point:?}: {reason}")]
    EvaluationOutsideDomain { point: Vec<f64>, reason: String },

    #[error("invalid radial profile at r = {radius}: {reason}")]
    InvalidProfile { radius: f64, reason: String },

    #[error("metric is singular at {point:?}")]
    SingularMetric { point: Vec<f64> },

    #[error("metric depends on the azimuthal angle (deviation {deviation:e})")]
    NotAxisymmetric { deviation: f64 },

    #[error("no real characteristic directions (spatial determinant {delta:e} > 0)")]
    NoRealCharacteristics { delta: f64 },

    #[error("point is not on the ergosphere (spatial determinant {delta:e})")]
    NotOnErgosphere { delta: f64 },

    #[error("spatial block has rank below n - 1 at {point:?}")]
    DegenerateRank { point: Vec<f64> },

    #[error("malformed curve: {0}")]
    MalformedCurve(String),

    #[error("sign of the time-space coupling is not uniform on the surface")]
    MixedSign,

    #[error("surface is not characteristic (residual {residual:e})")]
    NotCharacteristic { residual: f64 },

    #[error("time root vanishes for a characteristic covector at {point:?}")]
    ZeroRoot { point: Vec<f64> },

    #[error("curve leaves the ergoregion at {point:?}")]
    NotInErgoregion { point: Vec<f64> },

    #[error("no ergosphere found along the radial probe through {point:?}")]
    ErgosphereNotFound { point: Vec<f64> },

    #[error("null constraint drifted to {residual:e} at s = {s}")]
    ConstraintDrift { residual: f64, s: f64 },

    #[error("characteristic frame labeling failed at {point:?}")]
    FrameDiscontinuity { point: Vec<f64> },

    #[error("time rate of the lifted bicharacteristic vanishes at {point:?}")]
    ZeroTimeRate { point: Vec<f64> },

    #[error("no sign change of the spatial determinant along probe angle {angle}")]
    NoSignChange { angle: f64 },

    #[error("orbit did not return to the section: {0}")]
    NoReturn(String),

    #[error("step size underflow in ODE integration at t = {t}")]
    StepSizeUnderflow { t: f64 },

    #[error("grid too coarse: {0}")]
    GridTooCoarse(String),

    #[error("time step {dt:e} exceeds the stability limit {limit:e}")]
    CflViolation { dt: f64, limit: f64 },

    #[error("non-finite field value at t = {t} (step {step})")]
    NonFiniteField { t: f64, step: usize },

    #[error("initial energy is zero")]
    ZeroEnergy,

    #[error("rim normalization -g^rr is not positive at theta = {theta}")]
    NormalizationDomainError { theta: f64 },

    #[error("base metric does not bound a black hole: {0}")]
    NotABlackHole(String),

    #[error("perturbation support reaches {reach} but must stay below {limit}")]
    PerturbationLeak { reach: f64, limit: f64 },

    #[error("potential does not vanish on the outer rim (|b| = {value:e})")]
    BoundaryPotentialNonzero { value: f64 },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("parse error at `{path}`: {message}")]
    Parse { path: String, message: String },

    #[error("validation error at `{key}`: {message}")]
    Validation { key: String, message: String },

    #[error("unknown key `{0}`")]
    UnknownKey(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    /// True for errors caused by a bad scenario description rather than by
    /// the numerics.
    pub fn is_config_error(&self) -> bool {
        matches!(
            self,
            Error::Parse { .. } | Error::Validation { .. } | Error::UnknownKey(_)
        )
    }

    pub(crate) fn outside(x: &[f64], reason: impl Into<String>) -> Self {
        Error::EvaluationOutsideDomain {
            point: x.to_vec(),
            reason: reason.into(),
        }
    }

    pub(crate) fn validation(key: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Validation {
            key: key.into(),
            message: message.into(),
        }
    }
}
