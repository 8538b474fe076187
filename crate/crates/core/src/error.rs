use thiserror::Error;

use crate::expr::ExprError;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("state {state:?} lies outside the admissible domain")]
    Domain { state: Vec<f64> },

    #[error("non-finite value while evaluating {what} at {state:?}")]
    Evaluation { what: &'static str, state: Vec<f64> },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("entropy Hessian not positive definite at {state:?}")]
    NotPositiveDefinite { state: Vec<f64> },

    #[error("strict hyperbolicity violated at state {state:?} (eigenvalue gap {gap:e})")]
    NotStrictlyHyperbolic { state: Vec<f64>, gap: f64 },

    #[error("symmetrized Jacobian is not symmetric at {state:?} (residual {residual:e})")]
    NotSymmetrizable { state: Vec<f64>, residual: f64 },

    #[error("shift {shift} resonant with spectrum (eigenvalue {eigenvalue})")]
    ResonantShift { shift: f64, eigenvalue: f64 },

    #[error("degenerate column {index}")]
    DegenerateColumn { index: usize },

    #[error("continuation stalled at s={s}")]
    Stalled { s: f64 },

    #[error("linearized RH not uniquely solvable at s={s}")]
    RankDeficient { s: f64 },

    #[error("target not on traced segment")]
    NotBracketed,

    #[error("s_plus={s_plus} beyond traced range [0, {s_max}]")]
    OutOfRange { s_plus: f64, s_max: f64 },

    #[error("degenerate: zero-amplitude shock")]
    ZeroAmplitude,

    #[error("entropy flux unavailable")]
    EntropyFluxUnavailable,

    #[error("not on shock branch: {0}")]
    NotOnShockBranch(String),

    #[error("unknown system '{0}'")]
    UnknownSystem(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("system validation failed at {state:?}: {reason}")]
    Validation { state: Vec<f64>, reason: String },

    #[error(transparent)]
    Expr(#[from] ExprError),
}
