use alloc::string::String;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("structural error: {0}")]
    Structural(String),
    #[error("state {0} is outside the state space")]
    StateOutOfRange(i64),
    #[error("no stationary law: {0}")]
    NoStationaryLaw(String),
    #[error("invalid reference measure at state {state}: {reason}")]
    InvalidReferenceMeasure { state: i64, reason: &'static str },
    #[error("killing leaves no surviving state")]
    DegenerateChain,
    #[error("h is not q-excessive at state {0}")]
    InvalidH(i64),
    #[error("I - qP is singular; the potential diverges")]
    DivergentPotential,
    #[error("invalid reference point {0}")]
    InvalidReference(i64),
    #[error("bundle has no killed vector for cutoff {0}")]
    IncompleteBundle(i64),
    #[error("wrong boundary: {0}")]
    WrongBoundary(&'static str),
    #[error("invalid corridor ({b}, {a})")]
    InvalidCorridor { b: i64, a: i64 },
    #[error("invalid step law: {0}")]
    InvalidStepLaw(&'static str),
    #[error("spectral degeneracy: {0}")]
    SpectralDegeneracy(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("numeric failure: {0}")]
    Numeric(String),
    #[error("domain error: {0}")]
    Domain(&'static str),
    #[error("negative entry {value:e} at ({row}, {col}) of the Siegmund dual")]
    NonMonotone { row: i64, col: i64, value: f64 },
}

pub type Result<T> = core::result::Result<T, Error>;
