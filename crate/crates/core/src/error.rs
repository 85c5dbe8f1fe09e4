use alloc::boxed::Box;
use core::fmt;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Clone, Debug, PartialEq)]
pub enum Error {
    DimensionMismatch { what: &'static str, expected: usize, found: usize },
    /// A disturbance exceeded the declared bound `w_bound`.
    DisturbanceTooLarge { norm: f64, bound: f64 },
    /// Spectral radius of A above 1 − δ (plus tolerance), or an unstable closed loop.
    Unstable { spectral_radius: f64, limit: f64 },
    /// The operation is only defined for K = 0.
    NonzeroStabilizer,
    InvalidParameter { name: &'static str, reason: &'static str },
    NegativeSignal(f64),
    /// The controller or schedule kind does not match the requested update.
    KindMismatch,
    UnknownScenario,
    /// Theta or disturbance segments leave a gap or overlap.
    BadSegments { t: usize },
    NoPredictionPolicy,
    NotConverged { iterations: usize, residual: f64 },
    AtStep { t: usize, source: Box<Error> },
}

impl Error {
    pub(crate) fn at_step(self, t: usize) -> Error {
        match self {
            e @ Error::AtStep { .. } => e,
            e => Error::AtStep { t, source: Box::new(e) },
        }
    }
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::DimensionMismatch { what, expected, found } => {
                write!(f, "dimension mismatch in {what}: expected {expected}, found {found}")
            }
            Error::DisturbanceTooLarge { norm, bound } => {
                write!(f, "disturbance norm {norm} exceeds bound {bound}")
            }
            Error::Unstable { spectral_radius, limit } => {
                write!(f, "spectral radius {spectral_radius} exceeds {limit}")
            }
            Error::NonzeroStabilizer => f.write_str("operation requires the stabilizer K to be zero"),
            Error::InvalidParameter { name, reason } => write!(f, "invalid {name}: {reason}"),
            Error::NegativeSignal(a) => write!(f, "schedule signal must be non-negative, got {a}"),
            Error::KindMismatch => f.write_str("controller kind does not match the update"),
            Error::UnknownScenario => f.write_str("unknown builtin scenario"),
            Error::BadSegments { t } => write!(f, "segments do not cover step {t} exactly once"),
            Error::NoPredictionPolicy => f.write_str("scenario has no prediction policy"),
            Error::NotConverged { iterations, residual } => {
                write!(f, "solver stopped after {iterations} iterations, residual {residual}")
            }
            Error::AtStep { t, source } => write!(f, "step {t}: {source}"),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for Error {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        match self {
            Error::AtStep { source, .. } => Some(source.as_ref()),
            _ => None,
        }
    }
}
