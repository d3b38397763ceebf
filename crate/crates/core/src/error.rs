use std::fmt;

use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Engine(#[from] EngineFault),

    #[error("analysis error: {0}")]
    Analysis(String),

    /// A quantity that has no defined value for the given input (for
    /// example a virial ratio with zero interaction energy).
    #[error("undefined value: {0}")]
    Undefined(String),

    #[error("malformed input: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub(crate) fn analysis(msg: impl Into<String>) -> Self {
        Error::Analysis(msg.into())
    }

    pub(crate) fn format(msg: impl Into<String>) -> Self {
        Error::Format(msg.into())
    }
}

/// What went wrong inside the event loop.
#[derive(Debug, Clone, PartialEq)]
pub enum FaultKind {
    /// The crossing solver hit its iteration cap.
    SolverDiverged { y0: f64, w0: f64, forcing: f64 },
    /// A gap went negative beyond tolerance after an update.
    NegativeGap { gap: usize, y: f64 },
    /// A wrap was requested for a particle that is not extreme-ranked.
    NonExtremeWrap { rank: usize },
    /// A propagation was asked to run backwards in time.
    NegativeStep { dt: f64 },
    /// A non-finite position or velocity appeared.
    NonFinite { rank: usize },
}

impl fmt::Display for FaultKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FaultKind::SolverDiverged { y0, w0, forcing } => write!(
                f,
                "crossing solver did not converge (y0={y0:e}, w0={w0:e}, forcing={forcing:e})"
            ),
            FaultKind::NegativeGap { gap, y } => write!(f, "gap {gap} negative after update: {y:e}"),
            FaultKind::NonExtremeWrap { rank } => write!(f, "wrap requested for interior rank {rank}"),
            FaultKind::NegativeStep { dt } => write!(f, "negative propagation step {dt:e}"),
            FaultKind::NonFinite { rank } => write!(f, "non-finite state at rank {rank}"),
        }
    }
}

/// Fatal engine condition. Carries the event count and time at which it was
/// raised; a run never continues past one.
#[derive(Debug, Clone, PartialEq, Error)]
#[error("engine fault at tau={tau} after {events} events: {kind}")]
pub struct EngineFault {
    pub kind: FaultKind,
    pub tau: f64,
    pub events: u64,
}
