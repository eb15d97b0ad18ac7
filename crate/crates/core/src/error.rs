use thiserror::Error;

/// Errors produced by the library. The CLI maps variants onto exit codes
/// through [`Error::is_parameter_error`].
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("parameter out of range: {0}")]
    Domain(String),

    #[error("enumeration of {count} multi-indices exceeds the cap of {cap}")]
    Capacity { count: String, cap: u64 },

    #[error("integer overflow computing {0}; use the big-integer variant")]
    Overflow(String),

    #[error("analytic tail diverges: (v*r)^p = {ratio} >= 1")]
    TailDivergence { ratio: f64 },

    #[error("rescaling with non-constant factors is undefined for a family with an analytic tail")]
    RescaleWithTail,

    #[error("pluriharmonic merge of tails with different ratios ({0} vs {1})")]
    IncompatibleTails(f64, f64),

    #[error("ball maximization did not converge from any start (best lower bound {best})")]
    NonConvergence { best: f64 },

    #[error("majorant evaluation failed inside bracket [{lo}, {hi}]: {source}")]
    Bracket {
        lo: f64,
        hi: f64,
        #[source]
        source: Box<Error>,
    },

    #[error("family carries no sup-norm certificate for the l_{t} ball")]
    Uncertified { t: f64 },

    #[error("configurations differ: {0}")]
    ConfigMismatch(String),

    #[error("degenerate fit: {0}")]
    DegenerateFit(String),

    #[error("sweep aborted at n = {n} after {} records: {source}", partial.len())]
    SweepAborted {
        n: u64,
        partial: Vec<crate::asymptotics::SweepRecord>,
        #[source]
        source: Box<Error>,
    },

    #[error("malformed family document: {0}")]
    Format(String),
}

impl Error {
    /// True for errors caused by caller-supplied parameters rather than by
    /// a computation that failed on valid input.
    pub fn is_parameter_error(&self) -> bool {
        match self {
            Error::Domain(_)
            | Error::Capacity { .. }
            | Error::RescaleWithTail
            | Error::Uncertified { .. }
            | Error::ConfigMismatch(_)
            | Error::Format(_)
            | Error::IncompatibleTails(..) => true,
            Error::Bracket { source, .. } | Error::SweepAborted { source, .. } => {
                source.is_parameter_error()
            }
            _ => false,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
