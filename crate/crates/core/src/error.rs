use thiserror::Error;

use crate::sim::SimTrace;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    Config(String),

    /// The unregularized OND law is undefined on the `x1 = 0` axis.
    #[error("OND singularity at state (x1 = {x1}, x2 = {x2}): x1 = 0 is outside the admissible set")]
    Singularity { x1: f64, x2: f64 },

    /// The integrated state left the finite reals. Carries everything recorded
    /// up to the last good control sample.
    #[error("non-finite state at t = {t} s: (x1 = {x1:e}, x2 = {x2:e})")]
    NonFinite {
        t: f64,
        x1: f64,
        x2: f64,
        partial: Box<SimTrace>,
    },

    #[error("no steady state reached within {horizon} s")]
    Timeout { horizon: f64 },

    #[error("identification loop unstable at omega = {omega} rad/s")]
    Unstable { omega: f64 },

    #[error("every frequency-response point was excluded from the fit")]
    DegenerateData,

    #[error("out of range: {0}")]
    OutOfRange(String),
}

impl Error {
    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }
}
