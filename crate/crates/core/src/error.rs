use thiserror::Error;

/// Errors raised by the analysis and simulation routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A caller-supplied argument violates an operation's precondition.
    #[error("invalid input: {0}")]
    Input(String),

    /// A composition constructor could not satisfy its bounds.
    #[error("construction failed: {0}")]
    Construction(String),

    /// The integrator produced a non-finite state.
    #[error("integration failed at t = {time}: {message}")]
    Integration { time: f64, message: String },

    /// An analysis has no meaningful answer for the given model.
    #[error("analysis failed: {0}")]
    Analysis(String),

    /// A comparison resolved to an exact tie where a strict answer is required.
    #[error("tie: {0}")]
    Tie(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn input<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Input(msg.into()))
}
