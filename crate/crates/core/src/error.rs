use thiserror::Error;

use crate::lp::{LpError, LpStatus};

#[derive(Debug, Error)]
pub enum Error {
    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("invalid mixed strategy: {0}")]
    InvalidStrategy(String),

    #[error("invalid game: {0}")]
    InvalidGame(String),

    /// The requested computation needs payoffs the caller does not have
    /// (e.g. an exploiter solve on a game without exploiter payoffs).
    #[error("missing information: {0}")]
    MissingInformation(&'static str),

    #[error(transparent)]
    Lp(#[from] LpError),

    /// The exploiter LP stayed unbounded after the slack retry, which means the
    /// victim's maximin set was numerically empty.
    #[error("victim maximin set is numerically empty (exploiter LP unbounded)")]
    EmptyVictimSet,

    #[error("LP returned an impossible status {0:?}")]
    UnexpectedLpStatus(LpStatus),

    #[error("stage (step {step}, state {state}): {source}")]
    Stage {
        step: usize,
        state: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("oracle size cap exceeded: {0}")]
    OracleTooLarge(String),
}

impl Error {
    /// Strips any `Stage` wrappers.
    pub fn root(&self) -> &Error {
        match self {
            Error::Stage { source, .. } => source.root(),
            other => other,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
