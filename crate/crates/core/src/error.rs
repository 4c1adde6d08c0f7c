use thiserror::Error;

/// Which part of the embedding pipeline produced a failure.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Stage {
    Preprocess,
    PhaseOne,
    Exceptional,
    PhaseTwo,
    XiGood,
}

impl std::fmt::Display for Stage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Stage::Preprocess => "preprocess",
            Stage::PhaseOne => "phase-one",
            Stage::Exceptional => "exceptional-step",
            Stage::PhaseTwo => "phase-two",
            Stage::XiGood => "xi-good",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the operation's domain.
    #[error("domain error: {0}")]
    Domain(String),
    /// Caller-side hypothesis of an operation does not hold.
    #[error("precondition failed: {0}")]
    Precondition(String),
    /// The instance is too large for an exact routine.
    #[error("capability exceeded: {0}")]
    Capability(String),
    /// A randomized or combinatorial construction could not be completed.
    #[error("{stage} failed: {message}")]
    Embedding { stage: Stage, message: String },
    #[error("infeasible: {0}")]
    Infeasible(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn embedding(stage: Stage, message: impl Into<String>) -> Self {
        Error::Embedding { stage, message: message.into() }
    }

    /// True for errors caused by violated hypotheses rather than algorithmic failure.
    pub fn is_precondition(&self) -> bool {
        matches!(self, Error::Precondition(_) | Error::Domain(_))
    }
}

pub type Result<T> = std::result::Result<T, Error>;
