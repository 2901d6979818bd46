use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("series is empty")]
    EmptySeries,

    #[error("duplicate pretraining token count at index {index}")]
    DuplicateAbscissa { index: usize },

    #[error("nonpositive metric value at index {index}")]
    NonpositiveValue { index: usize },

    #[error("nonpositive or non-finite token count at index {index}")]
    NonpositiveTokens { index: usize },

    #[error("invalid language mixture: {0}")]
    InvalidMixture(String),

    #[error("invalid translation task: {0}")]
    InvalidTask(String),

    #[error("invalid law parameters: {0}")]
    InvalidParams(String),

    #[error("invalid fit configuration: {0}")]
    InvalidConfig(String),

    #[error("law undefined at d_p = {d_p}")]
    InvalidDomain { d_p: f64 },

    #[error("target unreachable below 2^63 tokens")]
    Overflow,

    #[error("insufficient data: need at least {needed} points, got {got}")]
    InsufficientData { needed: usize, got: usize },

    #[error("objective became non-finite and backtracking could not recover")]
    NonFiniteObjective,

    #[error("series do not share identical token counts")]
    MismatchedAbscissae,

    #[error("no hypothesis has at least {n} tokens")]
    EmptyAfterNgrams { n: usize },

    #[error("invalid corpus: {0}")]
    InvalidCorpus(String),

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("malformed report: {0}")]
    Report(String),
}

impl Error {
    /// True for analytic failures (law domain, fitting) as opposed to bad input.
    pub fn is_domain(&self) -> bool {
        matches!(
            self,
            Error::InvalidDomain { .. }
                | Error::Overflow
                | Error::InsufficientData { .. }
                | Error::NonFiniteObjective
        )
    }
}
