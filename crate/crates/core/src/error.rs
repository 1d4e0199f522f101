use thiserror::Error;

/// Every failure the library can report.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("structural error: {0}")]
    Structural(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("io error: {0}")]
    Io(String),

    #[error("lp solver failed numerically: {0}")]
    NumericalFailure(String),

    #[error("unknown lp variable id {0}")]
    UnknownVariable(usize),

    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    #[error("rounding failed: {0}")]
    RoundingFailure(String),

    #[error("no feasible solution exists: {0}")]
    Infeasible(String),

    #[error("conditioned lp solution is degenerate: {0}")]
    LiftingDegenerate(String),

    #[error("randomized rounding exhausted {0} trials")]
    RoundingExhausted(usize),

    #[error("cut loop exhausted after {0} cuts")]
    CutLoopExhausted(usize),

    #[error("cut is not violated by the current point")]
    NotViolated,

    #[error("universe element {0} is not covered by any set")]
    Uncoverable(usize),

    #[error("instance exceeds the exhaustive-search limit: {0}")]
    SizeLimit(String),

    #[error("random graph is degenerate: {0}")]
    DegenerateGraph(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(err: std::io::Error) -> Self {
        Error::Io(err.to_string())
    }
}
