use thiserror::Error;

/// Errors raised across the library. Each variant names the failed precondition.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("probabilities are not stochastic: {0}")]
    NonStochastic(String),
    #[error("ragged horizon: leaves at depths {0} and {1}")]
    RaggedHorizon(usize, usize),
    #[error("negative or non-finite consumption {0}")]
    NegativeConsumption(f64),
    #[error("stage {stage} out of range for horizon {horizon}")]
    StageOutOfRange { stage: usize, horizon: usize },
    #[error("lottery is not in the conditional-form class: {0}")]
    NotInMStar(String),
    #[error("parameter out of range: {0}")]
    ParamOutOfRange(String),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("IECIT would push a conditional probability outside [0,1]: {0}")]
    MassOverflow(String),
    #[error("IECIT pair has a zero marginal at consumption {0}")]
    ZeroMarginal(f64),
    #[error("argument {x} outside the domain of {what}")]
    DomainViolation { what: String, x: f64 },
    #[error("value {y} outside the range of {what}")]
    RangeViolation { what: String, y: f64 },
    #[error("no root in bracket: {0}")]
    NoRoot(String),
    #[error("closed forms exist only for rho = 0 (got {0})")]
    UnsupportedRho(f64),
    #[error("no bracket for target: {0}")]
    NoBracket(String),
    #[error("minimization did not converge: {0}")]
    NonConvergence(String),
    #[error("degenerate Renyi order q = {0}")]
    DegenerateQ(f64),
    #[error("value iteration lost monotonicity at sweep {0}")]
    NonContraction(usize),
    #[error("iteration cap {0} reached")]
    IterationCap(usize),
    #[error("no decreasing relative risk aversion witness: {0}")]
    NoWitness(String),
    #[error("integrand is singular: {0}")]
    SingularIntegrand(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("invalid lottery JSON: {0}")]
    Json(String),
}

pub type Result<T> = std::result::Result<T, Error>;
