use thiserror::Error;

/// Errors raised by the simulation library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("a bandit instance needs at least 2 arms, got {0}")]
    TooFewArms(usize),
    #[error("the maximum arm mean is not unique")]
    DuplicateMax,
    #[error("arm means must be finite")]
    NonFiniteMean,
    #[error("arm {arm} out of range for {k} arms")]
    ArmOutOfRange { arm: usize, k: usize },
    #[error("gap must be positive and finite, got {0}")]
    InvalidGap(f64),
    #[error("instance count must be at least 1")]
    EmptyBatch,

    #[error("invalid user parameters: {0}")]
    InvalidUserParams(String),
    #[error("an accepted recommendation must carry a reward")]
    RewardMissing,
    #[error("a rejected recommendation cannot carry a reward")]
    RewardUnexpected,

    #[error("delta must lie in {range}, got {value}")]
    InvalidDelta { value: f64, range: &'static str },
    #[error("budget must be at least 1")]
    InvalidBudget,
    #[error(
        "budget {budget} is too small for EXP3 with {k} arms (need T > K ln K = {threshold:.3})"
    )]
    BudgetTooSmall {
        budget: u64,
        k: usize,
        threshold: f64,
    },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("cell has {cell} arms but instance has {instance}")]
    ArmCountMismatch { cell: usize, instance: usize },
    #[error("experiment cell lists no algorithms")]
    EmptyAlgorithmList,
    #[error("nothing to emit")]
    EmptyInput,
    #[error("unsupported output format '{0}' (expected csv or json)")]
    UnsupportedFormat(String),

    #[error("c must lie in (0, 1/2), got {0}")]
    InvalidC(f64),
    #[error("N0 = {n0} must exceed the arm count K = {k}")]
    BudgetBelowK { n0: u64, k: usize },
    #[error(
        "construction degenerates: d = {d} does not exceed eps = {eps}; delta is not small enough"
    )]
    DegenerateConstruction { d: f64, eps: f64 },
    #[error("probe needs at least 100 replications, got {0}")]
    TooFewReplications(usize),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
