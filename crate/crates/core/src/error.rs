use alloc::string::String;
use alloc::vec::Vec;

pub type Result<T, E = KrcError> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum KrcError {
    #[error("self-comparison of item {0}")]
    SelfComparison(usize),
    #[error("outcome must be 0 or 1, got {0}")]
    InvalidOutcome(String),
    #[error("ties are not supported by the binary comparison model")]
    Tie,
    #[error("non-finite timestamp {0}")]
    NonFiniteTime(f64),
    #[error("item {item} is outside the roster of {n} items")]
    UnknownItem { item: usize, n: usize },
    #[error("label `{0}` is not in the declared roster")]
    UnknownLabel(String),
    #[error("dataset contains no comparisons")]
    EmptyDataset,
    #[error("need at least two items, got {0}")]
    TooFewItems(usize),
    #[error("bandwidth must be positive and finite, got {0}")]
    InvalidBandwidth(f64),
    #[error("teleportation probability must lie in [0, 1), got {0}")]
    InvalidRegularization(f64),
    #[error("every pair has zero kernel mass at t={t} with h={h}")]
    ZeroKernelMass { t: f64, h: f64 },
    #[error("diagonal entry {value} of row {row} is negative beyond rounding")]
    NegativeDiagonal { row: usize, value: f64 },
    #[error("stationary solver did not converge: residual {residual:e} after {iterations} iterations")]
    NonConvergence { residual: f64, iterations: usize },
    #[error("eigenvalue decomposition failed")]
    EigenFailure,
    #[error("matrix A + e pi^T is singular; pi is not the stationary vector of P")]
    SingularGroupInverse,
    #[error("rank-one update denominator {0:e} is numerically zero")]
    SingularUpdate(f64),
    #[error("perturbation does not preserve row sums (sum {0:e})")]
    UnbalancedPerturbation(f64),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("scores must be strictly positive (item {item} has {value})")]
    NonPositiveScore { item: usize, value: f64 },
    #[error("comparison graph is not strongly connected")]
    Disconnected,
    #[error("asymptotic precision undefined for items {0:?} (no observed opponents)")]
    UndefinedPrecision(Vec<usize>),
    #[error("confidence level must lie in (0, 1), got {0}")]
    InvalidLevel(f64),
    #[error("t={t} is too close to the boundary for a finite-difference step of {step}")]
    BoundaryTooClose { t: f64, step: f64 },
    #[error("likelihood decreased from {before} to {after} at iteration {iteration}")]
    LikelihoodDecrease { before: f64, after: f64, iteration: usize },
    #[error("evaluation grid does not match: {0}")]
    GridMismatch(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}
