use thiserror::Error;

/// Every failure the solvers can report.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid instance: {0}")]
    InvalidInstance(String),
    #[error("invalid problem parameters: {0}")]
    InvalidSpec(String),
    #[error("every client pair has distance 0")]
    AllCoincident,
    #[error("radius {radius} missing from the grid of client {client}")]
    GridMissingRadius { client: usize, radius: f64 },
    #[error("client {client} has no grid radius with mass at least {alpha}")]
    NoRadius { client: usize, alpha: f64 },
    #[error("balls of clients {a} and {b} are not disjoint")]
    OverlappingBalls { a: usize, b: usize },
    #[error("LP backend failed: {0}")]
    NumericalFailure(String),
    #[error("invariant breach: {0}")]
    InvariantBreach(String),
    #[error("certificate check failed: {0}")]
    CertificateFailure(String),
    #[error("functional graph has a cycle longer than two through rep {0}")]
    CycleNotPair(usize),
    #[error("no feasible solution exists")]
    Infeasible,
    #[error("cut limit of {cap} iterations exceeded at guess {opt_g}")]
    CutLimitExceeded { cap: usize, opt_g: f64 },
    #[error("enumeration of {count} center sets exceeds the budget of {budget}")]
    TooLarge { count: u128, budget: u128 },
    #[error("part {part} contains the edge ({u}, {v})")]
    NotIndependent { part: usize, u: usize, v: usize },
}

pub type Result<T> = std::result::Result<T, Error>;
