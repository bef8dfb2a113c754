//! Error types shared across the crate.

use thiserror::Error;

/// Construction, evaluation, and simulation failures.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("topology must have at least one follower")]
    EmptyTopology,
    #[error("adjacency matrix must be square: row {row} has {len} entries for {n} followers")]
    AdjacencyShape { row: usize, len: usize, n: usize },
    #[error("adjacency entries must be 0 or 1: found {value} at ({i}, {j})")]
    AdjacencyEntry { i: usize, j: usize, value: u8 },
    #[error("self-loop on follower {0}: adjacency diagonal must be zero")]
    SelfLoop(usize),
    #[error("pinning vector has length {len}, expected {n}")]
    PinningLength { len: usize, n: usize },
    #[error("pinning gain of follower {0} must be non-negative and finite")]
    InvalidPinning(usize),
    #[error("follower {0} receives no information: in-degree plus pinning gain must be positive")]
    IsolatedFollower(usize),
    #[error("follower index {index} out of range for {n} followers")]
    FollowerIndex { index: usize, n: usize },
    #[error("{context}: expected length {expected}, got {actual}")]
    Length {
        context: &'static str,
        expected: usize,
        actual: usize,
    },
    #[error("{name} must satisfy {constraint} (got {value})")]
    Parameter {
        name: &'static str,
        constraint: &'static str,
        value: f64,
    },
    #[error("matrix is not Hurwitz: eigenvalue {real}{imag:+}i has non-negative real part")]
    NotHurwitz { real: f64, imag: f64 },
    #[error("{0} must be symmetric positive definite")]
    NotPositiveDefinite(&'static str),
    #[error("expression error: {0}")]
    Expr(String),
    #[error("reference derivative mismatch at t = {t}: finite difference differs by {difference}")]
    ReferenceMismatch { t: f64, difference: f64 },
    #[error("non-finite value in {what} at level {level}")]
    NonFinite { what: &'static str, level: usize },
    #[error("simulation diverged at t = {time} on agent {agent}")]
    Divergence { time: f64, agent: usize },
    #[error("event at t = {attempted} does not advance past the previous event at t = {last}")]
    EventOrder { last: f64, attempted: f64 },
    #[error("unknown trigger strategy '{0}': expected one of fixed, relative, switch, periodic")]
    UnknownStrategy(String),
    #[error("scenarios are not comparable: {0}")]
    NotComparable(String),
}

pub type Result<T> = std::result::Result<T, Error>;
