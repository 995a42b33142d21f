use alloc::string::String;

/// Errors produced by the lattice, encoding and emulation routines.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// A caller-supplied parameter is outside its documented domain.
    #[error("invalid parameter: {0}")]
    Parameter(String),
    /// The rows of a basis are linearly dependent (singular Gram matrix).
    #[error("basis is rank deficient")]
    RankDeficient,
    /// Gram-Schmidt produced a numerically vanishing vector.
    #[error("Gram-Schmidt instability at row {row}")]
    Unstable { row: usize },
    /// Matrix or vector shapes do not agree.
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
    /// A search exceeded its configured work budget.
    #[error("search budget exceeded: {0}")]
    Budget(String),
    /// No lattice vector was found even after escalating the search radius.
    #[error("no lattice vector within radius {radius}")]
    InfeasibleRadius { radius: f64 },
    /// The penalty encoding needs every bound to be at least 2.
    #[error("penalty encoding needs bound >= 2, coordinate {coord} has {bound}")]
    UnsupportedBound { coord: usize, bound: u64 },
    /// The state vector would exceed the configured qubit guard.
    #[error("{qubits} qubits exceeds the state-vector guard of {limit}")]
    TooManyQubits { qubits: usize, limit: usize },
}

pub type Result<T, E = Error> = core::result::Result<T, E>;

pub(crate) fn param(msg: impl Into<String>) -> Error {
    Error::Parameter(msg.into())
}
