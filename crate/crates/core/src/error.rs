use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum InputError {
    #[error("{what}: expected {expected} bytes, got {got}")]
    Length { what: &'static str, expected: usize, got: usize },
    #[error("malformed input: {0}")]
    Malformed(&'static str),
}

/// Top-level error for callers that drive several subsystems at once.
#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Input(#[from] InputError),
    #[error(transparent)]
    Merkle(#[from] crate::merkle::MerkleError),
    #[error(transparent)]
    Proof(#[from] crate::proof::ProofError),
    #[error(transparent)]
    Committee(#[from] crate::committee::CommitteeError),
    #[error(transparent)]
    Ledger(#[from] crate::ledger::Rejection),
    #[error(transparent)]
    Reputation(#[from] crate::reputation::ReputationError),
    #[error(transparent)]
    Gas(#[from] crate::gas::GasError),
    #[error(transparent)]
    Sim(#[from] crate::sim::SimError),
    #[error("config: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
