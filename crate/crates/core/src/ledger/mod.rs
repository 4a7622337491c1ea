//! The identity ledger (IDML) and the crowdsourcing ledger (CSML).
//!
//! Both are single-writer state machines: a transaction either applies
//! completely or is rejected with a [`Rejection`] and leaves state untouched.

pub mod csml;
pub mod idml;
pub mod log;
pub mod tokens;
pub mod tx;

use thiserror::Error;

use crate::merkle::MerkleError;
use crate::reputation::ReputationError;

pub use csml::{CsmlConfig, CsmlState, ReputationChange, Task, TaskStatus};
pub use idml::{ContextCredential, EventSink, IdmlState, LedgerEvent, MasterCredential};
pub use log::{LogRecord, TxLog, Verdict};
pub use tokens::{AccessToken, DepositNote, ReputationToken};
pub use tx::{
    MetricEntry, PublicTx, TxAm, TxAs, TxDeposit, TxNewTask, TxPayOut, TxRm, TxRs, TxRu, TxSubToTask, TxUpdateRt,
    TxWithdraw,
};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Rejection {
    #[error("access denied: context key not granted")]
    AccessDenied,
    #[error("an access token was already minted for this context key")]
    AlreadyMinted,
    #[error("access token already spent")]
    AccessTokenSpent,
    #[error("duplicate leaf")]
    DuplicateLeaf,
    #[error("invalid proof")]
    InvalidProof,
    #[error("invalid signature")]
    BadSignature,
    #[error("threshold signature does not verify")]
    Threshold,
    #[error("commitment does not recompute")]
    MalformedCommitment,
    #[error("initial reputation {got} differs from {expected}")]
    InitialReputation { got: u64, expected: u64 },
    #[error("serial number already spent")]
    SerialReused,
    #[error("nullifier already used")]
    NullifierReused,
    #[error("unknown or expired root")]
    UnknownRoot,
    #[error("pseudonym not in valid set")]
    NotValid,
    #[error("pseudonym already in use")]
    PseudonymInUse,
    #[error("pseudonym still party to an open task")]
    PendingTask,
    #[error("reputation {claimed} does not match ledger value {recorded}")]
    ReputationMismatch { claimed: u64, recorded: u64 },
    #[error("task already exists")]
    TaskExists,
    #[error("unknown task")]
    UnknownTask,
    #[error("task status {0} does not allow this transaction")]
    WrongStatus(&'static str),
    #[error("task already evaluated")]
    AlreadyEvaluated,
    #[error("task already paid")]
    AlreadyPaid,
    #[error("subscriber shares the requester's access token")]
    SelfPromotion,
    #[error("already subscribed")]
    DuplicateSubscriber,
    #[error("not a subscriber of this task")]
    NotSubscriber,
    #[error("submitter not authorised")]
    Unauthorized,
    #[error("deposit amount differs from task reward")]
    AmountMismatch,
    #[error("insufficient balance")]
    InsufficientFunds,
    #[error("task already has a deposit")]
    DepositExists,
    #[error("no locked deposit")]
    NoDeposit,
    #[error("target pseudonym not whitelisted")]
    NotWhitelisted,
    #[error("sybil: identity already holds a master credential")]
    Sybil,
    #[error("unknown master credential")]
    UnknownMaster,
    #[error("context credential already granted")]
    AlreadyGranted,
    #[error("malformed transaction: {0}")]
    Malformed(&'static str),
    #[error(transparent)]
    Merkle(#[from] MerkleError),
    #[error(transparent)]
    Reputation(#[from] ReputationError),
}

impl Rejection {
    /// Short stable code for logs.
    pub fn code(&self) -> &'static str {
        match self {
            Rejection::AccessDenied => "access-denied",
            Rejection::AlreadyMinted => "already-minted",
            Rejection::AccessTokenSpent => "access-token-spent",
            Rejection::DuplicateLeaf => "duplicate-leaf",
            Rejection::InvalidProof => "invalid-proof",
            Rejection::BadSignature => "bad-signature",
            Rejection::Threshold => "threshold",
            Rejection::MalformedCommitment => "malformed-commitment",
            Rejection::InitialReputation { .. } => "initial-reputation",
            Rejection::SerialReused => "double-spend-serial",
            Rejection::NullifierReused => "double-spend-nullifier",
            Rejection::UnknownRoot => "unknown-root",
            Rejection::NotValid => "not-valid",
            Rejection::PseudonymInUse => "pseudonym-in-use",
            Rejection::PendingTask => "pending-task",
            Rejection::ReputationMismatch { .. } => "forward-binding",
            Rejection::TaskExists => "task-exists",
            Rejection::UnknownTask => "unknown-task",
            Rejection::WrongStatus(_) => "wrong-status",
            Rejection::AlreadyEvaluated => "already-evaluated",
            Rejection::AlreadyPaid => "already-paid",
            Rejection::SelfPromotion => "self-promotion",
            Rejection::DuplicateSubscriber => "duplicate-subscriber",
            Rejection::NotSubscriber => "not-subscriber",
            Rejection::Unauthorized => "unauthorized",
            Rejection::AmountMismatch => "amount-mismatch",
            Rejection::InsufficientFunds => "insufficient-funds",
            Rejection::DepositExists => "deposit-exists",
            Rejection::NoDeposit => "no-deposit",
            Rejection::NotWhitelisted => "not-whitelisted",
            Rejection::Sybil => "sybil",
            Rejection::UnknownMaster => "unknown-master",
            Rejection::AlreadyGranted => "already-granted",
            Rejection::Malformed(_) => "malformed",
            Rejection::Merkle(_) => "merkle",
            Rejection::Reputation(_) => "reputation",
        }
    }
}
