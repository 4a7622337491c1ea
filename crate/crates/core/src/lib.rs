//! Dual-ledger anonymous reputation: commitments, Merkle registries, simulated
//! zero-knowledge relations, threshold-attested reputation updates, a gas
//! model and an adversarial simulator.

pub mod committee;
pub mod crypto;
pub mod error;
pub mod gas;
pub mod ledger;
pub mod merkle;
pub mod network;
pub mod proof;
pub mod report;
pub mod reputation;
pub mod sim;
pub mod suite;

pub use error::{Error, Result};
