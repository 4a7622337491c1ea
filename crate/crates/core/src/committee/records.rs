//! Local stand-in for the legacy web server queried during registration.
//!
//! Schema (TOML):
//!
//! ```toml
//! [users.alice]
//! ssn = "123-45-6789"
//! location = "Lyon"
//! ```

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::CommitteeError;
use crate::crypto::{comm32, hash_tagged, tag, Commitment, Digest, Encoder, Secret};

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct LegacyRecordStore {
    #[serde(default)]
    pub users: BTreeMap<String, BTreeMap<String, String>>,
}

impl LegacyRecordStore {
    pub fn from_toml(text: &str) -> Result<Self, CommitteeError> {
        toml::from_str(text).map_err(|e| CommitteeError::Records(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, CommitteeError> {
        let text = std::fs::read_to_string(path).map_err(|e| CommitteeError::Records(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn insert(&mut self, user: &str, field: &str, value: &str) {
        self.users.entry(user.to_string()).or_default().insert(field.to_string(), value.to_string());
    }

    pub fn record(&self, user: &str) -> Option<&BTreeMap<String, String>> {
        self.users.get(user)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ClaimPredicate {
    /// `ssn` present and shaped `ddd-dd-dddd`.
    SsnWellFormed,
    FieldEquals { field: String, value: String },
    FieldPresent { field: String },
}

impl ClaimPredicate {
    pub fn holds(&self, record: &BTreeMap<String, String>) -> bool {
        match self {
            ClaimPredicate::SsnWellFormed => record.get("ssn").is_some_and(|s| ssn_well_formed(s)),
            ClaimPredicate::FieldEquals { field, value } => record.get(field) == Some(value),
            ClaimPredicate::FieldPresent { field } => record.contains_key(field),
        }
    }

    /// Canonical encoding; carries field names and expected values, never record contents.
    pub fn encode(&self) -> Vec<u8> {
        match self {
            ClaimPredicate::SsnWellFormed => Encoder::new().field(b"ssn-well-formed").finish(),
            ClaimPredicate::FieldEquals { field, value } => {
                Encoder::new().field(b"field-equals").field(field.as_bytes()).field(value.as_bytes()).finish()
            }
            ClaimPredicate::FieldPresent { field } => {
                Encoder::new().field(b"field-present").field(field.as_bytes()).finish()
            }
        }
    }

    pub fn digest(&self) -> Digest {
        hash_tagged(tag::ATTEST, &[b"predicate", &self.encode()])
    }
}

fn ssn_well_formed(s: &str) -> bool {
    let parts: Vec<&str> = s.split('-').collect();
    parts.len() == 3
        && [3, 2, 4].iter().zip(&parts).all(|(n, p)| p.len() == *n && p.bytes().all(|b| b.is_ascii_digit()))
}

/// Blinded reference to a user: a commitment to the user id under the user's blinding secret.
pub fn blind_user(user_id: &str, blind: &Secret) -> Commitment {
    comm32(blind, user_id.as_bytes())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClaimAttestation {
    pub user_commitment: Commitment,
    pub predicate: Digest,
    pub digest: Digest,
}

/// Check `predicate` against the stored record and attest to the outcome without
/// exposing any record bytes.
pub fn attest_claim(
    store: &LegacyRecordStore,
    user_id: &str,
    blind: &Secret,
    predicate: &ClaimPredicate,
) -> Result<ClaimAttestation, CommitteeError> {
    let record = store.record(user_id).ok_or_else(|| CommitteeError::UnknownUser(user_id.to_string()))?;
    if !predicate.holds(record) {
        return Err(CommitteeError::ClaimFailed(format!("{predicate:?}")));
    }
    let user_commitment = blind_user(user_id, blind);
    let predicate = predicate.digest();
    let digest = hash_tagged(tag::ATTEST, &[user_commitment.as_bytes(), predicate.as_bytes()]);
    Ok(ClaimAttestation { user_commitment, predicate, digest })
}

impl ClaimAttestation {
    pub fn to_bytes(&self) -> Vec<u8> {
        [self.user_commitment.as_bytes().as_slice(), self.predicate.as_bytes(), self.digest.as_bytes()].concat()
    }
}
