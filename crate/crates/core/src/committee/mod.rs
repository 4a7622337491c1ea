//! Committee and oracle-network machinery: VRF-seeded selection, claim
//! attestation and (t+1, n) threshold attestation.
//!
//! A threshold signature is the set of distinct per-node keyed-hash partials
//! over one message; it verifies once at least `t + 1` of them check out.
//! Node keys are dealt from the run seed.

mod records;

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use records::{attest_claim, blind_user, ClaimAttestation, ClaimPredicate, LegacyRecordStore};

use crate::crypto::{hash_tagged, prf, tag, Digest, Encoder, Secret};
use crate::ledger::idml::{ContextCredential, IdmlState, MasterCredential};
use crate::ledger::Rejection;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CommitteeError {
    #[error("invalid committee config: {0}")]
    Config(String),
    #[error("selection size k={k} out of range for n={n}")]
    KOutOfRange { k: usize, n: usize },
    #[error("unknown user {0}")]
    UnknownUser(String),
    #[error("claim failed: {0}")]
    ClaimFailed(String),
    #[error("threshold not met: {got} valid partials, need {need}")]
    Threshold { got: usize, need: usize },
    #[error("no quorum after {0} committee draws")]
    NoQuorum(u32),
    #[error("record store: {0}")]
    Records(String),
    #[error(transparent)]
    Ledger(#[from] Rejection),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CommitteeConfig {
    pub n: usize,
    pub f: usize,
    pub t: usize,
}

impl CommitteeConfig {
    pub fn new(n: usize, f: usize, t: usize) -> Result<Self, CommitteeError> {
        let c = CommitteeConfig { n, f, t };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<(), CommitteeError> {
        if self.n < 3 * self.f + 1 {
            return Err(CommitteeError::Config(format!("n={} < 3f+1 with f={}", self.n, self.f)));
        }
        if self.t + 1 > self.n {
            return Err(CommitteeError::Config(format!("t+1={} exceeds n={}", self.t + 1, self.n)));
        }
        if self.t < self.f {
            return Err(CommitteeError::Config(format!("t={} below f={}", self.t, self.f)));
        }
        Ok(())
    }

    pub fn quorum(&self) -> usize {
        self.t + 1
    }

    /// Default selection size.
    pub fn default_k(&self) -> usize {
        (self.t + 2).min(self.n)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct VrfOutput {
    pub r: Digest,
    pub proof: Digest,
}

fn key_prf(sk: &Secret, input: &[u8]) -> Digest {
    prf(sk, input).expect("32-byte key")
}

pub fn vrf_eval(sk: &Secret, input: &[u8]) -> VrfOutput {
    let r = key_prf(sk, &[&[tag::VRF][..], input].concat());
    let proof = key_prf(sk, &[&[tag::VRF][..], r.as_bytes(), input].concat());
    VrfOutput { r, proof }
}

/// Verification re-evaluates under the dealt key, which verifier roles hold in the simulation.
pub fn vrf_verify(sk: &Secret, input: &[u8], out: &VrfOutput) -> bool {
    vrf_eval(sk, input) == *out
}

/// `H^i(r)` for `i = 1..=k`, reduced mod `n`.
pub fn select_committee(r: &Digest, k: usize, n: usize) -> Result<Vec<usize>, CommitteeError> {
    if k == 0 || k > n {
        return Err(CommitteeError::KOutOfRange { k, n });
    }
    let mut h = *r;
    let mut out = Vec::with_capacity(k);
    for _ in 0..k {
        h = hash_tagged(tag::ITERATE, &[h.as_bytes()]);
        out.push(h.mod_u64(n as u64) as usize);
    }
    Ok(out)
}

/// Distinct nodes in first-seen order.
pub fn distinct_nodes(slots: &[usize]) -> Vec<usize> {
    let mut seen = BTreeSet::new();
    slots.iter().copied().filter(|i| seen.insert(*i)).collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct PartialSig {
    pub signer_index: usize,
    pub sig: Digest,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AggSig {
    pub partials: Vec<PartialSig>,
}

impl AggSig {
    pub fn signers(&self) -> BTreeSet<usize> {
        self.partials.iter().map(|p| p.signer_index).collect()
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(self.partials.len() * 40);
        for p in &self.partials {
            out.extend_from_slice(&(p.signer_index as u64).to_be_bytes());
            out.extend_from_slice(p.sig.as_bytes());
        }
        out
    }
}

/// Verification material for a node set.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Roster {
    keys: Vec<Secret>,
    pub t: usize,
}

impl Roster {
    pub fn deal(seed: u64, label: &str, n: usize, t: usize) -> Self {
        let keys = (0..n as u64)
            .map(|i| hash_tagged(tag::KEYGEN, &[label.as_bytes(), &seed.to_be_bytes(), &i.to_be_bytes()]).0)
            .collect();
        Roster { keys, t }
    }

    pub fn n(&self) -> usize {
        self.keys.len()
    }

    pub fn part_sign(&self, node: usize, message: &[u8]) -> PartialSig {
        PartialSig { signer_index: node, sig: hash_tagged(tag::SIGNATURE, &[&self.keys[node], message]) }
    }

    pub fn verify_part_sign(&self, message: &[u8], p: &PartialSig) -> bool {
        p.signer_index < self.n() && self.part_sign(p.signer_index, message).sig == p.sig
    }

    fn valid_signers(&self, message: &[u8], partials: &[PartialSig]) -> BTreeSet<usize> {
        partials.iter().filter(|p| self.verify_part_sign(message, p)).map(|p| p.signer_index).collect()
    }

    /// Keep the valid partials (one per signer) and require `t + 1` of them.
    pub fn agg_sign(&self, message: &[u8], partials: &[PartialSig]) -> Result<AggSig, CommitteeError> {
        let mut seen = BTreeSet::new();
        let mut kept: Vec<PartialSig> = partials
            .iter()
            .filter(|p| self.verify_part_sign(message, p) && seen.insert(p.signer_index))
            .copied()
            .collect();
        if kept.len() < self.t + 1 {
            return Err(CommitteeError::Threshold { got: kept.len(), need: self.t + 1 });
        }
        kept.sort();
        Ok(AggSig { partials: kept })
    }

    pub fn verify_agg(&self, message: &[u8], agg: &AggSig) -> bool {
        self.valid_signers(message, &agg.partials).len() > self.t
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NodeBehavior {
    Honest,
    /// Sends nothing.
    Withhold,
    /// Sends a partial with garbage bytes.
    Corrupt,
    /// Signs a different message.
    WrongMessage,
}

/// A node set acting as IDML committee or oracle network.
#[derive(Clone, Debug)]
pub struct Committee {
    pub config: CommitteeConfig,
    pub roster: Roster,
    pub behaviors: Vec<NodeBehavior>,
    pub k: usize,
    pub max_draws: u32,
    vrf_sk: Secret,
    dedup_key: Secret,
}

impl Committee {
    pub fn new(config: CommitteeConfig, seed: u64, label: &str) -> Result<Self, CommitteeError> {
        config.validate()?;
        let derive = |what: &[u8]| hash_tagged(tag::KEYGEN, &[label.as_bytes(), what, &seed.to_be_bytes()]).0;
        Ok(Committee {
            config,
            roster: Roster::deal(seed, label, config.n, config.t),
            behaviors: vec![NodeBehavior::Honest; config.n],
            k: config.default_k(),
            max_draws: 64,
            vrf_sk: derive(b"vrf"),
            dedup_key: derive(b"dedup"),
        })
    }

    pub fn with_behaviors(mut self, behaviors: Vec<NodeBehavior>) -> Self {
        assert_eq!(behaviors.len(), self.config.n);
        self.behaviors = behaviors;
        self
    }

    pub fn vrf_key(&self) -> &Secret {
        &self.vrf_sk
    }

    fn partial(&self, node: usize, message: &[u8]) -> Option<PartialSig> {
        match self.behaviors[node] {
            NodeBehavior::Honest => Some(self.roster.part_sign(node, message)),
            NodeBehavior::Withhold => None,
            NodeBehavior::Corrupt => {
                let mut p = self.roster.part_sign(node, message);
                p.sig.0[0] ^= 0xff;
                Some(p)
            }
            NodeBehavior::WrongMessage => Some(self.roster.part_sign(node, &[message, b"'"].concat())),
        }
    }

    /// Oracle-network attestation: every node is asked, the aggregator keeps what verifies.
    pub fn threshold_sign(&self, message: &[u8]) -> Result<AggSig, CommitteeError> {
        let partials: Vec<PartialSig> = (0..self.config.n).filter_map(|i| self.partial(i, message)).collect();
        self.roster.agg_sign(message, &partials)
    }

    /// Keyed identity tag used for deduplication of registrations.
    pub fn identity_tag(&self, user_id: &str) -> Digest {
        hash_tagged(tag::ATTEST, &[&self.dedup_key, user_id.as_bytes()])
    }

    /// Draw committees until `t + 1` selected nodes verify the claims and sign.
    fn attest_claims(
        &self,
        store: &LegacyRecordStore,
        user: &User,
        claims: &[ClaimPredicate],
        message: &[u8],
    ) -> Result<(AggSig, Vec<usize>), CommitteeError> {
        let user_commitment = blind_user(&user.user_id, &user.blind);
        for draw in 0..self.max_draws {
            let input = Encoder::new().field(user_commitment.as_bytes()).field(message).u64(draw as u64).finish();
            let vrf = vrf_eval(&self.vrf_sk, &input);
            debug_assert!(vrf_verify(&self.vrf_sk, &input, &vrf));
            let nodes = distinct_nodes(&select_committee(&vrf.r, self.k, self.config.n)?);
            let mut partials = Vec::new();
            let mut claim_failure = None;
            for &node in &nodes {
                if self.behaviors[node] == NodeBehavior::Withhold {
                    continue;
                }
                if self.behaviors[node] == NodeBehavior::Honest {
                    if let Some(err) = claims.iter().find_map(|c| attest_claim(store, &user.user_id, &user.blind, c).err()) {
                        claim_failure = Some(err);
                        continue;
                    }
                }
                partials.extend(self.partial(node, message));
            }
            match self.roster.agg_sign(message, &partials) {
                Ok(agg) => return Ok((agg, nodes)),
                Err(_) if claim_failure.is_some() => return Err(claim_failure.unwrap()),
                Err(_) => continue,
            }
        }
        Err(CommitteeError::NoQuorum(self.max_draws))
    }
}

/// A person known to the legacy record store.
#[derive(Clone, Debug)]
pub struct User {
    pub user_id: String,
    pub blind: Secret,
    pub m_sk: Secret,
}

impl User {
    pub fn new(user_id: impl Into<String>, blind: Secret, m_sk: Secret) -> Self {
        User { user_id: user_id.into(), blind, m_sk }
    }

    pub fn m_pk(&self) -> Digest {
        hash_tagged(tag::KEYGEN, &[b"master", &self.m_sk])
    }
}

pub fn credential_message(m_pk: &Digest) -> Vec<u8> {
    Encoder::new().field(b"master-credential").field(m_pk.as_bytes()).finish()
}

pub fn context_message(ctx: &str, m_pk: &Digest, pk_ctx: &Digest) -> Vec<u8> {
    Encoder::new().field(b"context-credential").field(ctx.as_bytes()).field(m_pk.as_bytes()).field(pk_ctx.as_bytes()).finish()
}

/// Registration: VRF seed, committee selection, per-node claim checks and
/// partial signatures, aggregation, then on-ledger whitelisting of `M_pk`.
pub fn register_user(
    idml: &mut IdmlState,
    committee: &Committee,
    store: &LegacyRecordStore,
    user: &User,
    claims: &[ClaimPredicate],
) -> Result<MasterCredential, CommitteeError> {
    let m_pk = user.m_pk();
    let (sigma, _) = committee.attest_claims(store, user, claims, &credential_message(&m_pk))?;
    let cred = MasterCredential { m_pk, sigma_cred: sigma };
    idml.whitelist(&cred, committee.identity_tag(&user.user_id))?;
    Ok(cred)
}

/// Context credential issuance for a registered user.
pub fn issue_context_credential(
    idml: &mut IdmlState,
    committee: &Committee,
    store: &LegacyRecordStore,
    user: &User,
    cred: &MasterCredential,
    ctx: &str,
    sk_ctx: Secret,
    claims: &[ClaimPredicate],
) -> Result<ContextCredential, CommitteeError> {
    let cc = ContextCredential::new(ctx, sk_ctx);
    idml.check_grantable(ctx, &cred.m_pk)?;
    let message = context_message(ctx, &cred.m_pk, &cc.pk_ctx);
    let (sigma, _) = committee.attest_claims(store, user, claims, &message)?;
    idml.grant(ctx, &cred.m_pk, &cc.pk_ctx, &sigma)?;
    Ok(cc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use sha2::{Digest as _, Sha256};

    fn cfg(n: usize, f: usize, t: usize) -> CommitteeConfig {
        CommitteeConfig::new(n, f, t).unwrap()
    }

    #[test]
    fn config_bounds() {
        assert!(CommitteeConfig::new(7, 2, 2).is_ok());
        assert!(CommitteeConfig::new(6, 2, 2).is_err());
        assert!(CommitteeConfig::new(7, 2, 1).is_err());
        assert!(CommitteeConfig::new(4, 1, 4).is_err());
    }

    #[test]
    fn vrf_round_trip() {
        let sk = [5u8; 32];
        let a = vrf_eval(&sk, b"in");
        assert_eq!(a, vrf_eval(&sk, b"in"));
        assert!(vrf_verify(&sk, b"in", &a));
        let mut bad = a;
        bad.r.0[3] ^= 1;
        assert!(!vrf_verify(&sk, b"in", &bad));
        assert!(!vrf_verify(&sk, b"other", &a));
    }

    #[test]
    fn selection_matches_hand_rolled_iteration() {
        let r = Digest([0x42; 32]);
        let mut h = r.0.to_vec();
        let mut expected = Vec::new();
        for _ in 0..3 {
            let mut s = Sha256::new();
            s.update([tag::ITERATE]);
            s.update(&h);
            h = s.finalize().to_vec();
            let v = h.iter().fold(0u64, |acc, &b| (acc * 256 + b as u64) % 4);
            expected.push(v as usize);
        }
        assert_eq!(select_committee(&r, 3, 4).unwrap(), expected);
        assert_eq!(select_committee(&r, 1, 4).unwrap(), vec![expected[0]]);
        assert!(select_committee(&r, 0, 4).is_err());
        assert!(select_committee(&r, 5, 4).is_err());
    }

    #[test]
    fn threshold_aggregation() {
        let roster = Roster::deal(1, "don", 7, 4);
        let msg = b"task-1";
        let parts: Vec<_> = (0..5).map(|i| roster.part_sign(i, msg)).collect();
        let agg = roster.agg_sign(msg, &parts).unwrap();
        assert!(roster.verify_agg(msg, &agg));
        assert!(!roster.verify_agg(b"task-2", &agg));
        assert_eq!(roster.agg_sign(msg, &parts[..4]), Err(CommitteeError::Threshold { got: 4, need: 5 }));
        let dup = vec![parts[0]; 5];
        assert!(roster.agg_sign(msg, &dup).is_err());
    }

    #[test]
    fn every_single_wrong_message_partial_breaks_five_of_seven() {
        let roster = Roster::deal(2, "don", 7, 4);
        let msg = b"m";
        for bad in 0..5 {
            let parts: Vec<_> =
                (0..5).map(|i| if i == bad { roster.part_sign(i, b"x") } else { roster.part_sign(i, msg) }).collect();
            assert!(!roster.verify_part_sign(msg, &parts[bad]));
            assert_eq!(roster.agg_sign(msg, &parts), Err(CommitteeError::Threshold { got: 4, need: 5 }));
            let forged = AggSig { partials: parts };
            assert!(!roster.verify_agg(msg, &forged));
        }
    }

    #[test]
    fn threshold_sign_tolerates_f_faults() {
        let c = Committee::new(cfg(7, 2, 2), 3, "don").unwrap().with_behaviors(vec![
            NodeBehavior::Withhold,
            NodeBehavior::Corrupt,
            NodeBehavior::Honest,
            NodeBehavior::Honest,
            NodeBehavior::Honest,
            NodeBehavior::Honest,
            NodeBehavior::Honest,
        ]);
        let agg = c.threshold_sign(b"m").unwrap();
        assert!(c.roster.verify_agg(b"m", &agg));
    }
}
