//! Simulated zero-knowledge proofs.
//!
//! Each relation is an executable predicate. `prove` evaluates it against the
//! witness and, only if every clause holds, emits a tag keyed by the run's
//! environment key over the public inputs. `verify` recomputes the tag from
//! public data alone, so a proof carries nothing but 33 bytes of hash output.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::crypto::{
    comm32, derive_address, derive_serial, encode_fixed, hash_tagged, nullifier, tag, Commitment, Digest,
    Encoder, Nullifier, Secret, SerialNumber,
};
use crate::ledger::tokens::{access_commitment, deposit_commitment, task_handle, ReputationToken};
use crate::merkle::{self, MerklePath};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum RelationId {
    /// Access-token spend: knowledge of an ACTree leaf opening.
    AS,
    /// Reputation-token spend: rotate to a fresh token of identical value.
    RS,
    /// Reputation-token use: disclose R and bind a new pseudonym.
    RU,
    /// Interaction: per-task handle shares `sk_ctx` with an access token.
    I,
    /// Deposit opening for withdrawal.
    D,
}

impl RelationId {
    pub const ALL: [RelationId; 5] = [RelationId::AS, RelationId::RS, RelationId::RU, RelationId::I, RelationId::D];

    pub fn code(self) -> u8 {
        match self {
            RelationId::AS => 1,
            RelationId::RS => 2,
            RelationId::RU => 3,
            RelationId::I => 4,
            RelationId::D => 5,
        }
    }
}

impl fmt::Display for RelationId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self:?}")
    }
}

/// Public values for each relation, in transaction field order.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum PublicInputs {
    AS { rt_a: Digest, cm_u: Commitment, pk: Digest },
    RS { rt_r: Digest, serial: SerialNumber, cm_r_next: Commitment },
    RU { rt_r: Digest, serial: SerialNumber, r_micro: u64, new_apk: Digest },
    I { task_id: String, handle: Commitment, rt_a: Digest },
    D { rt_d: Digest, nullifier: Nullifier, cm_d: Commitment, amount: u64, target_apk: Digest },
}

impl PublicInputs {
    pub fn relation(&self) -> RelationId {
        match self {
            PublicInputs::AS { .. } => RelationId::AS,
            PublicInputs::RS { .. } => RelationId::RS,
            PublicInputs::RU { .. } => RelationId::RU,
            PublicInputs::I { .. } => RelationId::I,
            PublicInputs::D { .. } => RelationId::D,
        }
    }

    pub fn encode(&self) -> Vec<u8> {
        let e = Encoder::new();
        match self {
            PublicInputs::AS { rt_a, cm_u, pk } => e.field(rt_a.as_bytes()).field(cm_u.as_bytes()).field(pk.as_bytes()),
            PublicInputs::RS { rt_r, serial, cm_r_next } => {
                e.field(rt_r.as_bytes()).field(serial.0.as_bytes()).field(cm_r_next.as_bytes())
            }
            PublicInputs::RU { rt_r, serial, r_micro, new_apk } => e
                .field(rt_r.as_bytes())
                .field(serial.0.as_bytes())
                .field(&encode_fixed(*r_micro))
                .field(new_apk.as_bytes()),
            PublicInputs::I { task_id, handle, rt_a } => {
                e.field(task_id.as_bytes()).field(handle.as_bytes()).field(rt_a.as_bytes())
            }
            PublicInputs::D { rt_d, nullifier, cm_d, amount, target_apk } => e
                .field(rt_d.as_bytes())
                .field(nullifier.0.as_bytes())
                .field(cm_d.as_bytes())
                .u64(*amount)
                .field(target_apk.as_bytes()),
        }
        .finish()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Statement {
    pub public: PublicInputs,
}

impl Statement {
    pub fn new(public: PublicInputs) -> Self {
        Statement { public }
    }

    pub fn relation(&self) -> RelationId {
        self.public.relation()
    }

    pub fn public_inputs(&self) -> Vec<u8> {
        self.public.encode()
    }
}

/// Secret inputs. Never serialized.
#[derive(Clone, Debug)]
pub enum Witness {
    AS { sk_ctx: Secret, r: Secret, r_prime: Secret, path: MerklePath },
    RS { old: ReputationToken, new: ReputationToken, path: MerklePath },
    RU { token: ReputationToken, new_ask: Secret, path: MerklePath },
    I { sk_ctx: Secret, r: Secret, r_prime: Secret, pk: Digest, path: MerklePath },
    D { s: Secret, r: Secret, path: MerklePath },
}

impl Witness {
    pub fn relation(&self) -> RelationId {
        match self {
            Witness::AS { .. } => RelationId::AS,
            Witness::RS { .. } => RelationId::RS,
            Witness::RU { .. } => RelationId::RU,
            Witness::I { .. } => RelationId::I,
            Witness::D { .. } => RelationId::D,
        }
    }

    /// Secret scalars (trapdoors, seeds, keys) that must never appear in public data.
    pub fn secret_fields(&self) -> Vec<Vec<u8>> {
        match self {
            Witness::AS { sk_ctx, r, r_prime, .. } => vec![sk_ctx.to_vec(), r.to_vec(), r_prime.to_vec()],
            Witness::RS { old, new, .. } => old.secrets().into_iter().chain(new.secrets()).map(<[u8]>::to_vec).collect(),
            Witness::RU { token, new_ask, .. } => {
                let mut v: Vec<Vec<u8>> = token.secrets().into_iter().map(<[u8]>::to_vec).collect();
                v.push(new_ask.to_vec());
                v
            }
            Witness::I { sk_ctx, r, r_prime, .. } => vec![sk_ctx.to_vec(), r.to_vec(), r_prime.to_vec()],
            Witness::D { s, r, .. } => vec![s.to_vec(), r.to_vec()],
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Proof {
    pub relation: RelationId,
    pub tag: Digest,
}

impl Proof {
    pub fn to_bytes(&self) -> [u8; 33] {
        let mut out = [0u8; 33];
        out[0] = self.relation.code();
        out[1..].copy_from_slice(self.tag.as_bytes());
        out
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ProofEnv {
    env_key: Secret,
}

impl ProofEnv {
    pub fn new(env_key: Secret) -> Self {
        ProofEnv { env_key }
    }

    /// Derive the environment key from a run seed.
    pub fn from_seed(seed: u64) -> Self {
        ProofEnv { env_key: hash_tagged(tag::KEYGEN, &[b"proof-env", &seed.to_be_bytes()]).0 }
    }

    fn tag(&self, statement: &Statement) -> Digest {
        hash_tagged(tag::PROOF, &[&self.env_key, &[statement.relation().code()], &statement.public_inputs()])
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ProofError {
    #[error("relation {relation}: {clause} clause failed")]
    Unsatisfied { relation: RelationId, clause: &'static str },
    #[error("witness for {witness} supplied to a {statement} statement")]
    WrongWitness { statement: RelationId, witness: RelationId },
}

pub mod clause {
    pub const MEMBERSHIP: &str = "membership";
    pub const ACCESS_OPENING: &str = "access commitment";
    pub const USER_OPENING: &str = "user commitment";
    pub const OLD_TOKEN: &str = "old token well-formedness";
    pub const NEW_TOKEN: &str = "new token well-formedness";
    pub const OLD_KEY: &str = "old key matching";
    pub const NEW_KEY: &str = "new key matching";
    pub const SERIAL: &str = "serial number";
    pub const REPUTATION_EQUALITY: &str = "reputation equality";
    pub const REPUTATION_DISCLOSURE: &str = "reputation disclosure";
    pub const NEW_COMMITMENT: &str = "new commitment";
    pub const HANDLE: &str = "task handle";
    pub const DEPOSIT_OPENING: &str = "deposit opening";
    pub const NULLIFIER: &str = "nullifier";
}

type Check = Result<(), &'static str>;

fn ensure(ok: bool, clause: &'static str) -> Check {
    if ok {
        Ok(())
    } else {
        Err(clause)
    }
}

/// Evaluate a relation; `Err` names the first failing clause.
pub fn check_relation(public: &PublicInputs, witness: &Witness) -> Result<(), ProofError> {
    let relation = public.relation();
    let outcome = match (public, witness) {
        (PublicInputs::AS { rt_a, cm_u, pk }, Witness::AS { sk_ctx, r, r_prime, path }) => {
            relation_as(rt_a, cm_u, pk, sk_ctx, r, r_prime, path)
        }
        (PublicInputs::RS { rt_r, serial, cm_r_next }, Witness::RS { old, new, path }) => {
            relation_rs(rt_r, serial, cm_r_next, old, new, path)
        }
        (PublicInputs::RU { rt_r, serial, r_micro, new_apk }, Witness::RU { token, new_ask, path }) => {
            relation_ru(rt_r, serial, *r_micro, new_apk, token, new_ask, path)
        }
        (PublicInputs::I { task_id, handle, rt_a }, Witness::I { sk_ctx, r, r_prime, pk, path }) => {
            relation_i(task_id, handle, rt_a, sk_ctx, r, r_prime, pk, path)
        }
        (PublicInputs::D { rt_d, nullifier, cm_d, amount, .. }, Witness::D { s, r, path }) => {
            relation_d(rt_d, nullifier, cm_d, *amount, s, r, path)
        }
        _ => return Err(ProofError::WrongWitness { statement: relation, witness: witness.relation() }),
    };
    outcome.map_err(|clause| ProofError::Unsatisfied { relation, clause })
}

fn relation_as(
    rt_a: &Digest,
    cm_u: &Commitment,
    pk: &Digest,
    sk_ctx: &Secret,
    r: &Secret,
    r_prime: &Secret,
    path: &MerklePath,
) -> Check {
    ensure(comm32(r, sk_ctx) == *cm_u, clause::USER_OPENING)?;
    let cm_a = access_commitment(r_prime, cm_u, pk);
    ensure(merkle::verify(rt_a, &cm_a.0, path), clause::MEMBERSHIP)
}

fn relation_rs(
    rt_r: &Digest,
    serial: &SerialNumber,
    cm_r_next: &Commitment,
    old: &ReputationToken,
    new: &ReputationToken,
    path: &MerklePath,
) -> Check {
    ensure(old.is_well_formed(), clause::OLD_TOKEN)?;
    ensure(new.is_well_formed(), clause::NEW_TOKEN)?;
    ensure(new.cm_r == *cm_r_next, clause::NEW_COMMITMENT)?;
    ensure(derive_address(old.keys.ask).apk == old.keys.apk, clause::OLD_KEY)?;
    ensure(derive_address(new.keys.ask).apk == new.keys.apk, clause::NEW_KEY)?;
    ensure(derive_serial(&old.keys.ask, &old.s) == *serial, clause::SERIAL)?;
    ensure(merkle::verify(rt_r, &old.cm_r.0, path), clause::MEMBERSHIP)?;
    ensure(new.r_micro == old.r_micro, clause::REPUTATION_EQUALITY)
}

fn relation_ru(
    rt_r: &Digest,
    serial: &SerialNumber,
    r_micro: u64,
    new_apk: &Digest,
    token: &ReputationToken,
    new_ask: &Secret,
    path: &MerklePath,
) -> Check {
    ensure(token.is_well_formed(), clause::OLD_TOKEN)?;
    ensure(derive_address(token.keys.ask).apk == token.keys.apk, clause::OLD_KEY)?;
    ensure(derive_address(*new_ask).apk == *new_apk, clause::NEW_KEY)?;
    ensure(derive_serial(&token.keys.ask, &token.s) == *serial, clause::SERIAL)?;
    ensure(merkle::verify(rt_r, &token.cm_r.0, path), clause::MEMBERSHIP)?;
    ensure(token.r_micro == r_micro, clause::REPUTATION_DISCLOSURE)
}

#[allow(clippy::too_many_arguments)]
fn relation_i(
    task_id: &str,
    handle: &Commitment,
    rt_a: &Digest,
    sk_ctx: &Secret,
    r: &Secret,
    r_prime: &Secret,
    pk: &Digest,
    path: &MerklePath,
) -> Check {
    ensure(task_handle(task_id, sk_ctx) == *handle, clause::HANDLE)?;
    let cm_u = comm32(r, sk_ctx);
    let cm_a = access_commitment(r_prime, &cm_u, pk);
    ensure(merkle::verify(rt_a, &cm_a.0, path), clause::MEMBERSHIP)
}

fn relation_d(
    rt_d: &Digest,
    n_s: &Nullifier,
    cm_d: &Commitment,
    amount: u64,
    s: &Secret,
    r: &Secret,
    path: &MerklePath,
) -> Check {
    ensure(deposit_commitment(r, s, amount) == *cm_d, clause::DEPOSIT_OPENING)?;
    ensure(nullifier(s) == *n_s, clause::NULLIFIER)?;
    ensure(merkle::verify(rt_d, &cm_d.0, path), clause::MEMBERSHIP)
}

pub fn relation_holds(public: &PublicInputs, witness: &Witness) -> bool {
    check_relation(public, witness).is_ok()
}

pub fn prove(env: &ProofEnv, statement: &Statement, witness: &Witness) -> Result<Proof, ProofError> {
    check_relation(&statement.public, witness)?;
    Ok(Proof { relation: statement.relation(), tag: env.tag(statement) })
}

pub fn verify(env: &ProofEnv, statement: &Statement, proof: &Proof) -> bool {
    proof.relation == statement.relation() && proof.tag == env.tag(statement)
}

/// Ownership signature for a pseudonym: only the holder of `ask` with
/// `apk = PRF_ask(0)` can produce one. Simulated the same way as proofs.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PseudonymSig(pub Digest);

impl ProofEnv {
    fn sig_tag(&self, apk: &Digest, message: &[u8]) -> Digest {
        hash_tagged(tag::SIGNATURE, &[&self.env_key, apk.as_bytes(), message])
    }

    pub fn sign_pseudonym(&self, ask: &Secret, message: &[u8]) -> PseudonymSig {
        let apk = derive_address(*ask).apk;
        PseudonymSig(self.sig_tag(&apk, message))
    }

    pub fn verify_pseudonym(&self, apk: &Digest, message: &[u8], sig: &PseudonymSig) -> bool {
        self.sig_tag(apk, message) == sig.0
    }
}

/// True when no window of `min_len` bytes from any secret occurs in `haystack`.
pub fn free_of_secrets(haystack: &[u8], secrets: &[Vec<u8>], min_len: usize) -> bool {
    if min_len == 0 {
        return secrets.is_empty();
    }
    let needles: std::collections::HashSet<&[u8]> =
        secrets.iter().filter(|s| s.len() >= min_len).flat_map(|s| s.windows(min_len)).collect();
    needles.is_empty() || !haystack.windows(min_len).any(|h| needles.contains(h))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ledger::tokens::{AccessToken, DepositNote};
    use crate::merkle::MerkleTree;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn env() -> ProofEnv {
        ProofEnv::from_seed(1)
    }

    #[test]
    fn honest_access_spend_proves_and_verifies() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let at = AccessToken::sample(&mut rng, [4u8; 32]);
        let mut tree = MerkleTree::new();
        tree.insert(ReputationToken::sample(&mut rng, 1, 0).cm_r.0).unwrap();
        let (idx, _) = tree.insert(at.cm_a.0).unwrap();
        let st = Statement::new(PublicInputs::AS { rt_a: tree.root(), cm_u: at.cm_u, pk: at.pk });
        let w = Witness::AS { sk_ctx: at.sk_ctx, r: at.r, r_prime: at.r_prime, path: tree.prove(idx).unwrap() };
        let proof = prove(&env(), &st, &w).unwrap();
        assert!(verify(&env(), &st, &proof));
        assert!(free_of_secrets(&proof.to_bytes(), &w.secret_fields(), 4));

        let bad = Witness::AS { sk_ctx: at.sk_ctx, r: at.r, r_prime: at.r_prime, path: tree.prove(0).unwrap() };
        assert_eq!(
            prove(&env(), &st, &bad),
            Err(ProofError::Unsatisfied { relation: RelationId::AS, clause: clause::MEMBERSHIP })
        );
    }

    #[test]
    fn spend_rt_rejects_changed_reputation() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let old = ReputationToken::sample(&mut rng, 500_000, 0);
        let new = ReputationToken::sample(&mut rng, 600_000, 1);
        let mut tree = MerkleTree::new();
        tree.insert(old.cm_r.0).unwrap();
        let st = Statement::new(PublicInputs::RS { rt_r: tree.root(), serial: old.serial(), cm_r_next: new.cm_r });
        let w = Witness::RS { old: old.clone(), new, path: tree.prove(0).unwrap() };
        assert_eq!(
            prove(&env(), &st, &w),
            Err(ProofError::Unsatisfied { relation: RelationId::RS, clause: clause::REPUTATION_EQUALITY })
        );
    }

    #[test]
    fn rs_enumeration_accepts_only_genuine_leaf() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let tokens: Vec<_> = (0..4).map(|i| ReputationToken::sample(&mut rng, 100_000 * (i + 1), 0)).collect();
        let mut tree = MerkleTree::new();
        for t in &tokens {
            tree.insert(t.cm_r.0).unwrap();
        }
        let genuine = &tokens[2];
        let next = ReputationToken::sample(&mut rng, genuine.r_micro, 1);
        let public = PublicInputs::RS { rt_r: tree.root(), serial: genuine.serial(), cm_r_next: next.cm_r };
        for leaf in 0..4u64 {
            let w = Witness::RS { old: genuine.clone(), new: next.clone(), path: tree.prove(leaf).unwrap() };
            assert_eq!(relation_holds(&public, &w), leaf == 2, "leaf {leaf}");
            let w = Witness::RS { old: tokens[leaf as usize].clone(), new: next.clone(), path: tree.prove(leaf).unwrap() };
            assert_eq!(relation_holds(&public, &w), leaf == 2, "token {leaf}");
        }
    }

    #[test]
    fn use_rt_binds_reputation_and_new_key() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let tok = ReputationToken::sample(&mut rng, 420_000, 0);
        let mut tree = MerkleTree::new();
        tree.insert(tok.cm_r.0).unwrap();
        let new_ask = [9u8; 32];
        let apk = derive_address(new_ask).apk;
        let w = Witness::RU { token: tok.clone(), new_ask, path: tree.prove(0).unwrap() };
        let ok = PublicInputs::RU { rt_r: tree.root(), serial: tok.serial(), r_micro: 420_000, new_apk: apk };
        assert!(relation_holds(&ok, &w));
        let lie = PublicInputs::RU { rt_r: tree.root(), serial: tok.serial(), r_micro: 520_000, new_apk: apk };
        assert_eq!(
            check_relation(&lie, &w),
            Err(ProofError::Unsatisfied { relation: RelationId::RU, clause: clause::REPUTATION_DISCLOSURE })
        );
    }

    #[test]
    fn deposit_relation_and_shared_handles() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let note = DepositNote::sample(&mut rng, 250, "task");
        let mut tree = MerkleTree::new();
        tree.insert(note.cm_d.0).unwrap();
        let public = PublicInputs::D {
            rt_d: tree.root(),
            nullifier: note.nullifier(),
            cm_d: note.cm_d,
            amount: 250,
            target_apk: Digest([1; 32]),
        };
        let w = Witness::D { s: note.s, r: note.r, path: tree.prove(0).unwrap() };
        assert!(relation_holds(&public, &w));

        // Two parties behind one access token: each proof passes, the handles collide.
        let at = AccessToken::sample(&mut rng, [8u8; 32]);
        let mut actree = MerkleTree::new();
        actree.insert(at.cm_a.0).unwrap();
        let h = task_handle("task", &at.sk_ctx);
        let public = PublicInputs::I { task_id: "task".into(), handle: h, rt_a: actree.root() };
        let w = Witness::I { sk_ctx: at.sk_ctx, r: at.r, r_prime: at.r_prime, pk: at.pk, path: actree.prove(0).unwrap() };
        assert!(relation_holds(&public, &w));
        assert_eq!(h, task_handle("task", &at.sk_ctx));
    }

    #[test]
    fn proofs_do_not_transfer_between_statements() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let mut tree = MerkleTree::new();
        let mut items = Vec::new();
        for _ in 0..100 {
            let note = DepositNote::sample(&mut rng, 10, "t");
            let (i, _) = tree.insert(note.cm_d.0).unwrap();
            items.push((note, i));
        }
        let root = tree.root();
        let pairs: Vec<(Statement, Proof)> = items
            .iter()
            .map(|(note, i)| {
                let st = Statement::new(PublicInputs::D {
                    rt_d: root,
                    nullifier: note.nullifier(),
                    cm_d: note.cm_d,
                    amount: 10,
                    target_apk: Digest::ZERO,
                });
                let w = Witness::D { s: note.s, r: note.r, path: tree.prove(*i).unwrap() };
                let p = prove(&env(), &st, &w).unwrap();
                (st, p)
            })
            .collect();
        for (i, (st, _)) in pairs.iter().enumerate() {
            for (j, (_, p)) in pairs.iter().enumerate() {
                assert_eq!(verify(&env(), st, p), i == j);
            }
        }
        assert!(!verify(&ProofEnv::from_seed(2), &pairs[0].0, &pairs[0].1));
    }

    #[test]
    fn wrong_witness_kind() {
        let st = Statement::new(PublicInputs::AS { rt_a: Digest::ZERO, cm_u: Commitment(Digest::ZERO), pk: Digest::ZERO });
        let w = Witness::D { s: [0; 32], r: [0; 32], path: MerkleTree::new().prove(0).unwrap_or(MerklePath {
            leaf_index: 0,
            siblings: vec![],
            directions: vec![],
        }) };
        assert!(matches!(prove(&env(), &st, &w), Err(ProofError::WrongWitness { .. })));
    }

    #[test]
    fn pseudonym_signature() {
        let ask = [3u8; 32];
        let apk = derive_address(ask).apk;
        let sig = env().sign_pseudonym(&ask, b"msg");
        assert!(env().verify_pseudonym(&apk, b"msg", &sig));
        assert!(!env().verify_pseudonym(&apk, b"other", &sig));
        assert!(!env().verify_pseudonym(&Digest([1; 32]), b"msg", &sig));
    }

    #[test]
    fn secret_scan_detects_embedded_window() {
        let secret = vec![1u8, 2, 3, 4, 5, 6];
        assert!(!free_of_secrets(&[9, 9, 3, 4, 5, 6, 9], std::slice::from_ref(&secret), 4));
        assert!(free_of_secrets(&[9, 9, 3, 4, 5, 9], &[secret], 4));
    }
}
