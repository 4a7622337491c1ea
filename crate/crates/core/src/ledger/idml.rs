use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::tx::{PublicTx, TxAm};
use super::Rejection;
use crate::committee::{context_message, credential_message, AggSig, Roster};
use crate::crypto::{derive_address, hash_tagged, tag, Commitment, Digest, Secret};
use crate::merkle::{Registry, DEFAULT_ROOT_HISTORY};
use crate::proof::ProofEnv;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MasterCredential {
    pub m_pk: Digest,
    pub sigma_cred: AggSig,
}

/// Per-context credential. `sk_ctx` stays with the user.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ContextCredential {
    pub ctx: String,
    pub pk_ctx: Digest,
    pub sk_ctx: Secret,
}

impl ContextCredential {
    pub fn new(ctx: &str, sk_ctx: Secret) -> Self {
        ContextCredential { ctx: ctx.to_string(), pk_ctx: derive_address(sk_ctx).apk, sk_ctx }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum LedgerEvent {
    MintAt { cm_a: Commitment, root: Digest },
}

/// Receiver for cross-ledger events.
pub trait EventSink {
    fn emit(&mut self, event: LedgerEvent);
}

impl EventSink for Vec<LedgerEvent> {
    fn emit(&mut self, event: LedgerEvent) {
        self.push(event);
    }
}

#[derive(Clone, Debug)]
pub struct IdmlState {
    pub ac: Registry,
    committee: Roster,
    env: ProofEnv,
    masters: BTreeSet<Digest>,
    identities: BTreeSet<Digest>,
    /// ctx → (M_pk → pk_ctx)
    granted: BTreeMap<String, BTreeMap<Digest, Digest>>,
    grant_index: BTreeSet<(String, Digest)>,
    minted: BTreeSet<(String, Digest)>,
    ac_leaves: BTreeSet<Commitment>,
}

impl IdmlState {
    pub fn new(committee: Roster, env: ProofEnv) -> Self {
        IdmlState {
            ac: Registry::new(DEFAULT_ROOT_HISTORY),
            committee,
            env,
            masters: BTreeSet::new(),
            identities: BTreeSet::new(),
            granted: BTreeMap::new(),
            grant_index: BTreeSet::new(),
            minted: BTreeSet::new(),
            ac_leaves: BTreeSet::new(),
        }
    }

    pub fn is_whitelisted(&self, m_pk: &Digest) -> bool {
        self.masters.contains(m_pk)
    }

    pub fn is_granted(&self, ctx: &str, pk_ctx: &Digest) -> bool {
        self.grant_index.contains(&(ctx.to_string(), *pk_ctx))
    }

    pub fn granted_count(&self, ctx: &str) -> usize {
        self.granted.get(ctx).map_or(0, BTreeMap::len)
    }

    /// Accept a master credential signed by the committee; one per identity.
    pub fn whitelist(&mut self, cred: &MasterCredential, identity_tag: Digest) -> Result<(), Rejection> {
        if !self.committee.verify_agg(&credential_message(&cred.m_pk), &cred.sigma_cred) {
            return Err(Rejection::Threshold);
        }
        if self.masters.contains(&cred.m_pk) || self.identities.contains(&identity_tag) {
            return Err(Rejection::Sybil);
        }
        self.masters.insert(cred.m_pk);
        self.identities.insert(identity_tag);
        Ok(())
    }

    pub fn check_grantable(&self, ctx: &str, m_pk: &Digest) -> Result<(), Rejection> {
        if !self.masters.contains(m_pk) {
            return Err(Rejection::UnknownMaster);
        }
        if self.granted.get(ctx).is_some_and(|g| g.contains_key(m_pk)) {
            return Err(Rejection::AlreadyGranted);
        }
        Ok(())
    }

    pub fn grant(&mut self, ctx: &str, m_pk: &Digest, pk_ctx: &Digest, sigma: &AggSig) -> Result<(), Rejection> {
        self.check_grantable(ctx, m_pk)?;
        if !self.committee.verify_agg(&context_message(ctx, m_pk, pk_ctx), sigma) {
            return Err(Rejection::Threshold);
        }
        if self.is_granted(ctx, pk_ctx) {
            return Err(Rejection::AlreadyGranted);
        }
        self.granted.entry(ctx.to_string()).or_default().insert(*m_pk, *pk_ctx);
        self.grant_index.insert((ctx.to_string(), *pk_ctx));
        Ok(())
    }

    /// Mint an access token for a granted context key, at most once per key.
    pub fn mint_at(&mut self, sink: &mut dyn EventSink, tx: &TxAm) -> Result<u64, Rejection> {
        if !self.is_granted(&tx.ctx, &tx.pk_ctx) {
            return Err(Rejection::AccessDenied);
        }
        let msg = TxAm::message(&tx.ctx, &tx.pk, &tx.cm_u, &tx.cm_a);
        if !self.env.verify_pseudonym(&tx.pk_ctx, &msg, &tx.sig) {
            return Err(Rejection::BadSignature);
        }
        if self.minted.contains(&(tx.ctx.clone(), tx.pk_ctx)) {
            return Err(Rejection::AlreadyMinted);
        }
        if self.ac_leaves.contains(&tx.cm_a) {
            return Err(Rejection::DuplicateLeaf);
        }
        let idx = self.ac.insert(tx.cm_a.0)?;
        self.ac_leaves.insert(tx.cm_a);
        self.minted.insert((tx.ctx.clone(), tx.pk_ctx));
        sink.emit(LedgerEvent::MintAt { cm_a: tx.cm_a, root: self.ac.tree.root() });
        debug_assert_eq!(tx.kind(), "mint_at");
        Ok(idx)
    }

    pub fn minted_count(&self, ctx: &str) -> usize {
        self.minted.iter().filter(|(c, _)| c == ctx).count()
    }

    pub fn state_digest(&self) -> Digest {
        let mut buf = Vec::new();
        buf.extend_from_slice(self.ac.tree.root().as_bytes());
        for m in &self.masters {
            buf.extend_from_slice(m.as_bytes());
        }
        for (ctx, g) in &self.granted {
            buf.extend_from_slice(ctx.as_bytes());
            for (m, p) in g {
                buf.extend_from_slice(m.as_bytes());
                buf.extend_from_slice(p.as_bytes());
            }
        }
        for (ctx, p) in &self.minted {
            buf.extend_from_slice(ctx.as_bytes());
            buf.extend_from_slice(p.as_bytes());
        }
        hash_tagged(tag::STATE, &[b"idml", &buf])
    }
}
