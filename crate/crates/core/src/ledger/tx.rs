//! Ledger-visible transactions. Every field here is public.

use serde::{Deserialize, Serialize};

use crate::committee::AggSig;
use crate::crypto::{encode_fixed, Commitment, Digest, Encoder, Nullifier, SerialNumber};
use crate::proof::{Proof, PseudonymSig, PublicInputs, Statement};

/// Canonical byte form and log label of a transaction.
pub trait PublicTx: Serialize {
    fn kind(&self) -> &'static str;
    fn to_bytes(&self) -> Vec<u8>;
}

/// Access-token mint, submitted to the identity ledger.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TxAm {
    pub ctx: String,
    pub pk_ctx: Digest,
    pub pk: Digest,
    pub cm_u: Commitment,
    pub cm_a: Commitment,
    pub sig: PseudonymSig,
}

impl TxAm {
    pub fn message(ctx: &str, pk: &Digest, cm_u: &Commitment, cm_a: &Commitment) -> Vec<u8> {
        Encoder::new().field(b"mint-at").field(ctx.as_bytes()).field(pk.as_bytes()).field(cm_u.as_bytes()).field(cm_a.as_bytes()).finish()
    }
}

impl PublicTx for TxAm {
    fn kind(&self) -> &'static str {
        "mint_at"
    }
    fn to_bytes(&self) -> Vec<u8> {
        let mut b = Self::message(&self.ctx, &self.pk, &self.cm_u, &self.cm_a);
        b.extend_from_slice(self.pk_ctx.as_bytes());
        b.extend_from_slice(self.sig.0.as_bytes());
        b
    }
}

/// Access-token spend minting the genesis reputation token.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TxAs {
    pub rt_a: Digest,
    pub cm_u: Commitment,
    pub pk: Digest,
    pub r_micro: u64,
    pub cm_p: Commitment,
    pub r2: Digest,
    pub cm_r: Commitment,
    pub proof: Proof,
}

impl TxAs {
    pub fn statement(&self) -> Statement {
        Statement::new(PublicInputs::AS { rt_a: self.rt_a, cm_u: self.cm_u, pk: self.pk })
    }
}

impl PublicTx for TxAs {
    fn kind(&self) -> &'static str {
        "spend_at"
    }
    fn to_bytes(&self) -> Vec<u8> {
        let mut b = self.statement().public_inputs();
        b.extend(
            Encoder::new()
                .field(&encode_fixed(self.r_micro))
                .field(self.cm_p.as_bytes())
                .field(self.r2.as_bytes())
                .field(self.cm_r.as_bytes())
                .field(&self.proof.to_bytes())
                .finish(),
        );
        b
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TxRs {
    pub rt_r: Digest,
    pub serial: SerialNumber,
    pub cm_r_next: Commitment,
    pub proof: Proof,
}

impl TxRs {
    pub fn statement(&self) -> Statement {
        Statement::new(PublicInputs::RS { rt_r: self.rt_r, serial: self.serial, cm_r_next: self.cm_r_next })
    }
}

impl PublicTx for TxRs {
    fn kind(&self) -> &'static str {
        "spend_rt"
    }
    fn to_bytes(&self) -> Vec<u8> {
        let mut b = self.statement().public_inputs();
        b.extend_from_slice(&self.proof.to_bytes());
        b
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TxRu {
    pub rt_r: Digest,
    pub serial: SerialNumber,
    pub r_micro: u64,
    pub new_apk: Digest,
    pub proof: Proof,
}

impl TxRu {
    pub fn statement(&self) -> Statement {
        Statement::new(PublicInputs::RU {
            rt_r: self.rt_r,
            serial: self.serial,
            r_micro: self.r_micro,
            new_apk: self.new_apk,
        })
    }
}

impl PublicTx for TxRu {
    fn kind(&self) -> &'static str {
        "use_rt"
    }
    fn to_bytes(&self) -> Vec<u8> {
        let mut b = self.statement().public_inputs();
        b.extend_from_slice(&self.proof.to_bytes());
        b
    }
}

/// Reputation-token mint carrying the pseudonym's current ledger reputation forward.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TxRm {
    pub r_micro: u64,
    pub cm_p: Commitment,
    pub r2: Digest,
    pub cm_r: Commitment,
    pub apk: Digest,
    pub sig: PseudonymSig,
}

impl TxRm {
    pub fn message(r_micro: u64, cm_p: &Commitment, r2: &Digest, cm_r: &Commitment) -> Vec<u8> {
        Encoder::new()
            .field(b"mint-rt")
            .field(&encode_fixed(r_micro))
            .field(cm_p.as_bytes())
            .field(r2.as_bytes())
            .field(cm_r.as_bytes())
            .finish()
    }
}

impl PublicTx for TxRm {
    fn kind(&self) -> &'static str {
        "mint_rt"
    }
    fn to_bytes(&self) -> Vec<u8> {
        let mut b = Self::message(self.r_micro, &self.cm_p, &self.r2, &self.cm_r);
        b.extend_from_slice(self.apk.as_bytes());
        b.extend_from_slice(self.sig.0.as_bytes());
        b
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TxNewTask {
    pub task_id: String,
    pub reward: u64,
    pub handle: Commitment,
    pub rt_a: Digest,
    pub proof: Proof,
    pub requester_apk: Digest,
    pub sig: PseudonymSig,
}

impl TxNewTask {
    pub fn statement(&self) -> Statement {
        Statement::new(PublicInputs::I { task_id: self.task_id.clone(), handle: self.handle, rt_a: self.rt_a })
    }

    pub fn message(task_id: &str, reward: u64, handle: &Commitment, rt_a: &Digest, proof: &Proof) -> Vec<u8> {
        Encoder::new()
            .field(b"new-task")
            .field(task_id.as_bytes())
            .u64(reward)
            .field(handle.as_bytes())
            .field(rt_a.as_bytes())
            .field(&proof.to_bytes())
            .finish()
    }
}

impl PublicTx for TxNewTask {
    fn kind(&self) -> &'static str {
        "publish_task"
    }
    fn to_bytes(&self) -> Vec<u8> {
        let mut b = Self::message(&self.task_id, self.reward, &self.handle, &self.rt_a, &self.proof);
        b.extend_from_slice(self.requester_apk.as_bytes());
        b.extend_from_slice(self.sig.0.as_bytes());
        b
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TxSubToTask {
    pub task_id: String,
    pub handle: Commitment,
    pub rt_a: Digest,
    pub proof: Proof,
    pub worker_apk: Digest,
    pub sig: PseudonymSig,
}

impl TxSubToTask {
    pub fn statement(&self) -> Statement {
        Statement::new(PublicInputs::I { task_id: self.task_id.clone(), handle: self.handle, rt_a: self.rt_a })
    }

    pub fn message(task_id: &str, handle: &Commitment, rt_a: &Digest, proof: &Proof) -> Vec<u8> {
        Encoder::new()
            .field(b"sub-task")
            .field(task_id.as_bytes())
            .field(handle.as_bytes())
            .field(rt_a.as_bytes())
            .field(&proof.to_bytes())
            .finish()
    }
}

impl PublicTx for TxSubToTask {
    fn kind(&self) -> &'static str {
        "subscribe_task"
    }
    fn to_bytes(&self) -> Vec<u8> {
        let mut b = Self::message(&self.task_id, &self.handle, &self.rt_a, &self.proof);
        b.extend_from_slice(self.worker_apk.as_bytes());
        b.extend_from_slice(self.sig.0.as_bytes());
        b
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TxDeposit {
    pub task_id: String,
    pub amount: u64,
    pub cm_d: Commitment,
    pub apk: Digest,
    pub sig: PseudonymSig,
}

impl TxDeposit {
    pub fn message(task_id: &str, amount: u64, cm_d: &Commitment) -> Vec<u8> {
        Encoder::new().field(b"deposit").field(task_id.as_bytes()).u64(amount).field(cm_d.as_bytes()).finish()
    }
}

impl PublicTx for TxDeposit {
    fn kind(&self) -> &'static str {
        "deposit"
    }
    fn to_bytes(&self) -> Vec<u8> {
        let mut b = Self::message(&self.task_id, self.amount, &self.cm_d);
        b.extend_from_slice(self.apk.as_bytes());
        b.extend_from_slice(self.sig.0.as_bytes());
        b
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TxWithdraw {
    pub rt_d: Digest,
    pub nullifier: Nullifier,
    pub cm_d: Commitment,
    pub amount: u64,
    pub target_apk: Digest,
    pub proof: Proof,
}

impl TxWithdraw {
    pub fn statement(&self) -> Statement {
        Statement::new(PublicInputs::D {
            rt_d: self.rt_d,
            nullifier: self.nullifier,
            cm_d: self.cm_d,
            amount: self.amount,
            target_apk: self.target_apk,
        })
    }
}

impl PublicTx for TxWithdraw {
    fn kind(&self) -> &'static str {
        "withdraw"
    }
    fn to_bytes(&self) -> Vec<u8> {
        let mut b = self.statement().public_inputs();
        b.extend_from_slice(&self.proof.to_bytes());
        b
    }
}

/// Oracle-attested evaluation of one party.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MetricEntry {
    pub apk: Digest,
    pub trust_micro: u64,
    pub weight_micro: u64,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TxUpdateRt {
    pub task_id: String,
    pub requester: MetricEntry,
    pub workers: Vec<MetricEntry>,
    pub agg_sig: AggSig,
}

impl TxUpdateRt {
    /// The message oracles sign: task id followed by the canonical metrics.
    pub fn message(task_id: &str, requester: &MetricEntry, workers: &[MetricEntry]) -> Vec<u8> {
        let mut e = Encoder::new().field(b"update-rt").field(task_id.as_bytes());
        for m in std::iter::once(requester).chain(workers) {
            e = e.field(m.apk.as_bytes()).u64(m.trust_micro).u64(m.weight_micro);
        }
        e.finish()
    }
}

impl PublicTx for TxUpdateRt {
    fn kind(&self) -> &'static str {
        "update_rt"
    }
    fn to_bytes(&self) -> Vec<u8> {
        let mut b = Self::message(&self.task_id, &self.requester, &self.workers);
        b.extend(self.agg_sig.to_bytes());
        b
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TxPayOut {
    pub task_id: String,
    pub workers: Vec<Digest>,
    pub agg_sig: AggSig,
}

impl TxPayOut {
    pub fn message(task_id: &str, workers: &[Digest]) -> Vec<u8> {
        let mut e = Encoder::new().field(b"pay-out").field(task_id.as_bytes());
        for w in workers {
            e = e.field(w.as_bytes());
        }
        e.finish()
    }
}

impl PublicTx for TxPayOut {
    fn kind(&self) -> &'static str {
        "pay_out"
    }
    fn to_bytes(&self) -> Vec<u8> {
        let mut b = Self::message(&self.task_id, &self.workers);
        b.extend(self.agg_sig.to_bytes());
        b
    }
}
