use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::idml::{EventSink, LedgerEvent};
use super::tokens::reputation_commitment;
use super::tx::{
    MetricEntry, TxAs, TxDeposit, TxNewTask, TxPayOut, TxRm, TxRs, TxRu, TxSubToTask, TxUpdateRt, TxWithdraw,
};
use super::Rejection;
use crate::committee::Roster;
use crate::crypto::{hash_tagged, tag, Commitment, Digest, Nullifier, SerialNumber};
use crate::merkle::{Registry, DEFAULT_ROOT_HISTORY};
use crate::proof::{self, ProofEnv};
use crate::reputation::{
    from_micro, pw_mean_update, rat, to_micro, Rational, ReputationParams, ThresholdPolicy, ThresholdState,
};

#[derive(Clone, Debug, PartialEq)]
pub struct CsmlConfig {
    /// Genesis reputation in millionths.
    pub initial_micro: u64,
    pub params: ReputationParams<Rational>,
    pub threshold: ThresholdPolicy<Rational>,
    pub root_history: usize,
}

impl Default for CsmlConfig {
    fn default() -> Self {
        CsmlConfig {
            initial_micro: 500_000,
            params: ReputationParams::new(rat(1, 5), rat(3, 5)).expect("valid defaults"),
            threshold: ThresholdPolicy::RunningMean { cold_start: rat(1, 2) },
            root_history: DEFAULT_ROOT_HISTORY,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskStatus {
    Open,
    Subscribed,
    Evaluated,
    Paid,
    Expired,
    Refunded,
}

impl TaskStatus {
    pub fn name(self) -> &'static str {
        match self {
            TaskStatus::Open => "open",
            TaskStatus::Subscribed => "subscribed",
            TaskStatus::Evaluated => "evaluated",
            TaskStatus::Paid => "paid",
            TaskStatus::Expired => "expired",
            TaskStatus::Refunded => "refunded",
        }
    }

    fn accepts_subscribers(self) -> bool {
        matches!(self, TaskStatus::Open | TaskStatus::Subscribed)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Subscriber {
    pub handle: Commitment,
    pub apk: Digest,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Task {
    pub reward: u64,
    pub requester_handle: Commitment,
    pub requester_apk: Digest,
    pub subscribers: Vec<Subscriber>,
    pub status: TaskStatus,
    pub deposit: Option<Commitment>,
}

impl Task {
    fn parties(&self) -> impl Iterator<Item = &Digest> {
        std::iter::once(&self.requester_apk).chain(self.subscribers.iter().map(|s| &s.apk))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Locked {
    pub amount: u64,
    pub task_id: String,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReputationChange {
    pub apk: Digest,
    pub before: u64,
    pub after: u64,
}

#[derive(Clone, Debug)]
pub struct CsmlState {
    pub config: CsmlConfig,
    env: ProofEnv,
    oracle: Roster,
    pub ac_mirror: Registry,
    pub rc: Registry,
    pub dc: Registry,
    rc_leaves: BTreeSet<Commitment>,
    dc_leaves: BTreeSet<Commitment>,
    /// Active pseudonyms and their bound reputation (millionths).
    pub valid: BTreeMap<Digest, u64>,
    retired: BTreeSet<Digest>,
    pub spent_serials: BTreeSet<SerialNumber>,
    pub used_nullifiers: BTreeSet<Nullifier>,
    pub spent_access: BTreeSet<Commitment>,
    pub tasks: BTreeMap<String, Task>,
    pub locked: BTreeMap<Commitment, Locked>,
    pub balances: BTreeMap<Digest, u64>,
    /// Total funds ever credited; balances plus locked amounts always equal it.
    pub supply: u128,
    pending: BTreeMap<Digest, u32>,
    threshold: ThresholdState<Rational>,
}

impl EventSink for CsmlState {
    fn emit(&mut self, event: LedgerEvent) {
        match event {
            LedgerEvent::MintAt { cm_a, root } => {
                self.ac_mirror.insert(cm_a.0).expect("mirror has the source's capacity");
                debug_assert_eq!(self.ac_mirror.tree.root(), root);
            }
        }
    }
}

impl CsmlState {
    pub fn new(config: CsmlConfig, env: ProofEnv, oracle: Roster) -> Self {
        let h = config.root_history;
        let threshold = ThresholdState::new(config.threshold.clone());
        CsmlState {
            config,
            env,
            oracle,
            ac_mirror: Registry::new(h),
            rc: Registry::new(h),
            dc: Registry::new(h),
            rc_leaves: BTreeSet::new(),
            dc_leaves: BTreeSet::new(),
            valid: BTreeMap::new(),
            retired: BTreeSet::new(),
            spent_serials: BTreeSet::new(),
            used_nullifiers: BTreeSet::new(),
            spent_access: BTreeSet::new(),
            tasks: BTreeMap::new(),
            locked: BTreeMap::new(),
            balances: BTreeMap::new(),
            supply: 0,
            pending: BTreeMap::new(),
            threshold,
        }
    }

    pub fn current_threshold(&self) -> Rational {
        self.threshold.current()
    }

    pub fn balance(&self, apk: &Digest) -> u64 {
        self.balances.get(apk).copied().unwrap_or(0)
    }

    pub fn total_locked(&self) -> u128 {
        self.locked.values().map(|l| l.amount as u128).sum()
    }

    pub fn total_balances(&self) -> u128 {
        self.balances.values().map(|b| *b as u128).sum()
    }

    pub fn conserves_funds(&self) -> bool {
        self.total_balances() + self.total_locked() == self.supply
    }

    /// Genesis funding of a pseudonym; the only way new funds enter the ledger.
    pub fn credit(&mut self, apk: Digest, amount: u64) {
        *self.balances.entry(apk).or_default() += amount;
        self.supply += amount as u128;
    }

    fn insert_rc(&mut self, cm: Commitment) -> Result<u64, Rejection> {
        if self.rc_leaves.contains(&cm) {
            return Err(Rejection::DuplicateLeaf);
        }
        let idx = self.rc.insert(cm.0)?;
        self.rc_leaves.insert(cm);
        Ok(idx)
    }

    fn require_valid(&self, apk: &Digest) -> Result<u64, Rejection> {
        self.valid.get(apk).copied().ok_or(Rejection::NotValid)
    }

    fn fresh_pseudonym(&self, apk: &Digest) -> Result<(), Rejection> {
        if self.valid.contains_key(apk) || self.retired.contains(apk) {
            return Err(Rejection::PseudonymInUse);
        }
        Ok(())
    }

    fn add_pending(&mut self, task: &Task) {
        let parties: Vec<Digest> = task.parties().copied().collect();
        for apk in parties {
            *self.pending.entry(apk).or_default() += 1;
        }
    }

    fn release_pending(&mut self, task_id: &str) {
        let parties: Vec<Digest> = self.tasks[task_id].parties().copied().collect();
        for apk in parties {
            if let Some(c) = self.pending.get_mut(&apk) {
                *c -= 1;
                if *c == 0 {
                    self.pending.remove(&apk);
                }
            }
        }
    }

    /// Spend an access token and register the genesis reputation commitment.
    pub fn spend_at(&mut self, tx: &TxAs) -> Result<u64, Rejection> {
        if !self.ac_mirror.knows_root(&tx.rt_a) {
            return Err(Rejection::UnknownRoot);
        }
        if !proof::verify(&self.env, &tx.statement(), &tx.proof) {
            return Err(Rejection::InvalidProof);
        }
        if reputation_commitment(&tx.r2.0, tx.r_micro, &tx.cm_p) != tx.cm_r {
            return Err(Rejection::MalformedCommitment);
        }
        if tx.r_micro != self.config.initial_micro {
            return Err(Rejection::InitialReputation { got: tx.r_micro, expected: self.config.initial_micro });
        }
        if self.rc_leaves.contains(&tx.cm_r) {
            return Err(Rejection::DuplicateLeaf);
        }
        if self.spent_access.contains(&tx.cm_u) {
            return Err(Rejection::AccessTokenSpent);
        }
        let idx = self.insert_rc(tx.cm_r)?;
        self.spent_access.insert(tx.cm_u);
        Ok(idx)
    }

    /// Rotate a reputation token into a fresh one of identical value.
    pub fn spend_rt(&mut self, tx: &TxRs) -> Result<u64, Rejection> {
        if self.spent_serials.contains(&tx.serial) {
            return Err(Rejection::SerialReused);
        }
        if !self.rc.knows_root(&tx.rt_r) {
            return Err(Rejection::UnknownRoot);
        }
        if !proof::verify(&self.env, &tx.statement(), &tx.proof) {
            return Err(Rejection::InvalidProof);
        }
        let idx = self.insert_rc(tx.cm_r_next)?;
        self.spent_serials.insert(tx.serial);
        Ok(idx)
    }

    /// Disclose a token's reputation and bind it to a new pseudonym.
    pub fn use_rt(&mut self, tx: &TxRu) -> Result<(), Rejection> {
        if self.spent_serials.contains(&tx.serial) {
            return Err(Rejection::SerialReused);
        }
        if !self.rc.knows_root(&tx.rt_r) {
            return Err(Rejection::UnknownRoot);
        }
        if !proof::verify(&self.env, &tx.statement(), &tx.proof) {
            return Err(Rejection::InvalidProof);
        }
        if tx.r_micro > crate::crypto::FIXED_SCALE {
            return Err(Rejection::Malformed("reputation above one"));
        }
        self.fresh_pseudonym(&tx.new_apk)?;
        self.spent_serials.insert(tx.serial);
        self.valid.insert(tx.new_apk, tx.r_micro);
        Ok(())
    }

    /// Mint a token carrying the submitting pseudonym's current reputation; retires the pseudonym.
    pub fn mint_rt(&mut self, tx: &TxRm) -> Result<u64, Rejection> {
        let recorded = self.require_valid(&tx.apk)?;
        let msg = TxRm::message(tx.r_micro, &tx.cm_p, &tx.r2, &tx.cm_r);
        if !self.env.verify_pseudonym(&tx.apk, &msg, &tx.sig) {
            return Err(Rejection::BadSignature);
        }
        if tx.r_micro != recorded {
            return Err(Rejection::ReputationMismatch { claimed: tx.r_micro, recorded });
        }
        if reputation_commitment(&tx.r2.0, tx.r_micro, &tx.cm_p) != tx.cm_r {
            return Err(Rejection::MalformedCommitment);
        }
        if self.pending.contains_key(&tx.apk) {
            return Err(Rejection::PendingTask);
        }
        let idx = self.insert_rc(tx.cm_r)?;
        self.valid.remove(&tx.apk);
        self.retired.insert(tx.apk);
        Ok(idx)
    }

    pub fn publish_task(&mut self, tx: &TxNewTask) -> Result<(), Rejection> {
        self.require_valid(&tx.requester_apk)?;
        let msg = TxNewTask::message(&tx.task_id, tx.reward, &tx.handle, &tx.rt_a, &tx.proof);
        if !self.env.verify_pseudonym(&tx.requester_apk, &msg, &tx.sig) {
            return Err(Rejection::BadSignature);
        }
        if !self.ac_mirror.knows_root(&tx.rt_a) {
            return Err(Rejection::UnknownRoot);
        }
        if !proof::verify(&self.env, &tx.statement(), &tx.proof) {
            return Err(Rejection::InvalidProof);
        }
        if self.tasks.contains_key(&tx.task_id) {
            return Err(Rejection::TaskExists);
        }
        let task = Task {
            reward: tx.reward,
            requester_handle: tx.handle,
            requester_apk: tx.requester_apk,
            subscribers: Vec::new(),
            status: TaskStatus::Open,
            deposit: None,
        };
        self.add_pending(&task);
        self.tasks.insert(tx.task_id.clone(), task);
        Ok(())
    }

    pub fn subscribe_task(&mut self, tx: &TxSubToTask) -> Result<(), Rejection> {
        let task = self.tasks.get(&tx.task_id).ok_or(Rejection::UnknownTask)?;
        if !task.status.accepts_subscribers() {
            return Err(Rejection::WrongStatus(task.status.name()));
        }
        self.require_valid(&tx.worker_apk)?;
        let msg = TxSubToTask::message(&tx.task_id, &tx.handle, &tx.rt_a, &tx.proof);
        if !self.env.verify_pseudonym(&tx.worker_apk, &msg, &tx.sig) {
            return Err(Rejection::BadSignature);
        }
        if !self.ac_mirror.knows_root(&tx.rt_a) {
            return Err(Rejection::UnknownRoot);
        }
        if !proof::verify(&self.env, &tx.statement(), &tx.proof) {
            return Err(Rejection::InvalidProof);
        }
        if tx.handle == task.requester_handle {
            return Err(Rejection::SelfPromotion);
        }
        if tx.worker_apk == task.requester_apk
            || task.subscribers.iter().any(|s| s.handle == tx.handle || s.apk == tx.worker_apk)
        {
            return Err(Rejection::DuplicateSubscriber);
        }
        let task = self.tasks.get_mut(&tx.task_id).expect("checked");
        task.subscribers.push(Subscriber { handle: tx.handle, apk: tx.worker_apk });
        task.status = TaskStatus::Subscribed;
        *self.pending.entry(tx.worker_apk).or_default() += 1;
        Ok(())
    }

    /// Lock the task reward from the requester's balance.
    pub fn deposit(&mut self, tx: &TxDeposit) -> Result<u64, Rejection> {
        self.require_valid(&tx.apk).map_err(|_| Rejection::Unauthorized)?;
        if !self.env.verify_pseudonym(&tx.apk, &TxDeposit::message(&tx.task_id, tx.amount, &tx.cm_d), &tx.sig) {
            return Err(Rejection::BadSignature);
        }
        let task = self.tasks.get(&tx.task_id).ok_or(Rejection::UnknownTask)?;
        if task.requester_apk != tx.apk {
            return Err(Rejection::Unauthorized);
        }
        if !task.status.accepts_subscribers() {
            return Err(Rejection::WrongStatus(task.status.name()));
        }
        if task.deposit.is_some() {
            return Err(Rejection::DepositExists);
        }
        if tx.amount != task.reward {
            return Err(Rejection::AmountMismatch);
        }
        if self.balance(&tx.apk) < tx.amount {
            return Err(Rejection::InsufficientFunds);
        }
        if self.dc_leaves.contains(&tx.cm_d) {
            return Err(Rejection::DuplicateLeaf);
        }
        let idx = self.dc.insert(tx.cm_d.0)?;
        self.dc_leaves.insert(tx.cm_d);
        *self.balances.get_mut(&tx.apk).expect("has balance") -= tx.amount;
        self.locked.insert(tx.cm_d, Locked { amount: tx.amount, task_id: tx.task_id.clone() });
        self.tasks.get_mut(&tx.task_id).expect("checked").deposit = Some(tx.cm_d);
        Ok(idx)
    }

    /// Reclaim the deposit of an expired task to a whitelisted pseudonym.
    pub fn withdraw(&mut self, tx: &TxWithdraw) -> Result<(), Rejection> {
        if self.used_nullifiers.contains(&tx.nullifier) {
            return Err(Rejection::NullifierReused);
        }
        if !self.dc.knows_root(&tx.rt_d) {
            return Err(Rejection::UnknownRoot);
        }
        if !proof::verify(&self.env, &tx.statement(), &tx.proof) {
            return Err(Rejection::InvalidProof);
        }
        if !self.valid.contains_key(&tx.target_apk) {
            return Err(Rejection::NotWhitelisted);
        }
        let locked = self.locked.get(&tx.cm_d).ok_or(Rejection::NoDeposit)?;
        if locked.amount != tx.amount {
            return Err(Rejection::AmountMismatch);
        }
        let status = self.tasks[&locked.task_id].status;
        if status != TaskStatus::Expired {
            return Err(Rejection::WrongStatus(status.name()));
        }
        let locked = self.locked.remove(&tx.cm_d).expect("checked");
        self.used_nullifiers.insert(tx.nullifier);
        *self.balances.entry(tx.target_apk).or_default() += locked.amount;
        self.tasks.get_mut(&locked.task_id).expect("exists").status = TaskStatus::Refunded;
        Ok(())
    }

    /// Scenario-driven timeout of a task that was never evaluated.
    pub fn expire_task(&mut self, task_id: &str) -> Result<(), Rejection> {
        let task = self.tasks.get(task_id).ok_or(Rejection::UnknownTask)?;
        if !task.status.accepts_subscribers() {
            return Err(Rejection::WrongStatus(task.status.name()));
        }
        self.release_pending(task_id);
        self.tasks.get_mut(task_id).expect("checked").status = TaskStatus::Expired;
        Ok(())
    }

    /// Apply oracle-attested evaluations to requester and workers.
    pub fn update_rt(&mut self, tx: &TxUpdateRt) -> Result<Vec<ReputationChange>, Rejection> {
        let task = self.tasks.get(&tx.task_id).ok_or(Rejection::UnknownTask)?;
        match task.status {
            TaskStatus::Subscribed => {}
            TaskStatus::Evaluated | TaskStatus::Paid => return Err(Rejection::AlreadyEvaluated),
            s => return Err(Rejection::WrongStatus(s.name())),
        }
        let msg = TxUpdateRt::message(&tx.task_id, &tx.requester, &tx.workers);
        if !self.oracle.verify_agg(&msg, &tx.agg_sig) {
            return Err(Rejection::Threshold);
        }
        if tx.requester.apk != task.requester_apk {
            return Err(Rejection::Unauthorized);
        }
        if tx.workers.is_empty() {
            return Err(Rejection::Malformed("no workers"));
        }
        let mut seen = BTreeSet::new();
        for w in &tx.workers {
            if !task.subscribers.iter().any(|s| s.apk == w.apk) {
                return Err(Rejection::NotSubscriber);
            }
            if !seen.insert(w.apk) {
                return Err(Rejection::Malformed("duplicate worker"));
            }
        }
        let entries: Vec<&MetricEntry> = std::iter::once(&tx.requester).chain(&tx.workers).collect();
        let t_theta = self.threshold.current();
        let mut changes = Vec::with_capacity(entries.len());
        for m in &entries {
            let before = self.require_valid(&m.apk)?;
            let r = from_micro(before);
            let t = from_micro(m.trust_micro);
            let w = from_micro(m.weight_micro);
            let next = pw_mean_update(&r, &t, &w, &t_theta, &self.config.params)?;
            changes.push(ReputationChange { apk: m.apk, before, after: to_micro(&next)? });
        }
        for c in &changes {
            self.valid.insert(c.apk, c.after);
        }
        for m in &entries {
            self.threshold.observe(&from_micro(m.trust_micro));
        }
        self.release_pending(&tx.task_id);
        self.tasks.get_mut(&tx.task_id).expect("checked").status = TaskStatus::Evaluated;
        Ok(changes)
    }

    /// Release the locked reward to workers: equal shares, remainder to the first listed.
    pub fn pay_out(&mut self, tx: &TxPayOut) -> Result<Vec<(Digest, u64)>, Rejection> {
        let task = self.tasks.get(&tx.task_id).ok_or(Rejection::UnknownTask)?;
        match task.status {
            TaskStatus::Evaluated => {}
            TaskStatus::Paid => return Err(Rejection::AlreadyPaid),
            s => return Err(Rejection::WrongStatus(s.name())),
        }
        if !self.oracle.verify_agg(&TxPayOut::message(&tx.task_id, &tx.workers), &tx.agg_sig) {
            return Err(Rejection::Threshold);
        }
        let cm_d = task.deposit.ok_or(Rejection::NoDeposit)?;
        if tx.workers.is_empty() {
            return Err(Rejection::Malformed("no workers"));
        }
        let mut seen = BTreeSet::new();
        for w in &tx.workers {
            if !task.subscribers.iter().any(|s| s.apk == *w) {
                return Err(Rejection::NotSubscriber);
            }
            if !seen.insert(*w) {
                return Err(Rejection::Malformed("duplicate worker"));
            }
        }
        let locked = self.locked.remove(&cm_d).ok_or(Rejection::NoDeposit)?;
        let shares = split_reward(locked.amount, tx.workers.len());
        let paid: Vec<(Digest, u64)> = tx.workers.iter().copied().zip(shares).collect();
        for (apk, amount) in &paid {
            *self.balances.entry(*apk).or_default() += amount;
        }
        self.tasks.get_mut(&tx.task_id).expect("checked").status = TaskStatus::Paid;
        Ok(paid)
    }

    pub fn state_digest(&self) -> Digest {
        let mut buf = Vec::new();
        for r in [self.ac_mirror.tree.root(), self.rc.tree.root(), self.dc.tree.root()] {
            buf.extend_from_slice(r.as_bytes());
        }
        for (apk, r) in &self.valid {
            buf.extend_from_slice(apk.as_bytes());
            buf.extend_from_slice(&r.to_be_bytes());
        }
        for s in &self.spent_serials {
            buf.extend_from_slice(s.0.as_bytes());
        }
        for n in &self.used_nullifiers {
            buf.extend_from_slice(n.0.as_bytes());
        }
        for (id, t) in &self.tasks {
            buf.extend_from_slice(id.as_bytes());
            buf.extend_from_slice(t.status.name().as_bytes());
            buf.extend_from_slice(&t.reward.to_be_bytes());
            for s in &t.subscribers {
                buf.extend_from_slice(s.apk.as_bytes());
            }
        }
        for (apk, b) in &self.balances {
            buf.extend_from_slice(apk.as_bytes());
            buf.extend_from_slice(&b.to_be_bytes());
        }
        for (cm, l) in &self.locked {
            buf.extend_from_slice(cm.as_bytes());
            buf.extend_from_slice(&l.amount.to_be_bytes());
        }
        hash_tagged(tag::STATE, &[b"csml", &buf])
    }
}

/// Equal integer shares; the remainder goes to the first recipients, one unit each.
pub fn split_reward(amount: u64, n: usize) -> Vec<u64> {
    let n64 = n as u64;
    let base = amount / n64;
    let rem = (amount % n64) as usize;
    (0..n).map(|i| base + u64::from(i < rem)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reward_split() {
        assert_eq!(split_reward(100, 1), vec![100]);
        assert_eq!(split_reward(101, 2), vec![51, 50]);
        assert_eq!(split_reward(100, 3), vec![34, 33, 33]);
        for amount in 0..200u64 {
            for n in 1..7usize {
                let s = split_reward(amount, n);
                assert_eq!(s.iter().sum::<u64>(), amount);
                assert!(s.windows(2).all(|w| w[0] >= w[1] && w[0] - w[1] <= 1));
            }
        }
    }
}
