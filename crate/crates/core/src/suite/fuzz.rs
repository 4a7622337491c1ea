//! Randomised interleavings of honest flows, replays and forged transactions,
//! checked against bookkeeping kept outside the ledger.

use std::collections::BTreeSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::Check;
use crate::crypto::{Commitment, Digest, Nullifier, SerialNumber};
use crate::error::Result;
use crate::ledger::{
    DepositNote, MetricEntry, TaskStatus, TxAm, TxAs, TxDeposit, TxNewTask, TxPayOut, TxRm, TxRs, TxRu,
    TxSubToTask, TxUpdateRt, TxWithdraw,
};
use crate::network::{synthetic_store, Network, NetworkConfig, Participant};

#[derive(Clone, Debug)]
enum AnyTx {
    Am(TxAm),
    As(TxAs),
    Rs(TxRs),
    Ru(TxRu),
    Rm(TxRm),
    New(TxNewTask),
    Sub(TxSubToTask),
    Dep(TxDeposit),
    Upd(TxUpdateRt),
    Pay(TxPayOut),
    Wd(TxWithdraw),
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FuzzReport {
    pub steps: usize,
    pub accepted: usize,
    pub rejected: usize,
    pub replays: usize,
    pub forgeries: usize,
    /// Accepted transactions reusing a serial, nullifier or access token already consumed.
    pub double_spends: usize,
    /// Accepted access-token mints for a context key that already has one.
    pub second_access_tokens: usize,
    /// Accepted token mints or uses whose reputation differs from the bound value.
    pub forward_binding: usize,
    /// Steps after which balances plus locked funds differ from funds credited.
    pub conservation: usize,
}

impl FuzzReport {
    fn merge(&mut self, o: &FuzzReport) {
        self.steps += o.steps;
        self.accepted += o.accepted;
        self.rejected += o.rejected;
        self.replays += o.replays;
        self.forgeries += o.forgeries;
        self.double_spends += o.double_spends;
        self.second_access_tokens += o.second_access_tokens;
        self.forward_binding += o.forward_binding;
        self.conservation += o.conservation;
    }

    pub fn checks(&self) -> Vec<(&'static str, Check)> {
        let c = |n: usize, what: &str| Check::new(n == 0, format!("{n} {what} over {} steps", self.steps));
        vec![
            ("no-double-spend", c(self.double_spends, "accepted double-spends")),
            ("one-access-token-per-context", c(self.second_access_tokens, "second access tokens")),
            ("forward-binding", c(self.forward_binding, "binding violations")),
            ("fund-conservation", c(self.conservation, "conservation failures")),
        ]
    }
}

struct TaskInfo {
    id: String,
    requester: usize,
    subscribers: Vec<usize>,
    note: Option<(DepositNote, u64)>,
}

struct Harness {
    net: Network,
    rng: ChaCha8Rng,
    people: Vec<Participant>,
    tasks: Vec<TaskInfo>,
    pool: Vec<AnyTx>,
    credited: u128,
    serials: BTreeSet<SerialNumber>,
    nullifiers: BTreeSet<Nullifier>,
    spent_access: BTreeSet<Commitment>,
    minted: BTreeSet<(String, Digest)>,
    /// Token value by serial, recorded when the token was minted.
    token_values: Vec<(SerialNumber, u64)>,
    report: FuzzReport,
}

const MAX_PEOPLE: usize = 8;

impl Harness {
    fn new(seed: u64) -> Result<Self> {
        let ids: Vec<String> = (0..MAX_PEOPLE + 1).map(|i| format!("fuzz-{i}")).collect();
        let net = Network::new(NetworkConfig::new(seed), synthetic_store(ids.iter().map(String::as_str)))?;
        Ok(Harness {
            net,
            rng: ChaCha8Rng::seed_from_u64(seed ^ 0x5eed),
            people: Vec::new(),
            tasks: Vec::new(),
            pool: Vec::new(),
            credited: 0,
            serials: BTreeSet::new(),
            nullifiers: BTreeSet::new(),
            spent_access: BTreeSet::new(),
            minted: BTreeSet::new(),
            token_values: Vec::new(),
            report: FuzzReport::default(),
        })
    }

    /// Submit, then check the outcome against the harness's own records.
    /// Returns the registry index for accepted transactions that append one.
    fn submit(&mut self, tx: &AnyTx) -> Option<u64> {
        let n = &mut self.net;
        let bound_value = match tx {
            AnyTx::Rm(t) => n.csml.valid.get(&t.apk).copied(),
            _ => None,
        };
        let out = match tx {
            AnyTx::Am(t) => n.submit_mint_at(t),
            AnyTx::As(t) => n.submit_spend_at(t),
            AnyTx::Rs(t) => n.submit_spend_rt(t),
            AnyTx::Ru(t) => n.submit_use_rt(t).map(|_| 0),
            AnyTx::Rm(t) => n.submit_mint_rt(t),
            AnyTx::New(t) => n.submit_publish(t).map(|_| 0),
            AnyTx::Sub(t) => n.submit_subscribe(t).map(|_| 0),
            AnyTx::Dep(t) => n.submit_deposit(t),
            AnyTx::Upd(t) => n.submit_update(t).map(|_| 0),
            AnyTx::Pay(t) => n.submit_pay_out(t).map(|_| 0),
            AnyTx::Wd(t) => n.submit_withdraw(t).map(|_| 0),
        };
        let Ok(index) = out else {
            self.report.rejected += 1;
            return None;
        };
        self.report.accepted += 1;
        let r = &mut self.report;
        match tx {
            AnyTx::Am(t) => {
                if !self.minted.insert((t.ctx.clone(), t.pk_ctx)) {
                    r.second_access_tokens += 1;
                }
            }
            AnyTx::As(t) => {
                if !self.spent_access.insert(t.cm_u) {
                    r.double_spends += 1;
                }
            }
            AnyTx::Rs(t) => {
                if !self.serials.insert(t.serial) {
                    r.double_spends += 1;
                }
            }
            AnyTx::Ru(t) => {
                if !self.serials.insert(t.serial) {
                    r.double_spends += 1;
                }
                let known = self.token_values.iter().find(|(s, _)| *s == t.serial).map(|(_, v)| *v);
                if known != Some(t.r_micro) {
                    r.forward_binding += 1;
                }
            }
            AnyTx::Rm(t) => {
                if bound_value != Some(t.r_micro) {
                    r.forward_binding += 1;
                }
            }
            AnyTx::Wd(t) => {
                if !self.nullifiers.insert(t.nullifier) {
                    r.double_spends += 1;
                }
            }
            _ => {}
        }
        Some(index)
    }

    fn check_conservation(&mut self) {
        let c = &self.net.csml;
        if c.total_balances() + c.total_locked() != self.credited {
            self.report.conservation += 1;
        }
    }

    fn remember(&mut self, tx: AnyTx) {
        if self.pool.len() < 256 {
            self.pool.push(tx);
        } else {
            let i = self.rng.random_range(0..self.pool.len());
            self.pool[i] = tx;
        }
    }

    fn fund(&mut self, apk: Digest, amount: u64) {
        self.net.csml.credit(apk, amount);
        self.credited += amount as u128;
    }

    fn onboard(&mut self) -> Result<()> {
        let id = format!("fuzz-{}", self.people.len());
        let mut p = self.net.enroll(&id)?;
        let (at, am) = self.net.mint_at_tx(&p);
        let am = AnyTx::Am(am);
        let Some(idx) = self.submit(&am) else { return Ok(()) };
        p.access_index = idx;
        p.access = Some(at);
        self.remember(am);
        let (token, tx) = self.net.spend_at_tx(&p)?;
        let tx = AnyTx::As(tx);
        let Some(idx) = self.submit(&tx) else { return Ok(()) };
        self.token_values.push((token.serial(), token.r_micro));
        p.token = Some((token, idx));
        self.remember(tx);
        self.use_token(&mut p)?;
        if let Some(apk) = p.apk() {
            self.fund(apk, 1_000);
        }
        self.people.push(p);
        Ok(())
    }

    fn use_token(&mut self, p: &mut Participant) -> Result<()> {
        let (keys, tx) = self.net.use_rt_tx(p)?;
        let tx = AnyTx::Ru(tx);
        if self.submit(&tx).is_some() {
            p.token = None;
            p.pseudonym = Some(keys);
            self.remember(tx);
        }
        Ok(())
    }

    fn rotate(&mut self, i: usize) -> Result<()> {
        let mut p = self.people[i].clone();
        let Some(apk) = p.apk() else { return Ok(()) };
        let Some(&value) = self.net.csml.valid.get(&apk) else { return Ok(()) };
        let (token, tx) = self.net.mint_rt_tx(&p, value)?;
        let tx = AnyTx::Rm(tx);
        let Some(idx) = self.submit(&tx) else { return Ok(()) };
        self.token_values.push((token.serial(), token.r_micro));
        p.token = Some((token, idx));
        p.pseudonym = None;
        p.rotations += 1;
        self.remember(tx);
        if self.rng.random_bool(0.5) {
            let (new, tx) = self.net.spend_rt_tx(&p)?;
            let tx = AnyTx::Rs(tx);
            if let Some(idx) = self.submit(&tx) {
                self.token_values.push((new.serial(), new.r_micro));
                p.token = Some((new, idx));
                self.remember(tx);
            }
        }
        self.use_token(&mut p)?;
        if let Some(apk) = p.apk() {
            self.fund(apk, 200);
        }
        self.people[i] = p;
        Ok(())
    }

    fn active(&mut self) -> Option<usize> {
        let live: Vec<usize> = (0..self.people.len()).filter(|i| self.people[*i].apk().is_some()).collect();
        (!live.is_empty()).then(|| live[self.rng.random_range(0..live.len())])
    }

    fn publish(&mut self) -> Result<()> {
        let Some(i) = self.active() else { return Ok(()) };
        let reward = self.rng.random_range(1..100);
        let id = self.net.next_task_id();
        let tx = self.net.publish_tx(&self.people[i], &id, reward)?;
        let tx = AnyTx::New(tx);
        if self.submit(&tx).is_none() {
            return Ok(());
        }
        self.remember(tx);
        let mut info = TaskInfo { id: id.clone(), requester: i, subscribers: Vec::new(), note: None };
        let (note, dep) = self.net.deposit_tx(&self.people[i], &id, reward)?;
        let dep = AnyTx::Dep(dep);
        if let Some(leaf) = self.submit(&dep) {
            info.note = Some((note, leaf));
            self.remember(dep);
        }
        self.tasks.push(info);
        Ok(())
    }

    fn status(&self, t: &TaskInfo) -> Option<TaskStatus> {
        self.net.csml.tasks.get(&t.id).map(|x| x.status)
    }

    fn pick_task(&mut self, ok: impl Fn(TaskStatus) -> bool) -> Option<usize> {
        let c: Vec<usize> = (0..self.tasks.len()).filter(|i| self.status(&self.tasks[*i]).is_some_and(&ok)).collect();
        (!c.is_empty()).then(|| c[self.rng.random_range(0..c.len())])
    }

    fn subscribe(&mut self) -> Result<()> {
        let Some(t) = self.pick_task(|s| matches!(s, TaskStatus::Open | TaskStatus::Subscribed)) else { return Ok(()) };
        let Some(w) = self.active() else { return Ok(()) };
        if w == self.tasks[t].requester || self.tasks[t].subscribers.contains(&w) {
            return Ok(());
        }
        let tx = AnyTx::Sub(self.net.subscribe_tx(&self.people[w], &self.tasks[t].id)?);
        if self.submit(&tx).is_some() {
            self.tasks[t].subscribers.push(w);
            self.remember(tx);
        }
        Ok(())
    }

    fn evaluate(&mut self) -> Result<()> {
        let Some(t) = self.pick_task(|s| s == TaskStatus::Subscribed) else { return Ok(()) };
        let task = &self.tasks[t];
        let apk = |i: usize| self.net.csml.tasks[&task.id].subscribers.iter().find(|s| Some(s.apk) == self.people[i].apk()).map(|s| s.apk);
        let workers: Vec<Digest> = task.subscribers.iter().filter_map(|i| apk(*i)).collect();
        if workers.len() != task.subscribers.len() {
            return Ok(());
        }
        let requester_apk = self.net.csml.tasks[&task.id].requester_apk;
        let mut entry = |apk| MetricEntry {
            apk,
            trust_micro: self.rng.random_range(0..=1_000_000),
            weight_micro: self.rng.random_range(0..=1_000_000),
        };
        let req = entry(requester_apk);
        let ws = workers.into_iter().map(&mut entry).collect();
        let tx = AnyTx::Upd(self.net.update_tx(&task.id.clone(), req, ws)?);
        if self.submit(&tx).is_some() {
            self.remember(tx);
        }
        Ok(())
    }

    fn pay(&mut self) -> Result<()> {
        let Some(t) = self.pick_task(|s| s == TaskStatus::Evaluated) else { return Ok(()) };
        let task = &self.tasks[t];
        let workers: Vec<Digest> = self.net.csml.tasks[&task.id].subscribers.iter().map(|s| s.apk).collect();
        let tx = AnyTx::Pay(self.net.pay_out_tx(&task.id, workers)?);
        if self.submit(&tx).is_some() {
            self.remember(tx);
        }
        Ok(())
    }

    fn expire_and_withdraw(&mut self) -> Result<()> {
        let Some(t) = self.pick_task(|s| matches!(s, TaskStatus::Open | TaskStatus::Subscribed)) else { return Ok(()) };
        let id = self.tasks[t].id.clone();
        if self.net.csml.expire_task(&id).is_err() {
            return Ok(());
        }
        let Some((note, leaf)) = self.tasks[t].note.clone() else { return Ok(()) };
        let Some(target) = self.active().and_then(|i| self.people[i].apk()) else { return Ok(()) };
        let tx = AnyTx::Wd(self.net.withdraw_tx(&note, leaf, target)?);
        if self.submit(&tx).is_some() {
            self.remember(tx);
        }
        Ok(())
    }

    fn replay(&mut self) {
        if self.pool.is_empty() {
            return;
        }
        let tx = self.pool[self.rng.random_range(0..self.pool.len())].clone();
        self.report.replays += 1;
        self.submit(&tx);
    }

    /// Transactions an honest client would never send.
    fn forge(&mut self) -> Result<()> {
        let Some(i) = self.active() else { return Ok(()) };
        self.report.forgeries += 1;
        let p = self.people[i].clone();
        match self.rng.random_range(0..3) {
            0 => {
                // second access token for a context key that already has one
                let (_, tx) = self.net.mint_at_tx(&p);
                self.submit(&AnyTx::Am(tx));
            }
            1 => {
                // carry an inflated reputation into the next token
                let apk = p.apk().expect("active");
                let value = self.net.csml.valid[&apk];
                let (_, tx) = self.net.mint_rt_tx(&p, (value + 1 + self.rng.random_range(0..1000)).min(1_000_000))?;
                self.submit(&AnyTx::Rm(tx));
            }
            _ => {
                // spend the same access token twice
                if p.access.is_some() {
                    let (_, tx) = self.net.spend_at_tx(&p)?;
                    self.submit(&AnyTx::As(tx));
                }
            }
        }
        Ok(())
    }

    fn step(&mut self) -> Result<()> {
        match self.rng.random_range(0..100) {
            _ if self.people.len() < 2 => self.onboard()?,
            0..=4 if self.people.len() < MAX_PEOPLE => self.onboard()?,
            0..=19 => self.publish()?,
            20..=39 => self.subscribe()?,
            40..=51 => self.evaluate()?,
            52..=59 => self.pay()?,
            60..=64 => self.expire_and_withdraw()?,
            65..=74 => {
                let i = self.rng.random_range(0..self.people.len());
                self.rotate(i)?
            }
            75..=89 => self.replay(),
            _ => self.forge()?,
        }
        self.report.steps += 1;
        self.check_conservation();
        Ok(())
    }
}

/// `runs` independent ledgers, `steps` operations each.
pub fn ledger_fuzz(seed: u64, runs: usize, steps: usize) -> Result<FuzzReport> {
    let mut total = FuzzReport::default();
    for run in 0..runs {
        let mut h = Harness::new(seed.wrapping_add(run as u64))?;
        for _ in 0..steps {
            h.step()?;
        }
        total.merge(&h.report);
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn short_fuzz_is_clean_and_exercises_rejections() {
        let r = ledger_fuzz(11, 2, 300).unwrap();
        assert!(r.checks().iter().all(|(_, c)| c.passed), "{r:?}");
        assert!(r.accepted > 100 && r.rejected > 20 && r.replays > 20, "{r:?}");
    }
}
