//! Honest-client orchestration over both ledgers.
//!
//! A [`Network`] owns the registration committee, the oracle network, both
//! ledger states and the client-side randomness. [`Participant`] is a wallet:
//! it keeps every secret note and only ever hands public transactions to the
//! ledgers.

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

use crate::committee::{
    issue_context_credential, register_user, ClaimPredicate, Committee, CommitteeConfig, LegacyRecordStore, User,
};
use crate::crypto::{derive_address, hash_tagged, tag, AddressKeyPair, Digest, Secret};
use crate::error::{Error, Result};
use crate::ledger::tokens::{random_secret, task_handle};
use crate::ledger::{
    AccessToken, ContextCredential, CsmlConfig, CsmlState, DepositNote, IdmlState, MasterCredential, MetricEntry,
    PublicTx, ReputationChange, ReputationToken, Rejection, TxAm, TxAs, TxDeposit, TxLog, TxNewTask, TxPayOut, TxRm,
    TxRs, TxRu, TxSubToTask, TxUpdateRt, TxWithdraw,
};
use crate::proof::{self, ProofEnv, Witness};

#[derive(Clone, Debug)]
pub struct NetworkConfig {
    pub seed: u64,
    pub context: String,
    pub committee: CommitteeConfig,
    pub oracle: CommitteeConfig,
    pub csml: CsmlConfig,
    pub claims: Vec<ClaimPredicate>,
    pub log: bool,
}

impl NetworkConfig {
    pub fn new(seed: u64) -> Self {
        let c = CommitteeConfig::new(7, 2, 2).expect("valid default committee");
        NetworkConfig {
            seed,
            context: "crowdsensing".into(),
            committee: c,
            oracle: c,
            csml: CsmlConfig::default(),
            claims: vec![ClaimPredicate::SsnWellFormed],
            log: false,
        }
    }
}

/// A user's wallet: credentials, access token and reputation notes.
#[derive(Clone, Debug)]
pub struct Participant {
    pub user: User,
    pub master: MasterCredential,
    pub context: ContextCredential,
    pub access: Option<AccessToken>,
    pub access_index: u64,
    /// Latest reputation token and its leaf index; `None` once spent by `use_rt`.
    pub token: Option<(ReputationToken, u64)>,
    /// Active pseudonym bound in the valid set.
    pub pseudonym: Option<AddressKeyPair>,
    pub rotations: u64,
}

impl Participant {
    pub fn apk(&self) -> Option<Digest> {
        self.pseudonym.as_ref().map(|k| k.apk)
    }

    fn pseudonym_keys(&self) -> Result<&AddressKeyPair> {
        self.pseudonym.as_ref().ok_or(Error::Ledger(Rejection::NotValid))
    }

    fn access_token(&self) -> Result<&AccessToken> {
        self.access.as_ref().ok_or(Error::Ledger(Rejection::AccessDenied))
    }

    /// Every secret the wallet holds, for leakage scans.
    pub fn secrets(&self) -> Vec<Vec<u8>> {
        let mut out = vec![self.user.blind.to_vec(), self.user.m_sk.to_vec(), self.context.sk_ctx.to_vec()];
        if let Some(a) = &self.access {
            out.extend(a.secrets().into_iter().map(<[u8]>::to_vec));
        }
        if let Some((t, _)) = &self.token {
            out.extend(t.secrets().into_iter().map(<[u8]>::to_vec));
        }
        if let Some(k) = &self.pseudonym {
            out.push(k.ask.to_vec());
        }
        out
    }
}

#[derive(Clone, Debug)]
pub struct Network {
    pub committee: Committee,
    pub oracle: Committee,
    pub store: LegacyRecordStore,
    pub env: ProofEnv,
    pub idml: IdmlState,
    pub csml: CsmlState,
    pub log: Option<TxLog>,
    pub context: String,
    claims: Vec<ClaimPredicate>,
    rng: ChaCha20Rng,
    tasks_published: u64,
}

fn log_tx<T: PublicTx, R>(log: &mut Option<TxLog>, ledger: &str, tx: &T, outcome: &std::result::Result<R, Rejection>) {
    if let Some(l) = log {
        l.record(ledger, tx, outcome);
    }
}

impl Network {
    pub fn new(config: NetworkConfig, store: LegacyRecordStore) -> Result<Self> {
        let committee = Committee::new(config.committee, config.seed, "idml-committee")?;
        let oracle = Committee::new(config.oracle, config.seed, "oracle")?;
        let env = ProofEnv::from_seed(config.seed);
        let idml = IdmlState::new(committee.roster.clone(), env.clone());
        let csml = CsmlState::new(config.csml, env.clone(), oracle.roster.clone());
        let client_seed = hash_tagged(tag::KEYGEN, &[b"client", &config.seed.to_be_bytes()]).0;
        Ok(Network {
            committee,
            oracle,
            store,
            env,
            idml,
            csml,
            log: config.log.then(TxLog::new),
            context: config.context,
            claims: config.claims,
            rng: ChaCha20Rng::from_seed(client_seed),
            tasks_published: 0,
        })
    }

    pub fn fresh_secret(&mut self) -> Secret {
        random_secret(&mut self.rng)
    }

    /// Register with the committee and obtain a context credential. No ledger token yet.
    pub fn enroll(&mut self, user_id: &str) -> Result<Participant> {
        let user = User::new(user_id, self.fresh_secret(), self.fresh_secret());
        let master = register_user(&mut self.idml, &self.committee, &self.store, &user, &self.claims)?;
        let sk_ctx = self.fresh_secret();
        let context = issue_context_credential(
            &mut self.idml,
            &self.committee,
            &self.store,
            &user,
            &master,
            &self.context.clone(),
            sk_ctx,
            &self.claims,
        )?;
        Ok(Participant { user, master, context, access: None, access_index: 0, token: None, pseudonym: None, rotations: 0 })
    }

    /// Ask the committee for another credential in this network's context.
    pub fn request_context(&mut self, p: &Participant) -> Result<ContextCredential> {
        let sk_ctx = self.fresh_secret();
        let ctx = self.context.clone();
        Ok(issue_context_credential(&mut self.idml, &self.committee, &self.store, &p.user, &p.master, &ctx, sk_ctx, &self.claims)?)
    }

    pub fn mint_at_tx(&mut self, p: &Participant) -> (AccessToken, TxAm) {
        let at = AccessToken::sample(&mut self.rng, p.context.sk_ctx);
        let msg = TxAm::message(&p.context.ctx, &at.pk, &at.cm_u, &at.cm_a);
        let sig = self.env.sign_pseudonym(&p.context.sk_ctx, &msg);
        let tx = TxAm { ctx: p.context.ctx.clone(), pk_ctx: p.context.pk_ctx, pk: at.pk, cm_u: at.cm_u, cm_a: at.cm_a, sig };
        (at, tx)
    }

    pub fn submit_mint_at(&mut self, tx: &TxAm) -> std::result::Result<u64, Rejection> {
        let out = self.idml.mint_at(&mut self.csml, tx);
        log_tx(&mut self.log, "idml", tx, &out);
        out
    }

    pub fn mint_access(&mut self, p: &mut Participant) -> Result<()> {
        let (at, tx) = self.mint_at_tx(p);
        p.access_index = self.submit_mint_at(&tx)?;
        p.access = Some(at);
        Ok(())
    }

    pub fn spend_at_tx(&mut self, p: &Participant) -> Result<(ReputationToken, TxAs)> {
        let at = p.access_token()?;
        let token = ReputationToken::sample(&mut self.rng, self.csml.config.initial_micro, 0);
        let tree = &self.csml.ac_mirror.tree;
        let witness = Witness::AS { sk_ctx: at.sk_ctx, r: at.r, r_prime: at.r_prime, path: tree.prove(p.access_index)? };
        let mut tx = TxAs {
            rt_a: tree.root(),
            cm_u: at.cm_u,
            pk: at.pk,
            r_micro: token.r_micro,
            cm_p: token.cm_p,
            r2: Digest(token.r2),
            cm_r: token.cm_r,
            proof: proof::Proof { relation: proof::RelationId::AS, tag: Digest::ZERO },
        };
        tx.proof = proof::prove(&self.env, &tx.statement(), &witness)?;
        Ok((token, tx))
    }

    pub fn submit_spend_at(&mut self, tx: &TxAs) -> std::result::Result<u64, Rejection> {
        let out = self.csml.spend_at(tx);
        log_tx(&mut self.log, "csml", tx, &out);
        out
    }

    pub fn spend_access(&mut self, p: &mut Participant) -> Result<()> {
        let (token, tx) = self.spend_at_tx(p)?;
        let idx = self.submit_spend_at(&tx)?;
        p.token = Some((token, idx));
        Ok(())
    }

    /// Disclose the current token's reputation and bind a fresh pseudonym.
    pub fn use_rt_tx(&mut self, p: &Participant) -> Result<(AddressKeyPair, TxRu)> {
        let (token, idx) = p.token.clone().ok_or(Error::Ledger(Rejection::NotValid))?;
        let new_ask = self.fresh_secret();
        let keys = derive_address(new_ask);
        let path = self.csml.rc.tree.prove(idx)?;
        let mut tx = TxRu {
            rt_r: self.csml.rc.tree.root(),
            serial: token.serial(),
            r_micro: token.r_micro,
            new_apk: keys.apk,
            proof: proof::Proof { relation: proof::RelationId::RU, tag: Digest::ZERO },
        };
        tx.proof = proof::prove(&self.env, &tx.statement(), &Witness::RU { token, new_ask, path })?;
        Ok((keys, tx))
    }

    pub fn submit_use_rt(&mut self, tx: &TxRu) -> std::result::Result<(), Rejection> {
        let out = self.csml.use_rt(tx);
        log_tx(&mut self.log, "csml", tx, &out);
        out
    }

    pub fn use_token(&mut self, p: &mut Participant) -> Result<()> {
        let (keys, tx) = self.use_rt_tx(p)?;
        self.submit_use_rt(&tx)?;
        p.token = None;
        p.pseudonym = Some(keys);
        Ok(())
    }

    /// Rotate a token in place: spend it and mint a fresh one of equal value.
    pub fn spend_rt_tx(&mut self, p: &Participant) -> Result<(ReputationToken, TxRs)> {
        let (old, idx) = p.token.clone().ok_or(Error::Ledger(Rejection::NotValid))?;
        let new = ReputationToken::sample(&mut self.rng, old.r_micro, old.epoch + 1);
        let path = self.csml.rc.tree.prove(idx)?;
        let mut tx = TxRs {
            rt_r: self.csml.rc.tree.root(),
            serial: old.serial(),
            cm_r_next: new.cm_r,
            proof: proof::Proof { relation: proof::RelationId::RS, tag: Digest::ZERO },
        };
        tx.proof = proof::prove(&self.env, &tx.statement(), &Witness::RS { old, new: new.clone(), path })?;
        Ok((new, tx))
    }

    pub fn submit_spend_rt(&mut self, tx: &TxRs) -> std::result::Result<u64, Rejection> {
        let out = self.csml.spend_rt(tx);
        log_tx(&mut self.log, "csml", tx, &out);
        out
    }

    pub fn spend_token(&mut self, p: &mut Participant) -> Result<()> {
        let (new, tx) = self.spend_rt_tx(p)?;
        let idx = self.submit_spend_rt(&tx)?;
        p.token = Some((new, idx));
        Ok(())
    }

    /// Carry the pseudonym's ledger reputation into a new token, retiring the pseudonym.
    pub fn mint_rt_tx(&mut self, p: &Participant, r_micro: u64) -> Result<(ReputationToken, TxRm)> {
        let keys = p.pseudonym_keys()?;
        let epoch = p.rotations + 1;
        let token = ReputationToken::sample(&mut self.rng, r_micro, epoch);
        let r2 = Digest(token.r2);
        let msg = TxRm::message(r_micro, &token.cm_p, &r2, &token.cm_r);
        let sig = self.env.sign_pseudonym(&keys.ask, &msg);
        let tx = TxRm { r_micro, cm_p: token.cm_p, r2, cm_r: token.cm_r, apk: keys.apk, sig };
        Ok((token, tx))
    }

    pub fn submit_mint_rt(&mut self, tx: &TxRm) -> std::result::Result<u64, Rejection> {
        let out = self.csml.mint_rt(tx);
        log_tx(&mut self.log, "csml", tx, &out);
        out
    }

    pub fn mint_token(&mut self, p: &mut Participant) -> Result<()> {
        let apk = p.pseudonym_keys()?.apk;
        let r_micro = *self.csml.valid.get(&apk).ok_or(Error::Ledger(Rejection::NotValid))?;
        let (token, tx) = self.mint_rt_tx(p, r_micro)?;
        let idx = self.submit_mint_rt(&tx)?;
        p.token = Some((token, idx));
        p.pseudonym = None;
        p.rotations += 1;
        Ok(())
    }

    /// Genesis path: access token, genesis reputation token, first pseudonym.
    pub fn onboard(&mut self, user_id: &str) -> Result<Participant> {
        let mut p = self.enroll(user_id)?;
        self.mint_access(&mut p)?;
        self.spend_access(&mut p)?;
        self.use_token(&mut p)?;
        Ok(p)
    }

    /// Retire the current pseudonym and come back under a fresh one with the same reputation.
    pub fn rotate(&mut self, p: &mut Participant) -> Result<()> {
        self.mint_token(p)?;
        self.use_token(p)
    }

    pub fn reputation(&self, p: &Participant) -> Option<u64> {
        p.apk().and_then(|apk| self.csml.valid.get(&apk).copied())
    }

    fn membership_witness(&self, p: &Participant) -> Result<Witness> {
        let at = p.access_token()?;
        Ok(Witness::I {
            sk_ctx: at.sk_ctx,
            r: at.r,
            r_prime: at.r_prime,
            pk: at.pk,
            path: self.csml.ac_mirror.tree.prove(p.access_index)?,
        })
    }

    pub fn next_task_id(&mut self) -> String {
        self.tasks_published += 1;
        format!("task-{}", self.tasks_published)
    }

    pub fn publish_tx(&self, p: &Participant, task_id: &str, reward: u64) -> Result<TxNewTask> {
        let keys = p.pseudonym_keys()?;
        let handle = task_handle(task_id, &p.context.sk_ctx);
        let rt_a = self.csml.ac_mirror.tree.root();
        let mut tx = TxNewTask {
            task_id: task_id.to_string(),
            reward,
            handle,
            rt_a,
            proof: proof::Proof { relation: proof::RelationId::I, tag: Digest::ZERO },
            requester_apk: keys.apk,
            sig: crate::proof::PseudonymSig(Digest::ZERO),
        };
        tx.proof = proof::prove(&self.env, &tx.statement(), &self.membership_witness(p)?)?;
        tx.sig = self.env.sign_pseudonym(&keys.ask, &TxNewTask::message(task_id, reward, &handle, &rt_a, &tx.proof));
        Ok(tx)
    }

    pub fn submit_publish(&mut self, tx: &TxNewTask) -> std::result::Result<(), Rejection> {
        let out = self.csml.publish_task(tx);
        log_tx(&mut self.log, "csml", tx, &out);
        out
    }

    pub fn publish_task(&mut self, p: &Participant, reward: u64) -> Result<String> {
        let id = self.next_task_id();
        let tx = self.publish_tx(p, &id, reward)?;
        self.submit_publish(&tx)?;
        Ok(id)
    }

    pub fn subscribe_tx(&self, p: &Participant, task_id: &str) -> Result<TxSubToTask> {
        let keys = p.pseudonym_keys()?;
        let handle = task_handle(task_id, &p.context.sk_ctx);
        let rt_a = self.csml.ac_mirror.tree.root();
        let mut tx = TxSubToTask {
            task_id: task_id.to_string(),
            handle,
            rt_a,
            proof: proof::Proof { relation: proof::RelationId::I, tag: Digest::ZERO },
            worker_apk: keys.apk,
            sig: crate::proof::PseudonymSig(Digest::ZERO),
        };
        tx.proof = proof::prove(&self.env, &tx.statement(), &self.membership_witness(p)?)?;
        tx.sig = self.env.sign_pseudonym(&keys.ask, &TxSubToTask::message(task_id, &handle, &rt_a, &tx.proof));
        Ok(tx)
    }

    pub fn submit_subscribe(&mut self, tx: &TxSubToTask) -> std::result::Result<(), Rejection> {
        let out = self.csml.subscribe_task(tx);
        log_tx(&mut self.log, "csml", tx, &out);
        out
    }

    pub fn subscribe(&mut self, p: &Participant, task_id: &str) -> Result<()> {
        let tx = self.subscribe_tx(p, task_id)?;
        Ok(self.submit_subscribe(&tx)?)
    }

    /// Oracle-attested evaluation of a task.
    pub fn update_tx(&self, task_id: &str, requester: MetricEntry, workers: Vec<MetricEntry>) -> Result<TxUpdateRt> {
        let agg_sig = self.oracle.threshold_sign(&TxUpdateRt::message(task_id, &requester, &workers))?;
        Ok(TxUpdateRt { task_id: task_id.to_string(), requester, workers, agg_sig })
    }

    pub fn submit_update(&mut self, tx: &TxUpdateRt) -> std::result::Result<Vec<ReputationChange>, Rejection> {
        let out = self.csml.update_rt(tx);
        log_tx(&mut self.log, "csml", tx, &out);
        out
    }

    pub fn evaluate(
        &mut self,
        task_id: &str,
        requester: MetricEntry,
        workers: Vec<MetricEntry>,
    ) -> Result<Vec<ReputationChange>> {
        let tx = self.update_tx(task_id, requester, workers)?;
        Ok(self.submit_update(&tx)?)
    }

    pub fn deposit_tx(&mut self, p: &Participant, task_id: &str, amount: u64) -> Result<(DepositNote, TxDeposit)> {
        let keys = p.pseudonym_keys()?.clone();
        let note = DepositNote::sample(&mut self.rng, amount, task_id);
        let sig = self.env.sign_pseudonym(&keys.ask, &TxDeposit::message(task_id, amount, &note.cm_d));
        let tx = TxDeposit { task_id: task_id.to_string(), amount, cm_d: note.cm_d, apk: keys.apk, sig };
        Ok((note, tx))
    }

    pub fn submit_deposit(&mut self, tx: &TxDeposit) -> std::result::Result<u64, Rejection> {
        let out = self.csml.deposit(tx);
        log_tx(&mut self.log, "csml", tx, &out);
        out
    }

    /// Lock the task reward; returns the note and its leaf index.
    pub fn deposit(&mut self, p: &Participant, task_id: &str, amount: u64) -> Result<(DepositNote, u64)> {
        let (note, tx) = self.deposit_tx(p, task_id, amount)?;
        let idx = self.submit_deposit(&tx)?;
        Ok((note, idx))
    }

    pub fn withdraw_tx(&self, note: &DepositNote, leaf: u64, target_apk: Digest) -> Result<TxWithdraw> {
        let path = self.csml.dc.tree.prove(leaf)?;
        let mut tx = TxWithdraw {
            rt_d: self.csml.dc.tree.root(),
            nullifier: note.nullifier(),
            cm_d: note.cm_d,
            amount: note.amount,
            target_apk,
            proof: proof::Proof { relation: proof::RelationId::D, tag: Digest::ZERO },
        };
        tx.proof = proof::prove(&self.env, &tx.statement(), &Witness::D { s: note.s, r: note.r, path })?;
        Ok(tx)
    }

    pub fn submit_withdraw(&mut self, tx: &TxWithdraw) -> std::result::Result<(), Rejection> {
        let out = self.csml.withdraw(tx);
        log_tx(&mut self.log, "csml", tx, &out);
        out
    }

    pub fn pay_out_tx(&self, task_id: &str, workers: Vec<Digest>) -> Result<TxPayOut> {
        let agg_sig = self.oracle.threshold_sign(&TxPayOut::message(task_id, &workers))?;
        Ok(TxPayOut { task_id: task_id.to_string(), workers, agg_sig })
    }

    pub fn submit_pay_out(&mut self, tx: &TxPayOut) -> std::result::Result<Vec<(Digest, u64)>, Rejection> {
        let out = self.csml.pay_out(tx);
        log_tx(&mut self.log, "csml", tx, &out);
        out
    }
}

/// A record store with one well-formed entry per user id.
pub fn synthetic_store<'a>(user_ids: impl IntoIterator<Item = &'a str>) -> LegacyRecordStore {
    let mut store = LegacyRecordStore::default();
    for (i, id) in user_ids.into_iter().enumerate() {
        store.insert(id, "ssn", &format!("{:03}-{:02}-{:04}", 100 + i % 800, 10 + i % 89, 1000 + i % 9000));
    }
    store
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ledger::TaskStatus;

    fn net(ids: &[&str]) -> Network {
        let mut cfg = NetworkConfig::new(7);
        cfg.log = true;
        Network::new(cfg, synthetic_store(ids.iter().copied())).unwrap()
    }

    #[test]
    fn onboard_publish_evaluate_rotate() {
        let mut n = net(&["req", "work"]);
        let req = n.onboard("req").unwrap();
        let mut work = n.onboard("work").unwrap();
        assert_eq!(n.reputation(&work), Some(500_000));
        let id = n.publish_task(&req, 10).unwrap();
        n.subscribe(&work, &id).unwrap();
        let m = |p: &Participant, t| MetricEntry { apk: p.apk().unwrap(), trust_micro: t, weight_micro: 500_000 };
        let changes = n.evaluate(&id, m(&req, 900_000), vec![m(&work, 900_000)]).unwrap();
        assert_eq!(changes.len(), 2);
        assert_eq!(n.csml.tasks[&id].status, TaskStatus::Evaluated);
        let before = n.reputation(&work).unwrap();
        let old_apk = work.apk().unwrap();
        n.rotate(&mut work).unwrap();
        assert_ne!(work.apk().unwrap(), old_apk);
        assert_eq!(n.reputation(&work), Some(before));
        assert!(n.log.as_ref().unwrap().rejected().next().is_none());
    }

    #[test]
    fn second_onboarding_is_sybil() {
        let mut n = net(&["a"]);
        n.onboard("a").unwrap();
        assert!(matches!(n.onboard("a"), Err(Error::Committee(_)) | Err(Error::Ledger(Rejection::Sybil))));
    }
}
