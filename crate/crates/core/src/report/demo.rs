//! Scripted end-to-end ledger run with a replayed spend and Sybil attempts.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::committee::{CommitteeError, LegacyRecordStore};
use crate::crypto::Digest;
use crate::error::{Error, Result};
use crate::ledger::idml::ContextCredential;
use crate::ledger::{MetricEntry, Rejection, TxLog};
use crate::network::{Network, NetworkConfig, Participant};
use crate::proof::free_of_secrets;
use crate::sim::to_micro;

pub const DEFAULT_DEMO: &str = include_str!("../../fixtures/demo.toml");

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DemoConfig {
    pub seed: u64,
    pub context: String,
    pub requester: String,
    pub workers: Vec<String>,
    pub reward: u64,
    /// `[trust, weight]` per worker.
    pub worker_scores: Vec<[f64; 2]>,
    #[serde(default)]
    pub sybil: bool,
    pub records: LegacyRecordStore,
}

impl DemoConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let c: DemoConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        c.validate()?;
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.workers.is_empty() {
            return bad("at least one worker is required".into());
        }
        if self.worker_scores.len() != self.workers.len() {
            return bad(format!("{} workers but {} score pairs", self.workers.len(), self.worker_scores.len()));
        }
        if self.worker_scores.iter().flatten().any(|x| !(0.0..=1.0).contains(x)) {
            return bad("worker scores must lie in [0, 1]".into());
        }
        if self.reward == 0 {
            return bad("reward must be positive".into());
        }
        for id in std::iter::once(&self.requester).chain(&self.workers) {
            if self.records.record(id).is_none() {
                return bad(format!("{id} has no record"));
            }
        }
        Ok(())
    }
}

impl Default for DemoConfig {
    fn default() -> Self {
        Self::from_toml(DEFAULT_DEMO).expect("bundled demo parses")
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DemoSummary {
    pub accepted: usize,
    pub rejected: usize,
    pub rejections: BTreeMap<String, usize>,
    /// Final ledger reputation in millionths, by participant.
    pub reputation: BTreeMap<String, u64>,
    pub balances: BTreeMap<String, u64>,
    pub state_digest: String,
    pub invariants: BTreeMap<String, bool>,
}

impl DemoSummary {
    pub fn passed(&self) -> bool {
        self.invariants.values().all(|v| *v)
    }
}

pub struct DemoRun {
    pub log: TxLog,
    pub summary: DemoSummary,
}

fn rejection(e: &Error) -> Option<Rejection> {
    match e {
        Error::Ledger(r) | Error::Committee(CommitteeError::Ledger(r)) => Some(r.clone()),
        _ => None,
    }
}

fn expect_rejection(log: &mut TxLog, kind: &str, public: &[u8], outcome: Result<()>) -> Result<Option<Rejection>> {
    let outcome = match outcome {
        Ok(()) => Ok(()),
        Err(e) => Err(rejection(&e).ok_or(e)?),
    };
    log.record_event("idml", kind, public, &outcome);
    Ok(outcome.err())
}

pub fn ledger_demo(cfg: &DemoConfig) -> Result<DemoRun> {
    cfg.validate()?;
    let mut nc = NetworkConfig::new(cfg.seed);
    nc.context = cfg.context.clone();
    nc.log = true;
    let mut net = Network::new(nc, cfg.records.clone())?;
    let mut secrets = Vec::new();
    let mut credited: u128 = 0;

    let mut requester = net.onboard(&cfg.requester)?;
    let mut workers = cfg.workers.iter().map(|w| net.onboard(w)).collect::<Result<Vec<_>>>()?;
    let apk = |p: &Participant| p.apk().expect("onboarded");

    // paid task
    let task = net.publish_task(&requester, cfg.reward)?;
    net.csml.credit(apk(&requester), cfg.reward);
    credited += cfg.reward as u128;
    let (note, _) = net.deposit(&requester, &task, cfg.reward)?;
    secrets.extend(note.secrets().into_iter().map(<[u8]>::to_vec));
    for w in &workers {
        net.subscribe(w, &task)?;
    }
    let entries: Vec<MetricEntry> = workers
        .iter()
        .zip(&cfg.worker_scores)
        .map(|(w, [t, wf])| MetricEntry { apk: apk(w), trust_micro: to_micro(*t), weight_micro: to_micro(*wf) })
        .collect();
    let mean = entries.iter().map(|e| e.trust_micro).sum::<u64>() / entries.len() as u64;
    net.evaluate(&task, MetricEntry { apk: apk(&requester), trust_micro: mean, weight_micro: 500_000 }, entries)?;
    let tx = net.pay_out_tx(&task, workers.iter().map(apk).collect())?;
    net.submit_pay_out(&tx)?;

    // rotation with an in-place spend, then a replay of that spend
    let first = &mut workers[0];
    net.mint_token(first)?;
    let (fresh, spend) = net.spend_rt_tx(first)?;
    let idx = net.submit_spend_rt(&spend)?;
    let replay = net.submit_spend_rt(&spend);
    first.token = Some((fresh, idx));
    net.use_token(first)?;

    // task that expires and refunds its deposit
    let lapsed = net.publish_task(&requester, cfg.reward)?;
    net.csml.credit(apk(&requester), cfg.reward);
    credited += cfg.reward as u128;
    let (note, leaf) = net.deposit(&requester, &lapsed, cfg.reward)?;
    secrets.extend(note.secrets().into_iter().map(<[u8]>::to_vec));
    net.csml.expire_task(&lapsed)?;
    let tx = net.withdraw_tx(&note, leaf, apk(&requester))?;
    net.submit_withdraw(&tx)?;
    net.rotate(&mut requester)?;

    let mut invariants = BTreeMap::new();
    invariants.insert("replayed-spend-rejected".to_string(), matches!(replay, Err(Rejection::SerialReused)));

    if cfg.sybil {
        let again = net.enroll(&cfg.requester).map(drop);
        let r1 = expect_rejection(net.log.as_mut().expect("logging on"), "register", cfg.requester.as_bytes(), again)?;
        let second = net.request_context(&requester).map(drop);
        let m_pk = requester.master.m_pk;
        let r2 = expect_rejection(net.log.as_mut().expect("logging on"), "grant", m_pk.as_bytes(), second)?;
        let mut forged = requester.clone();
        forged.context = ContextCredential::new(&cfg.context, net.fresh_secret());
        let (_, tx) = net.mint_at_tx(&forged);
        let r3 = net.submit_mint_at(&tx).err();
        let (_, tx) = net.mint_at_tx(&requester);
        let r4 = net.submit_mint_at(&tx).err();
        invariants.insert("sybil-registration-rejected".into(), r1 == Some(Rejection::Sybil));
        invariants.insert("second-context-rejected".into(), r2 == Some(Rejection::AlreadyGranted));
        invariants.insert("ungranted-key-rejected".into(), r3 == Some(Rejection::AccessDenied));
        invariants.insert("second-access-token-rejected".into(), r4 == Some(Rejection::AlreadyMinted));
    }

    let log = net.log.clone().expect("logging on");
    let mut everyone: Vec<(&str, &Participant)> = vec![(cfg.requester.as_str(), &requester)];
    everyone.extend(cfg.workers.iter().map(String::as_str).zip(&workers));
    for (_, p) in &everyone {
        secrets.extend(p.secrets());
    }
    let c = &net.csml;
    let serials_unique = log.accepted().filter(|r| r.kind == "spend_rt" || r.kind == "use_rt").count()
        == c.spent_serials.len();
    invariants.insert("funds-conserved".into(), c.conserves_funds() && c.total_balances() + c.total_locked() == credited);
    invariants.insert("serials-unique".into(), serials_unique);
    invariants.insert("no-witness-leak".into(), free_of_secrets(&log.public_bytes(), &secrets, 4));

    let mut rejections = BTreeMap::new();
    for r in log.rejected() {
        *rejections.entry(r.reason.clone().unwrap_or_default()).or_insert(0) += 1;
    }
    let value = |d: Digest| c.valid.get(&d).copied();
    let summary = DemoSummary {
        accepted: log.accepted().count(),
        rejected: log.rejected().count(),
        rejections,
        reputation: everyone.iter().filter_map(|(n, p)| Some((n.to_string(), value(p.apk()?)?))).collect(),
        balances: everyone.iter().filter_map(|(n, p)| Some((n.to_string(), c.balance(&p.apk()?)))).collect(),
        state_digest: hex::encode(c.state_digest().as_bytes()),
        invariants,
    };
    Ok(DemoRun { log, summary })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_demo_passes_with_one_rejected_double_spend() {
        let run = ledger_demo(&DemoConfig::default()).unwrap();
        assert!(run.summary.passed(), "{:?}", run.summary.invariants);
        assert_eq!(run.summary.rejections.get("double-spend-serial"), Some(&1));
        for code in ["sybil", "already-granted", "access-denied", "already-minted"] {
            assert_eq!(run.summary.rejections.get(code), Some(&1), "{code}");
        }
    }

    #[test]
    fn bad_configs_are_rejected() {
        let text = DEFAULT_DEMO.replace("reward = 90", "reward = 0");
        assert!(matches!(DemoConfig::from_toml(&text), Err(Error::Config(_))));
        assert!(matches!(DemoConfig::from_toml("seed = \"x\""), Err(Error::Config(_))));
    }
}
