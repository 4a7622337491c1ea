use std::path::Path;

use serde::{Deserialize, Serialize};

use super::SimError;

pub const DEFAULT_SCENARIO: &str = include_str!("../../fixtures/scenario.toml");
pub const DEFAULT_GRID: [u64; 7] = [1, 2, 3, 5, 8, 13, 21];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AttackKind {
    Random,
    Retaliatory,
    Collusive,
}

impl AttackKind {
    pub const ALL: [AttackKind; 3] = [AttackKind::Random, AttackKind::Retaliatory, AttackKind::Collusive];

    pub fn name(self) -> &'static str {
        match self {
            AttackKind::Random => "random",
            AttackKind::Retaliatory => "retaliatory",
            AttackKind::Collusive => "collusive",
        }
    }

    pub fn parse(s: &str) -> Result<Self, SimError> {
        Self::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| SimError::Config(format!("unknown attack {s:?}")))
    }
}

/// Adversarial requester behaviour. Probabilities are per interaction unless noted.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AttackModel {
    /// Chance that an interaction's requester is adversarial.
    pub p_adv: f64,
    /// Baseline bad-mouthing by an adversarial requester.
    pub p_neg: f64,
    /// Chance the victim rates an adversarial requester down, which marks it for retaliation.
    pub q_prov: f64,
    /// Bad-mouthing of a marked victim by an adversarial requester.
    pub p_ret: f64,
    /// Chance, per lifetime, that the coalition picks the victim's pseudonym.
    pub p_target: f64,
    /// Extra bad-mouthing of a targeted pseudonym by a colluder.
    pub p_col: f64,
    /// Colluding requesters in each replica.
    pub m_col: usize,
}

impl Default for AttackModel {
    fn default() -> Self {
        AttackModel { p_adv: 0.3, p_neg: 0.15, q_prov: 0.6, p_ret: 0.9, p_target: 0.25, p_col: 0.3, m_col: 2 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WorkerKind {
    Honest,
    Malicious,
    Lazy,
}

impl WorkerKind {
    pub fn name(self) -> &'static str {
        match self {
            WorkerKind::Honest => "honest",
            WorkerKind::Malicious => "malicious",
            WorkerKind::Lazy => "lazy",
        }
    }
}

/// Closed interval used for uniform draws.
pub type Range = [f64; 2];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WorkerProfile {
    pub kind: WorkerKind,
    #[serde(default = "one")]
    pub count: usize,
    /// Share of rounds actually worked; a skipped round is rated `skip_trust`.
    #[serde(default = "one_f")]
    pub participation: f64,
    /// Chance that a worked round is a bad contribution.
    #[serde(default)]
    pub p_bad: f64,
    /// Output quality O of a good contribution.
    #[serde(default = "good_output")]
    pub output: Range,
    /// Output quality of a bad contribution.
    #[serde(default = "bad_output")]
    pub bad_output: Range,
    /// Sensing quality Q of a good contribution.
    #[serde(default = "sensing")]
    pub sensing: Range,
    #[serde(default = "bad_sensing")]
    pub bad_sensing: Range,
    #[serde(default = "skip_trust")]
    pub skip_trust: f64,
}

fn one() -> usize {
    1
}
fn one_f() -> f64 {
    1.0
}
fn good_output() -> Range {
    [0.8, 1.0]
}
fn bad_output() -> Range {
    [0.0, 0.2]
}
fn sensing() -> Range {
    [0.7, 1.0]
}
fn bad_sensing() -> Range {
    [0.0, 0.3]
}
fn skip_trust() -> f64 {
    0.3
}

impl WorkerProfile {
    pub fn honest(count: usize) -> Self {
        WorkerProfile {
            kind: WorkerKind::Honest,
            count,
            participation: 1.0,
            p_bad: 0.0,
            output: good_output(),
            bad_output: bad_output(),
            sensing: sensing(),
            bad_sensing: bad_sensing(),
            skip_trust: skip_trust(),
        }
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let unit = |x: f64| (0.0..=1.0).contains(&x);
        let range = |r: &Range| unit(r[0]) && unit(r[1]) && r[0] <= r[1];
        if !unit(self.participation) || !unit(self.p_bad) || !unit(self.skip_trust) {
            return Err(SimError::Config(format!("{} worker: probabilities must lie in [0,1]", self.kind.name())));
        }
        if !range(&self.output) || !range(&self.bad_output) || !range(&self.sensing) || !range(&self.bad_sensing) {
            return Err(SimError::Config(format!("{} worker: quality ranges must be ordered in [0,1]", self.kind.name())));
        }
        if self.kind == WorkerKind::Lazy && !(0.4..=0.6).contains(&self.participation) {
            return Err(SimError::Config(format!("lazy participation {} outside [0.4, 0.6]", self.participation)));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReputationConfig {
    pub initial: f64,
    pub psi: f64,
    pub xi: f64,
    /// Fixed trust threshold; absent means the running mean of observed trust.
    pub t_theta: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeightConfig {
    pub kappa: f64,
    pub omega: [f64; 4],
    pub c_st: f64,
}

/// Public metadata the linkage classifier sees.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinkageConfig {
    pub pairs_per_worker: usize,
    pub reward_buckets: u64,
    pub context_bins: u64,
    /// Chance a transaction uses the worker's habitual bucket and bin.
    pub habit: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub replicas: usize,
    /// Interactions per worker, rounded up to a multiple of W.
    pub horizon: u64,
    pub grid: Vec<u64>,
    pub attacks: Vec<AttackKind>,
    pub r_hire: f64,
    pub lambda: [f64; 3],
    /// Fixed number of honest victims per replica.
    pub victims: usize,
    /// Honest requesters per replica, besides the colluders.
    pub requesters: usize,
    /// Replica worker threads; 1 runs inline.
    pub parallel_width: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EffectivenessConfig {
    pub rounds: u64,
    /// Rounds per pseudonym before rotation.
    pub window: u64,
    /// Fixed trust threshold; absent means the running mean of observed trust.
    #[serde(default)]
    pub t_theta: Option<f64>,
    pub roster: Vec<WorkerProfile>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub seed: u64,
    pub reputation: ReputationConfig,
    pub weight: WeightConfig,
    pub attack: AttackModel,
    pub linkage: LinkageConfig,
    pub sweep: SweepConfig,
    pub effectiveness: EffectivenessConfig,
}

impl Default for Scenario {
    fn default() -> Self {
        Self::from_toml(DEFAULT_SCENARIO).expect("bundled scenario is valid")
    }
}

impl Scenario {
    pub fn from_toml(text: &str) -> Result<Self, SimError> {
        let s: Scenario = toml::from_str(text).map_err(|e| SimError::Config(e.to_string()))?;
        s.validate()?;
        Ok(s)
    }

    pub fn load(path: &Path) -> Result<Self, SimError> {
        let text = std::fs::read_to_string(path).map_err(|e| SimError::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let bad = |m: &str| Err(SimError::Config(m.to_string()));
        let unit = |x: f64| (0.0..=1.0).contains(&x);
        let r = &self.reputation;
        if !unit(r.initial) || !(r.psi > 0.0 && r.psi < 1.0) || !(r.xi > 0.0 && r.xi < 1.0) {
            return bad("reputation: initial in [0,1], psi and xi in (0,1)");
        }
        if r.xi <= r.psi {
            return bad("reputation: xi must exceed psi");
        }
        if r.t_theta.is_some_and(|t| !unit(t)) {
            return bad("reputation: t_theta outside [0,1]");
        }
        let w = &self.weight;
        if !unit(w.kappa) || !unit(w.c_st) || w.omega.iter().any(|o| !unit(*o)) {
            return bad("weight: kappa, c_st and omega must lie in [0,1]");
        }
        if (w.omega.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return bad("weight: omega must sum to 1");
        }
        let a = &self.attack;
        if [a.p_adv, a.p_neg, a.q_prov, a.p_ret, a.p_target, a.p_col].iter().any(|p| !unit(*p)) {
            return bad("attack: probabilities must lie in [0,1]");
        }
        if a.m_col == 0 {
            return bad("attack: m_col must be at least 1");
        }
        let l = &self.linkage;
        if l.pairs_per_worker == 0 || l.reward_buckets == 0 || l.context_bins == 0 || !unit(l.habit) {
            return bad("linkage: positive counts and habit in [0,1]");
        }
        let s = &self.sweep;
        if s.grid.is_empty() || s.grid.contains(&0) {
            return bad("sweep: grid must be non-empty with positive windows");
        }
        if s.attacks.is_empty() || s.replicas == 0 || s.horizon == 0 || s.parallel_width == 0 {
            return bad("sweep: attacks, replicas, horizon and parallel_width must be non-empty/positive");
        }
        if s.victims < 2 || s.requesters == 0 {
            return bad("sweep: need at least two victims and one honest requester");
        }
        if !unit(s.r_hire) || s.lambda.iter().any(|x| *x < 0.0) {
            return bad("sweep: r_hire in [0,1] and non-negative lambda");
        }
        let e = &self.effectiveness;
        if e.rounds == 0 || e.window == 0 || e.t_theta.is_some_and(|t| !unit(t)) || e.roster.iter().all(|p| p.count == 0) {
            return bad("effectiveness: need rounds, a window, t_theta in [0,1] and at least one worker");
        }
        e.roster.iter().try_for_each(WorkerProfile::validate)
    }

    /// Copy with the sweep limited to the given attacks and grid.
    pub fn restricted(&self, attacks: Option<Vec<AttackKind>>, grid: Option<Vec<u64>>) -> Result<Self, SimError> {
        let mut s = self.clone();
        if let Some(a) = attacks {
            s.sweep.attacks = a;
        }
        if let Some(g) = grid {
            s.sweep.grid = g;
        }
        s.validate()?;
        Ok(s)
    }
}

pub fn parse_grid(text: &str) -> Result<Vec<u64>, SimError> {
    text.split(',')
        .map(|t| t.trim().parse::<u64>().map_err(|e| SimError::Config(format!("grid entry {t:?}: {e}"))))
        .collect()
}
