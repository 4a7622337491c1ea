use std::collections::BTreeMap;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::metrics::{self, LinkPair, SimMetrics, TxMeta};
use super::{from_micro, stream, to_micro, trust, uniform, weight, AttackKind, Scenario, SimError, WorkerProfile};
use crate::error::{Error, Result};
use crate::gas::GasTable;
use crate::ledger::{CsmlConfig, MetricEntry};
use crate::network::{synthetic_store, Network, NetworkConfig, Participant};
use crate::reputation::{rational_from_f64, ReputationParams, ThresholdPolicy};

/// One victim's record over the whole horizon.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VictimTrace {
    pub replica: usize,
    pub victim: usize,
    /// Reputation shown at each interaction, before its update.
    pub presented: Vec<f64>,
    pub rewards: Vec<f64>,
    #[serde(skip)]
    pub meta: Vec<TxMeta>,
}

#[derive(Clone, Debug)]
pub struct CellRun {
    pub w: u64,
    pub attack: AttackKind,
    pub horizon: u64,
    pub metrics: SimMetrics,
    pub traces: Vec<VictimTrace>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub w: u64,
    pub attack: AttackKind,
    pub metrics: SimMetrics,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepTable {
    pub seed: u64,
    pub replicas: usize,
    pub rows: Vec<SweepRow>,
}

impl SweepTable {
    pub fn get(&self, w: u64, attack: AttackKind) -> Option<&SimMetrics> {
        self.rows.iter().find(|r| r.w == w && r.attack == attack).map(|r| &r.metrics)
    }
}

/// Draws for one victim step. Always the same count, whatever the cell uses.
struct Step {
    adv: f64,
    pick: f64,
    neg: f64,
    prov: f64,
    target: f64,
    output: f64,
    sensing: f64,
    bad_output: f64,
    d: f64,
    a: f64,
    reward_habit: f64,
    reward: f64,
    ctx_habit: f64,
    ctx: f64,
}

impl Step {
    fn draw(rng: &mut ChaCha8Rng) -> Self {
        let mut u = || rng.random::<f64>();
        Step {
            adv: u(),
            pick: u(),
            neg: u(),
            prov: u(),
            target: u(),
            output: u(),
            sensing: u(),
            bad_output: u(),
            d: u(),
            a: u(),
            reward_habit: u(),
            reward: u(),
            ctx_habit: u(),
            ctx: u(),
        }
    }
}

struct Victim {
    p: Participant,
    rng: ChaCha8Rng,
    habit_reward: u64,
    habit_ctx: u64,
    pseudonym: u64,
    marked: bool,
    targeted: bool,
    trace: VictimTrace,
}

fn pick(u: f64, n: usize) -> usize {
    ((u * n as f64) as usize).min(n - 1)
}

fn bucket(habit: f64, u: f64, habitual: u64, n: u64, p: f64) -> u64 {
    if habit < p { habitual } else { (u * n as f64) as u64 % n }
}

fn csml_config(s: &Scenario, t_theta: Option<f64>) -> Result<CsmlConfig> {
    let r = &s.reputation;
    let params = ReputationParams::new(rational_from_f64(r.psi)?, rational_from_f64(r.xi)?)?;
    let threshold = match t_theta {
        Some(t) => ThresholdPolicy::Fixed(rational_from_f64(t)?),
        None => ThresholdPolicy::RunningMean { cold_start: rational_from_f64(r.initial)? },
    };
    Ok(CsmlConfig { initial_micro: to_micro(r.initial), params, threshold, ..CsmlConfig::default() })
}

pub(super) fn network_for(s: &Scenario, label: &str, replica: u64, ids: &[String], t_theta: Option<f64>) -> Result<Network> {
    let net_seed = stream(s.seed, label, replica, 0).random::<u64>();
    let mut cfg = NetworkConfig::new(net_seed);
    cfg.csml = csml_config(s, t_theta)?;
    Network::new(cfg, synthetic_store(ids.iter().map(String::as_str)))
}

fn run_replica(s: &Scenario, w: u64, attack: AttackKind, horizon: u64, replica: usize) -> Result<Vec<VictimTrace>> {
    let sw = &s.sweep;
    let att = &s.attack;
    let lk = &s.linkage;
    let profile = WorkerProfile::honest(sw.victims);
    let honest: Vec<String> = (0..sw.requesters).map(|i| format!("requester-{i}")).collect();
    let colluders: Vec<String> = (0..att.m_col).map(|i| format!("colluder-{i}")).collect();
    let victim_ids: Vec<String> = (0..sw.victims).map(|i| format!("victim-{i}")).collect();
    let all: Vec<String> = honest.iter().chain(&colluders).chain(&victim_ids).cloned().collect();
    let mut net = network_for(s, "replica", replica as u64, &all, s.reputation.t_theta)?;

    let honest_req = honest.iter().map(|id| net.onboard(id)).collect::<Result<Vec<_>>>()?;
    let colluder_req = colluders.iter().map(|id| net.onboard(id)).collect::<Result<Vec<_>>>()?;
    let mut next_pseudonym = 0;
    let mut victims = Vec::with_capacity(sw.victims);
    for (v, id) in victim_ids.iter().enumerate() {
        let mut setup = stream(s.seed, "victim-setup", replica as u64, v as u64);
        victims.push(Victim {
            p: net.onboard(id)?,
            rng: stream(s.seed, "victim-steps", replica as u64, v as u64),
            habit_reward: setup.random_range(0..lk.reward_buckets),
            habit_ctx: setup.random_range(0..lk.context_bins),
            pseudonym: next_pseudonym,
            marked: false,
            targeted: false,
            trace: VictimTrace {
                replica,
                victim: v,
                presented: Vec::with_capacity(horizon as usize),
                rewards: Vec::with_capacity(horizon as usize),
                meta: Vec::with_capacity(horizon as usize),
            },
        });
        next_pseudonym += 1;
    }

    for k in 0..horizon {
        for v in victims.iter_mut() {
            let st = Step::draw(&mut v.rng);
            if k % w == 0 {
                if k > 0 {
                    net.rotate(&mut v.p)?;
                    v.pseudonym = next_pseudonym;
                    next_pseudonym += 1;
                }
                v.marked = false;
                v.targeted = attack == AttackKind::Collusive && st.target < att.p_target;
            }
            let r_micro = net.reputation(&v.p).ok_or(Error::Config("victim lost its pseudonym".into()))?;

            let adversarial = st.adv < att.p_adv;
            let mut negative = adversarial && st.neg < att.p_neg;
            let mut provoked = false;
            match attack {
                AttackKind::Random => {}
                AttackKind::Retaliatory => {
                    provoked = adversarial && st.prov < att.q_prov;
                    v.marked |= provoked;
                    negative |= v.marked && adversarial && st.neg < att.p_ret;
                }
                AttackKind::Collusive => negative |= v.targeted && st.neg < att.p_col,
            }
            let requester = if adversarial || negative {
                &colluder_req[pick(st.pick, colluder_req.len())]
            } else {
                &honest_req[pick(st.pick, honest_req.len())]
            };

            let output = if negative { uniform(st.bad_output, profile.bad_output) } else { uniform(st.output, profile.output) };
            let t = trust(output, uniform(st.sensing, profile.sensing));
            let wf = weight(&s.weight, st.d, st.a);
            let reward_bucket = bucket(st.reward_habit, st.reward, v.habit_reward, lk.reward_buckets, lk.habit);
            let ctx_bin = bucket(st.ctx_habit, st.ctx, v.habit_ctx, lk.context_bins, lk.habit);
            let reward = 10 * (reward_bucket + 1);

            let task = net.publish_task(requester, reward)?;
            net.subscribe(&v.p, &task)?;
            let req_trust = if provoked { 0.2 } else { 0.8 };
            let entry = |apk, t| MetricEntry { apk, trust_micro: to_micro(t), weight_micro: to_micro(wf) };
            let req_apk = requester.apk().expect("onboarded");
            let apk = v.p.apk().expect("onboarded");
            net.evaluate(&task, entry(req_apk, req_trust), vec![entry(apk, t)])?;

            v.trace.presented.push(from_micro(r_micro));
            v.trace.rewards.push(reward as f64);
            v.trace.meta.push(TxMeta {
                time: k as f64,
                reward: reward_bucket as f64,
                context: ctx_bin as f64,
                pseudonym: v.pseudonym,
            });
        }
    }
    Ok(victims.into_iter().map(|v| v.trace).collect())
}

fn linkage_pairs(s: &Scenario, replica: usize, traces: &[VictimTrace]) -> Vec<LinkPair> {
    let mut rng = stream(s.seed, "linkage", replica as u64, 0);
    let n = traces.len();
    let mut out = Vec::with_capacity(2 * n * s.linkage.pairs_per_worker);
    for (v, tr) in traces.iter().enumerate() {
        let h = tr.meta.len();
        for _ in 0..s.linkage.pairs_per_worker {
            let i = rng.random_range(0..h);
            let mut j = rng.random_range(0..h - 1);
            if j >= i {
                j += 1;
            }
            out.push(LinkPair { a: tr.meta[i], b: tr.meta[j], same: true });
            let other = &traces[(v + 1 + rng.random_range(0..n - 1)) % n];
            let i = rng.random_range(0..h);
            let j = rng.random_range(0..other.meta.len());
            out.push(LinkPair { a: tr.meta[i], b: other.meta[j], same: false });
        }
    }
    out
}

/// Mean size of the group of pseudonyms sharing a lifetime slot and modal bins.
fn k_anon(traces: &[VictimTrace], w: u64) -> f64 {
    let lifetimes = traces.first().map_or(0, |t| t.meta.len() / w as usize);
    let mut total = 0.0;
    let mut count = 0.0;
    for l in 0..lifetimes {
        let mut groups: BTreeMap<(u64, u64), usize> = BTreeMap::new();
        for tr in traces {
            let slot = &tr.meta[l * w as usize..(l + 1) * w as usize];
            let key = (mode(slot.iter().map(|m| m.reward as u64)), mode(slot.iter().map(|m| m.context as u64)));
            *groups.entry(key).or_default() += 1;
        }
        for size in groups.values() {
            total += (*size * *size) as f64;
            count += *size as f64;
        }
    }
    if count == 0.0 { 0.0 } else { total / count }
}

fn mode(values: impl Iterator<Item = u64>) -> u64 {
    let mut counts: BTreeMap<u64, usize> = BTreeMap::new();
    for v in values {
        *counts.entry(v).or_default() += 1;
    }
    counts.into_iter().max_by(|a, b| a.1.cmp(&b.1).then(b.0.cmp(&a.0))).map_or(0, |(v, _)| v)
}

fn rotation_gas() -> f64 {
    let t = GasTable::default_table();
    let g = |name| t.function(name).map(|f| f.g_l1).unwrap_or(0);
    (g("mintRT") + g("spendRT")) as f64
}

fn cell_metrics(s: &Scenario, w: u64, traces: &[VictimTrace], pairs: &[LinkPair], k_anon: f64) -> std::result::Result<SimMetrics, SimError> {
    let sw = &s.sweep;
    let mut dd = 0.0;
    let mut ttr = 0.0;
    let mut hire = 0.0;
    let mut rsi = 0.0;
    let mut lifetimes = 0.0;
    let mut var_life = 0.0;
    let mut hired_reward = 0.0;
    let mut all_reward = 0.0;
    for tr in traces {
        let lives: Vec<&[f64]> = tr.presented.chunks(w as usize).collect();
        for l in &lives {
            dd += metrics::drawdown(l)?;
            ttr += metrics::ttr(l)?;
            hire += f64::from(u8::from(metrics::hireable(l, sw.r_hire)?));
            rsi += metrics::rsi(l)?;
            lifetimes += 1.0;
        }
        var_life += metrics::var_life(&lives)?;
        for (r, x) in tr.presented.iter().zip(&tr.rewards) {
            all_reward += x;
            if *r >= sw.r_hire {
                hired_reward += x;
            }
        }
    }
    if lifetimes == 0.0 {
        return Err(SimError::EmptyTrajectory);
    }
    let drawdown = dd / lifetimes;
    let auc_link = metrics::linkage_auc(pairs)?;
    let cost = metrics::on_chain_cost(w);
    let utility = hired_reward / all_reward;
    Ok(SimMetrics {
        rau: metrics::compute_rau(utility, drawdown, auc_link, cost, sw.lambda),
        utility,
        drawdown,
        ttr: ttr / lifetimes,
        pr_hire: hire / lifetimes,
        rsi: rsi / lifetimes,
        var_life: var_life / traces.len() as f64,
        auc_link,
        k_anon,
        cost,
        cost_gas: rotation_gas() / w as f64,
    })
}

/// Horizon rounded up so every lifetime is complete.
pub fn horizon_for(s: &Scenario, w: u64) -> u64 {
    s.sweep.horizon.div_ceil(w) * w
}

/// Run every replica of one (W, attack) cell and reduce in replica order.
pub fn run_scenario(s: &Scenario, w: u64, attack: AttackKind) -> Result<CellRun> {
    s.validate()?;
    if w == 0 {
        return Err(SimError::Config("W must be positive".into()).into());
    }
    let horizon = horizon_for(s, w);
    let one = |r: usize| -> Result<(Vec<VictimTrace>, Vec<LinkPair>, f64)> {
        let traces = run_replica(s, w, attack, horizon, r)?;
        let pairs = linkage_pairs(s, r, &traces);
        let k = k_anon(&traces, w);
        Ok((traces, pairs, k))
    };
    let per_replica: Vec<_> = if s.sweep.parallel_width > 1 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(s.sweep.parallel_width)
            .build()
            .map_err(|e| SimError::Config(e.to_string()))?;
        pool.install(|| (0..s.sweep.replicas).into_par_iter().map(one).collect::<Result<Vec<_>>>())?
    } else {
        (0..s.sweep.replicas).map(one).collect::<Result<Vec<_>>>()?
    };
    let mut traces = Vec::new();
    let mut pairs = Vec::new();
    let mut k_total = 0.0;
    for (t, p, k) in per_replica {
        traces.extend(t);
        pairs.extend(p);
        k_total += k;
    }
    let metrics = cell_metrics(s, w, &traces, &pairs, k_total / s.sweep.replicas as f64)?;
    Ok(CellRun { w, attack, horizon, metrics, traces })
}

/// One cell per (W, attack), all sharing the scenario seed.
pub fn sweep_reuse_window(s: &Scenario) -> Result<SweepTable> {
    let mut rows = Vec::new();
    for &w in &s.sweep.grid {
        for &attack in &s.sweep.attacks {
            rows.push(SweepRow { w, attack, metrics: run_scenario(s, w, attack)?.metrics });
        }
    }
    Ok(SweepTable { seed: s.seed, replicas: s.sweep.replicas, rows })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> Scenario {
        let mut s = Scenario::default();
        s.sweep.replicas = 4;
        s.sweep.horizon = 12;
        s
    }

    #[test]
    fn window_one_has_no_drawdown() {
        let run = run_scenario(&small(), 1, AttackKind::Retaliatory).unwrap();
        assert_eq!(run.metrics.drawdown, 0.0);
        assert_eq!(run.metrics.cost, 1.0);
        assert_eq!(run.traces.len(), 12);
    }

    #[test]
    fn seeded_runs_repeat() {
        let a = run_scenario(&small(), 3, AttackKind::Collusive).unwrap();
        let b = run_scenario(&small(), 3, AttackKind::Collusive).unwrap();
        assert_eq!(a.metrics, b.metrics);
        assert_eq!(a.traces, b.traces);
    }

    #[test]
    fn parallel_matches_inline() {
        let mut s = small();
        let inline = run_scenario(&s, 2, AttackKind::Random).unwrap();
        s.sweep.parallel_width = 3;
        assert_eq!(run_scenario(&s, 2, AttackKind::Random).unwrap().metrics, inline.metrics);
    }

    #[test]
    fn no_attack_pressure_means_no_drawdown() {
        let mut s = small();
        s.attack.p_adv = 0.0;
        let run = run_scenario(&s, 5, AttackKind::Random).unwrap();
        assert_eq!(run.metrics.drawdown, 0.0);
        assert!(run.traces.iter().all(|t| t.presented.last() >= t.presented.first()));
    }
}
