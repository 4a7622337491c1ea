use std::collections::BTreeMap;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::sweep::network_for;
use super::{from_micro, stream, to_micro, trust, uniform, weight, Scenario, WorkerKind};
use crate::error::Result;
use crate::ledger::MetricEntry;
use crate::reputation::{from_micro as rat_micro, BaselineModel, ModelState, ReputationParams};

pub const MODELS: [BaselineModel; 3] = [BaselineModel::PwMean, BaselineModel::WMean, BaselineModel::Gompertz];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WorkerSeries {
    pub id: String,
    pub kind: WorkerKind,
    /// Model name → reputation after each round, starting with the initial value.
    pub series: BTreeMap<String, Vec<f64>>,
    /// Reputation the ledger actually recorded, same layout.
    pub ledger: Vec<f64>,
}

impl WorkerSeries {
    pub fn model(&self, m: BaselineModel) -> &[f64] {
        &self.series[m.name()]
    }

    pub fn last(&self, m: BaselineModel) -> f64 {
        *self.model(m).last().expect("initial value present")
    }

    /// Largest decrease between consecutive rounds.
    pub fn max_drop(&self, m: BaselineModel) -> f64 {
        self.model(m).windows(2).map(|w| w[0] - w[1]).fold(0.0, f64::max)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EffectivenessRun {
    pub rounds: u64,
    pub workers: Vec<WorkerSeries>,
    /// Every ledger update matched the off-ledger PW-Mean replay.
    pub ledger_agrees: bool,
}

impl EffectivenessRun {
    pub fn of_kind(&self, kind: WorkerKind) -> impl Iterator<Item = &WorkerSeries> {
        self.workers.iter().filter(move |w| w.kind == kind)
    }
}

/// Feed one interaction stream to the ledger and to each baseline model.
///
/// Each round one honest requester posts a task that the whole roster takes.
/// Workers rotate pseudonyms every `window` rounds.
pub fn effectiveness_comparison(s: &Scenario) -> Result<EffectivenessRun> {
    s.validate()?;
    let e = &s.effectiveness;
    let profiles: Vec<_> = e.roster.iter().flat_map(|p| std::iter::repeat_n(p, p.count)).collect();
    let ids: Vec<String> = profiles.iter().enumerate().map(|(i, p)| format!("{}-{i}", p.kind.name())).collect();
    let mut all = ids.clone();
    all.push("requester".into());
    let mut net = network_for(s, "effectiveness", 0, &all, e.t_theta)?;
    let requester = net.onboard("requester")?;
    let mut workers = ids.iter().map(|id| net.onboard(id)).collect::<Result<Vec<_>>>()?;
    let params = ReputationParams::new(
        crate::reputation::rational_from_f64(s.reputation.psi)?,
        crate::reputation::rational_from_f64(s.reputation.xi)?,
    )?;
    let init = to_micro(s.reputation.initial);
    let mut models: Vec<Vec<ModelState>> =
        workers.iter().map(|_| MODELS.iter().map(|m| ModelState::new(*m, init)).collect()).collect();
    let mut out: Vec<WorkerSeries> = profiles
        .iter()
        .zip(&ids)
        .zip(&models)
        .map(|((p, id), ms)| WorkerSeries {
            id: id.clone(),
            kind: p.kind,
            series: ms.iter().map(|m| (m.model.name().to_string(), vec![from_micro(m.r_micro)])).collect(),
            ledger: vec![from_micro(init)],
        })
        .collect();
    let mut agrees = true;

    for round in 0..e.rounds {
        if round > 0 && round % e.window == 0 {
            for w in workers.iter_mut() {
                net.rotate(w)?;
            }
        }
        let task = net.publish_task(&requester, 100)?;
        let mut entries = Vec::with_capacity(workers.len());
        for (i, (w, p)) in workers.iter().zip(&profiles).enumerate() {
            net.subscribe(w, &task)?;
            let mut rng = stream(s.seed, "effectiveness", round, i as u64);
            let mut u = || rng.random::<f64>();
            let (worked, bad, o, q, d, a) = (u() < p.participation, u() < p.p_bad, u(), u(), u(), u());
            let t = match (worked, bad) {
                (false, _) => p.skip_trust,
                (true, true) => trust(uniform(o, p.bad_output), uniform(q, p.bad_sensing)),
                (true, false) => trust(uniform(o, p.output), uniform(q, p.sensing)),
            };
            let wf = weight(&s.weight, d, a);
            entries.push(MetricEntry { apk: w.apk().expect("onboarded"), trust_micro: to_micro(t), weight_micro: to_micro(wf) });
        }
        let mean_t = entries.iter().map(|m| m.trust_micro).sum::<u64>() / entries.len() as u64;
        let req = MetricEntry { apk: requester.apk().expect("onboarded"), trust_micro: mean_t, weight_micro: 1_000_000 / 2 };
        let t_theta = net.csml.current_threshold();
        let changes = net.evaluate(&task, req, entries.clone())?;
        for (i, m) in entries.iter().enumerate() {
            let after = changes.iter().find(|c| c.apk == m.apk).expect("worker updated").after;
            out[i].ledger.push(from_micro(after));
            for state in models[i].iter_mut() {
                state.step(&rat_micro(m.trust_micro), &rat_micro(m.weight_micro), &t_theta, &params)?;
                out[i].series.get_mut(state.model.name()).expect("model present").push(from_micro(state.r_micro));
                if state.model == BaselineModel::PwMean && state.r_micro != after {
                    agrees = false;
                }
            }
        }
    }
    Ok(EffectivenessRun { rounds: e.rounds, workers: out, ledger_agrees: agrees })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn honest_rise_and_ledger_matches_replay() {
        let mut s = Scenario::default();
        s.effectiveness.rounds = 20;
        let run = effectiveness_comparison(&s).unwrap();
        assert!(run.ledger_agrees);
        for w in run.of_kind(WorkerKind::Honest) {
            for m in MODELS {
                assert!(w.last(m) > w.model(m)[0], "{} under {}", w.id, m.name());
            }
        }
        assert_eq!(run.workers[0].ledger.len(), 21);
    }
}
