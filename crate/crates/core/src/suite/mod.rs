//! Invariant suite: analytical properties of the update rule, ledger safety
//! under fuzzing, proof soundness and privacy, and threshold behaviour.

pub mod fuzz;
pub mod lemmas;
pub mod tamper;
pub mod threshold;

use serde::{Deserialize, Serialize};

use crate::committee::CommitteeConfig;
use crate::error::{Error, Result};
use crate::reputation::{rat, ReputationParams};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Check {
    pub passed: bool,
    pub detail: String,
}

impl Check {
    pub fn new(passed: bool, detail: String) -> Self {
        Check { passed, detail }
    }
}

/// A deliberate fault injected into the checked parameters.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mutation {
    /// Exchange the reward and penalty rates.
    SwapRates,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scale {
    Quick,
    Full,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuiteOptions {
    pub seed: u64,
    pub scale: Scale,
    pub mutation: Option<Mutation>,
}

impl SuiteOptions {
    pub fn new(seed: u64, scale: Scale) -> Self {
        SuiteOptions { seed, scale, mutation: None }
    }

    fn n(&self, full: usize) -> usize {
        match self.scale {
            Scale::Full => full,
            Scale::Quick => (full / 10).max(1),
        }
    }

    fn params(&self) -> ReputationParams<crate::reputation::Rational> {
        let mut p = ReputationParams::new(rat(1, 5), rat(3, 5)).expect("valid rates");
        if self.mutation == Some(Mutation::SwapRates) {
            std::mem::swap(&mut p.psi, &mut p.xi);
        }
        p
    }
}

/// Allowed error of the penalty/reward step ratio.
pub const ASYMMETRY_TOL: f64 = 1e-12;
/// Allowed distance of the long-run mean reputation from the mean trust.
pub const MEAN_TOL: f64 = 0.01;

pub type GroupFn = fn(&SuiteOptions) -> Result<Vec<(&'static str, Check)>>;

/// A set of properties sharing one setup.
#[derive(Clone, Copy)]
pub struct Group {
    pub module: &'static str,
    pub run: GroupFn,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub module: String,
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub options: SuiteOptions,
    pub verdicts: Vec<Verdict>,
    pub passed: bool,
}

fn reputation_group(o: &SuiteOptions) -> Result<Vec<(&'static str, Check)>> {
    let p = o.params();
    let f = |x: &crate::reputation::Rational| *x.numer() as f64 / *x.denom() as f64;
    let pf = ReputationParams { psi: f(&p.psi), xi: f(&p.xi), adaptive: false, psi_0: f(&p.psi_0), xi_0: f(&p.xi_0) };
    Ok(vec![
        ("boundedness", lemmas::boundedness(&p, o.n(100_000), o.seed)),
        ("step-bound", lemmas::step_bound(&p, o.n(20_000), o.seed + 1)),
        ("contraction", lemmas::contraction(&p, o.n(100), o.seed + 2)),
        ("asymmetry", lemmas::asymmetry(&p, o.n(10_000), o.seed + 3, ASYMMETRY_TOL)),
        ("mean-convergence", lemmas::mean_convergence(&pf, 1_000, 500, o.seed + 4, MEAN_TOL)),
    ])
}

fn ledger_group(o: &SuiteOptions) -> Result<Vec<(&'static str, Check)>> {
    Ok(fuzz::ledger_fuzz(o.seed, o.n(20), 500)?.checks())
}

fn proof_group(o: &SuiteOptions) -> Result<Vec<(&'static str, Check)>> {
    let run = tamper::honest_run(o.seed)?;
    Ok(vec![
        ("honest-proofs-verify", tamper::honest_proofs(&run)),
        ("tampered-proofs-rejected", tamper::tamper_trials(&run, o.n(10_000), o.seed)),
        ("no-witness-leak", tamper::leak_scan(&run, 4)),
    ])
}

fn committee_group(o: &SuiteOptions) -> Result<Vec<(&'static str, Check)>> {
    let cfg = match o.scale {
        Scale::Full => CommitteeConfig::new(7, 2, 2)?,
        Scale::Quick => CommitteeConfig::new(4, 1, 1)?,
    };
    Ok(vec![
        ("no-forgery-below-threshold", threshold::no_forgery_below_threshold(cfg, o.seed)),
        ("liveness-with-honest-majority", threshold::liveness_with_honest_majority(cfg, o.seed)?),
    ])
}

pub fn registry() -> Vec<Group> {
    vec![
        Group { module: "reputation", run: reputation_group },
        Group { module: "ledger", run: ledger_group },
        Group { module: "proof", run: proof_group },
        Group { module: "committee", run: committee_group },
    ]
}

pub fn run_suite(groups: &[Group], options: &SuiteOptions) -> Result<SuiteReport> {
    if groups.is_empty() {
        return Err(Error::Config("property registry is empty".into()));
    }
    let mut verdicts = Vec::new();
    for g in groups {
        for (name, c) in (g.run)(options)? {
            verdicts.push(Verdict { module: g.module.into(), name: name.into(), passed: c.passed, detail: c.detail });
        }
    }
    let passed = verdicts.iter().all(|v| v.passed);
    Ok(SuiteReport { options: options.clone(), verdicts, passed })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_registry_is_an_error() {
        assert!(run_suite(&[], &SuiteOptions::new(1, Scale::Quick)).is_err());
    }

    #[test]
    fn swapped_rates_fail_only_the_asymmetry_property() {
        let mut o = SuiteOptions::new(1, Scale::Quick);
        o.mutation = Some(Mutation::SwapRates);
        let r = run_suite(&registry()[..1], &o).unwrap();
        let failed: Vec<_> = r.verdicts.iter().filter(|v| !v.passed).map(|v| v.name.as_str()).collect();
        assert_eq!(failed, ["asymmetry"]);
    }
}
