//! Exhaustive behaviour patterns for a small committee.

use super::Check;
use crate::committee::{AggSig, Committee, CommitteeConfig, NodeBehavior, PartialSig};
use crate::crypto::Digest;
use crate::error::Result;
use crate::ledger::MetricEntry;
use crate::network::{synthetic_store, Network, NetworkConfig};

const BEHAVIORS: [NodeBehavior; 4] =
    [NodeBehavior::Honest, NodeBehavior::Withhold, NodeBehavior::Corrupt, NodeBehavior::WrongMessage];

/// Every assignment of the four behaviours to `n` nodes.
pub fn patterns(n: usize) -> impl Iterator<Item = Vec<NodeBehavior>> {
    (0..4usize.pow(n as u32)).map(move |mut code| {
        (0..n)
            .map(|_| {
                let b = BEHAVIORS[code % 4];
                code /= 4;
                b
            })
            .collect()
    })
}

fn honest(p: &[NodeBehavior]) -> usize {
    p.iter().filter(|b| **b == NodeBehavior::Honest).count()
}

/// Patterns with at most `t` honest nodes: aggregation fails, and an
/// aggregate stuffed with every partial the faulty nodes could produce
/// (plus fabricated ones for the silent nodes) does not verify.
pub fn no_forgery_below_threshold(config: CommitteeConfig, seed: u64) -> Check {
    let base = match Committee::new(config, seed, "enumeration") {
        Ok(c) => c,
        Err(e) => return Check::new(false, e.to_string()),
    };
    let message = b"attest";
    let (mut cases, mut failures) = (0, 0);
    for pattern in patterns(config.n).filter(|p| honest(p) <= config.t) {
        cases += 1;
        let committee = base.clone().with_behaviors(pattern.clone());
        if committee.threshold_sign(message).is_ok() {
            failures += 1;
            continue;
        }
        let mut partials = Vec::new();
        for (node, b) in pattern.iter().enumerate() {
            match b {
                NodeBehavior::Honest => partials.push(committee.roster.part_sign(node, message)),
                NodeBehavior::WrongMessage => partials.push(committee.roster.part_sign(node, b"attest'")),
                _ => {
                    let mut sig = committee.roster.part_sign(node, b"other").sig;
                    sig.0[31] ^= 1;
                    partials.push(PartialSig { signer_index: node, sig });
                    partials.push(PartialSig { signer_index: node, sig: Digest([node as u8; 32]) });
                }
            }
        }
        // duplicates of the honest partials must not count twice
        let dup: Vec<PartialSig> = partials.iter().filter(|p| pattern[p.signer_index] == NodeBehavior::Honest).copied().collect();
        partials.extend(dup);
        if committee.roster.verify_agg(message, &AggSig { partials }) {
            failures += 1;
        }
    }
    Check::new(failures == 0, format!("{cases} patterns with <= t honest nodes, {failures} produced a valid aggregate"))
}

/// Patterns with at most `f` faulty nodes in both the registration
/// committee and the oracle network: onboarding and an oracle-attested
/// update both go through.
pub fn liveness_with_honest_majority(config: CommitteeConfig, seed: u64) -> Result<Check> {
    let (mut cases, mut failures) = (0, 0);
    let mut first_failure = None;
    for pattern in patterns(config.n).filter(|p| config.n - honest(p) <= config.f) {
        cases += 1;
        let mut cfg = NetworkConfig::new(seed);
        cfg.committee = config;
        cfg.oracle = config;
        let mut net = Network::new(cfg, synthetic_store(["a", "b"]))?;
        net.committee = net.committee.clone().with_behaviors(pattern.clone());
        net.oracle = net.oracle.clone().with_behaviors(pattern.clone());
        let outcome = (|| -> Result<()> {
            let a = net.onboard("a")?;
            let b = net.onboard("b")?;
            let task = net.publish_task(&a, 10)?;
            net.subscribe(&b, &task)?;
            let entry = |apk| MetricEntry { apk, trust_micro: 900_000, weight_micro: 500_000 };
            net.evaluate(&task, entry(a.apk().expect("onboarded")), vec![entry(b.apk().expect("onboarded"))])?;
            Ok(())
        })();
        if let Err(e) = outcome {
            failures += 1;
            first_failure.get_or_insert_with(|| format!("{pattern:?}: {e}"));
        }
    }
    let detail = match first_failure {
        Some(f) => format!("{cases} patterns with <= f faulty nodes, {failures} stalled, first {f}"),
        None => format!("{cases} patterns with <= f faulty nodes, all completed"),
    };
    Ok(Check::new(failures == 0, detail))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pattern_counts() {
        assert_eq!(patterns(3).count(), 64);
        let cfg = CommitteeConfig::new(7, 2, 2).unwrap();
        assert_eq!(patterns(7).filter(|p| 7 - honest(p) <= cfg.f).count(), 211);
    }

    #[test]
    fn small_committee_enumeration() {
        let cfg = CommitteeConfig::new(4, 1, 1).unwrap();
        assert!(no_forgery_below_threshold(cfg, 1).passed);
        let live = liveness_with_honest_majority(cfg, 1).unwrap();
        assert!(live.passed, "{}", live.detail);
    }
}
