//! Threshold signing under faulty nodes, and VRF committee selection.
//!
//! `cargo run --example threshold_committee`

use anonrep::committee::{select_committee, vrf_eval, vrf_verify, Committee, CommitteeConfig, NodeBehavior};

fn main() -> anonrep::Result<()> {
    let cfg = CommitteeConfig::new(7, 2, 2)?;
    let msg = b"credential for m_pk";
    let scenarios = [
        ("all honest", vec![]),
        ("two withhold", vec![(0, NodeBehavior::Withhold), (1, NodeBehavior::Withhold)]),
        ("one corrupt, one off-message", vec![(2, NodeBehavior::Corrupt), (5, NodeBehavior::WrongMessage)]),
        ("four corrupt", (0..4).map(|i| (i, NodeBehavior::Corrupt)).collect()),
        ("five corrupt", (0..5).map(|i| (i, NodeBehavior::Corrupt)).collect()),
    ];
    for (label, faults) in scenarios {
        let mut behaviors = vec![NodeBehavior::Honest; cfg.n];
        for (i, b) in faults {
            behaviors[i] = b;
        }
        let committee = Committee::new(cfg, 1, "example")?.with_behaviors(behaviors);
        match committee.threshold_sign(msg) {
            Ok(agg) => println!(
                "{label:<30} signed by {:?}, verifies: {}",
                agg.signers(),
                committee.roster.verify_agg(msg, &agg)
            ),
            Err(e) => println!("{label:<30} no aggregate: {e}"),
        }
    }

    let committee = Committee::new(cfg, 1, "example")?;
    for epoch in 0u64..3 {
        let out = vrf_eval(committee.vrf_key(), &epoch.to_be_bytes());
        let members = select_committee(&out.r, committee.k, cfg.n)?;
        let ok = vrf_verify(committee.vrf_key(), &epoch.to_be_bytes(), &out);
        println!("epoch {epoch}: slots {members:?}, proof verifies: {ok}");
    }
    Ok(())
}
