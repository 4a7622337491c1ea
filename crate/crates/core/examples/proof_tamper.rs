//! Honest proofs for every relation, tampered public inputs, and a scan of
//! the emitted bytes for witness material.
//!
//! `cargo run --example proof_tamper -- [trials]`

use anonrep::suite::tamper::{honest_proofs, honest_run, leak_scan, tamper_trials};

fn main() -> anonrep::Result<()> {
    let trials = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(1_000);
    let run = honest_run(3)?;
    for (statement, _) in &run.proofs {
        println!("{:?}", statement.relation());
    }
    for (name, check) in [
        ("honest", honest_proofs(&run)),
        ("tamper", tamper_trials(&run, trials, 3)),
        ("leak scan", leak_scan(&run, 4)),
    ] {
        println!("{} {name}: {}", if check.passed { "ok  " } else { "FAIL" }, check.detail);
    }
    Ok(())
}
