//! Scripted ledger run: a paid task, a token rotation with a replayed spend,
//! a refunded deposit and a round of Sybil attempts.
//!
//! `cargo run --example ledger_demo -- [config.toml]`

use anonrep::report::{ledger_demo, DemoConfig};

fn main() -> anonrep::Result<()> {
    let cfg = match std::env::args().nth(1) {
        Some(path) => DemoConfig::load(path.as_ref())?,
        None => DemoConfig::default(),
    };
    let run = ledger_demo(&cfg)?;
    for r in &run.log.records {
        let verdict = r.reason.as_deref().unwrap_or("ok");
        println!("{:>4} {:<5} {:<10} {verdict}", r.seq, r.ledger, r.kind);
    }
    let s = &run.summary;
    println!("\naccepted {}, rejected {}", s.accepted, s.rejected);
    for (who, r) in &s.reputation {
        println!("{who:<8} reputation {:.6}", *r as f64 / 1e6);
    }
    for (name, ok) in &s.invariants {
        println!("{} {name}", if *ok { "ok  " } else { "FAIL" });
    }
    println!("state {}", s.state_digest);
    Ok(())
}
