//! Mixed roster fed identically to PW-Mean, W-Mean and Gompertz.
//!
//! `cargo run --release --example effectiveness`

use anonrep::reputation::BaselineModel;
use anonrep::sim::{effectiveness_comparison, Scenario};

fn main() -> anonrep::Result<()> {
    let run = effectiveness_comparison(&Scenario::default())?;
    println!("{:<12} {:>8} {:>8} {:>8} {:>10}", "worker", "pw-mean", "w-mean", "gompertz", "max drop");
    for w in &run.workers {
        println!(
            "{:<12} {:>8.4} {:>8.4} {:>8.4} {:>10.4}",
            w.id,
            w.last(BaselineModel::PwMean),
            w.last(BaselineModel::WMean),
            w.last(BaselineModel::Gompertz),
            w.max_drop(BaselineModel::PwMean),
        );
    }
    println!("ledger matches off-ledger replay: {}", run.ledger_agrees);
    Ok(())
}
