//! Reuse-window sweep over the default scenario.
//!
//! `cargo run --release --example window_sweep -- [replicas]`

use anonrep::sim::{sweep_csv, sweep_reuse_window, Scenario};

fn main() -> anonrep::Result<()> {
    let mut s = Scenario::default();
    if let Some(n) = std::env::args().nth(1) {
        s.sweep.replicas = n.parse().map_err(|e| anonrep::Error::Config(format!("replicas: {e}")))?;
    }
    let started = std::time::Instant::now();
    let table = sweep_reuse_window(&s)?;
    print!("{}", sweep_csv(&table).expect("in-memory csv"));
    eprintln!("{} replicas per cell in {:.1?}", s.sweep.replicas, started.elapsed());
    Ok(())
}
