//! L1 against aggregated L2 gas per function, and the per-task cost.
//!
//! `cargo run --example gas_report -- [workers...]`

use anonrep::gas::{gas_reports, task_cost, GasTable};

fn main() -> anonrep::Result<()> {
    let table = GasTable::default_table();
    println!("{:<10} {:>6} {:>8} {:>12} {:>14} {:>8}", "function", "calls", "batches", "L2", "L1", "ratio");
    for r in gas_reports(&table)? {
        println!(
            "{:<10} {:>6} {:>8} {:>12} {:>14} {:>8.2}",
            r.function, r.calls, r.batches, r.total_l2, r.total_l1, r.improvement
        );
    }

    let workers: Vec<u64> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let workers = if workers.is_empty() { vec![10, 39, 128] } else { workers };
    println!();
    for n in workers {
        for aggregated in [false, true] {
            let c = task_cost(&table, n, aggregated)?;
            let wei = table.to_wei(c.total);
            println!(
                "N={n:<4} aggregated={aggregated:<5} {} + {}*N = {} gas ({:.2}e15 wei)",
                c.fixed,
                c.per_worker,
                c.total,
                wei as f64 / 1e15
            );
        }
    }
    Ok(())
}
