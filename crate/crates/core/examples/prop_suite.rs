//! Run the invariant suite at full scale and print one line per property.

use anonrep::suite::{registry, run_suite, Scale, SuiteOptions};

fn main() -> anonrep::Result<()> {
    let seed = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(7);
    let report = run_suite(&registry(), &SuiteOptions::new(seed, Scale::Full))?;
    for v in &report.verdicts {
        println!("{:<5} {}/{}: {}", if v.passed { "pass" } else { "FAIL" }, v.module, v.name, v.detail);
    }
    std::process::exit(if report.passed { 0 } else { 1 });
}
