//! Command runners behind the `anonrep` binary: run manifests, output files
//! and exit-code mapping.
//!
//! Every command writes `manifest.json` into its output directory before any
//! other file. CSV outputs start with a `# run_id=… manifest=manifest.json`
//! comment line; JSON outputs wrap their payload as
//! `{"run_id", "manifest", "data"}`; JSONL logs start with a header record.

pub mod demo;

use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;

pub use demo::{ledger_demo, DemoConfig, DemoRun, DemoSummary, DEFAULT_DEMO};

use crate::committee::CommitteeError;
use crate::crypto::{hash_tagged, tag};
use crate::error::{Error, Result};
use crate::gas::{gas_reports, task_cost, GasTable};
use crate::sim::{sweep_csv, sweep_reuse_window, Scenario, SweepTable, SWEEP_COLUMNS};
use crate::suite::{run_suite, Group, SuiteOptions, SuiteReport};

pub const MANIFEST_FILE: &str = "manifest.json";

/// Worker counts for the per-task cost table.
pub const TASK_COST_WORKERS: [u64; 2] = [39, 128];

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct RunManifest {
    pub run_id: String,
    pub command: String,
    pub config: Option<String>,
    pub seed: u64,
    pub out: String,
    pub git_describe: String,
    /// Seconds since the Unix epoch; `SOURCE_DATE_EPOCH` pins it.
    pub wall_clock: u64,
}

impl RunManifest {
    /// `params` are the resolved options that shape the outputs; they feed the run id.
    pub fn new(command: &str, config: Option<&Path>, config_text: &str, seed: u64, out: &Path, params: &[String]) -> Self {
        let joined = params.join("\n");
        let id = hash_tagged(tag::STATE, &[b"run", command.as_bytes(), config_text.as_bytes(), &seed.to_be_bytes(), joined.as_bytes()]);
        RunManifest {
            run_id: hex::encode(&id.as_bytes()[..8]),
            command: command.to_string(),
            config: config.map(|p| p.display().to_string()),
            seed,
            out: out.display().to_string(),
            git_describe: git_describe(),
            wall_clock: wall_clock(),
        }
    }

    /// Create the output directory and write the manifest into it.
    pub fn write(&self) -> Result<Outputs> {
        let dir = PathBuf::from(&self.out);
        fs::create_dir_all(&dir)?;
        let mut text = serde_json::to_string_pretty(self).expect("manifest serialises");
        text.push('\n');
        fs::write(dir.join(MANIFEST_FILE), text)?;
        Ok(Outputs { dir, run_id: self.run_id.clone() })
    }
}

fn git_describe() -> String {
    std::process::Command::new("git")
        .args(["describe", "--always", "--dirty"])
        .output()
        .ok()
        .filter(|o| o.status.success())
        .and_then(|o| String::from_utf8(o.stdout).ok())
        .map(|s| s.trim().to_string())
        .unwrap_or_else(|| "unknown".into())
}

fn wall_clock() -> u64 {
    std::env::var("SOURCE_DATE_EPOCH")
        .ok()
        .and_then(|s| s.parse().ok())
        .unwrap_or_else(|| SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs()))
}

/// Writer for files that reference a manifest.
pub struct Outputs {
    pub dir: PathBuf,
    pub run_id: String,
}

#[derive(Serialize)]
struct Wrapped<'a, T> {
    run_id: &'a str,
    manifest: &'a str,
    data: &'a T,
}

impl Outputs {
    pub fn csv(&self, name: &str, body: &str) -> Result<PathBuf> {
        let path = self.dir.join(name);
        fs::write(&path, format!("# run_id={} manifest={MANIFEST_FILE}\n{body}", self.run_id))?;
        Ok(path)
    }

    pub fn json<T: Serialize>(&self, name: &str, data: &T) -> Result<PathBuf> {
        let path = self.dir.join(name);
        let w = Wrapped { run_id: &self.run_id, manifest: MANIFEST_FILE, data };
        let mut text = serde_json::to_string_pretty(&w).expect("outputs serialise");
        text.push('\n');
        fs::write(&path, text)?;
        Ok(path)
    }

    pub fn jsonl(&self, name: &str, log: &crate::ledger::TxLog) -> Result<PathBuf> {
        let path = self.dir.join(name);
        let mut buf = serde_json::to_vec(&serde_json::json!({ "run_id": self.run_id, "manifest": MANIFEST_FILE }))
            .expect("header serialises");
        buf.push(b'\n');
        log.write_jsonl(&mut buf)?;
        fs::write(&path, buf)?;
        Ok(path)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Status {
    Passed,
    InvariantFailed,
}

impl Status {
    pub fn code(self) -> i32 {
        match self {
            Status::Passed => 0,
            Status::InvariantFailed => 1,
        }
    }
}

/// Exit code for an error: 2 for configuration and input problems, 1 when a
/// protocol step the script expected to succeed was refused.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Ledger(_) | Error::Proof(_) | Error::Merkle(_) => 1,
        Error::Committee(CommitteeError::Records(_) | CommitteeError::Config(_)) => 2,
        Error::Committee(_) => 1,
        _ => 2,
    }
}

pub fn cmd_ledger_demo(cfg: &DemoConfig, out: &Outputs) -> Result<Status> {
    let run = ledger_demo(cfg)?;
    out.jsonl("ledger_log.jsonl", &run.log)?;
    out.json("ledger_summary.json", &run.summary)?;
    Ok(if run.summary.passed() { Status::Passed } else { Status::InvariantFailed })
}

/// `W, attack, metric, value`, one row per metric.
pub fn sweep_long_csv(table: &SweepTable) -> Result<String, csv::Error> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["W", "attack", "metric", "value"])?;
    for r in &table.rows {
        let m = &r.metrics;
        let values = [m.rau, m.drawdown, m.cost, m.auc_link, m.rsi, m.pr_hire, m.ttr, m.var_life, m.k_anon, m.utility];
        for (name, v) in SWEEP_COLUMNS[2..].iter().zip(values) {
            w.write_record([r.w.to_string(), r.attack.name().to_string(), name.to_string(), format!("{v:.6}")])?;
        }
    }
    Ok(String::from_utf8(w.into_inner().map_err(|e| e.into_error())?).expect("csv is utf-8"))
}

fn csv_err(e: csv::Error) -> Error {
    Error::Io(std::io::Error::other(e))
}

pub fn cmd_window_sweep(s: &Scenario, out: &Outputs) -> Result<Status> {
    let table = sweep_reuse_window(s)?;
    out.csv("window_sweep.csv", &sweep_csv(&table).map_err(csv_err)?)?;
    out.csv("window_sweep_long.csv", &sweep_long_csv(&table).map_err(csv_err)?)?;
    out.json("window_sweep.json", &table)?;
    Ok(Status::Passed)
}

/// Per-row L1/L2 totals with published and recomputed improvement ratios.
pub fn gas_table_csv(table: &GasTable) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let header = ["function", "calls", "batches", "total_l2", "total_l1", "improvement", "published_improvement", "formula_l2", "formula_matches"];
    w.write_record(header).map_err(csv_err)?;
    for r in gas_reports(table)? {
        let published = table.row(&r.function, r.calls)?.improvement;
        w.write_record([
            r.function.clone(),
            r.calls.to_string(),
            r.batches.to_string(),
            r.total_l2.to_string(),
            r.total_l1.to_string(),
            format!("{:.2}", r.improvement),
            format!("{published:.1}"),
            r.formula_l2.to_string(),
            r.formula_matches.to_string(),
        ])
        .map_err(csv_err)?;
    }
    Ok(String::from_utf8(w.into_inner().map_err(|e| Error::Io(e.into_error()))?).expect("csv is utf-8"))
}

/// Linear per-task cost, with and without aggregation, in gas and in units of 10^15 wei.
pub fn task_cost_csv(table: &GasTable, workers: &[u64]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["workers", "aggregated", "fixed", "per_worker", "total_gas", "total_wei", "total_1e15_wei"]).map_err(csv_err)?;
    for &n in workers {
        for aggregated in [false, true] {
            let c = task_cost(table, n, aggregated)?;
            let wei = table.to_wei(c.total);
            w.write_record([
                n.to_string(),
                aggregated.to_string(),
                c.fixed.to_string(),
                c.per_worker.to_string(),
                c.total.to_string(),
                wei.to_string(),
                format!("{:.2}", wei as f64 / 1e15),
            ])
            .map_err(csv_err)?;
        }
    }
    Ok(String::from_utf8(w.into_inner().map_err(|e| Error::Io(e.into_error()))?).expect("csv is utf-8"))
}

pub fn cmd_gas_report(table: &GasTable, out: &Outputs) -> Result<Status> {
    out.csv("gas_table.csv", &gas_table_csv(table)?)?;
    out.csv("task_cost.csv", &task_cost_csv(table, &TASK_COST_WORKERS)?)?;
    Ok(Status::Passed)
}

pub fn cmd_prop_suite(groups: &[Group], options: &SuiteOptions, out: &Outputs) -> Result<(Status, SuiteReport)> {
    let report = run_suite(groups, options)?;
    out.json("prop_suite.json", &report)?;
    let status = if report.passed { Status::Passed } else { Status::InvariantFailed };
    Ok((status, report))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn manifest_first_and_outputs_reference_it() {
        let dir = tempfile::tempdir().unwrap();
        let m = RunManifest::new("gas-report", None, "", 1, dir.path(), &[]);
        let out = m.write().unwrap();
        assert!(dir.path().join(MANIFEST_FILE).exists());
        cmd_gas_report(&GasTable::default_table(), &out).unwrap();
        let csv = fs::read_to_string(dir.path().join("task_cost.csv")).unwrap();
        assert!(csv.starts_with(&format!("# run_id={}", m.run_id)));
        assert!(csv.contains("128,true,322270,38640,5268190,"));
    }

    #[test]
    fn run_id_tracks_inputs() {
        let p = Path::new("out");
        let a = RunManifest::new("window-sweep", None, "x", 1, p, &["grid=1".into()]);
        let b = RunManifest::new("window-sweep", None, "x", 1, p, &["grid=2".into()]);
        let c = RunManifest::new("window-sweep", None, "x", 2, p, &["grid=1".into()]);
        assert_ne!(a.run_id, b.run_id);
        assert_ne!(a.run_id, c.run_id);
        assert_eq!(a.run_id, RunManifest::new("window-sweep", None, "x", 1, p, &["grid=1".into()]).run_id);
    }

    #[test]
    fn exit_codes() {
        assert_eq!(exit_code(&Error::Config("x".into())), 2);
        assert_eq!(exit_code(&Error::Ledger(crate::ledger::Rejection::SerialReused)), 1);
    }
}
