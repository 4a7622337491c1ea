//! Analytical L1/L2 gas accounting.
//!
//! L2 cost of `b` batches folds up to `m` batches into one aggregated call:
//! `ceil(b/m)·(G_commit + G_verify + G_execute)`. L1 cost is linear in calls.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const DEFAULT_TABLE: &str = include_str!("../fixtures/gas_table.toml");

/// Canonical function order used for reports.
pub const FUNCTIONS: [&str; 8] = ["mintAT", "deposit", "spendAT", "withdraw", "mintRT", "spendRT", "useRT", "updateRT"];

#[derive(Debug, Error)]
pub enum GasError {
    #[error("unknown function {0:?}")]
    UnknownFunction(String),
    #[error("no fixture row for {function} with {calls} calls")]
    MissingRow { function: String, calls: u64 },
    #[error("invalid gas table: {0}")]
    Invalid(String),
    #[error("batch count must be at least 1")]
    NoBatches,
    #[error("worker count must be at least 1")]
    NoWorkers,
    #[error("reading gas table: {0}")]
    Io(#[from] std::io::Error),
    #[error("parsing gas table: {0}")]
    Parse(#[from] toml::de::Error),
}

/// One published row, cells kept verbatim.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TableRow {
    pub calls: u64,
    pub batches: u64,
    pub commit: u64,
    pub verify: u64,
    pub execute: u64,
    pub total_l2: u64,
    pub total_l1: u64,
    pub improvement: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FunctionGas {
    pub g_commit: u64,
    pub g_verify: u64,
    pub g_execute: u64,
    pub g_l1: u64,
    pub m: u64,
    #[serde(default)]
    pub rows: Vec<TableRow>,
}

impl FunctionGas {
    pub fn base_l2(&self) -> u64 {
        self.g_commit + self.g_verify + self.g_execute
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TaskCostParams {
    pub new_task: u64,
    pub sub_to_task: u64,
    pub selection: u64,
    pub reuse_window: u64,
    /// Proofs per aggregated on-chain verification.
    pub aggregation: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GasTable {
    pub wei_per_gas: u64,
    pub task: TaskCostParams,
    pub functions: BTreeMap<String, FunctionGas>,
}

impl GasTable {
    pub fn from_toml(text: &str) -> Result<Self, GasError> {
        let t: GasTable = toml::from_str(text)?;
        t.validate()?;
        Ok(t)
    }

    pub fn load(path: &Path) -> Result<Self, GasError> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    pub fn default_table() -> Self {
        Self::from_toml(DEFAULT_TABLE).expect("bundled gas table is valid")
    }

    pub fn validate(&self) -> Result<(), GasError> {
        let bad = |m: String| Err(GasError::Invalid(m));
        if self.wei_per_gas == 0 || self.task.reuse_window == 0 || self.task.aggregation == 0 {
            return bad("zero wei_per_gas, reuse_window or aggregation".into());
        }
        for name in ["updateRT", "spendRT"] {
            if !self.functions.contains_key(name) {
                return bad(format!("task cost needs function {name}"));
            }
        }
        for (name, f) in &self.functions {
            if [f.g_commit, f.g_verify, f.g_execute, f.g_l1].contains(&0) {
                return bad(format!("{name}: gas values must be positive"));
            }
            if ![2, 3, 8].contains(&f.m) {
                return bad(format!("{name}: m = {} not in {{2, 3, 8}}", f.m));
            }
            if f.rows.iter().any(|r| r.batches == 0 || r.calls == 0) {
                return bad(format!("{name}: rows need positive calls and batches"));
            }
        }
        Ok(())
    }

    pub fn function(&self, name: &str) -> Result<&FunctionGas, GasError> {
        self.functions.get(name).ok_or_else(|| GasError::UnknownFunction(name.to_string()))
    }

    /// Function names, canonical ones first.
    pub fn names(&self) -> Vec<&str> {
        let mut out: Vec<&str> = FUNCTIONS.iter().copied().filter(|n| self.functions.contains_key(*n)).collect();
        out.extend(self.functions.keys().map(String::as_str).filter(|n| !FUNCTIONS.contains(n)));
        out
    }

    pub fn row(&self, function: &str, calls: u64) -> Result<&TableRow, GasError> {
        self.function(function)?
            .rows
            .iter()
            .find(|r| r.calls == calls)
            .ok_or_else(|| GasError::MissingRow { function: function.to_string(), calls })
    }

    pub fn to_wei(&self, gas: u64) -> u128 {
        gas as u128 * self.wei_per_gas as u128
    }
}

pub fn l2_total(table: &GasTable, function: &str, n_batches: u64) -> Result<u64, GasError> {
    if n_batches == 0 {
        return Err(GasError::NoBatches);
    }
    let f = table.function(function)?;
    Ok(n_batches.div_ceil(f.m) * f.base_l2())
}

pub fn l1_total(table: &GasTable, function: &str, n_calls: u64) -> Result<u64, GasError> {
    Ok(n_calls * table.function(function)?.g_l1)
}

/// L2 total of a published row, summed from its own Commit/Verify/Execute cells.
pub fn row_l2_total(row: &TableRow) -> u64 {
    row.commit + row.verify + row.execute
}

pub fn improvement(table: &GasTable, function: &str, n_calls: u64) -> Result<f64, GasError> {
    let row = table.row(function, n_calls)?;
    Ok(l1_total(table, function, n_calls)? as f64 / row_l2_total(row) as f64)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GasReport {
    pub function: String,
    pub calls: u64,
    pub batches: u64,
    pub total_l2: u64,
    pub total_l1: u64,
    pub improvement: f64,
    /// L2 total from the base-cost formula with the row's batch count.
    pub formula_l2: u64,
    pub formula_matches: bool,
}

pub fn gas_reports(table: &GasTable) -> Result<Vec<GasReport>, GasError> {
    let mut out = Vec::new();
    for name in table.names() {
        for row in &table.function(name)?.rows {
            let total_l2 = row_l2_total(row);
            let formula_l2 = l2_total(table, name, row.batches)?;
            let total_l1 = l1_total(table, name, row.calls)?;
            out.push(GasReport {
                function: name.to_string(),
                calls: row.calls,
                batches: row.batches,
                total_l2,
                total_l1,
                improvement: total_l1 as f64 / total_l2 as f64,
                formula_l2,
                formula_matches: formula_l2 == total_l2,
            });
        }
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaskCost {
    pub workers: u64,
    pub aggregated: bool,
    /// Worker-independent part: task creation plus selection.
    pub fixed: u64,
    pub per_worker: u64,
    pub total: u64,
}

/// Per-worker cost: subscription, reputation update, and the amortised RT
/// spend over the reuse window. With aggregation, subscription and spend
/// proofs share one verification per `aggregation` proofs.
pub fn per_worker_cost(table: &GasTable, aggregated: bool) -> Result<u64, GasError> {
    let update = table.function("updateRT")?.g_l1;
    let spend = table.function("spendRT")?.g_l1;
    let p = &table.task;
    if aggregated {
        let shared = p.sub_to_task * p.reuse_window + spend;
        let den = p.reuse_window * p.aggregation;
        Ok(update + (2 * shared + den) / (2 * den))
    } else {
        Ok(p.sub_to_task + update + spend / p.reuse_window)
    }
}

pub fn task_cost(table: &GasTable, workers: u64, aggregated: bool) -> Result<TaskCost, GasError> {
    if workers == 0 {
        return Err(GasError::NoWorkers);
    }
    let fixed = table.task.new_task + table.task.selection;
    let per_worker = per_worker_cost(table, aggregated)?;
    Ok(TaskCost { workers, aggregated, fixed, per_worker, total: fixed + per_worker * workers })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn formula_examples() {
        let t = GasTable::default_table();
        assert_eq!(l2_total(&t, "mintAT", 3).unwrap(), 446_451);
        assert_eq!(l2_total(&t, "updateRT", 1).unwrap(), 402_426);
        assert_eq!(l1_total(&t, "mintAT", 64).unwrap(), 59_888_000);
        assert_eq!(l1_total(&t, "updateRT", 64).unwrap(), 2_044_800);
        assert_eq!(l1_total(&t, "useRT", 0).unwrap(), 0);
        for name in FUNCTIONS {
            let m = t.function(name).unwrap().m;
            assert_eq!(l2_total(&t, name, 2 * m).unwrap(), 2 * l2_total(&t, name, m).unwrap());
        }
    }

    #[test]
    fn errors() {
        let t = GasTable::default_table();
        assert!(matches!(l2_total(&t, "nope", 1), Err(GasError::UnknownFunction(_))));
        assert!(matches!(l2_total(&t, "mintAT", 0), Err(GasError::NoBatches)));
        assert!(matches!(improvement(&t, "mintAT", 65), Err(GasError::MissingRow { .. })));
        assert!(GasTable::from_toml("wei_per_gas = 1").is_err());
        let bad_m = DEFAULT_TABLE.replacen("m = 3", "m = 4", 1);
        assert!(matches!(GasTable::from_toml(&bad_m), Err(GasError::Invalid(_))));
    }

    #[test]
    fn task_cost_lines() {
        let t = GasTable::default_table();
        assert_eq!(per_worker_cost(&t, false).unwrap(), 460_080);
        assert_eq!(per_worker_cost(&t, true).unwrap(), 38_640);
        assert_eq!(task_cost(&t, 39, false).unwrap().total, 18_265_390);
        assert_eq!(task_cost(&t, 128, true).unwrap().total, 5_268_190);
        let diff = task_cost(&t, 1, false).unwrap().total - task_cost(&t, 1, true).unwrap().total;
        assert_eq!(diff, 421_440);
    }

    #[test]
    fn names_in_canonical_order() {
        assert_eq!(GasTable::default_table().names(), FUNCTIONS.to_vec());
    }
}
