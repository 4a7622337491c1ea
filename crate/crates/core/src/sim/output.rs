use super::effectiveness::EffectivenessRun;
use super::sweep::SweepTable;

pub const SWEEP_COLUMNS: [&str; 12] =
    ["W", "attack", "RAU", "Drawdown", "Cost", "AUC_link", "RSI", "Pr_hire", "TTR", "Var_life", "kAnon", "Utility"];

fn f(x: f64) -> String {
    format!("{x:.6}")
}

pub fn sweep_csv(table: &SweepTable) -> Result<String, csv::Error> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(SWEEP_COLUMNS)?;
    for r in &table.rows {
        let m = &r.metrics;
        w.write_record([
            r.w.to_string(),
            r.attack.name().to_string(),
            f(m.rau),
            f(m.drawdown),
            f(m.cost),
            f(m.auc_link),
            f(m.rsi),
            f(m.pr_hire),
            f(m.ttr),
            f(m.var_life),
            f(m.k_anon),
            f(m.utility),
        ])?;
    }
    Ok(String::from_utf8(w.into_inner().map_err(|e| e.into_error())?).expect("csv is utf-8"))
}

/// Long format: one row per (worker, model, round).
pub fn trajectories_csv(run: &EffectivenessRun) -> Result<String, csv::Error> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["worker", "kind", "model", "round", "reputation"])?;
    for s in &run.workers {
        let rows = s.series.iter().map(|(k, v)| (k.as_str(), v)).chain(std::iter::once(("ledger", &s.ledger)));
        for (model, values) in rows {
            for (i, v) in values.iter().enumerate() {
                w.write_record([s.id.as_str(), s.kind.name(), model, &i.to_string(), &f(*v)])?;
            }
        }
    }
    Ok(String::from_utf8(w.into_inner().map_err(|e| e.into_error())?).expect("csv is utf-8"))
}
