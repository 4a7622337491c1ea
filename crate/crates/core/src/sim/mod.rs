//! Monte-Carlo harness over the full ledger lifecycle.
//!
//! Every replica owns its own [`Network`](crate::network::Network). Random
//! draws come from per-worker ChaCha streams keyed by (seed, replica, worker),
//! and each step consumes a fixed number of draws, so all (W, attack) cells see
//! the same underlying interaction stream.

mod config;
mod effectiveness;
mod metrics;
mod output;
mod sweep;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::crypto::{hash_tagged, tag};
use crate::reputation::{interaction_weight, weighted_trust, InteractionWeightParams};

pub use config::{
    parse_grid, AttackKind, AttackModel, EffectivenessConfig, LinkageConfig, Range, ReputationConfig, Scenario,
    SweepConfig, WeightConfig, WorkerKind, WorkerProfile, DEFAULT_GRID, DEFAULT_SCENARIO,
};
pub use effectiveness::{effectiveness_comparison, EffectivenessRun, WorkerSeries};
pub use metrics::{
    auc, compute_rau, drawdown, hireable, linkage_auc, on_chain_cost, rsi, ttr, var_life, LinkPair, SimMetrics, TxMeta,
};
pub use output::{sweep_csv, trajectories_csv, SWEEP_COLUMNS};
pub use sweep::{run_scenario, sweep_reuse_window, CellRun, SweepRow, SweepTable, VictimTrace};

#[derive(Debug, Error)]
pub enum SimError {
    #[error("config: {0}")]
    Config(String),
    #[error("metric over an empty trajectory")]
    EmptyTrajectory,
    #[error("AUC undefined without both positive and negative pairs")]
    UndefinedAuc,
}

/// Independent stream for one purpose within a run.
pub(crate) fn stream(seed: u64, label: &str, a: u64, b: u64) -> ChaCha8Rng {
    let d = hash_tagged(tag::KEYGEN, &[b"sim", label.as_bytes(), &seed.to_be_bytes(), &a.to_be_bytes(), &b.to_be_bytes()]);
    ChaCha8Rng::from_seed(d.0)
}

pub(crate) fn uniform(u: f64, r: Range) -> f64 {
    r[0] + u * (r[1] - r[0])
}

/// Equal-weight blend of output and sensing quality.
pub(crate) fn trust(output: f64, sensing: f64) -> f64 {
    weighted_trust(&[(0.5, output), (0.5, sensing)]).expect("qualities in [0,1]")
}

pub(crate) fn weight(cfg: &WeightConfig, d: f64, a: f64) -> f64 {
    let p = InteractionWeightParams {
        kappa: cfg.kappa,
        omega_0: cfg.omega[0],
        omega_d: cfg.omega[1],
        omega_a: cfg.omega[2],
        omega_st: cfg.omega[3],
        c_st: cfg.c_st,
        d_max: 1.0,
        a_max: 1.0,
    };
    interaction_weight(&p, &d, &a).expect("validated weight config")
}

pub(crate) fn to_micro(x: f64) -> u64 {
    (x.clamp(0.0, 1.0) * 1e6).round() as u64
}

pub(crate) fn from_micro(m: u64) -> f64 {
    m as f64 / 1e6
}
