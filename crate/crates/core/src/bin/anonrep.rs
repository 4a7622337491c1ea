use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use anonrep::gas::{GasTable, DEFAULT_TABLE};
use anonrep::report::{self, DemoConfig, RunManifest, Status, DEFAULT_DEMO};
use anonrep::sim::{parse_grid, AttackKind, Scenario, DEFAULT_SCENARIO};
use anonrep::suite::{registry, Mutation, Scale, SuiteOptions};
use anonrep::{Error, Result};

/// Anonymous reputation ledger: demo runs, window sweeps, gas reports and invariant checks.
///
/// Every flag can also be set through an `ANONREP_*` environment variable.
#[derive(Parser)]
#[command(version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct Common {
    /// Config file; defaults to the bundled one for the command.
    #[arg(long, global = true, env = "ANONREP_CONFIG")]
    config: Option<PathBuf>,
    /// Overrides the seed in the config.
    #[arg(long, global = true, env = "ANONREP_SEED")]
    seed: Option<u64>,
    /// Output directory; defaults to `out/<command>`.
    #[arg(long, global = true, env = "ANONREP_OUT")]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum AttackArg {
    Random,
    Retaliatory,
    Collusive,
    All,
}

#[derive(Subcommand)]
enum Command {
    /// Scripted ledger run: honest task cycle, a replayed spend, Sybil attempts.
    LedgerDemo,
    /// Sweep the token reuse window under each attack.
    WindowSweep {
        #[arg(long, env = "ANONREP_ATTACK", value_enum, default_value = "all")]
        attack: AttackArg,
        /// Comma-separated window sizes, e.g. "1,2,3,5,8,13,21".
        #[arg(long, env = "ANONREP_GRID")]
        grid: Option<String>,
        /// Overrides the replica count in the config.
        #[arg(long, env = "ANONREP_REPLICAS")]
        replicas: Option<usize>,
    },
    /// Per-function L1/L2 gas table and per-task cost.
    GasReport,
    /// Run every invariant check and report a verdict for each.
    PropSuite {
        /// Reduced sample sizes and a smaller committee.
        #[arg(long, env = "ANONREP_QUICK")]
        quick: bool,
        /// Inject a fault to confirm the suite notices it.
        #[arg(long, env = "ANONREP_MUTATE", value_enum)]
        mutate: Option<MutateArg>,
        /// Restrict to these modules (comma separated).
        #[arg(long, env = "ANONREP_ONLY", value_delimiter = ',')]
        only: Option<Vec<String>>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum MutateArg {
    SwapRates,
}

fn read_config(path: Option<&Path>, bundled: &str) -> Result<String> {
    match path {
        Some(p) => std::fs::read_to_string(p).map_err(|e| Error::Config(format!("{}: {e}", p.display()))),
        None => Ok(bundled.to_string()),
    }
}

fn run(cli: Cli) -> Result<Status> {
    let c = &cli.common;
    let out = |name: &str| c.out.clone().unwrap_or_else(|| Path::new("out").join(name));
    match cli.command {
        Command::LedgerDemo => {
            let text = read_config(c.config.as_deref(), DEFAULT_DEMO)?;
            let mut cfg = DemoConfig::from_toml(&text)?;
            cfg.seed = c.seed.unwrap_or(cfg.seed);
            let m = RunManifest::new("ledger-demo", c.config.as_deref(), &text, cfg.seed, &out("ledger-demo"), &[]);
            let status = report::cmd_ledger_demo(&cfg, &m.write()?)?;
            eprintln!("ledger-demo: {} -> {}", status_word(status), m.out);
            Ok(status)
        }
        Command::WindowSweep { attack, grid, replicas } => {
            let text = read_config(c.config.as_deref(), DEFAULT_SCENARIO)?;
            let mut s = Scenario::from_toml(&text)?;
            s.seed = c.seed.unwrap_or(s.seed);
            if let Some(r) = replicas {
                s.sweep.replicas = r;
            }
            let attacks = match attack {
                AttackArg::All => None,
                AttackArg::Random => Some(vec![AttackKind::Random]),
                AttackArg::Retaliatory => Some(vec![AttackKind::Retaliatory]),
                AttackArg::Collusive => Some(vec![AttackKind::Collusive]),
            };
            let grid = grid.as_deref().map(parse_grid).transpose()?;
            let s = s.restricted(attacks, grid)?;
            let params = vec![
                format!("attacks={:?}", s.sweep.attacks),
                format!("grid={:?}", s.sweep.grid),
                format!("replicas={}", s.sweep.replicas),
            ];
            let m = RunManifest::new("window-sweep", c.config.as_deref(), &text, s.seed, &out("window-sweep"), &params);
            let status = report::cmd_window_sweep(&s, &m.write()?)?;
            eprintln!("window-sweep: {} -> {}", status_word(status), m.out);
            Ok(status)
        }
        Command::GasReport => {
            let text = read_config(c.config.as_deref(), DEFAULT_TABLE)?;
            let table = GasTable::from_toml(&text)?;
            let m = RunManifest::new("gas-report", c.config.as_deref(), &text, c.seed.unwrap_or(0), &out("gas-report"), &[]);
            let status = report::cmd_gas_report(&table, &m.write()?)?;
            eprintln!("gas-report: {} -> {}", status_word(status), m.out);
            Ok(status)
        }
        Command::PropSuite { quick, mutate, only } => {
            let mut opts = SuiteOptions::new(c.seed.unwrap_or(7), if quick { Scale::Quick } else { Scale::Full });
            opts.mutation = mutate.map(|MutateArg::SwapRates| Mutation::SwapRates);
            let groups: Vec<_> = registry()
                .into_iter()
                .filter(|g| only.as_ref().is_none_or(|o| o.iter().any(|m| m == g.module)))
                .collect();
            let params = vec![format!("{opts:?}"), format!("only={only:?}")];
            let m = RunManifest::new("prop-suite", None, "", opts.seed, &out("prop-suite"), &params);
            let (status, report) = report::cmd_prop_suite(&groups, &opts, &m.write()?)?;
            for v in &report.verdicts {
                println!("{} {}/{}: {}", if v.passed { "pass" } else { "FAIL" }, v.module, v.name, v.detail);
            }
            Ok(status)
        }
    }
}

fn status_word(s: Status) -> &'static str {
    match s {
        Status::Passed => "ok",
        Status::InvariantFailed => "invariant failed",
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(status) => ExitCode::from(status.code() as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(report::exit_code(&e) as u8)
        }
    }
}
