use std::ops::RangeInclusive;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use mec_offload::harness::{
    format_pool_size_table, load_config, pool_size_report, resolve_out_dir, run_experiment, ExperimentSpec,
};
use mec_offload::{Environment, World};

#[derive(Parser)]
#[command(name = "mec-offload", version, about = "Multi-user MEC offloading simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Optimistic,
    PaperVerbatim,
}

#[derive(Subcommand)]
enum Command {
    /// Run every (sweep value, policy, seed) of a config and write CSV/JSON output.
    Run {
        config: PathBuf,
        /// Replace the config's seeds with this many consecutive seeds.
        #[arg(long)]
        seed_count: Option<u64>,
        #[arg(long)]
        out_dir: Option<PathBuf>,
        /// Worker threads (defaults to one per core).
        #[arg(long)]
        parallel: Option<usize>,
        /// Confidence-index sign and user-level pull rule for every policy.
        #[arg(long, value_enum)]
        mode: Option<Mode>,
    },
    /// Compare full and equipartition pool sizes over a range of user counts.
    PoolSize {
        #[arg(long)]
        servers: usize,
        /// Inclusive range such as `4..10`.
        #[arg(long, value_parser = parse_range)]
        users: RangeInclusive<usize>,
    },
    /// Print the optimal action, its expected delay and every action's gap.
    Oracle {
        config: PathBuf,
        #[arg(long)]
        seed_count: Option<u64>,
    },
    /// Check a config and print what it would run.
    Validate { config: PathBuf },
}

fn parse_range(s: &str) -> Result<RangeInclusive<usize>, String> {
    let (a, b) = s
        .split_once("..=")
        .or_else(|| s.split_once(".."))
        .ok_or_else(|| format!("expected a range like 4..10, got `{s}`"))?;
    let a: usize = a.trim().parse().map_err(|_| format!("bad range start `{a}`"))?;
    let b: usize = b.trim().parse().map_err(|_| format!("bad range end `{b}`"))?;
    if a > b {
        return Err(format!("empty range {a}..{b}"));
    }
    Ok(a..=b)
}

fn load(config: &PathBuf, seed_count: Option<u64>) -> Result<ExperimentSpec, String> {
    let spec = load_config(config).map_err(|e| format!("{}: {e}", config.display()))?;
    match seed_count {
        Some(n) => spec.with_seed_count(n).map_err(|e| e.to_string()),
        None => Ok(spec),
    }
}

fn run(cli: Cli) -> Result<ExitCode, String> {
    match cli.command {
        Command::Run {
            config,
            seed_count,
            out_dir,
            parallel,
            mode,
        } => {
            let mut spec = load(&config, seed_count)?;
            for w in spec.system.validate().map_err(|e| e.to_string())? {
                eprintln!("warning: {w}");
            }
            spec.out_dir = out_dir.unwrap_or_else(|| resolve_out_dir(&spec.out_dir));
            if let Some(mode) = mode {
                for p in &mut spec.policies {
                    p.apply_mode(matches!(mode, Mode::PaperVerbatim));
                }
            }
            let report = run_experiment(&spec, parallel).map_err(|e| e.to_string())?;
            for s in &report.summaries {
                match &s.error {
                    Some(e) => eprintln!("error: {} seed {} {}: {e}", s.policy, s.seed, s.sweep_value),
                    None => log::info!(
                        "{} seed {} {}: regret {:.3} s, {} decisions",
                        s.policy,
                        s.seed,
                        s.sweep_value,
                        s.pseudo_regret_s.unwrap_or(f64::NAN),
                        s.decisions.unwrap_or(0)
                    ),
                }
            }
            println!(
                "{} runs, {} rows, {} errors -> {}",
                report.summaries.len(),
                report.rows_written,
                report.errors(),
                report.out_dir.display()
            );
            Ok(if report.errors() == 0 { ExitCode::SUCCESS } else { ExitCode::FAILURE })
        }
        Command::PoolSize { servers, users } => {
            let rows = pool_size_report(users, servers).map_err(|e| e.to_string())?;
            print!("{}", format_pool_size_table(&rows));
            Ok(ExitCode::SUCCESS)
        }
        Command::Oracle { config, seed_count } => {
            let spec = load(&config, seed_count)?;
            for &seed in &spec.seeds {
                let mut cfg = spec.system.clone();
                cfg.seed = seed;
                let env = Environment::new(cfg).map_err(|e| e.to_string())?;
                let oracle = env.global_oracle().map_err(|e| e.to_string())?;
                println!(
                    "seed {seed}: best {} (id {}), expected delay {:.6} s, sigma_max {:.6} s",
                    oracle.best_action, oracle.best_action.id, oracle.best_expected_delay, oracle.sigma_max
                );
                match env.space().enumerate(4096) {
                    Ok(pool) => {
                        for a in pool {
                            let gap = oracle.gap(a.id).map_err(|e| e.to_string())?;
                            println!("  {:>6}  {a}  gap {gap:.6} s", a.id);
                        }
                    }
                    Err(_) => {
                        for (user, row) in oracle.per_user_gaps.iter().enumerate() {
                            let cells: Vec<String> = env
                                .space()
                                .methods(user)
                                .iter()
                                .zip(row)
                                .map(|(m, g)| format!("{m}={g:.6}"))
                                .collect();
                            println!("  user {}: {}", user + 1, cells.join(" "));
                        }
                    }
                }
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Validate { config } => {
            let spec = load(&config, None)?;
            for w in spec.system.validate().map_err(|e| e.to_string())? {
                println!("warning: {w}");
            }
            let labels: Vec<String> = spec.policies.iter().map(|p| p.label()).collect();
            println!(
                "ok: {} users, {} servers, horizon {}, policies [{}], {} seeds, {} sweep points",
                spec.system.num_users,
                spec.system.num_edge_servers,
                spec.system.horizon,
                labels.join(", "),
                spec.seeds.len(),
                spec.sweep.len()
            );
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
