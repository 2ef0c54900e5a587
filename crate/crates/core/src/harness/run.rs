//! Seeded experiment runs and their CSV/JSON output.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;

use super::config::{ExperimentSpec, PolicySpec, SweepValue};
use crate::env::{Environment, OracleReport, World};
use crate::error::Result;
use crate::metrics::{cumulative_regret, realized_regret, RunTrace};
use crate::model::SystemConfig;
use crate::policy::{
    bmse, bmse_sl, epsilon_greedy, equipartition_split, multi_user_ucb1, BmseParams, MethodGroups, SlParams,
};

/// Environment variable that overrides the output directory.
pub const OUT_DIR_ENV: &str = "MEC_OFFLOAD_OUT_DIR";

pub const CSV_HEADER: [&str; 14] = [
    "sweep_value",
    "policy",
    "seed",
    "t",
    "phase",
    "action_id",
    "delay_s",
    "expected_delay_s",
    "regret_cum_s",
    "pseudo_regret_cum_s",
    "optimal",
    "pool_size",
    "decisions_cum",
    "dropped",
];

/// Runs `policy` on a fresh environment built from `cfg`.
pub fn run_policy(cfg: &SystemConfig, policy: &PolicySpec) -> Result<(RunTrace, OracleReport)> {
    let mut env = Environment::new(cfg.clone())?;
    let oracle = env.global_oracle()?;
    let trace = match *policy {
        PolicySpec::MuUcb1 { mode, max_pool, .. } => {
            let pool = env.space().enumerate(max_pool)?;
            multi_user_ucb1(&mut env, &pool, cfg.horizon, cfg.exploration, mode)?
        }
        PolicySpec::EpsilonGreedy { epsilon, max_pool, .. } => {
            let pool = env.space().enumerate(max_pool)?;
            epsilon_greedy(&mut env, &pool, cfg.horizon, epsilon, cfg.seed)?
        }
        PolicySpec::Bmse {
            ul_fraction,
            pull_rule,
            patience,
            max_pool,
            dropped_slots_free,
            ..
        } => {
            let params = BmseParams {
                ul_fraction,
                pull_rule,
                patience,
                max_pool,
                dropped_slots_free,
                ..BmseParams::from_config(cfg)
            };
            bmse(&mut env, &params)?
        }
        PolicySpec::BmseSl {
            max_pool,
            dropped_slots_free,
            ..
        } => {
            let pool = equipartition_split(&MethodGroups::edge_only(env.space()), env.space(), max_pool)?;
            let params = SlParams {
                horizon: cfg.horizon,
                xi: cfg.exploration,
                dropped_slots_free,
            };
            bmse_sl(&mut env, &pool, &params)?
        }
    };
    Ok((trace, oracle))
}

/// Terminal metrics of one run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunSummary {
    pub sweep_value: String,
    pub policy: String,
    pub seed: u64,
    pub slots: u64,
    pub pseudo_regret_s: Option<f64>,
    pub realized_regret_s: Option<f64>,
    pub optimal_rate: Option<f64>,
    pub decisions: Option<u64>,
    pub final_pool_size: Option<u64>,
    pub survivor: Option<u64>,
    pub best_action: Option<u64>,
    pub best_expected_delay_s: Option<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunTiming {
    pub sweep_value: String,
    pub policy: String,
    pub seed: u64,
    pub wall_clock_s: f64,
}

#[derive(Debug)]
struct RunOutput {
    summary: RunSummary,
    wall_clock_s: f64,
    rows: Vec<[String; 14]>,
}

/// Results of a whole experiment, ordered by (sweep, policy, seed).
#[derive(Debug)]
pub struct ExperimentReport {
    pub summaries: Vec<RunSummary>,
    pub timings: Vec<RunTiming>,
    pub out_dir: PathBuf,
    pub rows_written: u64,
}

impl ExperimentReport {
    pub fn errors(&self) -> usize {
        self.summaries.iter().filter(|s| s.error.is_some()).count()
    }
}

fn one_run(sweep: &SweepValue, policy: &PolicySpec, seed: u64, base: &SystemConfig) -> RunOutput {
    let mut cfg = sweep.apply(base);
    cfg.seed = seed;
    let label = policy.label();
    let sweep_value = sweep.column();
    let mut summary = RunSummary {
        sweep_value: sweep_value.clone(),
        policy: label.clone(),
        seed,
        slots: 0,
        pseudo_regret_s: None,
        realized_regret_s: None,
        optimal_rate: None,
        decisions: None,
        final_pool_size: None,
        survivor: None,
        best_action: None,
        best_expected_delay_s: None,
        error: None,
    };
    let result = run_policy(&cfg, policy).and_then(|(trace, oracle)| {
        let pseudo = cumulative_regret(&trace, &oracle)?;
        Ok((trace, oracle, pseudo))
    });
    let (trace, oracle, pseudo) = match result {
        Ok(v) => v,
        Err(e) => {
            log::warn!("run {label} seed {seed} sweep '{sweep_value}' failed: {e}");
            summary.error = Some(e.to_string());
            return RunOutput {
                summary,
                wall_clock_s: 0.0,
                rows: Vec::new(),
            };
        }
    };
    let realized = realized_regret(&trace, &oracle);
    let best = oracle.best_action.id;
    let mut optimal = 0u64;
    let rows = trace
        .records
        .iter()
        .zip(pseudo.iter().zip(&realized))
        .map(|(r, (&p, &q))| {
            let hit = r.action_id == best;
            optimal += u64::from(hit);
            [
                sweep_value.clone(),
                label.clone(),
                seed.to_string(),
                r.t.to_string(),
                r.phase.to_string(),
                r.action_id.0.to_string(),
                r.delay_s.to_string(),
                r.expected_delay_s.to_string(),
                q.to_string(),
                p.to_string(),
                u8::from(hit).to_string(),
                r.pool_size.to_string(),
                r.decisions_cum.to_string(),
                u8::from(r.dropped).to_string(),
            ]
        })
        .collect::<Vec<_>>();
    summary.slots = trace.len() as u64;
    summary.pseudo_regret_s = pseudo.last().copied();
    summary.realized_regret_s = realized.last().copied();
    summary.optimal_rate = (!trace.is_empty()).then(|| optimal as f64 / trace.len() as f64);
    summary.decisions = Some(trace.decisions());
    summary.final_pool_size = trace.records.last().map(|r| r.pool_size);
    summary.survivor = trace.survivor.map(|id| id.0);
    summary.best_action = Some(best.0);
    summary.best_expected_delay_s = Some(oracle.best_expected_delay);
    RunOutput {
        summary,
        wall_clock_s: trace.wall_clock_s,
        rows,
    }
}

/// Output directory after applying the environment override.
pub fn resolve_out_dir(configured: &Path) -> PathBuf {
    match std::env::var_os(OUT_DIR_ENV) {
        Some(dir) if !dir.is_empty() => PathBuf::from(dir),
        _ => configured.to_path_buf(),
    }
}

/// Runs every (sweep value, policy, seed) combination and writes
/// `runs.csv`, `summary.json` and `timing.json` into `spec.out_dir`.
///
/// `threads` bounds the worker pool; `None` uses rayon's default. Output
/// bytes do not depend on the thread count. Wall-clock times go only to
/// `timing.json`.
pub fn run_experiment(spec: &ExperimentSpec, threads: Option<usize>) -> std::io::Result<ExperimentReport> {
    let jobs: Vec<(usize, usize, usize)> = (0..spec.sweep.len())
        .flat_map(|s| (0..spec.policies.len()).flat_map(move |p| (0..spec.seeds.len()).map(move |k| (s, p, k))))
        .collect();
    let work = || {
        jobs.par_iter()
            .map(|&(s, p, k)| one_run(&spec.sweep[s], &spec.policies[p], spec.seeds[k], &spec.system))
            .collect::<Vec<_>>()
    };
    // par_iter().collect() keeps job order, which is already (sweep, policy, seed)
    let outputs = match threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build()
            .map_err(std::io::Error::other)?
            .install(work),
        None => work(),
    };

    fs::create_dir_all(&spec.out_dir)?;
    let mut csv = csv::Writer::from_path(spec.out_dir.join("runs.csv"))?;
    csv.write_record(CSV_HEADER)?;
    let mut rows_written = 0;
    for out in &outputs {
        for row in &out.rows {
            csv.write_record(row)?;
            rows_written += 1;
        }
    }
    csv.flush()?;

    let summaries: Vec<RunSummary> = outputs.iter().map(|o| o.summary.clone()).collect();
    let timings: Vec<RunTiming> = outputs
        .iter()
        .map(|o| RunTiming {
            sweep_value: o.summary.sweep_value.clone(),
            policy: o.summary.policy.clone(),
            seed: o.summary.seed,
            wall_clock_s: o.wall_clock_s,
        })
        .collect();
    write_json(&spec.out_dir.join("summary.json"), &summaries)?;
    write_json(&spec.out_dir.join("timing.json"), &timings)?;
    Ok(ExperimentReport {
        summaries,
        timings,
        out_dir: spec.out_dir.clone(),
        rows_written,
    })
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> std::io::Result<()> {
    let mut f = fs::File::create(path)?;
    serde_json::to_writer_pretty(&mut f, value)?;
    f.write_all(b"\n")
}
