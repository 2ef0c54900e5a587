//! JSON experiment configuration.
//!
//! ```json
//! {
//!   "num_users": 4,
//!   "num_edge_servers": 2,
//!   "horizon": 10000,
//!   "system": { "task_fwd": "200MB", "edge_capacity_bytes_per_s": [50e6, 51e6] },
//!   "policies": [{ "kind": "mu_ucb1" }, { "kind": "bmse", "ul_fraction": 0.2 }],
//!   "seed_count": 10,
//!   "sweep": { "axis": "task_size", "values": ["50MB", "100MB"] },
//!   "out_dir": "out"
//! }
//! ```
//!
//! Every `system` key is optional and defaults to the reference parameter
//! table. Byte quantities are either a plain number of bytes or a string
//! with a decimal unit (`B`, `KB`, `MB`, `GB`). Unknown keys are rejected.

use std::fmt;
use std::path::{Path, PathBuf};

use serde::de::{self, Deserializer};
use serde::{Deserialize, Serialize};

use crate::model::{bytes_to_bits, SystemConfig, Task};
use crate::policy::{IndexMode, PullRule, DEFAULT_MAX_POOL};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {reason}")]
    Io { path: String, reason: String },
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse { line: usize, column: usize, message: String },
    #[error("invalid `{field}`: {reason}")]
    Invalid { field: String, reason: String },
}

fn invalid(field: impl Into<String>, reason: impl Into<String>) -> ConfigError {
    ConfigError::Invalid {
        field: field.into(),
        reason: reason.into(),
    }
}

/// A byte count read from a number or a string such as `"200MB"`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(transparent)]
pub struct Bytes(pub f64);

impl Bytes {
    pub fn parse(s: &str) -> Result<Bytes, String> {
        let s = s.trim();
        let split = s
            .find(|c: char| c.is_ascii_alphabetic())
            .unwrap_or(s.len());
        let (num, unit) = s.split_at(split);
        let value: f64 = num
            .trim()
            .parse()
            .map_err(|_| format!("`{s}` is not a byte quantity"))?;
        let scale = match unit.trim().to_ascii_uppercase().as_str() {
            "" | "B" => 1.0,
            "KB" => 1e3,
            "MB" => 1e6,
            "GB" => 1e9,
            other => return Err(format!("unknown byte unit `{other}`")),
        };
        Ok(Bytes(value * scale))
    }

    pub fn bits(self) -> f64 {
        bytes_to_bits(self.0)
    }
}

impl<'de> Deserialize<'de> for Bytes {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        struct Visitor;
        impl de::Visitor<'_> for Visitor {
            type Value = Bytes;
            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("a number of bytes or a string like \"200MB\"")
            }
            fn visit_f64<E: de::Error>(self, v: f64) -> Result<Bytes, E> {
                Ok(Bytes(v))
            }
            fn visit_u64<E: de::Error>(self, v: u64) -> Result<Bytes, E> {
                Ok(Bytes(v as f64))
            }
            fn visit_i64<E: de::Error>(self, v: i64) -> Result<Bytes, E> {
                Ok(Bytes(v as f64))
            }
            fn visit_str<E: de::Error>(self, v: &str) -> Result<Bytes, E> {
                Bytes::parse(v).map_err(E::custom)
            }
        }
        d.deserialize_any(Visitor)
    }
}

/// Overrides for the reference system parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SystemSection {
    pub cpu_freq_hz: f64,
    pub cycles_per_bit: f64,
    pub bandwidth_hz: f64,
    pub tx_power_w: f64,
    pub noise_w: f64,
    pub gain_range: (f64, f64),
    pub edge_cloud_gain: f64,
    pub edge_capacity_bytes_per_s: (Bytes, Bytes),
    pub cloud_capacity_bytes_per_s: Bytes,
    pub task_fwd: Bytes,
    pub task_bwd: Bytes,
    pub exploration: f64,
    pub include_cloud: bool,
}

impl Default for SystemSection {
    fn default() -> Self {
        let d = SystemConfig::default();
        SystemSection {
            cpu_freq_hz: d.cpu_freq_hz,
            cycles_per_bit: d.cycles_per_bit,
            bandwidth_hz: d.bandwidth_hz,
            tx_power_w: d.tx_power_w,
            noise_w: d.noise_w,
            gain_range: d.gain_range,
            edge_cloud_gain: d.edge_cloud_gain,
            edge_capacity_bytes_per_s: (Bytes(50e6), Bytes(51e6)),
            cloud_capacity_bytes_per_s: Bytes(100e9),
            task_fwd: Bytes(200e6),
            task_bwd: Bytes(20e6),
            exploration: d.exploration,
            include_cloud: d.include_cloud,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PolicySpec {
    MuUcb1 {
        #[serde(default)]
        name: Option<String>,
        #[serde(default)]
        mode: IndexMode,
        #[serde(default = "default_full_pool_cap")]
        max_pool: u64,
    },
    EpsilonGreedy {
        #[serde(default)]
        name: Option<String>,
        epsilon: f64,
        #[serde(default = "default_full_pool_cap")]
        max_pool: u64,
    },
    Bmse {
        #[serde(default)]
        name: Option<String>,
        #[serde(default = "default_ul_fraction")]
        ul_fraction: f64,
        #[serde(default)]
        pull_rule: PullRule,
        #[serde(default)]
        patience: Option<u64>,
        #[serde(default = "default_max_pool")]
        max_pool: u64,
        #[serde(default)]
        dropped_slots_free: bool,
    },
    /// System-level elimination alone over the edge-only equipartition pool.
    BmseSl {
        #[serde(default)]
        name: Option<String>,
        #[serde(default = "default_max_pool")]
        max_pool: u64,
        #[serde(default)]
        dropped_slots_free: bool,
    },
}

fn default_full_pool_cap() -> u64 {
    1 << 16
}

fn default_max_pool() -> u64 {
    DEFAULT_MAX_POOL
}

fn default_ul_fraction() -> f64 {
    0.2
}

impl PolicySpec {
    /// Label used in output rows.
    pub fn label(&self) -> String {
        let (name, kind) = match self {
            PolicySpec::MuUcb1 { name, .. } => (name, "mu_ucb1"),
            PolicySpec::EpsilonGreedy { name, .. } => (name, "epsilon_greedy"),
            PolicySpec::Bmse { name, .. } => (name, "bmse"),
            PolicySpec::BmseSl { name, .. } => (name, "bmse_sl"),
        };
        name.clone().unwrap_or_else(|| kind.to_string())
    }

    /// Forces the confidence-index sign and the user-level pull rule.
    pub fn apply_mode(&mut self, verbatim: bool) {
        match self {
            PolicySpec::MuUcb1 { mode, .. } => {
                *mode = if verbatim { IndexMode::PaperVerbatim } else { IndexMode::Optimistic };
            }
            PolicySpec::Bmse { pull_rule, .. } => {
                *pull_rule = if verbatim { PullRule::PaperVerbatim } else { PullRule::RoundRobin };
            }
            _ => {}
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepAxis {
    None,
    TaskSize,
    NumUsers,
    Horizon,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawSweep {
    pub axis: SweepAxis,
    #[serde(default)]
    pub values: Vec<Bytes>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSpec {
    num_users: usize,
    num_edge_servers: usize,
    horizon: u64,
    #[serde(default)]
    system: SystemSection,
    policies: Vec<PolicySpec>,
    #[serde(default)]
    seeds: Option<Vec<u64>>,
    #[serde(default)]
    seed_count: Option<u64>,
    #[serde(default)]
    base_seed: u64,
    #[serde(default)]
    sweep: Option<RawSweep>,
    #[serde(default)]
    out_dir: Option<PathBuf>,
}

/// One point of the sweep axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum SweepValue {
    None,
    /// Forward task size in bytes.
    TaskSize(f64),
    NumUsers(usize),
    Horizon(u64),
}

impl SweepValue {
    /// Value written to the `sweep_value` column; empty when there is no sweep.
    pub fn column(&self) -> String {
        match self {
            SweepValue::None => String::new(),
            SweepValue::TaskSize(b) => format!("{b}"),
            SweepValue::NumUsers(n) => n.to_string(),
            SweepValue::Horizon(t) => t.to_string(),
        }
    }

    /// `base` with this point applied. A task-size point rescales the
    /// result size by the same factor as the forward payload.
    pub fn apply(&self, base: &SystemConfig) -> SystemConfig {
        let mut cfg = base.clone();
        match *self {
            SweepValue::None => {}
            SweepValue::TaskSize(bytes) => {
                cfg.task = base.task.scaled(bytes_to_bits(bytes) / base.task.fwd_bits);
            }
            SweepValue::NumUsers(n) => cfg.num_users = n,
            SweepValue::Horizon(t) => cfg.horizon = t,
        }
        cfg
    }
}

/// A validated experiment description.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub system: SystemConfig,
    pub policies: Vec<PolicySpec>,
    pub seeds: Vec<u64>,
    pub sweep: Vec<SweepValue>,
    pub out_dir: PathBuf,
}

impl ExperimentSpec {
    /// Replaces the seed list with `count` seeds starting at the first one.
    pub fn with_seed_count(mut self, count: u64) -> Result<Self, ConfigError> {
        if count == 0 {
            return Err(invalid("seed_count", "must be >= 1"));
        }
        let base = self.seeds.first().copied().unwrap_or(0);
        self.seeds = (0..count).map(|k| base + k).collect();
        Ok(self)
    }
}

/// Reads and validates an experiment file.
pub fn load_config(path: impl AsRef<Path>) -> Result<ExperimentSpec, ConfigError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Io {
        path: path.display().to_string(),
        reason: e.to_string(),
    })?;
    parse_config(&text)
}

/// Parses and validates an experiment document.
pub fn parse_config(text: &str) -> Result<ExperimentSpec, ConfigError> {
    let raw: RawSpec = serde_json::from_str(text).map_err(|e| {
        let message = e.to_string();
        // serde reports missing keys as "missing field `name`"
        if let Some(field) = message
            .strip_prefix("missing field `")
            .and_then(|rest| rest.split('`').next())
        {
            return invalid(field, "required key is missing");
        }
        ConfigError::Parse {
            line: e.line(),
            column: e.column(),
            message,
        }
    })?;
    build(raw)
}

fn build(raw: RawSpec) -> Result<ExperimentSpec, ConfigError> {
    let s = &raw.system;
    let system = SystemConfig {
        num_users: raw.num_users,
        num_edge_servers: raw.num_edge_servers,
        horizon: raw.horizon,
        cpu_freq_hz: s.cpu_freq_hz,
        cycles_per_bit: s.cycles_per_bit,
        bandwidth_hz: s.bandwidth_hz,
        tx_power_w: s.tx_power_w,
        noise_w: s.noise_w,
        gain_range: s.gain_range,
        edge_cloud_gain: s.edge_cloud_gain,
        edge_capacity_bps: (s.edge_capacity_bytes_per_s.0.bits(), s.edge_capacity_bytes_per_s.1.bits()),
        cloud_capacity_bps: s.cloud_capacity_bytes_per_s.bits(),
        task: Task {
            fwd_bits: s.task_fwd.bits(),
            bwd_bits: s.task_bwd.bits(),
        },
        exploration: s.exploration,
        include_cloud: s.include_cloud,
        seed: 0,
    };
    system.validate().map_err(|e| match e {
        crate::Error::InvalidParameter { name, reason } => invalid(name, reason),
        other => invalid("system", other.to_string()),
    })?;

    if raw.policies.is_empty() {
        return Err(invalid("policies", "at least one policy is required"));
    }
    for (k, p) in raw.policies.iter().enumerate() {
        validate_policy(p).map_err(|(field, reason)| invalid(format!("policies[{k}].{field}"), reason))?;
    }

    let seeds = match (raw.seeds, raw.seed_count) {
        (Some(_), Some(_)) => return Err(invalid("seeds", "give either `seeds` or `seed_count`, not both")),
        (Some(seeds), None) => seeds,
        (None, Some(n)) => (0..n).map(|k| raw.base_seed + k).collect(),
        (None, None) => vec![raw.base_seed],
    };
    if seeds.is_empty() {
        return Err(invalid("seeds", "seed list must be non-empty"));
    }

    let sweep = match raw.sweep {
        None => vec![SweepValue::None],
        Some(RawSweep { axis: SweepAxis::None, values }) => {
            if !values.is_empty() {
                return Err(invalid("sweep.values", "axis `none` takes no values"));
            }
            vec![SweepValue::None]
        }
        Some(RawSweep { axis, values }) => {
            if values.is_empty() {
                return Err(invalid("sweep.values", "must be non-empty"));
            }
            values
                .iter()
                .map(|&Bytes(v)| sweep_value(axis, v, &system))
                .collect::<Result<Vec<_>, _>>()?
        }
    };

    Ok(ExperimentSpec {
        system,
        policies: raw.policies,
        seeds,
        sweep,
        out_dir: raw.out_dir.unwrap_or_else(|| PathBuf::from("out")),
    })
}

fn sweep_value(axis: SweepAxis, v: f64, system: &SystemConfig) -> Result<SweepValue, ConfigError> {
    let whole = |v: f64| v >= 1.0 && v.fract() == 0.0 && v < 2f64.powi(53);
    match axis {
        SweepAxis::None => Ok(SweepValue::None),
        SweepAxis::TaskSize if v > 0.0 && v.is_finite() => Ok(SweepValue::TaskSize(v)),
        SweepAxis::TaskSize => Err(invalid("sweep.values", format!("task size {v} must be > 0"))),
        SweepAxis::NumUsers if whole(v) && v as usize >= system.num_edge_servers => {
            Ok(SweepValue::NumUsers(v as usize))
        }
        SweepAxis::NumUsers => Err(invalid(
            "sweep.values",
            format!("num_users {v} must be an integer >= num_edge_servers ({})", system.num_edge_servers),
        )),
        SweepAxis::Horizon if whole(v) => Ok(SweepValue::Horizon(v as u64)),
        SweepAxis::Horizon => Err(invalid("sweep.values", format!("horizon {v} must be a positive integer"))),
    }
}

fn validate_policy(p: &PolicySpec) -> Result<(), (&'static str, String)> {
    match *p {
        PolicySpec::EpsilonGreedy { epsilon, .. } if !(0.0..=1.0).contains(&epsilon) => {
            Err(("epsilon", format!("must lie in [0, 1], got {epsilon}")))
        }
        PolicySpec::Bmse { ul_fraction, .. } if !(ul_fraction > 0.0 && ul_fraction < 1.0) => {
            Err(("ul_fraction", format!("must lie in (0, 1), got {ul_fraction}")))
        }
        PolicySpec::MuUcb1 { max_pool: 0, .. }
        | PolicySpec::EpsilonGreedy { max_pool: 0, .. }
        | PolicySpec::Bmse { max_pool: 0, .. }
        | PolicySpec::BmseSl { max_pool: 0, .. } => Err(("max_pool", "must be >= 1".into())),
        _ => Ok(()),
    }
}
