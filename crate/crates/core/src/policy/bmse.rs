//! The two-phase pipeline: user-level elimination on a fraction of the
//! horizon, then system-level batched elimination over the equipartition pool
//! built from the surviving method groups.

use super::sl::{run_sl, SlParams};
use super::split::{equipartition_split, DEFAULT_MAX_POOL};
use super::ul::{run_ul, MethodGroups, PullRule, UlParams};
use crate::env::World;
use crate::error::{Error, Result};
use crate::metrics::{RunTrace, TraceRecorder};
use crate::model::SystemConfig;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BmseParams {
    pub horizon: u64,
    /// Fraction of the horizon given to the user-level phase.
    pub ul_fraction: f64,
    pub xi: f64,
    pub pull_rule: PullRule,
    pub patience: Option<u64>,
    pub max_pool: u64,
    pub dropped_slots_free: bool,
}

impl BmseParams {
    pub fn from_config(cfg: &SystemConfig) -> Self {
        BmseParams {
            horizon: cfg.horizon,
            ul_fraction: 0.2,
            xi: cfg.exploration,
            pull_rule: PullRule::default(),
            patience: None,
            max_pool: DEFAULT_MAX_POOL,
            dropped_slots_free: false,
        }
    }
}

/// Runs the full pipeline. Slots the user-level phase leaves unused go to
/// the system-level phase.
pub fn bmse<W: World>(world: &mut W, params: &BmseParams) -> Result<RunTrace> {
    if !(params.ul_fraction > 0.0 && params.ul_fraction < 1.0) {
        return Err(Error::invalid(
            "ul_fraction",
            format!("must lie in (0, 1), got {}", params.ul_fraction),
        ));
    }
    let budget = (params.ul_fraction * params.horizon as f64).floor() as u64;
    let mut rec = TraceRecorder::new();
    let start = MethodGroups::full(world.space());
    let ul = UlParams {
        budget,
        xi: params.xi,
        pull_rule: params.pull_rule,
        patience: params.patience,
    };
    let groups = run_ul(world, start, &ul, &mut rec)?;
    let pool = equipartition_split(&groups, world.space(), params.max_pool)?;
    log::debug!("user-level phase used {} slots, pool of {}", rec.slots_used(), pool.len());

    let sl = SlParams {
        horizon: params.horizon - rec.slots_used(),
        xi: params.xi,
        dropped_slots_free: params.dropped_slots_free,
    };
    let survivor = run_sl(world, &pool, &sl, &mut rec)?;
    Ok(rec.finish(Some(survivor)))
}
