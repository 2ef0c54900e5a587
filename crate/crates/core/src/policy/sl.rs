//! System-level batched successive elimination over a fixed action pool.
//!
//! The horizon is cut into batches of length `L = |pool|`. The first batch
//! pulls every action once. Each following batch except the last pulls every
//! surviving action `floor(L / |A''|)` times, idles the leftover slots on the
//! current empirical best, then runs one elimination sweep with radius
//! `sqrt(xi ln(b |A''|) / n*)`. The last batch plays the empirical best. Once a
//! single action survives, it is played for the rest of the horizon without
//! further decisions.

use super::stats::{argmin_by_key, ArmStats};
use super::validate_pool;
use crate::env::World;
use crate::error::Result;
use crate::metrics::{BatchSummary, Elimination, EliminationScope, Phase, RunTrace, TraceRecorder};
use crate::model::{Action, ActionId};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlParams {
    pub horizon: u64,
    pub xi: f64,
    pub dropped_slots_free: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BatchSchedule {
    pub batch_length: u64,
    pub num_batches: u64,
    pub current_batch: u64,
    pub pulls_per_action: u64,
    pub dropped_slots: u64,
}

impl BatchSchedule {
    pub fn new(pool_size: usize, horizon: u64) -> Self {
        let batch_length = pool_size as u64;
        BatchSchedule {
            batch_length,
            num_batches: horizon.div_ceil(batch_length),
            current_batch: 1,
            pulls_per_action: 1,
            dropped_slots: 0,
        }
    }

    /// Pulls per surviving action in a batch, and the idle remainder.
    pub fn quota(&self, survivors: usize) -> (u64, u64) {
        let q = self.batch_length / survivors as u64;
        (q, self.batch_length - q * survivors as u64)
    }
}

/// Runs batched elimination over `pool` for `params.horizon` slots.
pub fn bmse_sl<W: World>(world: &mut W, pool: &[Action], params: &SlParams) -> Result<RunTrace> {
    let mut rec = TraceRecorder::new();
    let survivor = run_sl(world, pool, params, &mut rec)?;
    Ok(rec.finish(Some(survivor)))
}

pub(crate) fn run_sl<W: World>(
    world: &mut W,
    pool: &[Action],
    params: &SlParams,
    rec: &mut TraceRecorder,
) -> Result<ActionId> {
    validate_pool(pool, params.horizon)?;
    rec.set_dropped_slots_free(params.dropped_slots_free);
    let end = rec.slots_used() + params.horizon;
    let mut sched = BatchSchedule::new(pool.len(), params.horizon);
    let mut stats = vec![ArmStats::default(); pool.len()];
    // pool positions, kept in id order for tie-breaking
    let mut active: Vec<usize> = (0..pool.len()).collect();
    active.sort_by_key(|&j| pool[j].id);
    let best_of = |active: &[usize], stats: &[ArmStats]| -> usize {
        active[argmin_by_key(active, |&j| stats[j].mean()).unwrap_or(0)]
    };

    for (j, action) in pool.iter().enumerate() {
        let out = rec.pull(world, Phase::SystemLevel, action, pool.len() as u64, false)?;
        stats[j].observe(out.total_delay);
    }
    rec.batch(BatchSummary {
        index: 1,
        allotted: sched.batch_length,
        pool_before: pool.len(),
        pulls_per_action: 1,
        pulled: sched.batch_length,
        dropped: 0,
    });

    while rec.slots_used() < end {
        sched.current_batch += 1;
        let remaining = end - rec.slots_used();
        let size = active.len();

        if size == 1 || sched.current_batch >= sched.num_batches {
            if size > 1 {
                rec.decide();
            }
            let best = best_of(&active, &stats);
            for _ in 0..remaining {
                let out = rec.pull(world, Phase::SystemLevel, &pool[best], size as u64, false)?;
                stats[best].observe(out.total_delay);
            }
            rec.batch(BatchSummary {
                index: sched.current_batch,
                allotted: remaining,
                pool_before: size,
                pulls_per_action: 0,
                pulled: remaining,
                dropped: 0,
            });
            break;
        }

        let (q, idle) = sched.quota(size);
        sched.pulls_per_action = q;
        for _ in 0..q {
            for &j in &active {
                let out = rec.pull(world, Phase::SystemLevel, &pool[j], size as u64, false)?;
                stats[j].observe(out.total_delay);
            }
        }
        for _ in 0..idle {
            let best = best_of(&active, &stats);
            rec.pull(world, Phase::SystemLevel, &pool[best], size as u64, true)?;
        }
        sched.dropped_slots += idle;

        rec.decide();
        let t = rec.slots_used();
        let best = best_of(&active, &stats);
        let best_mean = stats[best].mean().expect("observed");
        let best_pulls = stats[best].count();
        let radius =
            (params.xi * ((sched.current_batch * size as u64) as f64).ln() / best_pulls as f64).sqrt();
        active.retain(|&j| {
            let mean = stats[j].mean().expect("observed");
            let remove = j != best && mean > best_mean + radius;
            if remove {
                rec.eliminated(Elimination {
                    t,
                    scope: EliminationScope::System {
                        batch: sched.current_batch,
                        pool_before: size,
                        best_pulls,
                    },
                    removed: pool[j].id.0,
                    removed_mean: mean,
                    best: pool[best].id.0,
                    best_mean,
                    radius,
                });
            }
            !remove
        });
        rec.batch(BatchSummary {
            index: sched.current_batch,
            allotted: sched.batch_length,
            pool_before: size,
            pulls_per_action: q,
            pulled: q * size as u64,
            dropped: idle,
        });
    }

    Ok(pool[best_of(&active, &stats)].id)
}
