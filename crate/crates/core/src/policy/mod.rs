//! Offloading policies: the per-slot baselines, user-level and system-level
//! successive elimination, the combined two-phase pipeline, and the
//! theoretical regret envelopes used for plot overlays.

mod bmse;
mod bounds;
mod sl;
mod split;
mod stats;
mod ucb;
mod ul;

use std::collections::HashSet;

pub use bmse::{bmse, BmseParams};
pub use bounds::{regret_bound_sl, regret_bound_ul};
pub use sl::{bmse_sl, BatchSchedule, SlParams};
pub use split::{equipartition_split, partition_shape, pool_size_closed_form, PartitionShape, DEFAULT_MAX_POOL};
pub use stats::{ArmStats, BanditState};
pub use ucb::{epsilon_greedy, lcb_index, multi_user_ucb1, IndexMode};
pub use ul::{bmse_ul, dislocation_init, dislocation_rounds, MethodGroups, PullRule, UlParams};

use crate::error::{Error, Result};
use crate::model::Action;

/// Rejects empty pools, duplicate ids, and pools longer than the horizon.
pub(crate) fn validate_pool(pool: &[Action], horizon: u64) -> Result<()> {
    if pool.is_empty() {
        return Err(Error::EmptyPool);
    }
    let mut seen = HashSet::with_capacity(pool.len());
    for a in pool {
        if !seen.insert(a.id) {
            return Err(Error::MalformedAction(format!("duplicate action id {}", a.id)));
        }
    }
    if (pool.len() as u64) > horizon {
        return Err(Error::InsufficientHorizon {
            horizon,
            needed: pool.len() as u64,
        });
    }
    Ok(())
}
