//! Single-decision-per-slot baselines over a fixed action pool.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::stats::{argmin_by_key, ArmStats};
use super::validate_pool;
use crate::env::World;
use crate::error::{Error, Result};
use crate::metrics::{Phase, RunTrace, TraceRecorder};
use crate::model::Action;

/// Sign of the confidence radius in the UCB index.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IndexMode {
    /// `mean - radius`: optimism for cost minimization.
    #[default]
    Optimistic,
    /// `mean + radius`, the literal published index.
    PaperVerbatim,
}

/// Confidence index `mean -/+ sqrt(xi ln t / count)`.
pub fn lcb_index(mean: f64, count: u64, t: u64, xi: f64, mode: IndexMode) -> Result<f64> {
    if count == 0 {
        return Err(Error::Unobserved);
    }
    if t == 0 {
        return Err(Error::invalid("t", "must be >= 1"));
    }
    let radius = (xi * (t as f64).ln() / count as f64).sqrt();
    Ok(match mode {
        IndexMode::Optimistic => mean - radius,
        IndexMode::PaperVerbatim => mean + radius,
    })
}

fn empirical_best(pool: &[Action], stats: &[ArmStats]) -> Option<usize> {
    let order: Vec<usize> = {
        let mut v: Vec<usize> = (0..pool.len()).collect();
        v.sort_by_key(|&i| pool[i].id);
        v
    };
    argmin_by_key(&order, |&i| stats[i].mean()).map(|k| order[k])
}

/// Pulls every action once, then the argmin of the confidence index each slot.
pub fn multi_user_ucb1<W: World>(
    world: &mut W,
    pool: &[Action],
    horizon: u64,
    xi: f64,
    mode: IndexMode,
) -> Result<RunTrace> {
    validate_pool(pool, horizon)?;
    let mut rec = TraceRecorder::new();
    let mut stats = vec![ArmStats::default(); pool.len()];
    let size = pool.len() as u64;
    // lowest id first on ties
    let mut order: Vec<usize> = (0..pool.len()).collect();
    order.sort_by_key(|&i| pool[i].id);

    for (i, action) in pool.iter().enumerate() {
        let out = rec.pull(world, Phase::Ucb, action, size, false)?;
        stats[i].observe(out.total_delay);
    }
    while rec.slots_used() < horizon {
        let t = rec.next_t();
        rec.decide();
        let k = argmin_by_key(&order, |&i| {
            lcb_index(stats[i].mean().unwrap_or(f64::INFINITY), stats[i].count(), t, xi, mode).ok()
        })
        .expect("every action observed during initialization");
        let chosen = order[k];
        let out = rec.pull(world, Phase::Ucb, &pool[chosen], size, false)?;
        stats[chosen].observe(out.total_delay);
    }
    let survivor = empirical_best(pool, &stats).map(|i| pool[i].id);
    Ok(rec.finish(survivor))
}

/// Pulls every action once, then explores uniformly with probability
/// `epsilon` and otherwise exploits the empirical best.
pub fn epsilon_greedy<W: World>(
    world: &mut W,
    pool: &[Action],
    horizon: u64,
    epsilon: f64,
    seed: u64,
) -> Result<RunTrace> {
    if !(0.0..=1.0).contains(&epsilon) {
        return Err(Error::invalid("epsilon", format!("must lie in [0, 1], got {epsilon}")));
    }
    validate_pool(pool, horizon)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(1);
    let mut rec = TraceRecorder::new();
    let mut stats = vec![ArmStats::default(); pool.len()];
    let size = pool.len() as u64;

    for (i, action) in pool.iter().enumerate() {
        let out = rec.pull(world, Phase::EpsilonGreedy, action, size, false)?;
        stats[i].observe(out.total_delay);
    }
    while rec.slots_used() < horizon {
        rec.decide();
        let chosen = if rng.random::<f64>() < epsilon {
            rng.random_range(0..pool.len())
        } else {
            empirical_best(pool, &stats).expect("pool is non-empty")
        };
        let out = rec.pull(world, Phase::EpsilonGreedy, &pool[chosen], size, false)?;
        stats[chosen].observe(out.total_delay);
    }
    let survivor = empirical_best(pool, &stats).map(|i| pool[i].id);
    Ok(rec.finish(survivor))
}
