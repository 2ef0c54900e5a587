//! Helpers shared by the integration suites: a noisy table world and an
//! independent replay of every elimination recorded in a trace.

#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use mec_offload::metrics::{EliminationScope, Phase};
use mec_offload::{Action, ActionSpace, Method, Result, RoundOutcome, RunTrace, World};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Per-(user, method) delays with uniform noise of a given half-width.
pub struct NoisyTable {
    space: ActionSpace,
    means: Vec<Vec<f64>>,
    noise: f64,
    shift: f64,
    rng: ChaCha8Rng,
}

impl NoisyTable {
    pub fn new(means: Vec<Vec<f64>>, noise: f64, seed: u64) -> Self {
        let servers = means.iter().map(Vec::len).max().unwrap_or(1);
        let methods = means
            .iter()
            .map(|row| (0..row.len()).map(Method::Edge).collect())
            .collect();
        NoisyTable {
            space: ActionSpace::new(methods, servers).unwrap(),
            means,
            noise,
            shift: 0.0,
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn random(users: usize, methods: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9);
        let means = (0..users)
            .map(|_| (0..methods).map(|_| rng.random_range(1.0..5.0)).collect())
            .collect();
        NoisyTable::new(means, rng.random_range(0.1..2.0), seed)
    }

    pub fn shifted(mut self, shift: f64) -> Self {
        self.shift = shift;
        self
    }

    pub fn pool(&self) -> Vec<Action> {
        self.space.enumerate(u64::MAX).unwrap()
    }
}

impl World for NoisyTable {
    fn space(&self) -> &ActionSpace {
        &self.space
    }

    fn sample_round(&mut self, action: &Action) -> Result<RoundOutcome> {
        let idx = self.space.indices(action)?;
        let per_user_delay: Vec<f64> = idx
            .iter()
            .enumerate()
            .map(|(u, &m)| self.means[u][m] + self.shift + self.noise * (2.0 * self.rng.random::<f64>() - 1.0))
            .collect();
        Ok(RoundOutcome {
            total_delay: per_user_delay.iter().sum(),
            per_user_delay,
            t: 0,
        })
    }

    fn expected_delay(&self, action: &Action) -> Result<f64> {
        let idx = self.space.indices(action)?;
        Ok(idx.iter().enumerate().map(|(u, &m)| self.means[u][m] + self.shift).sum())
    }
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-9 * a.abs().max(b.abs()).max(1.0)
}

#[derive(Default, Clone, Copy)]
struct Acc {
    sum: f64,
    n: u64,
}

impl Acc {
    fn mean(&self) -> f64 {
        self.sum / self.n as f64
    }
}

/// Replays every elimination in `trace` from the raw slot records and checks
/// the removal rule, the radius, and that the empirical best survives.
/// User-level groups are assumed to start full. Returns the number checked.
pub fn check_eliminations(space: &ActionSpace, trace: &RunTrace, xi: f64) -> std::result::Result<usize, String> {
    let mut groups: Vec<BTreeSet<u64>> = (0..space.num_users())
        .map(|u| (0..space.methods(u).len() as u64).collect())
        .collect();
    let sl_ids: BTreeSet<u64> = trace
        .records
        .iter()
        .filter(|r| r.phase == Phase::SystemLevel)
        .map(|r| r.action_id.0)
        .collect();
    let mut pool = sl_ids;
    let mut sweep: Option<(u64, usize)> = None;

    for (k, e) in trace.eliminations.iter().enumerate() {
        let seen = &trace.records[..e.t as usize];
        let tag = format!("elimination {k} at t={}", e.t);
        match e.scope {
            EliminationScope::User { user, total_pulls, removed_pulls } => {
                let mut acc: BTreeMap<u64, Acc> = BTreeMap::new();
                for r in seen.iter().filter(|r| r.phase == Phase::UserLevel) {
                    let m = space.decode(r.action_id).unwrap()[user] as u64;
                    let a = acc.entry(m).or_default();
                    a.sum += r.per_user_delay[user];
                    a.n += 1;
                }
                let group = &groups[user];
                if !group.contains(&e.removed) || !group.contains(&e.best) {
                    return Err(format!("{tag}: removed or best not active"));
                }
                if e.removed == e.best {
                    return Err(format!("{tag}: removed the empirical best"));
                }
                let best = group
                    .iter()
                    .copied()
                    .min_by(|a, b| acc[a].mean().total_cmp(&acc[b].mean()).then(a.cmp(b)))
                    .unwrap();
                if best != e.best {
                    return Err(format!("{tag}: recorded best {} but replay gives {best}", e.best));
                }
                let n_i: u64 = acc.values().map(|a| a.n).sum();
                let removed = acc[&e.removed];
                let radius = (xi * (n_i as f64).ln() / removed.n as f64).sqrt();
                if n_i != total_pulls || removed.n != removed_pulls {
                    return Err(format!("{tag}: pull counts differ from replay"));
                }
                if !close(removed.mean(), e.removed_mean) || !close(acc[&best].mean(), e.best_mean) || !close(radius, e.radius) {
                    return Err(format!("{tag}: statistics differ from replay"));
                }
                if removed.mean() <= acc[&best].mean() + radius {
                    return Err(format!("{tag}: removal rule violated"));
                }
                groups[user].remove(&e.removed);
            }
            EliminationScope::System { batch, pool_before, best_pulls } => {
                let mut acc: BTreeMap<u64, Acc> = BTreeMap::new();
                for r in seen.iter().filter(|r| r.phase == Phase::SystemLevel && !r.dropped) {
                    let a = acc.entry(r.action_id.0).or_default();
                    a.sum += r.delay_s;
                    a.n += 1;
                }
                if sweep.is_none_or(|(b, _)| b != batch) {
                    sweep = Some((batch, pool.len()));
                }
                if sweep.map(|(_, n)| n) != Some(pool_before) {
                    return Err(format!("{tag}: pool_before {pool_before} differs from replayed pool {}", pool.len()));
                }
                if !pool.contains(&e.removed) || e.removed == e.best {
                    return Err(format!("{tag}: removed an inactive action or the best"));
                }
                let best = pool
                    .iter()
                    .copied()
                    .min_by(|a, b| acc[a].mean().total_cmp(&acc[b].mean()).then(a.cmp(b)))
                    .unwrap();
                if best != e.best || acc[&best].n != best_pulls {
                    return Err(format!("{tag}: best or its pull count differs from replay"));
                }
                let radius = (xi * ((batch * pool_before as u64) as f64).ln() / best_pulls as f64).sqrt();
                let removed = acc[&e.removed];
                if !close(removed.mean(), e.removed_mean) || !close(radius, e.radius) {
                    return Err(format!("{tag}: statistics differ from replay"));
                }
                if removed.mean() <= acc[&best].mean() + radius {
                    return Err(format!("{tag}: removal rule violated"));
                }
                pool.remove(&e.removed);
            }
        }
    }
    Ok(trace.eliminations.len())
}

/// Pools never grow within a phase and decision counts never decrease.
pub fn check_monotone(trace: &RunTrace) -> std::result::Result<(), String> {
    for w in trace.records.windows(2) {
        if w[1].decisions_cum < w[0].decisions_cum {
            return Err(format!("decision count decreased at t={}", w[1].t));
        }
        if w[0].phase == w[1].phase && w[1].pool_size > w[0].pool_size {
            return Err(format!("pool grew at t={}", w[1].t));
        }
    }
    Ok(())
}
