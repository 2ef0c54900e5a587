//! User-level successive elimination.
//!
//! Each user keeps a group of still-plausible methods. Every slot the users'
//! picks are combined into one joint action, per-user delays update the
//! per-(user, method) statistics, and a sweep drops any method whose mean
//! exceeds the user's empirical best by more than `sqrt(xi ln n_i / b_ie)`.

use serde::{Deserialize, Serialize};

use super::split::partition_shape;
use super::stats::{argmin_by_key, BanditState};
use crate::env::World;
use crate::error::{Error, Result};
use crate::metrics::{Elimination, EliminationScope, Phase, RunTrace, TraceRecorder};
use crate::model::{Action, ActionSpace};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PullRule {
    /// Each user pulls its least-pulled active method.
    #[default]
    RoundRobin,
    /// Each user pulls its empirically best active method.
    PaperVerbatim,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UlParams {
    /// Slot budget, including the dislocation rounds.
    pub budget: u64,
    pub xi: f64,
    pub pull_rule: PullRule,
    /// Stop after this many consecutive sweeps without an elimination.
    pub patience: Option<u64>,
}

/// Per-user active method groups (method indices into the action space).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MethodGroups {
    pub groups: Vec<Vec<usize>>,
    /// Each user's empirically best surviving method.
    pub preferred: Vec<usize>,
}

impl MethodGroups {
    /// Every method of every user; preference defaults to the first, with
    /// edge-first users spread over the servers in equipartition layout.
    pub fn full(space: &ActionSpace) -> Self {
        let groups: Vec<Vec<usize>> = (0..space.num_users())
            .map(|u| (0..space.methods(u).len()).collect())
            .collect();
        let preferred = balanced_preference(space, &groups);
        MethodGroups { groups, preferred }
    }

    /// Groups containing only edge methods, the setting of the pool-size count.
    pub fn edge_only(space: &ActionSpace) -> Self {
        let groups: Vec<Vec<usize>> = (0..space.num_users())
            .map(|u| {
                space
                    .methods(u)
                    .iter()
                    .enumerate()
                    .filter(|(_, m)| m.edge_server().is_some())
                    .map(|(i, _)| i)
                    .collect()
            })
            .collect();
        let preferred = balanced_preference(space, &groups);
        MethodGroups { groups, preferred }
    }

    pub fn total_size(&self) -> u64 {
        self.groups.iter().map(|g| g.len() as u64).sum()
    }

    pub fn all_singletons(&self) -> bool {
        self.groups.iter().all(|g| g.len() == 1)
    }

    pub(crate) fn validate(&self, space: &ActionSpace) -> Result<()> {
        if self.groups.len() != space.num_users() || self.preferred.len() != space.num_users() {
            return Err(Error::invalid("groups", "one group per user is required"));
        }
        for (user, group) in self.groups.iter().enumerate() {
            if group.is_empty() {
                return Err(Error::invalid("groups", format!("user {user} has an empty group")));
            }
            let n = space.methods(user).len();
            if group.iter().any(|&m| m >= n) {
                return Err(Error::invalid("groups", format!("user {user} has an unknown method")));
            }
        }
        Ok(())
    }
}

fn balanced_preference(space: &ActionSpace, groups: &[Vec<usize>]) -> Vec<usize> {
    let first_server = |u: usize| groups[u].first().and_then(|&m| space.methods(u)[m].edge_server());
    let edge_users = (0..groups.len()).filter(|&u| first_server(u).is_some()).count();
    let Ok(shape) = partition_shape(edge_users, space.num_servers()) else {
        return groups.iter().map(|g| g.first().copied().unwrap_or(0)).collect();
    };
    let (mut server, mut filled) = (0, 0);
    (0..groups.len())
        .map(|u| {
            let first = groups[u].first().copied().unwrap_or(0);
            if first_server(u).is_none() {
                return first;
            }
            while filled == shape.capacity(server) {
                server += 1;
                filled = 0;
            }
            filled += 1;
            groups[u]
                .iter()
                .copied()
                .find(|&m| space.methods(u)[m].edge_server() == Some(server))
                .unwrap_or(first)
        })
        .collect()
}

/// Offset assignment rounds over group positions: round `k` gives user `i`
/// position `(i + k) mod |group_i|`, for `k` in `0..max |group_i|`.
pub fn dislocation_rounds(group_sizes: &[usize]) -> Vec<Vec<usize>> {
    let rounds = group_sizes.iter().copied().max().unwrap_or(0);
    (0..rounds)
        .map(|k| {
            group_sizes
                .iter()
                .enumerate()
                .map(|(i, &n)| (i + k) % n.max(1))
                .collect()
        })
        .collect()
}

/// Warm-up actions covering every (user, method) pair of `groups` at least once.
pub fn dislocation_init(space: &ActionSpace, groups: &MethodGroups) -> Result<Vec<Action>> {
    groups.validate(space)?;
    let sizes: Vec<usize> = groups.groups.iter().map(Vec::len).collect();
    dislocation_rounds(&sizes)
        .into_iter()
        .map(|round| {
            let indices: Vec<usize> = round
                .iter()
                .enumerate()
                .map(|(user, &pos)| groups.groups[user][pos])
                .collect();
            space.action(&indices)
        })
        .collect()
}

/// Runs user-level elimination from full method groups.
pub fn bmse_ul<W: World>(world: &mut W, params: &UlParams) -> Result<(MethodGroups, RunTrace)> {
    let start = MethodGroups::full(world.space());
    let mut rec = TraceRecorder::new();
    let groups = run_ul(world, start, params, &mut rec)?;
    let survivor = world.space().encode(&groups.preferred)?;
    Ok((groups, rec.finish(Some(survivor))))
}

pub(crate) fn run_ul<W: World>(
    world: &mut W,
    mut groups: MethodGroups,
    params: &UlParams,
    rec: &mut TraceRecorder,
) -> Result<MethodGroups> {
    let space = world.space().clone();
    groups.validate(&space)?;
    let needed = groups.groups.iter().map(Vec::len).max().unwrap_or(0) as u64;
    if params.budget < needed {
        return Err(Error::InsufficientHorizon {
            horizon: params.budget,
            needed,
        });
    }
    let users = space.num_users();
    let mut state = BanditState::with_methods((0..users).map(|u| space.methods(u).len()));
    let observe = |state: &mut BanditState, indices: &[usize], delays: &[f64]| {
        for (user, (&m, &d)) in indices.iter().zip(delays).enumerate() {
            state.methods[user][m].observe(d);
        }
    };

    let used_at_start = rec.slots_used();
    for action in dislocation_init(&space, &groups)? {
        let indices = space.indices(&action)?;
        let out = rec.pull(world, Phase::UserLevel, &action, groups.total_size(), false)?;
        observe(&mut state, &indices, &out.per_user_delay);
    }

    let mut quiet = 0u64;
    while rec.slots_used() - used_at_start < params.budget && !groups.all_singletons() {
        rec.decide();
        let indices: Vec<usize> = groups
            .groups
            .iter()
            .enumerate()
            .map(|(user, group)| {
                let stats = &state.methods[user];
                let k = match params.pull_rule {
                    PullRule::RoundRobin => argmin_by_key(group, |&m| Some(stats[m].count() as f64)),
                    PullRule::PaperVerbatim => argmin_by_key(group, |&m| stats[m].mean()),
                };
                group[k.unwrap_or(0)]
            })
            .collect();
        let action = space.action(&indices)?;
        let out = rec.pull(world, Phase::UserLevel, &action, groups.total_size(), false)?;
        observe(&mut state, &indices, &out.per_user_delay);
        let t = rec.slots_used();

        let mut removed_any = false;
        for user in 0..users {
            let group = &mut groups.groups[user];
            if group.len() == 1 {
                continue;
            }
            let stats = &state.methods[user];
            let n_i = state.user_pulls(user);
            let best = group[argmin_by_key(group, |&m| stats[m].mean()).expect("group observed")];
            let best_mean = stats[best].mean().expect("observed");
            let mut kept = Vec::with_capacity(group.len());
            for &m in group.iter() {
                let mean = stats[m].mean().expect("observed");
                let radius = (params.xi * (n_i as f64).ln() / stats[m].count() as f64).sqrt();
                if m != best && mean > best_mean + radius {
                    removed_any = true;
                    rec.eliminated(Elimination {
                        t,
                        scope: EliminationScope::User {
                            user,
                            total_pulls: n_i,
                            removed_pulls: stats[m].count(),
                        },
                        removed: m as u64,
                        removed_mean: mean,
                        best: best as u64,
                        best_mean,
                        radius,
                    });
                } else {
                    kept.push(m);
                }
            }
            *group = kept;
        }
        quiet = if removed_any { 0 } else { quiet + 1 };
        if params.patience.is_some_and(|p| quiet >= p) {
            break;
        }
    }

    groups.preferred = groups
        .groups
        .iter()
        .enumerate()
        .map(|(user, group)| {
            let stats = &state.methods[user];
            group[argmin_by_key(group, |&m| stats[m].mean()).unwrap_or(0)]
        })
        .collect();
    Ok(groups)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::{Environment, FixedWorld};
    use crate::model::SystemConfig;

    #[test]
    fn dislocation_four_users_three_methods() {
        let rounds = dislocation_rounds(&[3, 3, 3, 3]);
        let one_based: Vec<Vec<usize>> = rounds
            .iter()
            .map(|r| r.iter().map(|&x| x + 1).collect())
            .collect();
        assert_eq!(one_based, vec![vec![1, 2, 3, 1], vec![2, 3, 1, 2], vec![3, 1, 2, 3]]);
        assert_eq!(dislocation_rounds(&[1]), vec![vec![0]]);
    }

    #[test]
    fn dislocation_covers_every_pair() {
        // exhaustive over all group-size vectors with I <= 6 users and sizes <= 4
        for users in 1..=6usize {
            let mut sizes = vec![1usize; users];
            loop {
                let rounds = dislocation_rounds(&sizes);
                for (u, &n) in sizes.iter().enumerate() {
                    for pos in 0..n {
                        assert!(rounds.iter().any(|r| r[u] == pos), "{sizes:?} misses ({u},{pos})");
                    }
                }
                let mut carry = 0;
                while carry < users && sizes[carry] == 4 {
                    sizes[carry] = 1;
                    carry += 1;
                }
                if carry == users {
                    break;
                }
                sizes[carry] += 1;
            }
        }
    }

    #[test]
    fn single_user_finds_true_best() {
        // gaps of several seconds against zero noise
        let mut world = FixedWorld::new(vec![vec![12.0, 7.0, 30.0]]);
        let params = UlParams {
            budget: 100,
            xi: 1.0,
            pull_rule: PullRule::RoundRobin,
            patience: None,
        };
        let (groups, trace) = bmse_ul(&mut world, &params).unwrap();
        assert_eq!(groups.groups, vec![vec![1]]);
        assert_eq!(groups.preferred, vec![1]);
        assert!(trace.len() < 100, "stops once every group is a singleton");
    }

    #[test]
    fn single_user_environment_matches_oracle_ranking() {
        for seed in 0..10 {
            let cfg = SystemConfig {
                num_users: 1,
                num_edge_servers: 1,
                edge_capacity_bps: (4e8, 4e8),
                seed,
                ..SystemConfig::default()
            };
            let mut env = Environment::new(cfg).unwrap();
            let params = UlParams {
                budget: 200,
                xi: 1.0,
                pull_rule: PullRule::RoundRobin,
                patience: None,
            };
            let best = env.global_oracle().unwrap().best_action;
            let (groups, _) = bmse_ul(&mut env, &params).unwrap();
            let best_idx = env.space().indices(&best).unwrap();
            assert_eq!(groups.groups, vec![best_idx]);
        }
    }

    #[test]
    fn identical_methods_never_eliminated() {
        let mut world = FixedWorld::new(vec![vec![5.0, 5.0, 5.0], vec![2.0, 2.0, 2.0]]);
        let params = UlParams {
            budget: 50,
            xi: 1.0,
            pull_rule: PullRule::RoundRobin,
            patience: None,
        };
        let (groups, trace) = bmse_ul(&mut world, &params).unwrap();
        assert_eq!(groups.total_size(), 6);
        assert_eq!(trace.len(), 50);
        assert!(trace.eliminations.is_empty());

        let patient = UlParams {
            patience: Some(5),
            ..params
        };
        let (_, trace) = bmse_ul(&mut world, &patient).unwrap();
        assert_eq!(trace.len(), 3 + 5);
    }

    #[test]
    fn budget_must_cover_warm_up() {
        let mut world = FixedWorld::new(vec![vec![1.0, 2.0, 3.0]]);
        let params = UlParams {
            budget: 2,
            xi: 1.0,
            pull_rule: PullRule::RoundRobin,
            patience: None,
        };
        assert!(matches!(
            bmse_ul(&mut world, &params),
            Err(Error::InsufficientHorizon { needed: 3, .. })
        ));
    }

    #[test]
    fn paper_verbatim_pulls_leaders_only() {
        let mut world = FixedWorld::new(vec![vec![5.0, 3.0, 4.0]]);
        let params = UlParams {
            budget: 10,
            xi: 100.0,
            pull_rule: PullRule::PaperVerbatim,
            patience: None,
        };
        let (_, trace) = bmse_ul(&mut world, &params).unwrap();
        assert!(trace.records[3..].iter().all(|r| r.action_id.0 == 1));
    }
}
