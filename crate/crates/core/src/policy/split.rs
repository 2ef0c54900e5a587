//! Equipartition split: the system-level action pool in which edge-assigned
//! users are spread over the servers in near-equal groups.
//!
//! For `K` edge-assigned users on `E` servers the first `u` servers take
//! `floor(K/E)` users and the last `v` take `ceil(K/E)`, with
//! `v = K - E floor(K/E)` and `u = E - v`. Fixing which servers take the
//! larger groups makes the pool size exactly `K! / (floor!^u ceil!^v)`.

use num_bigint::BigUint;

use super::ul::MethodGroups;
use crate::error::{Error, Result};
use crate::model::{Action, ActionSpace};

pub const DEFAULT_MAX_POOL: u64 = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PartitionShape {
    pub base_size: usize,
    pub big_size: usize,
    pub num_base_groups: usize,
    pub num_big_groups: usize,
}

impl PartitionShape {
    /// Group size assigned to `server`.
    pub fn capacity(&self, server: usize) -> usize {
        if server < self.num_base_groups {
            self.base_size
        } else {
            self.big_size
        }
    }
}

pub fn partition_shape(users: usize, servers: usize) -> Result<PartitionShape> {
    if servers == 0 {
        return Err(Error::invalid("servers", "must be >= 1"));
    }
    let base = users / servers;
    let big = users.div_ceil(servers);
    let num_big = users - servers * base;
    Ok(PartitionShape {
        base_size: base,
        big_size: big,
        num_base_groups: servers - num_big,
        num_big_groups: num_big,
    })
}

fn factorial(n: usize) -> BigUint {
    (1..=n).fold(BigUint::from(1u32), |acc, k| acc * BigUint::from(k))
}

/// Size of the equipartition pool when every user may use every edge server.
pub fn pool_size_closed_form(users: usize, servers: usize) -> Result<BigUint> {
    if servers == 0 || users < servers {
        return Err(Error::invalid(
            "users",
            format!("need users >= servers >= 1, got {users} users on {servers} servers"),
        ));
    }
    let shape = partition_shape(users, servers)?;
    let denom = factorial(shape.base_size).pow(shape.num_base_groups as u32)
        * factorial(shape.big_size).pow(shape.num_big_groups as u32);
    Ok(factorial(users) / denom)
}

/// Enumerates the equipartition pool over `groups`.
///
/// Users are assigned in ascending group size (singletons pinned first) by
/// backtracking. Local and cloud choices are unconstrained; edge choices must
/// leave every server holding exactly its [`PartitionShape`] capacity for the
/// number of edge-assigned users. The action made of every user's preferred
/// method is always present, appended last if the constraint excluded it.
pub fn equipartition_split(groups: &MethodGroups, space: &ActionSpace, max_pool: u64) -> Result<Vec<Action>> {
    groups.validate(space)?;
    let users = space.num_users();
    let servers = space.num_servers();

    let mut order: Vec<usize> = (0..users).collect();
    order.sort_by_key(|&u| (groups.groups[u].len(), u));
    // server (or None) for every candidate, in visiting order
    let options: Vec<Vec<(usize, Option<usize>)>> = order
        .iter()
        .map(|&u| {
            groups.groups[u]
                .iter()
                .map(|&m| (m, space.methods(u)[m].edge_server()))
                .collect()
        })
        .collect();
    let edge_capable = options.iter().filter(|o| o.iter().any(|(_, s)| s.is_some())).count();
    let load_cap = edge_capable.div_ceil(servers.max(1));

    let mut search = Search {
        order: &order,
        options: &options,
        servers,
        load_cap,
        max_pool,
        load: vec![0; servers],
        choice: vec![0; users],
        found: Vec::new(),
    };
    search.descend(0)?;

    let mut pool = search
        .found
        .iter()
        .map(|indices| space.action(indices))
        .collect::<Result<Vec<Action>>>()?;
    let preferred = space.action(&groups.preferred)?;
    if !pool.iter().any(|a| a.id == preferred.id) {
        if pool.len() as u64 >= max_pool {
            return Err(Error::PoolTooLarge {
                reached: pool.len() as u64 + 1,
                cap: max_pool,
            });
        }
        pool.push(preferred);
    }
    Ok(pool)
}

struct Search<'a> {
    order: &'a [usize],
    options: &'a [Vec<(usize, Option<usize>)>],
    servers: usize,
    load_cap: usize,
    max_pool: u64,
    load: Vec<usize>,
    choice: Vec<usize>,
    found: Vec<Vec<usize>>,
}

impl Search<'_> {
    fn descend(&mut self, depth: usize) -> Result<()> {
        if depth == self.order.len() {
            let edge_users: usize = self.load.iter().sum();
            let shape = partition_shape(edge_users, self.servers)?;
            if self.load.iter().enumerate().all(|(e, &n)| n == shape.capacity(e)) {
                if self.found.len() as u64 >= self.max_pool {
                    return Err(Error::PoolTooLarge {
                        reached: self.found.len() as u64 + 1,
                        cap: self.max_pool,
                    });
                }
                self.found.push(self.choice.clone());
            }
            return Ok(());
        }
        let user = self.order[depth];
        for &(method, server) in &self.options[depth] {
            if let Some(e) = server {
                if self.load[e] == self.load_cap {
                    continue;
                }
                self.load[e] += 1;
            }
            self.choice[user] = method;
            let r = self.descend(depth + 1);
            if let Some(e) = server {
                self.load[e] -= 1;
            }
            r?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Method;

    fn edge_space(users: usize, servers: usize) -> ActionSpace {
        ActionSpace::new(vec![(0..servers).map(Method::Edge).collect(); users], servers).unwrap()
    }

    #[test]
    fn shapes() {
        let s = partition_shape(9, 3).unwrap();
        assert_eq!((s.base_size, s.big_size), (3, 3));
        assert_eq!(s.num_base_groups + s.num_big_groups, 3);
        let s = partition_shape(5, 2).unwrap();
        assert_eq!(s, PartitionShape { base_size: 2, big_size: 3, num_base_groups: 1, num_big_groups: 1 });
        let s = partition_shape(7, 1).unwrap();
        assert_eq!((s.base_size, s.num_base_groups, s.num_big_groups), (7, 1, 0));
        assert!(partition_shape(3, 0).is_err());
    }

    #[test]
    fn shape_invariants_hold() {
        for servers in 1..=6 {
            for users in 0..=40 {
                let s = partition_shape(users, servers).unwrap();
                assert_eq!(s.num_base_groups * s.base_size + s.num_big_groups * s.big_size, users);
                assert_eq!(s.num_base_groups + s.num_big_groups, servers);
                if users % servers != 0 {
                    assert_eq!(s.num_base_groups, servers * s.big_size - users);
                }
                assert_eq!(s.num_big_groups, users - servers * s.base_size);
            }
        }
    }

    #[test]
    fn closed_form_values() {
        assert_eq!(pool_size_closed_form(9, 3).unwrap(), BigUint::from(1680u32));
        assert_eq!(pool_size_closed_form(4, 2).unwrap(), BigUint::from(6u32));
        assert_eq!(pool_size_closed_form(5, 2).unwrap(), BigUint::from(10u32));
        assert_eq!(pool_size_closed_form(6, 2).unwrap(), BigUint::from(20u32));
        assert_eq!(pool_size_closed_form(8, 1).unwrap(), BigUint::from(1u32));
        assert!(pool_size_closed_form(1, 2).is_err());
        // large inputs stay exact
        let big = pool_size_closed_form(60, 3).unwrap();
        assert_eq!(big, factorial(60) / factorial(20).pow(3));
    }

    #[test]
    fn four_users_two_servers_gives_six() {
        let space = edge_space(4, 2);
        let pool = equipartition_split(&MethodGroups::full(&space), &space, 4096).unwrap();
        assert_eq!(pool.len(), 6);
        for a in &pool {
            let on_first = a.assignment.iter().filter(|&&m| m == Method::Edge(0)).count();
            assert_eq!(on_first, 2);
        }
    }

    #[test]
    fn singleton_groups_give_one_action() {
        let space = edge_space(5, 2);
        let groups = MethodGroups {
            groups: vec![vec![0], vec![1], vec![0], vec![0], vec![0]],
            preferred: vec![0, 1, 0, 0, 0],
        };
        let pool = equipartition_split(&groups, &space, 4096).unwrap();
        assert_eq!(pool.len(), 1);
        assert_eq!(space.indices(&pool[0]).unwrap(), vec![0, 1, 0, 0, 0]);
    }

    #[test]
    fn local_and_cloud_are_unconstrained() {
        let space = ActionSpace::standard(2, true, &[0, 1]).unwrap();
        // user 0 chooses among Local, E1, Cloud; user 1 fixed on E2
        let groups = MethodGroups {
            groups: vec![vec![0, 1, 3], vec![2]],
            preferred: vec![0, 2],
        };
        let pool = equipartition_split(&groups, &space, 4096).unwrap();
        let ids: Vec<Vec<usize>> = pool.iter().map(|a| space.indices(a).unwrap()).collect();
        // K=1 puts its single user on server 2; K=2 spreads one per server
        assert_eq!(ids, vec![vec![0, 2], vec![1, 2], vec![3, 2]]);
    }

    #[test]
    fn preferred_action_appended_when_excluded() {
        let space = edge_space(3, 2);
        let groups = MethodGroups {
            groups: vec![vec![0], vec![1], vec![0, 1]],
            preferred: vec![0, 1, 0],
        };
        // three edge users: server 1 holds one, server 2 holds two
        let pool = equipartition_split(&groups, &space, 4096).unwrap();
        let ids: Vec<Vec<usize>> = pool.iter().map(|a| space.indices(a).unwrap()).collect();
        assert_eq!(ids, vec![vec![0, 1, 1], vec![0, 1, 0]]);
    }

    #[test]
    fn cap_is_enforced() {
        let space = edge_space(8, 2);
        let err = equipartition_split(&MethodGroups::full(&space), &space, 50).unwrap_err();
        assert_eq!(err, Error::PoolTooLarge { reached: 51, cap: 50 });
    }
}
