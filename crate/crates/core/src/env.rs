//! The stochastic MEC world and its exact expected-delay oracle.
//!
//! Channel gains are drawn once per environment. The only per-round
//! randomness is each edge server's capacity, drawn uniformly from the
//! configured interval and shared by every user offloading to that server in
//! the round. Delay is separable across users, so expectations and gaps are
//! computed per user and summed.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::model::{
    delay_cloud, delay_edge, delay_local, shannon_rate, Action, ActionId, ActionSpace,
    ChannelRealization, Method, SystemConfig,
};

/// Anything a policy can pull actions against.
pub trait World {
    fn space(&self) -> &ActionSpace;

    /// Executes `action` for one slot and reports the observed delays.
    fn sample_round(&mut self, action: &Action) -> Result<RoundOutcome>;

    /// Exact expected total delay of `action`.
    fn expected_delay(&self, action: &Action) -> Result<f64>;
}

#[derive(Debug, Clone, PartialEq)]
pub struct RoundOutcome {
    pub per_user_delay: Vec<f64>,
    pub total_delay: f64,
    pub t: u64,
}

/// `E[1/v]` for `v ~ Uniform[lo, hi]`.
pub fn expected_inverse_uniform(lo: f64, hi: f64) -> f64 {
    if hi <= lo {
        1.0 / lo
    } else {
        let width = hi - lo;
        (width / lo).ln_1p() / width
    }
}

/// Builds an environment: gains drawn once from `cfg.seed`, capacities per round.
pub fn build_environment(cfg: SystemConfig) -> Result<Environment> {
    Environment::new(cfg)
}

#[derive(Debug, Clone)]
pub struct Environment {
    cfg: SystemConfig,
    chan: ChannelRealization,
    space: ActionSpace,
    rng: ChaCha8Rng,
    round: u64,
    /// `[user][method]` expected, smallest and largest per-round delay.
    expected: Vec<Vec<f64>>,
    lowest: Vec<Vec<f64>>,
    highest: Vec<Vec<f64>>,
}

impl Environment {
    pub fn new(cfg: SystemConfig) -> Result<Self> {
        for w in cfg.validate()? {
            log::debug!("{w}");
        }
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let (g_lo, g_hi) = cfg.gain_range;
        let gains = (0..cfg.num_users)
            .map(|_| {
                (0..cfg.num_edge_servers)
                    .map(|_| g_lo + (g_hi - g_lo) * rng.random::<f64>())
                    .collect()
            })
            .collect();
        let chan = ChannelRealization {
            gains,
            edge_cloud_gain: cfg.edge_cloud_gain,
        };
        let relays: Vec<usize> = (0..cfg.num_users).map(|i| chan.best_relay(i)).collect();
        let space = ActionSpace::standard(cfg.num_edge_servers, cfg.include_cloud, &relays)?;

        let (v_lo, v_hi) = cfg.edge_capacity_bps;
        let mean_capacity = 1.0 / expected_inverse_uniform(v_lo, v_hi);
        let mut expected = Vec::with_capacity(cfg.num_users);
        let mut lowest = Vec::with_capacity(cfg.num_users);
        let mut highest = Vec::with_capacity(cfg.num_users);
        for user in 0..cfg.num_users {
            let mut e_row = Vec::new();
            let mut lo_row = Vec::new();
            let mut hi_row = Vec::new();
            for &m in space.methods(user) {
                e_row.push(method_delay(&cfg, &chan, user, m, mean_capacity)?);
                lo_row.push(method_delay(&cfg, &chan, user, m, v_hi)?);
                hi_row.push(method_delay(&cfg, &chan, user, m, v_lo)?);
            }
            expected.push(e_row);
            lowest.push(lo_row);
            highest.push(hi_row);
        }

        Ok(Environment {
            cfg,
            chan,
            space,
            rng,
            round: 0,
            expected,
            lowest,
            highest,
        })
    }

    pub fn config(&self) -> &SystemConfig {
        &self.cfg
    }

    pub fn channel(&self) -> &ChannelRealization {
        &self.chan
    }

    pub fn round(&self) -> u64 {
        self.round
    }

    /// Expected delay of every `(user, method)` pair.
    pub fn method_expected_delays(&self) -> &[Vec<f64>] {
        &self.expected
    }

    /// Smallest and largest per-round delay `action` can produce.
    pub fn delay_bounds(&self, action: &Action) -> Result<(f64, f64)> {
        let idx = self.space.indices(action)?;
        let lo = idx.iter().enumerate().map(|(i, &m)| self.lowest[i][m]).sum();
        let hi = idx.iter().enumerate().map(|(i, &m)| self.highest[i][m]).sum();
        Ok((lo, hi))
    }

    fn delay_range(&self, indices: &[usize]) -> f64 {
        indices
            .iter()
            .enumerate()
            .map(|(i, &m)| self.highest[i][m] - self.lowest[i][m])
            .sum()
    }

    /// Exact oracle restricted to `pool`. Ties on the optimum go to the lowest id.
    pub fn oracle(&self, pool: &[Action]) -> Result<OracleReport> {
        if pool.is_empty() {
            return Err(Error::EmptyPool);
        }
        let mut scored = Vec::with_capacity(pool.len());
        let mut sigma_max: f64 = 0.0;
        for action in pool {
            let idx = self.space.indices(action)?;
            let mean: f64 = idx.iter().enumerate().map(|(i, &m)| self.expected[i][m]).sum();
            sigma_max = sigma_max.max(self.delay_range(&idx));
            scored.push((action, mean));
        }
        let (best, d_star) = scored
            .iter()
            .copied()
            .min_by(|a, b| a.1.total_cmp(&b.1).then(a.0.id.cmp(&b.0.id)))
            .expect("pool is non-empty");
        let gaps = scored
            .iter()
            .map(|(a, mean)| (a.id, (mean - d_star).max(0.0)))
            .collect();
        Ok(OracleReport {
            best_action: best.clone(),
            best_expected_delay: d_star,
            gaps,
            per_user_gaps: self.per_user_gaps(),
            sigma_max,
            scope: Scope::Pool,
        })
    }

    /// Exact oracle over the unrestricted action space, via per-user minima.
    pub fn global_oracle(&self) -> Result<OracleReport> {
        let per_user_gaps = self.per_user_gaps();
        let best_idx: Vec<usize> = per_user_gaps
            .iter()
            .map(|row| row.iter().position(|&g| g == 0.0).expect("row minimum exists"))
            .collect();
        let d_star = best_idx.iter().enumerate().map(|(i, &m)| self.expected[i][m]).sum();
        let widest: Vec<usize> = (0..self.space.num_users())
            .map(|i| {
                let row = &self.expected[i];
                (0..row.len())
                    .max_by(|&a, &b| {
                        let ra = self.highest[i][a] - self.lowest[i][a];
                        let rb = self.highest[i][b] - self.lowest[i][b];
                        ra.total_cmp(&rb)
                    })
                    .unwrap_or(0)
            })
            .collect();
        Ok(OracleReport {
            best_action: self.space.action(&best_idx)?,
            best_expected_delay: d_star,
            gaps: BTreeMap::new(),
            per_user_gaps,
            sigma_max: self.delay_range(&widest),
            scope: Scope::Global(self.space.clone()),
        })
    }

    fn per_user_gaps(&self) -> Vec<Vec<f64>> {
        self.expected
            .iter()
            .map(|row| {
                let min = row.iter().copied().fold(f64::INFINITY, f64::min);
                row.iter().map(|&d| d - min).collect()
            })
            .collect()
    }
}

impl World for Environment {
    fn space(&self) -> &ActionSpace {
        &self.space
    }

    fn sample_round(&mut self, action: &Action) -> Result<RoundOutcome> {
        let idx = self.space.indices(action)?;
        let (v_lo, v_hi) = self.cfg.edge_capacity_bps;
        let caps: Vec<f64> = (0..self.cfg.num_edge_servers)
            .map(|_| v_lo + (v_hi - v_lo) * self.rng.random::<f64>())
            .collect();
        let per_user_delay = idx
            .iter()
            .enumerate()
            .map(|(user, &m)| {
                let method = self.space.methods(user)[m];
                let cap = method.edge_server().map_or(v_hi, |e| caps[e]);
                method_delay(&self.cfg, &self.chan, user, method, cap)
            })
            .collect::<Result<Vec<f64>>>()?;
        self.round += 1;
        Ok(RoundOutcome {
            total_delay: per_user_delay.iter().sum(),
            per_user_delay,
            t: self.round,
        })
    }

    fn expected_delay(&self, action: &Action) -> Result<f64> {
        let idx = self.space.indices(action)?;
        Ok(idx.iter().enumerate().map(|(i, &m)| self.expected[i][m]).sum())
    }
}

/// One user's delay when its edge server (if any) runs at `edge_bps`.
fn method_delay(
    cfg: &SystemConfig,
    chan: &ChannelRealization,
    user: usize,
    method: Method,
    edge_bps: f64,
) -> Result<f64> {
    let rate = |gain: f64| shannon_rate(cfg.bandwidth_hz, cfg.tx_power_w, gain, cfg.noise_w);
    match method {
        Method::Local => delay_local(&cfg.task, cfg.local_capacity_bps()?),
        Method::Edge(e) => delay_edge(&cfg.task, rate(chan.gains[user][e])?, edge_bps),
        Method::Cloud(relay) => delay_cloud(
            &cfg.task,
            rate(chan.gains[user][relay])?,
            rate(chan.edge_cloud_gain)?,
            cfg.cloud_capacity_bps,
        ),
    }
}

#[derive(Debug, Clone)]
enum Scope {
    Pool,
    Global(ActionSpace),
}

/// Optimum, gaps and noise range for an action pool (or the full space).
#[derive(Debug, Clone)]
pub struct OracleReport {
    pub best_action: Action,
    /// `D*`: the smallest expected total delay.
    pub best_expected_delay: f64,
    /// Expected-delay gap per pool action. Empty for the global oracle;
    /// use [`OracleReport::gap`] there.
    pub gaps: BTreeMap<ActionId, f64>,
    /// `[user][method]` gap to that user's best method.
    pub per_user_gaps: Vec<Vec<f64>>,
    /// Largest per-round delay range over the covered actions.
    pub sigma_max: f64,
    scope: Scope,
}

impl OracleReport {
    pub fn is_global(&self) -> bool {
        matches!(self.scope, Scope::Global(_))
    }

    /// Expected-delay gap of `id` to the optimum.
    pub fn gap(&self, id: ActionId) -> Result<f64> {
        match &self.scope {
            Scope::Pool => self.gaps.get(&id).copied().ok_or(Error::UnknownAction(id)),
            Scope::Global(space) => {
                let idx = space.decode(id)?;
                Ok(idx
                    .iter()
                    .enumerate()
                    .map(|(i, &m)| self.per_user_gaps[i][m])
                    .sum())
            }
        }
    }
}

/// Noise-free world with a fixed `[user][method]` delay table.
///
/// Every user's methods are edge servers `0..M`, so the table also works
/// with the equipartition pool builder. Observations can be shifted by a
/// constant per user.
#[derive(Debug, Clone)]
pub struct FixedWorld {
    space: ActionSpace,
    delays: Vec<Vec<f64>>,
    shift: f64,
    round: u64,
}

impl FixedWorld {
    pub fn new(delays: Vec<Vec<f64>>) -> Self {
        let servers = delays.iter().map(Vec::len).max().unwrap_or(1).max(1);
        let methods = delays
            .iter()
            .map(|row| (0..row.len()).map(Method::Edge).collect())
            .collect();
        let space = ActionSpace::new(methods, servers).expect("every user has methods");
        FixedWorld {
            space,
            delays,
            shift: 0.0,
            round: 0,
        }
    }

    /// Adds `shift` to every observed per-user delay.
    pub fn shifted(mut self, shift: f64) -> Self {
        self.shift = shift;
        self
    }

    /// The full action space in id order.
    pub fn pool(&self) -> Vec<Action> {
        self.space.enumerate(u64::MAX).expect("small fixed world")
    }
}

impl World for FixedWorld {
    fn space(&self) -> &ActionSpace {
        &self.space
    }

    fn sample_round(&mut self, action: &Action) -> Result<RoundOutcome> {
        let idx = self.space.indices(action)?;
        let per_user_delay: Vec<f64> = idx
            .iter()
            .enumerate()
            .map(|(i, &m)| self.delays[i][m] + self.shift)
            .collect();
        self.round += 1;
        Ok(RoundOutcome {
            total_delay: per_user_delay.iter().sum(),
            per_user_delay,
            t: self.round,
        })
    }

    fn expected_delay(&self, action: &Action) -> Result<f64> {
        let idx = self.space.indices(action)?;
        Ok(idx
            .iter()
            .enumerate()
            .map(|(i, &m)| self.delays[i][m] + self.shift)
            .sum())
    }
}
