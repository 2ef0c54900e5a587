//! Domain types and the closed-form delay model.
//!
//! Every quantity is carried in bits, bits/s, seconds, hertz and watts.
//! Byte-denominated inputs are converted once at the configuration boundary
//! ([`bytes_to_bits`]); one megabyte is `1e6` bytes.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{ensure_positive, Error, Result};

pub const BITS_PER_BYTE: f64 = 8.0;
pub const MEGABYTE: f64 = 1e6;

pub fn bytes_to_bits(bytes: f64) -> f64 {
    bytes * BITS_PER_BYTE
}

pub fn megabytes_to_bits(mb: f64) -> f64 {
    bytes_to_bits(mb * MEGABYTE)
}

/// One user's task for a slot: upload size and result size, both in bits.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Task {
    pub fwd_bits: f64,
    pub bwd_bits: f64,
}

impl Task {
    pub fn new(fwd_bits: f64, bwd_bits: f64) -> Result<Self> {
        let task = Task { fwd_bits, bwd_bits };
        task.validate()?;
        Ok(task)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("task_fwd", self.fwd_bits), ("task_bwd", self.bwd_bits)] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::invalid(name, format!("must be finite and >= 0, got {v}")));
            }
        }
        Ok(())
    }

    /// Both sizes multiplied by `k`.
    pub fn scaled(&self, k: f64) -> Task {
        Task {
            fwd_bits: self.fwd_bits * k,
            bwd_bits: self.bwd_bits * k,
        }
    }
}

/// Static description of the simulated system. Defaults reproduce the
/// reference parameter table for 4 users, 2 edge servers and 10^4 slots.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemConfig {
    pub num_users: usize,
    pub num_edge_servers: usize,
    pub horizon: u64,
    pub cpu_freq_hz: f64,
    pub cycles_per_bit: f64,
    pub bandwidth_hz: f64,
    pub tx_power_w: f64,
    pub noise_w: f64,
    /// Closed interval of user-to-edge channel gains.
    pub gain_range: (f64, f64),
    pub edge_cloud_gain: f64,
    /// Per-round edge capacity interval in bits/s.
    pub edge_capacity_bps: (f64, f64),
    pub cloud_capacity_bps: f64,
    pub task: Task,
    pub exploration: f64,
    pub include_cloud: bool,
    pub seed: u64,
}

impl Default for SystemConfig {
    fn default() -> Self {
        SystemConfig {
            num_users: 4,
            num_edge_servers: 2,
            horizon: 10_000,
            cpu_freq_hz: 3.0e9,
            cycles_per_bit: 3000.0,
            bandwidth_hz: 30e3,
            tx_power_w: 3200.0,
            noise_w: 50.0,
            gain_range: (0.125, 1.0),
            edge_cloud_gain: 0.125,
            edge_capacity_bps: (bytes_to_bits(50e6), bytes_to_bits(51e6)),
            cloud_capacity_bps: bytes_to_bits(100e9),
            task: Task {
                fwd_bits: megabytes_to_bits(200.0),
                bwd_bits: megabytes_to_bits(20.0),
            },
            exploration: 1.0,
            include_cloud: true,
            seed: 0,
        }
    }
}

impl SystemConfig {
    /// Checks every invariant. Returns non-fatal warnings on success.
    pub fn validate(&self) -> Result<Vec<String>> {
        if self.num_users == 0 {
            return Err(Error::invalid("num_users", "must be >= 1"));
        }
        if self.num_edge_servers == 0 {
            return Err(Error::invalid("num_edge_servers", "must be >= 1"));
        }
        if self.horizon == 0 {
            return Err(Error::invalid("horizon", "must be >= 1"));
        }
        ensure_positive("cpu_freq_hz", self.cpu_freq_hz)?;
        ensure_positive("cycles_per_bit", self.cycles_per_bit)?;
        ensure_positive("bandwidth_hz", self.bandwidth_hz)?;
        ensure_positive("tx_power_w", self.tx_power_w)?;
        ensure_positive("noise_w", self.noise_w)?;
        ensure_positive("cloud_capacity", self.cloud_capacity_bps)?;
        let (g_lo, g_hi) = self.gain_range;
        if !(g_lo > 0.0 && g_lo <= g_hi && g_hi <= 1.0) {
            return Err(Error::invalid(
                "gain_range",
                format!("must satisfy 0 < lo <= hi <= 1, got [{g_lo}, {g_hi}]"),
            ));
        }
        if !(self.edge_cloud_gain > 0.0 && self.edge_cloud_gain <= 1.0) {
            return Err(Error::invalid(
                "edge_cloud_gain",
                format!("must lie in (0, 1], got {}", self.edge_cloud_gain),
            ));
        }
        let (v_lo, v_hi) = self.edge_capacity_bps;
        ensure_positive("edge_capacity", v_lo)?;
        ensure_positive("edge_capacity", v_hi)?;
        if v_lo > v_hi {
            return Err(Error::invalid(
                "edge_capacity",
                format!("lower bound {v_lo} exceeds upper bound {v_hi}"),
            ));
        }
        self.task.validate()?;
        if !(self.exploration.is_finite() && self.exploration >= 0.0) {
            return Err(Error::invalid("exploration", "must be finite and >= 0"));
        }

        let mut warnings = Vec::new();
        if self.num_users < 3 * self.num_edge_servers {
            warnings.push(format!(
                "num_users ({}) is below 3x num_edge_servers ({}); the batched elimination \
                 scheme targets user-heavy systems",
                self.num_users, self.num_edge_servers
            ));
        }
        Ok(warnings)
    }

    pub fn local_capacity_bps(&self) -> Result<f64> {
        cpu_capacity(self.cpu_freq_hz, self.cycles_per_bit)
    }

    /// Methods available to each user: Local, every edge server, and Cloud when enabled.
    pub fn methods_per_user(&self) -> usize {
        self.num_edge_servers + 1 + usize::from(self.include_cloud)
    }
}

/// One user's execution choice. Server indices are zero-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Method {
    Local,
    Edge(usize),
    /// Offload to the cloud through the given relay edge server.
    Cloud(usize),
}

impl Method {
    pub fn edge_server(&self) -> Option<usize> {
        match *self {
            Method::Edge(e) => Some(e),
            _ => None,
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Method::Local => write!(f, "L"),
            Method::Edge(e) => write!(f, "E{}", e + 1),
            Method::Cloud(e) => write!(f, "C{}", e + 1),
        }
    }
}

/// Identifier of a joint action within an [`ActionSpace`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ActionId(pub u64);

impl fmt::Display for ActionId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// A joint assignment of one method per user.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Action {
    pub id: ActionId,
    pub assignment: Vec<Method>,
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, m) in self.assignment.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{m}")?;
        }
        write!(f, ")")
    }
}

/// Per-user method lists plus the mixed-radix encoding between
/// method-index vectors and [`ActionId`]s. User 0 is the most significant
/// digit, so id order is lexicographic order over index vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct ActionSpace {
    methods: Vec<Vec<Method>>,
    num_servers: usize,
}

impl ActionSpace {
    pub fn new(methods: Vec<Vec<Method>>, num_servers: usize) -> Result<Self> {
        if methods.is_empty() {
            return Err(Error::invalid("methods", "at least one user is required"));
        }
        for (user, list) in methods.iter().enumerate() {
            if list.is_empty() {
                return Err(Error::invalid("methods", format!("user {user} has no methods")));
            }
            for m in list {
                let server = match *m {
                    Method::Local => None,
                    Method::Edge(e) | Method::Cloud(e) => Some(e),
                };
                if server.is_some_and(|e| e >= num_servers) {
                    return Err(Error::invalid(
                        "methods",
                        format!("user {user}: {m} references a server outside 1..={num_servers}"),
                    ));
                }
            }
        }
        Ok(ActionSpace { methods, num_servers })
    }

    /// The standard space: Local, each edge server, and (if enabled) Cloud
    /// relayed through `relays[user]`.
    pub fn standard(num_servers: usize, include_cloud: bool, relays: &[usize]) -> Result<Self> {
        let methods = relays
            .iter()
            .map(|&relay| {
                let mut list = vec![Method::Local];
                list.extend((0..num_servers).map(Method::Edge));
                if include_cloud {
                    list.push(Method::Cloud(relay));
                }
                list
            })
            .collect();
        ActionSpace::new(methods, num_servers)
    }

    pub fn num_users(&self) -> usize {
        self.methods.len()
    }

    pub fn num_servers(&self) -> usize {
        self.num_servers
    }

    pub fn methods(&self, user: usize) -> &[Method] {
        &self.methods[user]
    }

    pub fn method_index(&self, user: usize, method: Method) -> Option<usize> {
        self.methods.get(user)?.iter().position(|&m| m == method)
    }

    /// Number of joint actions, or `None` if it does not fit in a u64.
    pub fn size(&self) -> Option<u64> {
        self.methods
            .iter()
            .try_fold(1u64, |acc, list| acc.checked_mul(list.len() as u64))
    }

    pub fn encode(&self, indices: &[usize]) -> Result<ActionId> {
        if indices.len() != self.num_users() {
            return Err(Error::MalformedAction(format!(
                "expected {} entries, got {}",
                self.num_users(),
                indices.len()
            )));
        }
        let mut id: u64 = 0;
        for (user, (&idx, list)) in indices.iter().zip(&self.methods).enumerate() {
            if idx >= list.len() {
                return Err(Error::MalformedAction(format!(
                    "user {user}: method index {idx} out of range {}",
                    list.len()
                )));
            }
            id = id
                .checked_mul(list.len() as u64)
                .and_then(|v| v.checked_add(idx as u64))
                .ok_or_else(|| Error::Overflow("action id exceeds u64".into()))?;
        }
        Ok(ActionId(id))
    }

    pub fn decode(&self, id: ActionId) -> Result<Vec<usize>> {
        let mut rest = id.0;
        let mut indices = vec![0; self.num_users()];
        for (user, list) in self.methods.iter().enumerate().rev() {
            let radix = list.len() as u64;
            indices[user] = (rest % radix) as usize;
            rest /= radix;
        }
        if rest != 0 {
            return Err(Error::UnknownAction(id));
        }
        Ok(indices)
    }

    pub fn action(&self, indices: &[usize]) -> Result<Action> {
        let id = self.encode(indices)?;
        let assignment = indices
            .iter()
            .enumerate()
            .map(|(user, &idx)| self.methods[user][idx])
            .collect();
        Ok(Action { id, assignment })
    }

    pub fn action_by_id(&self, id: ActionId) -> Result<Action> {
        self.action(&self.decode(id)?)
    }

    /// Method indices of `action`, validating it against this space.
    pub fn indices(&self, action: &Action) -> Result<Vec<usize>> {
        if action.assignment.len() != self.num_users() {
            return Err(Error::MalformedAction(format!(
                "expected {} entries, got {}",
                self.num_users(),
                action.assignment.len()
            )));
        }
        action
            .assignment
            .iter()
            .enumerate()
            .map(|(user, &m)| {
                self.method_index(user, m).ok_or_else(|| {
                    Error::MalformedAction(format!("user {user}: {m} is not an available method"))
                })
            })
            .collect()
    }

    /// Every joint action in id order. Fails if the space holds more than `cap`.
    pub fn enumerate(&self, cap: u64) -> Result<Vec<Action>> {
        let size = self
            .size()
            .ok_or_else(|| Error::Overflow("action space exceeds u64".into()))?;
        if size > cap {
            return Err(Error::PoolTooLarge { reached: size, cap });
        }
        (0..size).map(|id| self.action_by_id(ActionId(id))).collect()
    }
}

/// Frozen channel gains for one environment instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelRealization {
    /// `gains[user][server]`.
    pub gains: Vec<Vec<f64>>,
    pub edge_cloud_gain: f64,
}

impl ChannelRealization {
    /// Highest-gain edge server for `user`, lowest index on ties.
    pub fn best_relay(&self, user: usize) -> usize {
        let row = &self.gains[user];
        let mut best = 0;
        for (e, &g) in row.iter().enumerate() {
            if g > row[best] {
                best = e;
            }
        }
        best
    }
}

/// Local processing rate `f / beta` in bits/s.
pub fn cpu_capacity(freq_hz: f64, cycles_per_bit: f64) -> Result<f64> {
    ensure_positive("cpu_freq", freq_hz)?;
    ensure_positive("cycles_per_bit", cycles_per_bit)?;
    Ok(freq_hz / cycles_per_bit)
}

/// Shannon rate `W log2(1 + p h / N)` in bits/s.
pub fn shannon_rate(bandwidth_hz: f64, tx_power_w: f64, gain: f64, noise_w: f64) -> Result<f64> {
    ensure_positive("bandwidth", bandwidth_hz)?;
    ensure_positive("tx_power", tx_power_w)?;
    ensure_positive("noise", noise_w)?;
    if !(gain > 0.0 && gain <= 1.0) {
        return Err(Error::invalid("gain", format!("must lie in (0, 1], got {gain}")));
    }
    let snr = tx_power_w * gain / noise_w;
    Ok(bandwidth_hz * snr.ln_1p() / std::f64::consts::LN_2)
}

pub fn delay_local(task: &Task, local_bps: f64) -> Result<f64> {
    ensure_positive("local_capacity", local_bps)?;
    Ok(task.fwd_bits / local_bps)
}

/// Upload, edge compute, and result download.
pub fn delay_edge(task: &Task, uplink_bps: f64, edge_bps: f64) -> Result<f64> {
    ensure_positive("uplink_rate", uplink_bps)?;
    ensure_positive("edge_capacity", edge_bps)?;
    Ok(task.fwd_bits / uplink_bps + task.fwd_bits / edge_bps + task.bwd_bits / uplink_bps)
}

/// Upload to the relay, relay to cloud, cloud compute, and the two return hops.
pub fn delay_cloud(task: &Task, uplink_bps: f64, backhaul_bps: f64, cloud_bps: f64) -> Result<f64> {
    ensure_positive("uplink_rate", uplink_bps)?;
    ensure_positive("backhaul_rate", backhaul_bps)?;
    ensure_positive("cloud_capacity", cloud_bps)?;
    Ok(task.fwd_bits / uplink_bps
        + task.fwd_bits / backhaul_bps
        + task.fwd_bits / cloud_bps
        + task.bwd_bits / backhaul_bps
        + task.bwd_bits / uplink_bps)
}

/// Delay of `user` executing `task` with `method`, given this round's edge capacities.
pub fn task_delay(
    method: Method,
    user: usize,
    task: &Task,
    cfg: &SystemConfig,
    chan: &ChannelRealization,
    edge_caps: &[f64],
) -> Result<f64> {
    if edge_caps.len() != cfg.num_edge_servers {
        return Err(Error::invalid(
            "edge_caps",
            format!("expected {} entries, got {}", cfg.num_edge_servers, edge_caps.len()),
        ));
    }
    let gains = chan
        .gains
        .get(user)
        .ok_or_else(|| Error::MalformedAction(format!("user {user} out of range")))?;
    let uplink = |e: usize| -> Result<f64> {
        let g = *gains
            .get(e)
            .ok_or_else(|| Error::MalformedAction(format!("server {} out of range", e + 1)))?;
        shannon_rate(cfg.bandwidth_hz, cfg.tx_power_w, g, cfg.noise_w)
    };
    match method {
        Method::Local => delay_local(task, cfg.local_capacity_bps()?),
        Method::Edge(e) => delay_edge(task, uplink(e)?, edge_caps[e]),
        Method::Cloud(relay) => {
            let backhaul = shannon_rate(cfg.bandwidth_hz, cfg.tx_power_w, chan.edge_cloud_gain, cfg.noise_w)?;
            delay_cloud(task, uplink(relay)?, backhaul, cfg.cloud_capacity_bps)
        }
    }
}
