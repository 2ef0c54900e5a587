use num_bigint::BigUint;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;

use mec_offload::metrics::{cumulative_regret, optimal_rate, RateWindow};
use mec_offload::policy::{self, BmseParams, IndexMode, MethodGroups, PullRule, SlParams};
use mec_offload::{model, ActionId, Method, World};

fn err(e: mec_offload::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

/// System parameters. Defaults reproduce the reference table for 4 users,
/// 2 edge servers and 10^4 slots.
#[pyclass(name = "SystemConfig")]
struct PySystemConfig {
    inner: model::SystemConfig,
}

#[pymethods]
impl PySystemConfig {
    #[new]
    #[pyo3(signature = (num_users=4, num_edge_servers=2, horizon=10_000, seed=0, task_fwd_mb=200.0, task_bwd_mb=20.0,
                        edge_capacity_bps=None, exploration=1.0, include_cloud=true))]
    #[allow(clippy::too_many_arguments)]
    fn new(
        num_users: usize,
        num_edge_servers: usize,
        horizon: u64,
        seed: u64,
        task_fwd_mb: f64,
        task_bwd_mb: f64,
        edge_capacity_bps: Option<(f64, f64)>,
        exploration: f64,
        include_cloud: bool,
    ) -> PyResult<Self> {
        let d = model::SystemConfig::default();
        let inner = model::SystemConfig {
            num_users,
            num_edge_servers,
            horizon,
            seed,
            task: model::Task::new(model::megabytes_to_bits(task_fwd_mb), model::megabytes_to_bits(task_bwd_mb))
                .map_err(err)?,
            edge_capacity_bps: edge_capacity_bps.unwrap_or(d.edge_capacity_bps),
            exploration,
            include_cloud,
            ..d
        };
        inner.validate().map_err(err)?;
        Ok(PySystemConfig { inner })
    }

    #[getter]
    fn num_users(&self) -> usize {
        self.inner.num_users
    }

    #[getter]
    fn num_edge_servers(&self) -> usize {
        self.inner.num_edge_servers
    }

    #[getter]
    fn horizon(&self) -> u64 {
        self.inner.horizon
    }

    #[getter]
    fn seed(&self) -> u64 {
        self.inner.seed
    }

    fn __repr__(&self) -> String {
        format!(
            "SystemConfig(num_users={}, num_edge_servers={}, horizon={}, seed={})",
            self.inner.num_users, self.inner.num_edge_servers, self.inner.horizon, self.inner.seed
        )
    }
}

/// A seeded environment. Actions are lists of per-user method indices
/// (0 = local, 1..=E = edge servers, E+1 = cloud).
#[pyclass(name = "Environment")]
struct PyEnvironment {
    inner: mec_offload::Environment,
}

impl PyEnvironment {
    fn action(&self, assignment: Vec<usize>) -> PyResult<model::Action> {
        self.inner.space().action(&assignment).map_err(err)
    }
}

#[pymethods]
impl PyEnvironment {
    #[new]
    fn new(config: &PySystemConfig) -> PyResult<Self> {
        Ok(PyEnvironment {
            inner: mec_offload::Environment::new(config.inner.clone()).map_err(err)?,
        })
    }

    /// Per-user method labels such as `["L", "E1", "E2", "C1"]`.
    fn methods(&self, user: usize) -> PyResult<Vec<String>> {
        if user >= self.inner.space().num_users() {
            return Err(PyValueError::new_err(format!("no user {user}")));
        }
        Ok(self.inner.space().methods(user).iter().map(Method::to_string).collect())
    }

    fn gains(&self) -> Vec<Vec<f64>> {
        self.inner.channel().gains.clone()
    }

    fn action_id(&self, assignment: Vec<usize>) -> PyResult<u64> {
        Ok(self.action(assignment)?.id.0)
    }

    fn expected_delay(&self, assignment: Vec<usize>) -> PyResult<f64> {
        let a = self.action(assignment)?;
        self.inner.expected_delay(&a).map_err(err)
    }

    /// One round: `(total_delay, per_user_delays)`.
    fn sample_round(&mut self, assignment: Vec<usize>) -> PyResult<(f64, Vec<f64>)> {
        let a = self.action(assignment)?;
        let out = self.inner.sample_round(&a).map_err(err)?;
        Ok((out.total_delay, out.per_user_delay))
    }

    /// Global optimum: dict with `best_action`, `best_id`, `best_expected_delay`,
    /// `sigma_max` and `per_user_gaps`.
    fn oracle<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyDict>> {
        let o = self.inner.global_oracle().map_err(err)?;
        let d = PyDict::new(py);
        d.set_item("best_action", self.inner.space().indices(&o.best_action).map_err(err)?)?;
        d.set_item("best_id", o.best_action.id.0)?;
        d.set_item("best_expected_delay", o.best_expected_delay)?;
        d.set_item("sigma_max", o.sigma_max)?;
        d.set_item("per_user_gaps", o.per_user_gaps)?;
        Ok(d)
    }
}

#[pyfunction]
fn shannon_rate(bandwidth_hz: f64, tx_power_w: f64, gain: f64, noise_w: f64) -> PyResult<f64> {
    model::shannon_rate(bandwidth_hz, tx_power_w, gain, noise_w).map_err(err)
}

#[pyfunction]
fn delay_local(fwd_bits: f64, bwd_bits: f64, local_bps: f64) -> PyResult<f64> {
    let task = model::Task::new(fwd_bits, bwd_bits).map_err(err)?;
    model::delay_local(&task, local_bps).map_err(err)
}

#[pyfunction]
fn delay_edge(fwd_bits: f64, bwd_bits: f64, uplink_bps: f64, edge_bps: f64) -> PyResult<f64> {
    let task = model::Task::new(fwd_bits, bwd_bits).map_err(err)?;
    model::delay_edge(&task, uplink_bps, edge_bps).map_err(err)
}

#[pyfunction]
fn delay_cloud(fwd_bits: f64, bwd_bits: f64, uplink_bps: f64, backhaul_bps: f64, cloud_bps: f64) -> PyResult<f64> {
    let task = model::Task::new(fwd_bits, bwd_bits).map_err(err)?;
    model::delay_cloud(&task, uplink_bps, backhaul_bps, cloud_bps).map_err(err)
}

/// `(base_size, big_size, num_base_groups, num_big_groups)`.
#[pyfunction]
fn partition_shape(users: usize, servers: usize) -> PyResult<(usize, usize, usize, usize)> {
    let s = policy::partition_shape(users, servers).map_err(err)?;
    Ok((s.base_size, s.big_size, s.num_base_groups, s.num_big_groups))
}

#[pyfunction]
fn pool_size_closed_form(users: usize, servers: usize) -> PyResult<BigUint> {
    policy::pool_size_closed_form(users, servers).map_err(err)
}

/// Enumerates the edge-only equipartition pool and returns its size.
#[pyfunction]
#[pyo3(signature = (users, servers, max_pool=4096))]
fn equipartition_pool_size(users: usize, servers: usize, max_pool: u64) -> PyResult<usize> {
    let methods = vec![(0..servers).map(Method::Edge).collect(); users];
    let space = model::ActionSpace::new(methods, servers).map_err(err)?;
    let pool = policy::equipartition_split(&MethodGroups::edge_only(&space), &space, max_pool).map_err(err)?;
    Ok(pool.len())
}

#[pyfunction]
#[pyo3(signature = (users, horizon, c=1.0))]
fn regret_bound_ul(users: usize, horizon: f64, c: f64) -> PyResult<f64> {
    policy::regret_bound_ul(users, horizon, c).map_err(err)
}

#[pyfunction]
fn regret_bound_sl(sigma_max: f64, gaps: Vec<f64>, horizon: f64) -> PyResult<f64> {
    policy::regret_bound_sl(sigma_max, &gaps, horizon).map_err(err)
}

/// Runs a policy on a fresh environment and returns its trace summary.
///
/// `policy` is one of `mu_ucb1`, `mu_ucb1_verbatim`, `epsilon_greedy`,
/// `bmse` or `bmse_sl`. The result holds per-slot `actions`, `delays` and
/// `pseudo_regret`, plus `decisions`, `optimal_rate`, `survivor` and
/// `eliminations`.
#[pyfunction]
#[pyo3(signature = (config, policy, epsilon=0.1, ul_fraction=0.2))]
fn run_policy<'py>(
    py: Python<'py>,
    config: &PySystemConfig,
    policy: &str,
    epsilon: f64,
    ul_fraction: f64,
) -> PyResult<Bound<'py, PyDict>> {
    let cfg = config.inner.clone();
    let (trace, oracle) = py
        .detach(|| -> mec_offload::Result<_> {
            let mut env = mec_offload::Environment::new(cfg.clone())?;
            let oracle = env.global_oracle()?;
            let full = || env.space().enumerate(1 << 16);
            let trace = match policy {
                "mu_ucb1" | "mu_ucb1_verbatim" => {
                    let mode = if policy == "mu_ucb1" { IndexMode::Optimistic } else { IndexMode::PaperVerbatim };
                    let pool = full()?;
                    policy::multi_user_ucb1(&mut env, &pool, cfg.horizon, cfg.exploration, mode)?
                }
                "epsilon_greedy" => {
                    let pool = full()?;
                    policy::epsilon_greedy(&mut env, &pool, cfg.horizon, epsilon, cfg.seed)?
                }
                "bmse" => {
                    let params = BmseParams {
                        ul_fraction,
                        pull_rule: PullRule::RoundRobin,
                        ..BmseParams::from_config(&cfg)
                    };
                    policy::bmse(&mut env, &params)?
                }
                "bmse_sl" => {
                    let pool = policy::equipartition_split(
                        &MethodGroups::edge_only(env.space()),
                        env.space(),
                        policy::DEFAULT_MAX_POOL,
                    )?;
                    let params = SlParams {
                        horizon: cfg.horizon,
                        xi: cfg.exploration,
                        dropped_slots_free: false,
                    };
                    policy::bmse_sl(&mut env, &pool, &params)?
                }
                other => return Err(mec_offload::Error::MalformedAction(format!("unknown policy `{other}`"))),
            };
            Ok((trace, oracle))
        })
        .map_err(err)?;
    let regret = cumulative_regret(&trace, &oracle).map_err(err)?;
    let d = PyDict::new(py);
    d.set_item("actions", trace.records.iter().map(|r| r.action_id.0).collect::<Vec<_>>())?;
    d.set_item("delays", trace.records.iter().map(|r| r.delay_s).collect::<Vec<_>>())?;
    d.set_item("pseudo_regret", regret)?;
    d.set_item("decisions", trace.decisions())?;
    d.set_item(
        "optimal_rate",
        optimal_rate(&trace, &oracle, RateWindow::Cumulative).last().copied(),
    )?;
    d.set_item("survivor", trace.survivor.map(|ActionId(id)| id))?;
    d.set_item("eliminations", trace.eliminations.len())?;
    d.set_item("best_id", oracle.best_action.id.0)?;
    Ok(d)
}

#[pymodule]
fn mec_offload_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PySystemConfig>()?;
    m.add_class::<PyEnvironment>()?;
    m.add_function(wrap_pyfunction!(shannon_rate, m)?)?;
    m.add_function(wrap_pyfunction!(delay_local, m)?)?;
    m.add_function(wrap_pyfunction!(delay_edge, m)?)?;
    m.add_function(wrap_pyfunction!(delay_cloud, m)?)?;
    m.add_function(wrap_pyfunction!(partition_shape, m)?)?;
    m.add_function(wrap_pyfunction!(pool_size_closed_form, m)?)?;
    m.add_function(wrap_pyfunction!(equipartition_pool_size, m)?)?;
    m.add_function(wrap_pyfunction!(regret_bound_ul, m)?)?;
    m.add_function(wrap_pyfunction!(regret_bound_sl, m)?)?;
    m.add_function(wrap_pyfunction!(run_policy, m)?)?;
    Ok(())
}
