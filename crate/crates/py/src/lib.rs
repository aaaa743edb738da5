//! Python bindings for the `sagin_sim` simulator.

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sagin_core::engine::{self, Cell, MetricsRecord, RunAggregates, SweepAxis};
use sagin_core::learners::qlearning::QLearner as CoreQLearner;
use sagin_core::learners::satisfaction::{SatisfactionAgent as CoreSatisfaction, SatisfactionParams};
use sagin_core::learners::ucb::UcbBandit as CoreUcb;
use sagin_core::scenario::{apply_override, Schedule};
use sagin_core::{radio, report, SimError};

fn to_py(e: SimError) -> PyErr {
    match e {
        SimError::Range { .. } | SimError::Scheme(_) | SimError::Config(_) | SimError::UnknownScheme(_) => {
            PyValueError::new_err(e.to_string())
        }
        other => PyRuntimeError::new_err(other.to_string()),
    }
}

fn parse_scheme(name: &str) -> PyResult<sagin_core::SchemeId> {
    name.parse().map_err(to_py)
}

/// Scenario configuration. Fields missing from the JSON take default values.
#[pyclass(module = "sagin_sim", from_py_object)]
#[derive(Clone)]
struct Scenario {
    inner: sagin_core::Scenario,
}

#[pymethods]
impl Scenario {
    #[new]
    #[pyo3(signature = (json = None))]
    fn new(json: Option<&str>) -> PyResult<Self> {
        let inner = match json {
            Some(text) => sagin_core::Scenario::from_json_str(text).map_err(to_py)?,
            None => sagin_core::reference_scenario(),
        };
        Ok(Scenario { inner })
    }

    /// Returns a copy with `key` (dotted for nested fields) set to `value`,
    /// which is parsed as JSON when possible.
    fn with_override(&self, key: &str, value: &str) -> PyResult<Self> {
        let mut v = serde_json::to_value(&self.inner).expect("scenario serializes");
        apply_override(&mut v, key, value).map_err(to_py)?;
        let inner = sagin_core::Scenario::from_json_value(v).map_err(to_py)?;
        Ok(Scenario { inner })
    }

    fn to_json(&self) -> String {
        self.inner.to_json_pretty()
    }

    #[getter]
    fn n_users(&self) -> usize {
        self.inner.n_users
    }

    #[getter]
    fn n_uavs(&self) -> usize {
        self.inner.n_uavs
    }

    #[getter]
    fn n_steps(&self) -> usize {
        self.inner.n_steps
    }

    #[getter]
    fn scheme(&self) -> String {
        self.inner.scheme.name().to_string()
    }

    #[getter]
    fn seed(&self) -> u64 {
        self.inner.seed
    }

    fn __repr__(&self) -> String {
        format!(
            "Scenario(scheme={}, n_users={}, n_uavs={}, n_steps={})",
            self.inner.scheme, self.inner.n_users, self.inner.n_uavs, self.inner.n_steps
        )
    }
}

fn record_dict<'py>(py: Python<'py>, r: &MetricsRecord) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("step", r.step)?;
    d.set_item("outage_users", r.outage_users)?;
    d.set_item("mean_load", r.mean_load)?;
    d.set_item("mean_rate_bps", r.mean_rate_bps)?;
    d.set_item("fairness", r.fairness)?;
    d.set_item("mean_reward", r.mean_reward)?;
    d.set_item("wall_clock_ms", r.wall_clock_ms)?;
    d.set_item("fp_residual", r.fp_residual)?;
    d.set_item("fp_iterations", r.fp_iterations)?;
    Ok(d)
}

fn aggregates_dict<'py>(py: Python<'py>, a: &RunAggregates) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("outage_users", a.outage_users)?;
    d.set_item("mean_load", a.mean_load)?;
    d.set_item("mean_rate_bps", a.mean_rate_bps)?;
    d.set_item("fairness", a.fairness)?;
    d.set_item("mean_reward", a.mean_reward)?;
    d.set_item("max_fp_residual", a.max_fp_residual)?;
    Ok(d)
}

#[pyclass(module = "sagin_sim", frozen)]
struct RunResult {
    inner: sagin_core::RunResult,
}

#[pymethods]
impl RunResult {
    #[getter]
    fn scheme(&self) -> String {
        self.inner.scheme.name().to_string()
    }

    #[getter]
    fn seed(&self) -> u64 {
        self.inner.seed
    }

    #[getter]
    fn runtime_ms(&self) -> f64 {
        self.inner.runtime_ms
    }

    #[getter]
    fn aggregates<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyDict>> {
        aggregates_dict(py, &self.inner.aggregates)
    }

    /// Per-step metrics as a list of dicts.
    fn records<'py>(&self, py: Python<'py>) -> PyResult<Vec<Bound<'py, PyDict>>> {
        self.inner.records.iter().map(|r| record_dict(py, r)).collect()
    }

    fn steps_csv(&self) -> String {
        report::steps_csv(std::slice::from_ref(&self.inner))
    }

    fn __len__(&self) -> usize {
        self.inner.records.len()
    }
}

/// A simulation that can be advanced one step at a time.
#[pyclass(module = "sagin_sim", unsendable)]
struct Simulation {
    inner: engine::Simulation,
}

#[pymethods]
impl Simulation {
    #[new]
    fn new(scenario: &Scenario, scheme: &str, seed: u64) -> PyResult<Self> {
        let inner = engine::Simulation::new(&scenario.inner, parse_scheme(scheme)?, seed).map_err(to_py)?;
        Ok(Simulation { inner })
    }

    fn step<'py>(&mut self, py: Python<'py>) -> PyResult<Bound<'py, PyDict>> {
        let r = self.inner.step().map_err(to_py)?;
        record_dict(py, &r)
    }

    #[getter]
    fn steps_done(&self) -> usize {
        self.inner.steps_done()
    }

    /// Per-BS rewards of the last step, SBSs first.
    #[getter]
    fn rewards(&self) -> Vec<f64> {
        self.inner.rewards().to_vec()
    }

    #[getter]
    fn uav_positions(&self) -> Vec<(f64, f64, f64)> {
        self.inner.world().uavs.iter().map(|p| (p.x, p.y, p.h)).collect()
    }

    #[getter]
    fn user_positions(&self) -> Vec<(f64, f64, f64)> {
        let w = self.inner.world();
        w.users
            .iter()
            .map(|u| (u.position.x, u.position.y, u.position.h))
            .collect()
    }

    #[getter]
    fn channels(&self) -> Vec<usize> {
        self.inner.world().channels.clone()
    }
}

#[pyfunction]
fn run_once(py: Python<'_>, scenario: &Scenario, scheme: &str, seed: u64) -> PyResult<RunResult> {
    let scheme = parse_scheme(scheme)?;
    let s = scenario.inner.clone();
    let inner = py.detach(move || engine::run_once(&s, scheme, seed)).map_err(to_py)?;
    Ok(RunResult { inner })
}

/// Runs a Monte Carlo campaign and returns one dict per (sweep point, scheme).
#[pyfunction]
#[pyo3(signature = (scenario, schemes, axis, values, n_mc, master_seed = 0))]
fn run_campaign<'py>(
    py: Python<'py>,
    scenario: &Scenario,
    schemes: Vec<String>,
    axis: &str,
    values: Vec<usize>,
    n_mc: usize,
    master_seed: u64,
) -> PyResult<Vec<Bound<'py, PyDict>>> {
    let axis = match axis {
        "users" => SweepAxis::Users,
        "uavs" => SweepAxis::Uavs,
        other => return Err(PyValueError::new_err(format!("unknown sweep axis `{other}`"))),
    };
    let schemes = schemes.iter().map(|s| parse_scheme(s)).collect::<PyResult<Vec<_>>>()?;
    if schemes.is_empty() {
        return Err(PyValueError::new_err("no schemes selected"));
    }
    let cells: Vec<Cell> = values.into_iter().map(|value| Cell { axis, value }).collect();
    let base = scenario.inner.clone();
    let result = py.detach(move || engine::run_campaign(&base, &cells, &schemes, n_mc, master_seed));
    result
        .rows
        .iter()
        .map(|r| {
            let d = PyDict::new(py);
            d.set_item("x", r.cell.value)?;
            d.set_item("n_users", r.n_users)?;
            d.set_item("n_uavs", r.n_uavs)?;
            d.set_item("scheme", r.scheme.name())?;
            d.set_item("runs", r.runs)?;
            d.set_item("failed", r.failed)?;
            for (name, m) in [
                ("outage_users", &r.outage_users),
                ("mean_load", &r.mean_load),
                ("mean_rate_bps", &r.mean_rate_bps),
                ("fairness", &r.fairness),
                ("mean_reward", &r.mean_reward),
                ("runtime_ms", &r.runtime_ms),
            ] {
                d.set_item(name, (m.mean, m.stderr))?;
            }
            Ok(d)
        })
        .collect()
}

#[pyfunction]
fn jain_fairness(rates: Vec<f64>) -> f64 {
    radio::jain_fairness(&rates)
}

#[pyfunction]
#[pyo3(signature = (fairness, load, weights = (0.5, 0.5)))]
fn reward(fairness: f64, load: f64, weights: (f64, f64)) -> f64 {
    radio::reward(fairness, load, [weights.0, weights.1])
}

#[pyfunction]
fn scheme_names() -> Vec<&'static str> {
    sagin_core::SchemeId::ALL.iter().map(|s| s.name()).collect()
}

#[pyclass(module = "sagin_sim")]
struct SatisfactionAgent {
    inner: CoreSatisfaction,
    rng: ChaCha8Rng,
}

#[pymethods]
impl SatisfactionAgent {
    #[new]
    #[pyo3(signature = (n_actions, kappa0, reward_max, delta = 0.2, tau = 200, seed = 0))]
    fn new(n_actions: usize, kappa0: f64, reward_max: f64, delta: f64, tau: u64, seed: u64) -> PyResult<Self> {
        if n_actions == 0 || tau == 0 {
            return Err(PyValueError::new_err("n_actions and tau must be positive"));
        }
        let params = SatisfactionParams {
            delta,
            tau,
            reward_max,
            kappa0,
        };
        Ok(SatisfactionAgent {
            inner: CoreSatisfaction::new(n_actions, params),
            rng: ChaCha8Rng::seed_from_u64(seed),
        })
    }

    fn select(&mut self) -> usize {
        self.inner.select(&mut self.rng)
    }

    fn observe(&mut self, reward: f64) -> PyResult<()> {
        if self.inner.last_action.is_none() {
            return Err(PyRuntimeError::new_err("observe called before select"));
        }
        self.inner.observe(reward).map_err(to_py)
    }

    #[getter]
    fn pi(&self) -> Vec<f64> {
        self.inner.pi.clone()
    }

    #[getter]
    fn kappa(&self) -> f64 {
        self.inner.kappa
    }

    #[getter]
    fn satisfied(&self) -> bool {
        self.inner.satisfied
    }
}

#[pyclass(module = "sagin_sim")]
struct UcbBandit {
    inner: CoreUcb,
}

#[pymethods]
impl UcbBandit {
    #[new]
    fn new(n_arms: usize) -> Self {
        UcbBandit {
            inner: CoreUcb::new(n_arms),
        }
    }

    fn select(&mut self) -> usize {
        self.inner.select()
    }

    fn update(&mut self, arm: usize, reward: f64) -> PyResult<()> {
        if arm >= self.inner.means.len() {
            return Err(PyValueError::new_err(format!("arm {arm} out of range")));
        }
        self.inner.update(arm, reward);
        Ok(())
    }

    #[getter]
    fn means(&self) -> Vec<f64> {
        self.inner.means.clone()
    }

    #[getter]
    fn counts(&self) -> Vec<u64> {
        self.inner.counts.clone()
    }
}

/// Tabular epsilon-greedy Q-learning with constant step size and exploration.
#[pyclass(module = "sagin_sim")]
struct QLearner {
    inner: CoreQLearner,
    rng: ChaCha8Rng,
}

#[pymethods]
impl QLearner {
    #[new]
    #[pyo3(signature = (n_states, n_actions, alpha = 0.1, gamma = 0.9, epsilon = 0.1, seed = 0))]
    fn new(n_states: usize, n_actions: usize, alpha: f64, gamma: f64, epsilon: f64, seed: u64) -> Self {
        QLearner {
            inner: CoreQLearner::new(
                n_states,
                n_actions,
                Schedule::Constant(alpha),
                gamma,
                Schedule::Constant(epsilon),
            ),
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    fn select(&mut self, state: usize) -> PyResult<usize> {
        if state >= self.inner.table.n_states() {
            return Err(PyValueError::new_err(format!("state {state} out of range")));
        }
        Ok(self.inner.select(state, &mut self.rng))
    }

    fn update(&mut self, state: usize, action: usize, reward: f64, next_state: usize) -> PyResult<()> {
        let t = &self.inner.table;
        if state >= t.n_states() || next_state >= t.n_states() || action >= t.n_actions() {
            return Err(PyValueError::new_err("state or action out of range"));
        }
        self.inner.update(state, action, reward, next_state);
        Ok(())
    }

    fn q_values(&self, state: usize) -> PyResult<Vec<f64>> {
        if state >= self.inner.table.n_states() {
            return Err(PyValueError::new_err(format!("state {state} out of range")));
        }
        Ok(self.inner.table.row(state).to_vec())
    }
}

#[pymodule]
fn sagin_sim(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Scenario>()?;
    m.add_class::<RunResult>()?;
    m.add_class::<Simulation>()?;
    m.add_class::<SatisfactionAgent>()?;
    m.add_class::<UcbBandit>()?;
    m.add_class::<QLearner>()?;
    m.add_function(wrap_pyfunction!(run_once, m)?)?;
    m.add_function(wrap_pyfunction!(run_campaign, m)?)?;
    m.add_function(wrap_pyfunction!(jain_fairness, m)?)?;
    m.add_function(wrap_pyfunction!(reward, m)?)?;
    m.add_function(wrap_pyfunction!(scheme_names, m)?)?;
    Ok(())
}
