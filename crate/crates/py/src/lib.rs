//! Python bindings: scenarios, solves, baselines, simulation, oracles and
//! POMDP export.

use commplan::belief::{Belief, BeliefPair};
use commplan::exec::{self, SimOptions};
use commplan::pomdp::FlatPomdp;
use commplan::scenario::{self, CommCost, Horizon};
use commplan::solver::{self, ConstraintState, SolveOptions};
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;

fn err(e: commplan::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

#[pyclass(name = "Scenario", module = "commplan_py", from_py_object)]
#[derive(Clone)]
pub struct PyScenario {
    inner: scenario::Scenario,
}

#[pymethods]
impl PyScenario {
    #[staticmethod]
    fn from_json(source: &str) -> PyResult<Self> {
        scenario::load_scenario(source)
            .map(|inner| Self { inner })
            .map_err(err)
    }

    #[staticmethod]
    fn load(path: &str) -> PyResult<Self> {
        scenario::load_scenario_path(path)
            .map(|inner| Self { inner })
            .map_err(err)
    }

    #[staticmethod]
    #[pyo3(signature = (rho=0.0))]
    fn defense_symmetric(rho: f64) -> Self {
        Self {
            inner: scenario::defense_symmetric(rho),
        }
    }

    #[staticmethod]
    #[pyo3(signature = (rho=0.0))]
    fn defense_asymmetric(rho: f64) -> Self {
        Self {
            inner: scenario::defense_asymmetric(rho),
        }
    }

    fn to_json(&self) -> String {
        self.inner.to_json()
    }

    fn content_hash(&self) -> String {
        self.inner.content_hash()
    }

    /// Copy with a fixed communication cost.
    fn with_rho(&self, rho: f64) -> PyResult<Self> {
        let inner = self.inner.clone().with_comm_cost(CommCost::Fixed(rho));
        inner.validate().map_err(err)?;
        Ok(Self { inner })
    }

    /// Copy with a finite horizon, or the discounted horizon for `None`.
    #[pyo3(signature = (steps=None))]
    fn with_horizon(&self, steps: Option<usize>) -> PyResult<Self> {
        let horizon = steps.map_or(Horizon::Discounted, Horizon::Finite);
        let inner = self.inner.clone().with_horizon(horizon);
        inner.validate().map_err(err)?;
        Ok(Self { inner })
    }

    fn with_erasure(&self, p_e: f64) -> PyResult<Self> {
        let inner = self.inner.clone().with_erasure(p_e);
        inner.validate().map_err(err)?;
        Ok(Self { inner })
    }

    #[getter]
    fn num_states(&self) -> [usize; 2] {
        self.inner.num_states()
    }

    #[getter]
    fn num_actions(&self) -> [usize; 2] {
        self.inner.num_actions()
    }

    #[getter]
    fn discount(&self) -> f64 {
        self.inner.discount
    }

    fn __repr__(&self) -> String {
        format!("Scenario(hash={})", &self.inner.content_hash()[..12])
    }
}

#[pyclass(name = "Solution", module = "commplan_py", skip_from_py_object)]
pub struct PySolution {
    inner: solver::Solution,
}

fn belief_pair(b1: Vec<f64>, b2: Vec<f64>) -> PyResult<BeliefPair> {
    Ok(BeliefPair::new(
        Belief::new(b1).map_err(err)?,
        Belief::new(b2).map_err(err)?,
    ))
}

#[pymethods]
impl PySolution {
    #[getter]
    fn initial_value(&self) -> f64 {
        self.inner.initial_value()
    }

    /// Run report as a dict of strings.
    fn report<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyDict>> {
        let d = PyDict::new(py);
        for line in self.inner.report.to_lines(false) {
            if let Some((k, v)) = line.split_once('=') {
                d.set_item(k, v)?;
            }
        }
        Ok(d)
    }

    /// Residual after each value-iteration sweep (empty for exact solves).
    fn residual_history(&self) -> Vec<f64> {
        self.inner.report.residual_history.clone()
    }

    /// Communication decisions per local state for each agent at step `t`.
    #[pyo3(signature = (b1, b2, t=1))]
    fn decide_comm(&self, b1: Vec<f64>, b2: Vec<f64>, t: usize) -> PyResult<(Vec<u8>, Vec<u8>)> {
        let pair = belief_pair(b1, b2)?;
        let gamma = self
            .inner
            .policy
            .decide_comm(t, &pair, ConstraintState::INITIAL)
            .map_err(err)?;
        let [n1, n2] = pair.lens();
        Ok((
            (0..n1).map(|x| gamma.0[0].eval(x)).collect(),
            (0..n2).map(|x| gamma.0[1].eval(x)).collect(),
        ))
    }

    /// Actions per local state for each agent at step `t`, given the
    /// post-communication beliefs.
    #[pyo3(signature = (b1, b2, t=1))]
    fn decide_ctrl(
        &self,
        b1: Vec<f64>,
        b2: Vec<f64>,
        t: usize,
    ) -> PyResult<(Vec<usize>, Vec<usize>)> {
        let pair = belief_pair(b1, b2)?;
        let lambda = self
            .inner
            .policy
            .decide_ctrl(t, &pair, ConstraintState::INITIAL)
            .map_err(err)?;
        Ok((lambda.0[0].actions.clone(), lambda.0[1].actions.clone()))
    }

    /// Monte Carlo evaluation; returns the summary as a dict.
    #[pyo3(signature = (episodes=10_000, seed=0, tail_tol=0.05))]
    fn simulate<'py>(
        &self,
        py: Python<'py>,
        episodes: usize,
        seed: u64,
        tail_tol: f64,
    ) -> PyResult<Bound<'py, PyDict>> {
        let opts = SimOptions {
            episodes,
            seed,
            tail_tolerance: tail_tol,
            ..Default::default()
        };
        let (s, _) = exec::simulate(&self.inner.policy, opts).map_err(err)?;
        let d = PyDict::new(py);
        d.set_item("episodes", s.episodes)?;
        d.set_item("seed", s.seed)?;
        d.set_item("horizon", s.horizon)?;
        d.set_item("tail_bound", s.tail_bound)?;
        d.set_item("mean", s.mean)?;
        d.set_item("std_error", s.std_error)?;
        d.set_item("comm_frequency", s.comm_frequency)?;
        Ok(d)
    }
}

fn options(grid: usize, vi_tol: Option<f64>) -> SolveOptions {
    let mut opts = SolveOptions::grid(grid);
    opts.grid.tolerance = vi_tol;
    opts
}

/// Optimal communication and control for the scenario.
#[pyfunction]
#[pyo3(signature = (scenario, grid=201, vi_tol=None))]
fn solve(
    py: Python<'_>,
    scenario: &PyScenario,
    grid: usize,
    vi_tol: Option<f64>,
) -> PyResult<PySolution> {
    let s = scenario.inner.clone();
    py.detach(|| solver::solve(&s, options(grid, vi_tol)))
        .map(|inner| PySolution { inner })
        .map_err(err)
}

#[pyfunction]
#[pyo3(signature = (scenario, grid=201, vi_tol=None))]
fn baseline_never(
    py: Python<'_>,
    scenario: &PyScenario,
    grid: usize,
    vi_tol: Option<f64>,
) -> PyResult<PySolution> {
    let s = scenario.inner.clone();
    py.detach(|| solver::baseline_never(&s, options(grid, vi_tol)))
        .map(|inner| PySolution { inner })
        .map_err(err)
}

#[pyfunction]
#[pyo3(signature = (scenario, grid=201, vi_tol=None))]
fn baseline_always(
    py: Python<'_>,
    scenario: &PyScenario,
    grid: usize,
    vi_tol: Option<f64>,
) -> PyResult<PySolution> {
    let s = scenario.inner.clone();
    py.detach(|| solver::baseline_always(&s, options(grid, vi_tol)))
        .map(|inner| PySolution { inner })
        .map_err(err)
}

/// Exhaustive single-step optimum over decentralized strategies.
#[pyfunction]
fn brute_force_t1(scenario: &PyScenario) -> PyResult<f64> {
    exec::brute_force_t1(&scenario.inner).map_err(err)
}

/// Exhaustive two-step coordinator tree search.
#[pyfunction]
fn brute_force_t2(scenario: &PyScenario) -> PyResult<f64> {
    exec::brute_force_t2(&scenario.inner).map_err(err)
}

/// The coordinator problem as flat POMDP text.
#[pyfunction]
fn export_pomdp(scenario: &PyScenario) -> PyResult<String> {
    FlatPomdp::from_scenario(&scenario.inner)
        .map(|p| p.to_text())
        .map_err(err)
}

#[pymodule]
fn commplan_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyScenario>()?;
    m.add_class::<PySolution>()?;
    m.add_function(wrap_pyfunction!(solve, m)?)?;
    m.add_function(wrap_pyfunction!(baseline_never, m)?)?;
    m.add_function(wrap_pyfunction!(baseline_always, m)?)?;
    m.add_function(wrap_pyfunction!(brute_force_t1, m)?)?;
    m.add_function(wrap_pyfunction!(brute_force_t2, m)?)?;
    m.add_function(wrap_pyfunction!(export_pomdp, m)?)?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}
