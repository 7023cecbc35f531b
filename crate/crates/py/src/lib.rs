//! Python bindings: subgoal graphs, structure search, cost analysis, and
//! the simulated learning loop.

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;

use hrc_core::ascm::AscmConfig;
use hrc_core::cost::{expected_cost_exact, monte_carlo_cost, CostParams};
use hrc_core::graph::{
    assign_kinds, discoverable_parents, gen_semi_er, gen_tree, shd, KindMode, NodeKind,
    SubgoalGraph,
};
use hrc_core::hrc::{
    graph_search, run_hrc_gridworld, run_hrc_simulated, DiscoveryMode, GraphSearchConfig,
    GridHrcConfig, HrcConfig,
};
use hrc_core::strategy::StrategyKind;

fn err(e: hrc_core::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn parse_strategy(s: &str) -> PyResult<StrategyKind> {
    s.parse().map_err(err)
}

fn parse_kinds(s: &str) -> PyResult<KindMode> {
    match s {
        "all-or" => Ok(KindMode::AllOr),
        "all-and" => Ok(KindMode::AllAnd),
        "random" => Ok(KindMode::Random),
        other => Err(PyValueError::new_err(format!("unknown kinds '{other}'"))),
    }
}

/// A subgoal dependency structure: a DAG whose nodes carry an AND or OR
/// achievement gate, with one designated final goal.
#[pyclass(name = "Graph", from_py_object)]
#[derive(Clone)]
struct PyGraph {
    inner: SubgoalGraph,
}

#[pymethods]
impl PyGraph {
    #[new]
    fn new(parents: Vec<Vec<usize>>, kinds: Vec<String>, final_goal: usize) -> PyResult<Self> {
        let kinds: Vec<NodeKind> = kinds
            .iter()
            .map(|k| match k.as_str() {
                "AND" => Ok(NodeKind::And),
                "OR" => Ok(NodeKind::Or),
                other => Err(PyValueError::new_err(format!("unknown kind '{other}'"))),
            })
            .collect::<PyResult<_>>()?;
        Ok(PyGraph { inner: SubgoalGraph::new(parents, kinds, final_goal).map_err(err)? })
    }

    #[staticmethod]
    fn from_text(text: &str) -> PyResult<Self> {
        Ok(PyGraph { inner: SubgoalGraph::from_text(text).map_err(err)? })
    }

    #[staticmethod]
    #[pyo3(signature = (n, b=3, kinds="all-or", seed=0))]
    fn tree(n: usize, b: usize, kinds: &str, seed: u64) -> PyResult<Self> {
        let g = gen_tree(n, b, seed).map_err(err)?;
        Ok(PyGraph { inner: assign_kinds(&g, parse_kinds(kinds)?, seed + 1) })
    }

    #[staticmethod]
    #[pyo3(signature = (n, c=0.6, kinds="random", seed=0))]
    fn semi_er(n: usize, c: f64, kinds: &str, seed: u64) -> PyResult<Self> {
        let g = gen_semi_er(n, c, seed).map_err(err)?;
        Ok(PyGraph { inner: assign_kinds(&g, parse_kinds(kinds)?, seed + 1) })
    }

    fn to_text(&self) -> String {
        self.inner.to_text()
    }

    #[getter]
    fn n(&self) -> usize {
        self.inner.n()
    }

    #[getter]
    fn final_goal(&self) -> usize {
        self.inner.final_goal()
    }

    fn parents(&self, node: usize) -> PyResult<Vec<usize>> {
        if node >= self.inner.n() {
            return Err(PyValueError::new_err(format!("node {node} out of range")));
        }
        Ok(self.inner.parents(node).to_vec())
    }

    fn kind(&self, node: usize) -> PyResult<String> {
        if node >= self.inner.n() {
            return Err(PyValueError::new_err(format!("node {node} out of range")));
        }
        Ok(self.inner.kind(node).as_str().to_string())
    }

    fn edges(&self) -> Vec<(usize, usize)> {
        self.inner.edges().into_iter().collect()
    }

    fn roots(&self) -> Vec<usize> {
        self.inner.roots()
    }

    fn ancestors(&self, node: usize) -> PyResult<Vec<usize>> {
        if node >= self.inner.n() {
            return Err(PyValueError::new_err(format!("node {node} out of range")));
        }
        Ok(self.inner.ancestors(node).into_iter().collect())
    }

    fn has_path(&self, from: usize, to: usize) -> bool {
        self.inner.has_path(from, to)
    }

    /// Parent sets identifiable from mechanism-supported data.
    fn discoverable_parents(&self) -> PyResult<Vec<Vec<usize>>> {
        discoverable_parents(&self.inner).map_err(err)
    }

    fn __repr__(&self) -> String {
        format!(
            "Graph(n={}, edges={}, final_goal={})",
            self.inner.n(),
            self.inner.edge_count(),
            self.inner.final_goal()
        )
    }
}

/// Structural Hamming distance between two edge sets.
#[pyfunction]
fn graph_shd(estimate: &PyGraph, truth: &PyGraph) -> (usize, usize, usize) {
    let report = shd(&estimate.inner.edges(), &truth.inner.edges());
    (report.missing, report.extra, report.shd)
}

/// Expand subgoals on the true structure under the chosen selection rule.
#[pyfunction]
#[pyo3(signature = (graph, strategy="causal-effect", seed=0, reveal_error=false, t=1.0, t_prime=1.0, w=1.0))]
fn search<'py>(
    py: Python<'py>,
    graph: &PyGraph,
    strategy: &str,
    seed: u64,
    reveal_error: bool,
    t: f64,
    t_prime: f64,
    w: f64,
) -> PyResult<Bound<'py, PyDict>> {
    let mut cfg = GraphSearchConfig::new(parse_strategy(strategy)?, seed);
    cfg.reveal_error = reveal_error;
    cfg.cost = Some(CostParams { t, t_prime, w });
    let res = graph_search(&graph.inner, &cfg).map_err(err)?;
    let d = PyDict::new(py);
    d.set_item("reached", res.reached)?;
    d.set_item("expansion_order", res.expansion_order)?;
    d.set_item("intervention_set", res.intervention_set.into_iter().collect::<Vec<_>>())?;
    d.set_item("additions", res.additions)?;
    d.set_item("cost", res.cost)?;
    Ok(d)
}

/// Closed-form expected total training cost of a strategy.
#[pyfunction]
#[pyo3(signature = (graph, strategy="random", t=1.0, t_prime=1.0, w=1.0))]
fn exact_cost(graph: &PyGraph, strategy: &str, t: f64, t_prime: f64, w: f64) -> PyResult<f64> {
    expected_cost_exact(&graph.inner, parse_strategy(strategy)?, &CostParams { t, t_prime, w })
        .map_err(err)
}

/// Monte Carlo estimate of the expected total cost: (mean, stderr).
#[pyfunction]
#[pyo3(signature = (graph, strategy="random", runs=400, seed=0, t=1.0, t_prime=1.0, w=1.0))]
fn mc_cost(
    graph: &PyGraph,
    strategy: &str,
    runs: usize,
    seed: u64,
    t: f64,
    t_prime: f64,
    w: f64,
) -> PyResult<(f64, f64)> {
    let res = monte_carlo_cost(
        &graph.inner,
        parse_strategy(strategy)?,
        &CostParams { t, t_prime, w },
        runs,
        seed,
    )
    .map_err(err)?;
    Ok((res.mean, res.stderr))
}

/// Full simulated learning loop (intervene, discover, level, train).
#[pyfunction]
#[pyo3(signature = (graph, strategy="causal-effect", discovery="ssd-oracle", seed=0, noise_rho=0.0))]
fn run_hrc<'py>(
    py: Python<'py>,
    graph: &PyGraph,
    strategy: &str,
    discovery: &str,
    seed: u64,
    noise_rho: f64,
) -> PyResult<Bound<'py, PyDict>> {
    let discovery: DiscoveryMode = discovery.parse().map_err(err)?;
    let cfg = HrcConfig::new(parse_strategy(strategy)?, discovery, seed);
    let res = run_hrc_simulated(&graph.inner, &AscmConfig::persistent(noise_rho), &cfg)
        .map_err(err)?;
    let report = shd(&res.recovered.edges(), &graph.inner.edges());
    let d = PyDict::new(py);
    d.set_item("reached", res.reached)?;
    d.set_item("expansion_order", res.expansion_order)?;
    d.set_item("recovered_edges", res.recovered.edges().into_iter().collect::<Vec<_>>())?;
    d.set_item("shd", report.shd)?;
    d.set_item("total_probes", res.env_probes)?;
    d.set_item("intervention_probes", res.ledger.intervention_probes)?;
    d.set_item("training_probes", res.ledger.training_probes)?;
    Ok(d)
}

/// Hierarchical learning on an ASCII gridworld map.
#[pyfunction]
#[pyo3(signature = (map="default", strategy="causal-effect", seed=0, train_episodes=400, step_budget=200_000))]
fn run_gridworld<'py>(
    py: Python<'py>,
    map: &str,
    strategy: &str,
    seed: u64,
    train_episodes: usize,
    step_budget: u64,
) -> PyResult<Bound<'py, PyDict>> {
    let map_text = match map {
        "default" => hrc_core::grid::DEFAULT_MAP,
        "mini" => hrc_core::grid::MINI_MAP,
        other => other,
    };
    let mut cfg = GridHrcConfig::new(parse_strategy(strategy)?, seed);
    cfg.train_episodes = train_episodes;
    cfg.step_budget = step_budget;
    let res = run_hrc_gridworld(map_text, &cfg).map_err(err)?;
    let d = PyDict::new(py);
    d.set_item("reached", res.reached)?;
    d.set_item("success_rate", res.success_rate)?;
    d.set_item("primitive_steps", res.primitive_steps)?;
    d.set_item("expansion_order", res.expansion_order)?;
    d.set_item("trained", res.trained.into_iter().collect::<Vec<_>>())?;
    Ok(d)
}

#[pymodule]
fn hrc_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyGraph>()?;
    m.add_function(wrap_pyfunction!(graph_shd, m)?)?;
    m.add_function(wrap_pyfunction!(search, m)?)?;
    m.add_function(wrap_pyfunction!(exact_cost, m)?)?;
    m.add_function(wrap_pyfunction!(mc_cost, m)?)?;
    m.add_function(wrap_pyfunction!(run_hrc, m)?)?;
    m.add_function(wrap_pyfunction!(run_gridworld, m)?)?;
    Ok(())
}
