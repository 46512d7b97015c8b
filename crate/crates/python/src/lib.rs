//! Python bindings: the `topk_walk` extension module.

use pyo3::exceptions::{PyIOError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use topk_walk::analytics::{self, CountMode, InitialDist, MaxDegreeStatistic};
use topk_walk::generators::{self, ConfigModelConfig, PaConfig, ParetoTail};
use topk_walk::walk::{DEFAULT_MAX_STEPS, DEFAULT_Q, DEFAULT_TRANSIENT};
use topk_walk::{detect_with_rule, Error, NodeId, SamplingMode, StopRule, WalkConfig};

fn to_py(e: Error) -> PyErr {
    match e {
        Error::Io(e) => PyIOError::new_err(e.to_string()),
        Error::Stuck { .. } | Error::Timeout { .. } | Error::UnreachableTarget { .. } => {
            PyRuntimeError::new_err(e.to_string())
        }
        e => PyValueError::new_err(e.to_string()),
    }
}

fn sampling_mode(mode: &str, q: f64, transient: u64, burn_in: u64) -> Result<SamplingMode, String> {
    match mode {
        "everystep" => Ok(SamplingMode::EveryStep),
        "thinned" => Ok(SamplingMode::Thinned { transient, q }),
        "restart" => Ok(SamplingMode::Restart { burn_in }),
        other => Err(format!("unknown mode {other:?}; expected everystep, thinned or restart")),
    }
}

fn stop_rule(rule: &str, threshold: f64, k: usize) -> Result<StopRule, String> {
    let whole = |what: &str| {
        if threshold >= 1.0 && threshold.fract() == 0.0 {
            Ok(threshold as u64)
        } else {
            Err(format!("{what} must be a positive integer, got {threshold}"))
        }
    };
    match rule {
        "fixed" => Ok(StopRule::FixedM(whole("m")?)),
        "r0" => Ok(StopRule::Rule0 { a_bar: threshold }),
        "r1" => StopRule::rule1_from_a_bar(k, threshold).map_err(|e| e.to_string()),
        "r1-x0" => Ok(StopRule::Rule1 { x0: whole("x0")? }),
        "r2" => Ok(StopRule::Rule2 { b_bar: threshold }),
        other => Err(format!("unknown rule {other:?}; expected fixed, r0, r1, r1-x0 or r2")),
    }
}

/// An undirected simple graph.
#[pyclass(name = "Graph", module = "topk_walk", frozen)]
struct PyGraph {
    inner: topk_walk::Graph,
}

impl PyGraph {
    fn alpha_or_avg(&self, alpha: Option<f64>) -> f64 {
        alpha.unwrap_or_else(|| self.inner.average_degree())
    }

    fn node(&self, original: u64) -> PyResult<NodeId> {
        self.inner
            .dense_id(original)
            .ok_or_else(|| PyValueError::new_err(format!("node {original} does not occur in the graph")))
    }

    fn max_node(&self) -> NodeId {
        self.inner.max_degree_node().expect("graphs are non-empty").node
    }
}

#[pymethods]
impl PyGraph {
    /// Graph on nodes 0..n from (u, v) pairs.
    #[staticmethod]
    fn from_edges(n: usize, edges: Vec<(usize, usize)>) -> PyResult<Self> {
        Ok(PyGraph { inner: topk_walk::Graph::from_edges(n, edges).map_err(to_py)? })
    }

    /// Graph from edge-list text, one `u v` pair per line.
    #[staticmethod]
    #[pyo3(signature = (text, symmetrize = false))]
    fn from_edge_list(text: &str, symmetrize: bool) -> PyResult<Self> {
        Ok(PyGraph { inner: topk_walk::Graph::ingest_str(text, symmetrize).map_err(to_py)? })
    }

    /// Edge list or binary cache on disk.
    #[staticmethod]
    #[pyo3(signature = (path, symmetrize = false))]
    fn load(path: &str, symmetrize: bool) -> PyResult<Self> {
        Ok(PyGraph { inner: topk_walk::Graph::load(path, symmetrize).map_err(to_py)? })
    }

    /// Preferential attachment graph.
    #[staticmethod]
    #[pyo3(signature = (n, edges_per_node = 1, attractiveness = 0.5, seed = 0))]
    fn preferential_attachment(n: usize, edges_per_node: usize, attractiveness: f64, seed: u64) -> PyResult<Self> {
        let cfg = PaConfig::new(n, edges_per_node, attractiveness, seed);
        Ok(PyGraph { inner: generators::generate_pa(&cfg).map_err(to_py)? })
    }

    /// Erased configuration model with Pareto-tailed degrees.
    #[staticmethod]
    #[pyo3(signature = (n, gamma, c, x_prime = None, seed = 0))]
    fn configuration_model(n: usize, gamma: f64, c: f64, x_prime: Option<f64>, seed: u64) -> PyResult<Self> {
        let x_prime = x_prime.unwrap_or_else(|| ParetoTail::min_cutoff(gamma, c));
        let tail = ParetoTail::new(gamma, c, x_prime).map_err(to_py)?;
        let g = generators::generate_config_model(&ConfigModelConfig { n, tail, seed }).map_err(to_py)?;
        Ok(PyGraph { inner: g })
    }

    #[getter]
    fn n(&self) -> usize {
        self.inner.n()
    }

    #[getter]
    fn m_edges(&self) -> usize {
        self.inner.m_edges()
    }

    #[getter]
    fn average_degree(&self) -> f64 {
        self.inner.average_degree()
    }

    fn degree(&self, node: usize) -> PyResult<usize> {
        self.inner.degree(node).map_err(to_py)
    }

    fn degrees(&self) -> Vec<u32> {
        self.inner.degrees().to_vec()
    }

    fn original_ids(&self) -> Vec<u64> {
        self.inner.original_ids().to_vec()
    }

    fn neighbors(&self, node: usize) -> PyResult<Vec<u32>> {
        if node >= self.inner.n() {
            return Err(to_py(Error::NodeOutOfRange { node, n: self.inner.n() }));
        }
        Ok(self.inner.neighbors(node).to_vec())
    }

    /// The k largest degrees as (node, degree), ties broken by lower id.
    fn exact_top_k(&self, k: usize) -> PyResult<Vec<(usize, usize)>> {
        let top = self.inner.exact_top_k(k).map_err(to_py)?;
        Ok(top.into_iter().map(|r| (r.node, r.degree)).collect())
    }

    fn is_connected(&self) -> bool {
        self.inner.is_connected()
    }

    fn to_edge_list(&self) -> String {
        self.inner.to_edge_list_string()
    }

    fn save_binary(&self, path: &str) -> PyResult<()> {
        let file = std::fs::File::create(path)?;
        self.inner.write_binary(file).map_err(to_py)
    }

    /// Stationary probabilities; alpha defaults to the average degree.
    #[pyo3(signature = (alpha = None))]
    fn stationary(&self, alpha: Option<f64>) -> PyResult<Vec<f64>> {
        Ok(analytics::stationary(&self.inner, self.alpha_or_avg(alpha)).map_err(to_py)?.probs)
    }

    #[pyo3(signature = (alpha = None))]
    fn jump_probability(&self, alpha: Option<f64>) -> PyResult<f64> {
        analytics::jump_probability(&self.inner, self.alpha_or_avg(alpha)).map_err(to_py)
    }

    /// Expected return time to the largest-degree node.
    #[pyo3(signature = (alpha = None))]
    fn return_time(&self, alpha: Option<f64>) -> PyResult<f64> {
        analytics::expected_return_time_max(&self.inner, self.alpha_or_avg(alpha)).map_err(to_py)
    }

    /// Exact expected hitting time. `nu` is "uniform", "others" or a node id.
    #[pyo3(signature = (alpha = None, target = None, nu = None))]
    fn hitting_time(&self, alpha: Option<f64>, target: Option<u64>, nu: Option<&Bound<'_, PyAny>>) -> PyResult<f64> {
        let target = match target {
            Some(id) => self.node(id)?,
            None => self.max_node(),
        };
        let init = match nu {
            None => InitialDist::Uniform,
            Some(v) => {
                if let Ok(id) = v.extract::<u64>() {
                    InitialDist::Node(self.node(id)?)
                } else {
                    match v.extract::<String>()?.as_str() {
                        "uniform" => InitialDist::Uniform,
                        "others" => InitialDist::UniformNonTarget,
                        other => return Err(PyValueError::new_err(format!("unknown initial law {other:?}"))),
                    }
                }
            }
        };
        analytics::hitting_time_exact(&self.inner, self.alpha_or_avg(alpha), target, &init).map_err(to_py)
    }

    /// Expected hitting time of `target` from every node.
    #[pyo3(signature = (alpha = None, target = None))]
    fn hitting_times(&self, alpha: Option<f64>, target: Option<u64>) -> PyResult<Vec<f64>> {
        let target = match target {
            Some(id) => self.node(id)?,
            None => self.max_node(),
        };
        analytics::hitting_times_exact(&self.inner, self.alpha_or_avg(alpha), target).map_err(to_py)
    }

    /// Leading-order hitting time of the largest-degree node.
    #[pyo3(signature = (alpha = None))]
    fn hitting_time_asymptotic(&self, alpha: Option<f64>) -> PyResult<f64> {
        analytics::hitting_time_asymptotic(&self.inner, self.alpha_or_avg(alpha)).map_err(to_py)
    }

    /// Stationary probabilities of the true top-k nodes.
    #[pyo3(signature = (k, alpha = None))]
    fn top_k_stationary(&self, k: usize, alpha: Option<f64>) -> PyResult<Vec<f64>> {
        analytics::top_k_stationary(&self.inner, self.alpha_or_avg(alpha), k).map_err(to_py)
    }

    /// Runs the detector until `rule` fires. `threshold` is m for "fixed",
    /// ā for "r0" and "r1", x0 for "r1-x0" and b̄ for "r2".
    #[pyo3(signature = (
        k, rule = "r2", threshold = 7.0, alpha = None, mode = "thinned", q = DEFAULT_Q,
        transient = DEFAULT_TRANSIENT, burn_in = 100, seed = 0, max_steps = DEFAULT_MAX_STEPS
    ))]
    #[allow(clippy::too_many_arguments)]
    fn detect(
        &self,
        py: Python<'_>,
        k: usize,
        rule: &str,
        threshold: f64,
        alpha: Option<f64>,
        mode: &str,
        q: f64,
        transient: u64,
        burn_in: u64,
        seed: u64,
        max_steps: u64,
    ) -> PyResult<Detection> {
        let rule = stop_rule(rule, threshold, k).map_err(PyValueError::new_err)?;
        let mode = sampling_mode(mode, q, transient, burn_in).map_err(PyValueError::new_err)?;
        let cfg = WalkConfig::new(self.alpha_or_avg(alpha), seed).with_mode(mode).with_max_steps(max_steps);
        let d = py.detach(|| detect_with_rule(&self.inner, &cfg, k, rule)).map_err(to_py)?;
        Ok(Detection {
            entries: d
                .final_list
                .entries()
                .iter()
                .map(|c| (self.inner.original_id(c.node), c.degree, c.hits))
                .collect(),
            samples: d.fired_at_samples,
            raw_steps: d.raw_steps,
            fired: d.fired,
            rule: rule.id().to_string(),
            threshold: rule.threshold(),
        })
    }

    fn __repr__(&self) -> String {
        format!("Graph(n={}, m_edges={})", self.inner.n(), self.inner.m_edges())
    }
}

/// Outcome of `Graph.detect`.
#[pyclass(module = "topk_walk", frozen, get_all)]
struct Detection {
    /// (original id, degree, hits) in rank order.
    entries: Vec<(u64, usize, u64)>,
    samples: u64,
    raw_steps: u64,
    fired: bool,
    rule: String,
    threshold: f64,
}

#[pymethods]
impl Detection {
    fn __repr__(&self) -> String {
        format!(
            "Detection(rule={}, samples={}, raw_steps={}, fired={}, entries={})",
            self.rule,
            self.samples,
            self.raw_steps,
            self.fired,
            self.entries.len()
        )
    }
}

/// Predicted largest degrees of a Pareto-tailed graph of n nodes.
#[pyfunction]
#[pyo3(signature = (gamma, c, n, k = 1, stat = "median"))]
fn evt_predict<'py>(py: Python<'py>, gamma: f64, c: f64, n: u64, k: usize, stat: &str) -> PyResult<Bound<'py, PyDict>> {
    let stat = match stat {
        "median" => MaxDegreeStatistic::Median,
        "mode" => MaxDegreeStatistic::Mode,
        "mean" => MaxDegreeStatistic::Mean,
        other => return Err(PyValueError::new_err(format!("unknown statistic {other:?}"))),
    };
    let tail = ParetoTail::new(gamma, c, ParetoTail::min_cutoff(gamma, c)).map_err(to_py)?;
    let p = analytics::evt_predict_with(&tail, n, k, stat).map_err(to_py)?;
    let out = PyDict::new(py);
    out.set_item("delta", p.delta)?;
    out.set_item("a_n", p.a_n)?;
    out.set_item("b_n", p.b_n)?;
    out.set_item("d1", p.d1)?;
    out.set_item("dj", p.dj)?;
    Ok(out)
}

/// Smallest x with (1 - e^-x)^k >= 1 - a_bar/2.
#[pyfunction]
fn rule1_threshold(k: usize, a_bar: f64) -> PyResult<u64> {
    topk_walk::detector::rule1_threshold(k, a_bar).map_err(to_py)
}

/// Raw (unclamped) Poisson bound on missing part of the top-k list.
#[pyfunction]
fn poisson_error_bound(pis: Vec<f64>, m: u64) -> f64 {
    analytics::poisson_error_bound(&pis, m)
}

#[pyfunction]
#[pyo3(signature = (pis, m, mode = "exact"))]
fn expected_correct_count(pis: Vec<f64>, m: u64, mode: &str) -> PyResult<f64> {
    let mode = match mode {
        "exact" => CountMode::Exact,
        "poisson" => CountMode::Poisson,
        other => return Err(PyValueError::new_err(format!("unknown mode {other:?}"))),
    };
    Ok(analytics::expected_correct_count(&pis, m, mode))
}

#[pymodule]
#[pyo3(name = "topk_walk")]
fn topk_walk_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyGraph>()?;
    m.add_class::<Detection>()?;
    m.add_function(wrap_pyfunction!(evt_predict, m)?)?;
    m.add_function(wrap_pyfunction!(rule1_threshold, m)?)?;
    m.add_function(wrap_pyfunction!(poisson_error_bound, m)?)?;
    m.add_function(wrap_pyfunction!(expected_correct_count, m)?)?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}
