//! Python bindings: sampling, compression and statistics.

use girg::model::{Alpha, GirgParams, WeightSequence, WeightSpec};
use girg::sampler::SamplerOptions;
use girg::stats::{compute_stats, StatsOptions};
use girg::succinct::encode_graph;
use girg::{GirgError as CoreError, HyperbolicParams, Positions};
use pyo3::create_exception;
use pyo3::exceptions::{PyException, PyIndexError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyBytes;

create_exception!(girg_py, GirgError, PyException, "Sampling, decoding or statistics failure.");

fn to_py(e: CoreError) -> PyErr {
    match e {
        CoreError::Usage(_) => PyValueError::new_err(e.to_string()),
        other => GirgError::new_err(other.to_string()),
    }
}

fn alpha_from(alpha: f64) -> Alpha {
    if alpha.is_infinite() {
        Alpha::Infinite
    } else {
        Alpha::Finite(alpha)
    }
}

fn check_vertex(n: usize, v: usize) -> PyResult<()> {
    if v >= n {
        return Err(PyIndexError::new_err(format!("vertex {v} outside 0..{n}")));
    }
    Ok(())
}

/// Undirected simple graph on vertices `0..n`.
#[pyclass(name = "Graph", module = "girg_py", frozen, skip_from_py_object)]
#[derive(Clone)]
pub struct PyGraph {
    inner: girg::Graph,
}

#[pymethods]
impl PyGraph {
    #[new]
    fn new(n: usize, edges: Vec<(u32, u32)>) -> PyResult<Self> {
        let inner = girg::Graph::from_edges(n, edges).map_err(to_py)?;
        Ok(PyGraph { inner })
    }

    #[getter]
    fn n(&self) -> usize {
        self.inner.n()
    }

    #[getter]
    fn num_edges(&self) -> usize {
        self.inner.num_edges()
    }

    /// Sorted `(u, v)` pairs with `u < v`.
    fn edges(&self) -> Vec<(u32, u32)> {
        self.inner.edges().to_vec()
    }

    fn degree(&self, v: usize) -> PyResult<usize> {
        check_vertex(self.inner.n(), v)?;
        Ok(self.inner.degree(v))
    }

    fn degrees(&self) -> Vec<usize> {
        self.inner.degrees()
    }

    fn neighbors(&self, v: usize) -> PyResult<Vec<u32>> {
        check_vertex(self.inner.n(), v)?;
        Ok(self.inner.neighbors(v).to_vec())
    }

    fn has_edge(&self, u: usize, v: usize) -> PyResult<bool> {
        check_vertex(self.inner.n(), u)?;
        check_vertex(self.inner.n(), v)?;
        Ok(self.inner.has_edge(u, v))
    }

    fn global_clustering(&self, py: Python<'_>) -> f64 {
        py.detach(|| girg::stats::global_clustering(&self.inner))
    }

    #[pyo3(signature = (k_min = 10))]
    fn tail_exponent(&self, k_min: usize) -> PyResult<f64> {
        girg::stats::tail_exponent_estimate(&self.inner, k_min).map_err(to_py)
    }

    /// Component sizes, largest first.
    fn component_sizes(&self) -> Vec<usize> {
        girg::stats::connected_components(&self.inner)
    }

    #[pyo3(signature = (pairs = 1000, seed = 0))]
    fn average_distance(&self, py: Python<'_>, pairs: usize, seed: u64) -> PyResult<f64> {
        py.detach(|| girg::stats::average_distance_sample(&self.inner, pairs, seed))
            .map_err(to_py)
    }

    /// Statistics report as a JSON string.
    #[pyo3(signature = (distance_pairs = 1000, tail_k_min = 10, seed = 0))]
    fn stats_json(
        &self,
        py: Python<'_>,
        distance_pairs: usize,
        tail_k_min: usize,
        seed: u64,
    ) -> PyResult<String> {
        let opts = StatsOptions {
            distance_pairs: (distance_pairs > 0).then_some(distance_pairs),
            tail_k_min: Some(tail_k_min),
            seed,
            ..StatsOptions::default()
        };
        py.detach(|| compute_stats(&self.inner, None, &opts))
            .map(|r| r.to_json())
            .map_err(to_py)
    }

    fn __len__(&self) -> usize {
        self.inner.n()
    }

    fn __eq__(&self, other: &Self) -> bool {
        self.inner == other.inner
    }

    fn __repr__(&self) -> String {
        format!("Graph(n={}, m={})", self.inner.n(), self.inner.num_edges())
    }
}

/// A sampled GIRG: positions on the torus, weights and edges.
#[pyclass(name = "GirgSample", module = "girg_py", frozen)]
pub struct PyGirgSample {
    positions: Positions,
    weights: WeightSequence,
    #[pyo3(get)]
    graph: Py<PyGraph>,
}

#[pymethods]
impl PyGirgSample {
    #[getter]
    fn dim(&self) -> usize {
        self.positions.dim()
    }

    fn positions(&self) -> Vec<Vec<f64>> {
        self.positions.iter().map(|p| p.to_vec()).collect()
    }

    fn weights(&self) -> Vec<f64> {
        self.weights.weights().to_vec()
    }

    /// Edges crossing the grid of side `1/mu`.
    fn grid_cut(&self, mu: u64) -> PyResult<usize> {
        girg::stats::grid_cut_count(&self.graph.get().inner, &self.positions, mu).map_err(to_py)
    }

    /// Compresses the graph, renumbering vertices by their positions.
    fn compress(&self) -> PyResult<PyCompressedGraph> {
        let inner = encode_graph(&self.graph.get().inner, &self.positions).map_err(to_py)?;
        Ok(PyCompressedGraph { inner })
    }
}

/// Samples a GIRG. `alpha = float("inf")` selects the threshold model.
/// Without `weights`, weights are drawn from the Pareto law with minimum
/// `w_min`.
#[pyfunction]
#[pyo3(signature = (n, d = 2, alpha = 2.0, beta = 2.5, w_min = 1.0, weights = None, seed = 0, threads = 1))]
#[allow(clippy::too_many_arguments)]
fn sample_girg(
    py: Python<'_>,
    n: usize,
    d: usize,
    alpha: f64,
    beta: f64,
    w_min: f64,
    weights: Option<Vec<f64>>,
    seed: u64,
    threads: usize,
) -> PyResult<PyGirgSample> {
    let params = GirgParams::new(d, alpha_from(alpha), beta).map_err(to_py)?;
    let ws = match weights {
        Some(w) => {
            if w.len() != n {
                return Err(PyValueError::new_err(format!("{} weights for n = {n}", w.len())));
            }
            WeightSequence::new(w).map_err(to_py)?
        }
        None => WeightSpec::Sampled { w_min }.build(n, beta, seed).map_err(to_py)?,
    };
    let options = SamplerOptions {
        threads: threads.max(1),
        ..SamplerOptions::default()
    };
    let sample = py
        .detach(|| girg::sample_girg(&params, &ws, seed, &options))
        .map_err(to_py)?;
    Ok(PyGirgSample {
        positions: sample.positions,
        weights: ws,
        graph: Py::new(py, PyGraph { inner: sample.graph })?,
    })
}

/// Samples the plain `O(n^2)` reference model on the same inputs as
/// [`sample_girg`].
#[pyfunction]
#[pyo3(signature = (n, d = 2, alpha = 2.0, beta = 2.5, w_min = 1.0, seed = 0))]
fn sample_girg_naive(
    py: Python<'_>,
    n: usize,
    d: usize,
    alpha: f64,
    beta: f64,
    w_min: f64,
    seed: u64,
) -> PyResult<PyGirgSample> {
    let params = GirgParams::new(d, alpha_from(alpha), beta).map_err(to_py)?;
    let ws = WeightSpec::Sampled { w_min }.build(n, beta, seed).map_err(to_py)?;
    let positions = girg::sampler::sample_positions(n, d, seed).map_err(to_py)?;
    let graph = py
        .detach(|| girg::sample_girg_naive(&params, &ws, &positions, seed))
        .map_err(to_py)?;
    Ok(PyGirgSample {
        positions,
        weights: ws,
        graph: Py::new(py, PyGraph { inner: graph })?,
    })
}

/// Samples a hyperbolic random graph; returns `(graph, [(r, phi), ...])`.
#[pyfunction]
#[pyo3(signature = (n, alpha_h = 0.75, c_h = 0.0, t_h = 0.0, seed = 0, naive = false))]
fn sample_hyperbolic(
    py: Python<'_>,
    n: usize,
    alpha_h: f64,
    c_h: f64,
    t_h: f64,
    seed: u64,
    naive: bool,
) -> PyResult<(PyGraph, Vec<(f64, f64)>)> {
    let hp = HyperbolicParams::new(n, alpha_h, c_h, t_h).map_err(to_py)?;
    let sample = py
        .detach(|| {
            if naive {
                girg::hyperbolic::sample_hrg_naive(&hp, seed)
            } else {
                girg::hyperbolic::sample_hrg_fast(&hp, seed, &SamplerOptions::default())
            }
        })
        .map_err(to_py)?;
    let points = sample.points.iter().map(|p| (p.r, p.phi)).collect();
    Ok((PyGraph { inner: sample.graph }, points))
}

/// Compressed adjacency with constant-time degree and neighbor queries.
/// Query ids are the renumbered ids; `order()[i]` is the original id.
#[pyclass(name = "CompressedGraph", module = "girg_py", frozen)]
pub struct PyCompressedGraph {
    inner: girg::CompressedGraph,
}

#[pymethods]
impl PyCompressedGraph {
    #[staticmethod]
    fn encode(graph: &PyGraph, positions: Vec<Vec<f64>>) -> PyResult<Self> {
        let d = positions.first().map_or(1, |p| p.len());
        let coords: Vec<f64> = positions.into_iter().flatten().collect();
        let pos = Positions::new(d, coords).map_err(to_py)?;
        let inner = encode_graph(&graph.inner, &pos).map_err(to_py)?;
        Ok(PyCompressedGraph { inner })
    }

    #[staticmethod]
    fn from_bytes(data: &[u8]) -> PyResult<Self> {
        let inner = girg::CompressedGraph::from_bytes(data).map_err(to_py)?;
        Ok(PyCompressedGraph { inner })
    }

    fn to_bytes<'py>(&self, py: Python<'py>) -> Bound<'py, PyBytes> {
        PyBytes::new(py, &self.inner.to_bytes())
    }

    #[getter]
    fn n(&self) -> usize {
        self.inner.n()
    }

    #[getter]
    fn num_edges(&self) -> usize {
        self.inner.num_edges()
    }

    #[getter]
    fn size_bits(&self) -> usize {
        self.inner.size_bits()
    }

    fn order(&self) -> Vec<u32> {
        self.inner.order().order.clone()
    }

    fn degree(&self, i: usize) -> PyResult<usize> {
        self.inner.degree(i).map_err(to_py)
    }

    fn neighbor(&self, i: usize, s: usize) -> PyResult<usize> {
        self.inner.neighbor(i, s).map_err(to_py)
    }

    fn neighbors(&self, i: usize) -> PyResult<Vec<usize>> {
        self.inner.neighbors(i).map_err(to_py)
    }

    /// Decodes to the original labeling.
    fn decode(&self) -> PyResult<PyGraph> {
        let inner = self.inner.decode().map_err(to_py)?;
        Ok(PyGraph { inner })
    }

    fn __repr__(&self) -> String {
        format!(
            "CompressedGraph(n={}, m={}, bits={})",
            self.inner.n(),
            self.inner.num_edges(),
            self.inner.size_bits()
        )
    }
}

#[pymodule]
fn girg_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("GirgError", m.py().get_type::<GirgError>())?;
    m.add_class::<PyGraph>()?;
    m.add_class::<PyGirgSample>()?;
    m.add_class::<PyCompressedGraph>()?;
    m.add_function(wrap_pyfunction!(sample_girg, m)?)?;
    m.add_function(wrap_pyfunction!(sample_girg_naive, m)?)?;
    m.add_function(wrap_pyfunction!(sample_hyperbolic, m)?)?;
    Ok(())
}
