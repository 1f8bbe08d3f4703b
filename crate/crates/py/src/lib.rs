//! Python bindings: the channel-family type plus the headline analyses
//! (capacities, step-function curves, finite-n bounds, exact tiny games,
//! code construction). Structured reports cross the boundary as JSON
//! strings so the Python side can `json.loads` them without a schema
//! mirror.

use jamgame_core::bounds::{gap_report, BoundParams};
use jamgame_core::capacity::compound_capacity;
use jamgame_core::codes::{evaluate_code, evaluate_split, feinstein_build, split_build};
use jamgame_core::curves;
use jamgame_core::error::Error as CoreError;
use jamgame_core::exact::game_values;
use jamgame_core::prob::Prob;
use jamgame_core::ChannelFamily;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

fn to_py_err(e: CoreError) -> PyErr {
    match e.exit_code() {
        2 => PyValueError::new_err(e.to_string()),
        _ => PyRuntimeError::new_err(e.to_string()),
    }
}

/// A finite family of channels sharing alphabets, indexed by the jammer's
/// state.
#[pyclass(module = "jamgame")]
#[derive(Clone)]
struct Family {
    inner: ChannelFamily,
}

#[pymethods]
impl Family {
    /// Builds a family from a list of row-stochastic matrices
    /// (matrix[input][output]) and optional state labels.
    #[new]
    #[pyo3(signature = (matrices, labels=None))]
    fn new(matrices: Vec<Vec<Vec<f64>>>, labels: Option<Vec<String>>) -> PyResult<Self> {
        let channels = matrices
            .into_iter()
            .map(jamgame_core::Dmc::new)
            .collect::<Result<Vec<_>, _>>()
            .map_err(to_py_err)?;
        let inner = match labels {
            Some(l) => ChannelFamily::new(l, channels),
            None => ChannelFamily::from_channels(channels),
        }
        .map_err(to_py_err)?;
        Ok(Family { inner })
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        Ok(Family { inner: ChannelFamily::from_json(text).map_err(to_py_err)? })
    }

    fn to_json(&self) -> String {
        self.inner.to_json()
    }

    #[getter]
    fn num_states(&self) -> usize {
        self.inner.num_states()
    }

    #[getter]
    fn input_size(&self) -> usize {
        self.inner.input_size()
    }

    #[getter]
    fn output_size(&self) -> usize {
        self.inner.output_size()
    }

    fn labels(&self) -> Vec<String> {
        (0..self.inner.num_states()).map(|t| self.inner.label(t).to_string()).collect()
    }

    fn __repr__(&self) -> String {
        format!(
            "Family(states={}, input={}, output={})",
            self.inner.num_states(),
            self.inner.input_size(),
            self.inner.output_size()
        )
    }
}

/// Compound capacity in bits of a state subset (the whole family by
/// default), with the optimal input distribution.
#[pyfunction]
#[pyo3(signature = (family, states=None, tol=1e-9))]
fn capacity(
    family: &Family,
    states: Option<Vec<usize>>,
    tol: f64,
) -> PyResult<(f64, Vec<f64>)> {
    let subset: Vec<usize> =
        states.unwrap_or_else(|| (0..family.inner.num_states()).collect());
    let res = compound_capacity(&family.inner, &subset, tol).map_err(to_py_err)?;
    Ok((res.value, res.optimal_input.weights().to_vec()))
}

/// All nonempty subset capacities, as (sorted state list, bits) pairs.
#[pyfunction]
#[pyo3(signature = (family, tol=1e-9))]
fn subset_capacities(family: &Family, tol: f64) -> PyResult<Vec<(Vec<usize>, f64)>> {
    let caps = curves::all_subset_capacities(&family.inner, tol).map_err(to_py_err)?;
    let k = family.inner.num_states();
    let mut rows = Vec::new();
    for mask in 1u32..(1 << k) {
        let states: Vec<usize> = (0..k).filter(|&t| mask & (1 << t) != 0).collect();
        let c = caps.get(&states).map_err(to_py_err)?;
        rows.push((states, c));
    }
    Ok(rows)
}

/// The limiting step-function pair as a JSON document (breakpoints, interval
/// values, continuity sides, optimal mixtures).
#[pyfunction]
#[pyo3(signature = (family, tol=1e-9))]
fn curve_json(family: &Family, tol: f64) -> PyResult<String> {
    let pair = curves::build_curves(&family.inner, tol).map_err(to_py_err)?;
    pair.to_json().map_err(to_py_err)
}

/// (lower, upper) game values at rate r bits.
#[pyfunction]
#[pyo3(signature = (family, r, tol=1e-9))]
fn curve_eval(family: &Family, r: f64, tol: f64) -> PyResult<(f64, f64)> {
    let pair = curves::build_curves(&family.inner, tol).map_err(to_py_err)?;
    Ok((pair.lower.eval(r), pair.upper.eval(r)))
}

/// Largest rate whose limiting error stays at or below eps.
#[pyfunction]
#[pyo3(signature = (family, eps, tol=1e-9))]
fn eps_capacity(family: &Family, eps: f64, tol: f64) -> PyResult<f64> {
    let pair = curves::build_curves(&family.inner, tol).map_err(to_py_err)?;
    curves::eps_capacity_compound(&pair, eps).map_err(to_py_err)
}

/// Optimal subset mixture at rate r: ((subset, weight) list, game value).
#[pyfunction]
#[pyo3(signature = (family, r, tol=1e-9))]
fn optimal_mixture(
    family: &Family,
    r: f64,
    tol: f64,
) -> PyResult<(Vec<(Vec<usize>, f64)>, f64)> {
    let caps = curves::all_subset_capacities(&family.inner, tol).map_err(to_py_err)?;
    curves::optimal_pv(&caps, r).map_err(to_py_err)
}

/// Finite-blocklength achievability/converse report at (n, r) as JSON.
#[pyfunction]
#[pyo3(signature = (family, n, r_bits, xi=None, alpha=None, delta=None, gamma=None, seed=7, gap_threshold=None))]
#[allow(clippy::too_many_arguments)]
fn bounds_json(
    family: &Family,
    n: u64,
    r_bits: f64,
    xi: Option<f64>,
    alpha: Option<f64>,
    delta: Option<f64>,
    gamma: Option<f64>,
    seed: u64,
    gap_threshold: Option<f64>,
) -> PyResult<String> {
    let params = BoundParams { alpha, delta, gamma, xi, seed, ..Default::default() };
    let report = gap_report(&family.inner, n, r_bits, &params, gap_threshold)
        .map_err(to_py_err)?;
    serde_json::to_string(&report).map_err(|e| PyRuntimeError::new_err(e.to_string()))
}

/// Exact tiny-game values (brute force, LP relaxation, heuristic) as JSON.
#[pyfunction]
#[pyo3(signature = (family, n=1, m=2, restarts=4, seed=7))]
fn game_values_json(
    family: &Family,
    n: usize,
    m: usize,
    restarts: usize,
    seed: u64,
) -> PyResult<String> {
    let v = game_values(&family.inner, n, m, restarts, seed).map_err(to_py_err)?;
    serde_json::to_string(&v).map_err(|e| PyRuntimeError::new_err(e.to_string()))
}

/// Greedy threshold-decoding code build plus exact evaluation, as JSON.
#[pyfunction]
#[pyo3(signature = (family, n, m, alpha, q=None, tol=1e-9))]
fn feinstein_json(
    family: &Family,
    n: usize,
    m: usize,
    alpha: f64,
    q: Option<Vec<f64>>,
    tol: f64,
) -> PyResult<String> {
    let full: Vec<usize> = (0..family.inner.num_states()).collect();
    let compound = compound_capacity(&family.inner, &full, tol).map_err(to_py_err)?;
    let build =
        feinstein_build(&family.inner, n, m, alpha, &compound.optimal_input)
            .map_err(to_py_err)?;
    let qq = q.map(Prob::new).transpose().map_err(to_py_err)?;
    let evaluation = evaluate_code(&build.code, &family.inner, qq.as_ref()).map_err(to_py_err)?;
    let out = serde_json::json!({ "build": build, "evaluation": evaluation });
    serde_json::to_string(&out).map_err(|e| PyRuntimeError::new_err(e.to_string()))
}

/// Two-phase split code build plus exact evaluation, as JSON.
#[pyfunction]
#[pyo3(signature = (family, n, n1, r_bits, q=None, tol=1e-9))]
fn split_json(
    family: &Family,
    n: usize,
    n1: usize,
    r_bits: f64,
    q: Option<Vec<f64>>,
    tol: f64,
) -> PyResult<String> {
    let build = split_build(&family.inner, n, n1, r_bits, tol).map_err(to_py_err)?;
    let qq = q.map(Prob::new).transpose().map_err(to_py_err)?;
    let evaluation =
        evaluate_split(&build.code, &family.inner, qq.as_ref()).map_err(to_py_err)?;
    let out = serde_json::json!({ "build": build, "evaluation": evaluation });
    serde_json::to_string(&out).map_err(|e| PyRuntimeError::new_err(e.to_string()))
}

#[pymodule]
fn jamgame(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Family>()?;
    m.add_function(wrap_pyfunction!(capacity, m)?)?;
    m.add_function(wrap_pyfunction!(subset_capacities, m)?)?;
    m.add_function(wrap_pyfunction!(curve_json, m)?)?;
    m.add_function(wrap_pyfunction!(curve_eval, m)?)?;
    m.add_function(wrap_pyfunction!(eps_capacity, m)?)?;
    m.add_function(wrap_pyfunction!(optimal_mixture, m)?)?;
    m.add_function(wrap_pyfunction!(bounds_json, m)?)?;
    m.add_function(wrap_pyfunction!(game_values_json, m)?)?;
    m.add_function(wrap_pyfunction!(feinstein_json, m)?)?;
    m.add_function(wrap_pyfunction!(split_json, m)?)?;
    Ok(())
}
