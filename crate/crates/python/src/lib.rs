//! Python bindings for `wavepeel`.

use pyo3::exceptions::{PyOSError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use wavepeel::benchlab::config::{parse_convergence_config, BenchPlan};
use wavepeel::benchlab::report::{bench_csv, convergence_csv, to_json};
use wavepeel::benchlab::{self as bl, Benchmark};
use wavepeel::detmap;
use wavepeel::ggd;
use wavepeel::peeling::{self, IterationBudget, PeelingConfig, StopRule, ThresholdKind, ThresholdMode};
use wavepeel::wavelet::{self, FilterPair};
use wavepeel::Error;

fn to_py(err: Error) -> PyErr {
    match err {
        Error::Convergence(_) | Error::IterationLimit(_) => PyRuntimeError::new_err(err.to_string()),
        Error::Io(_) => PyOSError::new_err(err.to_string()),
        Error::Replication { ref source, .. } if matches!(**source, Error::Convergence(_)) => {
            PyRuntimeError::new_err(err.to_string())
        }
        _ => PyValueError::new_err(err.to_string()),
    }
}

fn budget(name: &str) -> PyResult<IterationBudget> {
    name.parse().map_err(to_py)
}

#[pyclass(name = "GgdParams", module = "pywavepeel", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyGgdParams {
    inner: ggd::GgdParams,
}

#[pymethods]
impl PyGgdParams {
    #[new]
    fn new(sigma: f64, u: f64) -> PyResult<Self> {
        Ok(Self { inner: ggd::GgdParams::new(sigma, u).map_err(to_py)? })
    }

    #[getter]
    fn sigma(&self) -> f64 {
        self.inner.sigma()
    }

    #[getter]
    fn shape(&self) -> f64 {
        self.inner.shape()
    }

    #[getter]
    fn beta(&self) -> f64 {
        self.inner.beta()
    }

    #[getter]
    fn alpha(&self) -> f64 {
        self.inner.alpha()
    }

    fn pdf(&self, x: f64) -> f64 {
        self.inner.pdf(x)
    }

    fn cdf(&self, x: f64) -> f64 {
        self.inner.cdf(x)
    }

    fn sample(&self, seed: u64, n: usize) -> Vec<f64> {
        self.inner.sample(seed, n)
    }

    fn __repr__(&self) -> String {
        format!("GgdParams(sigma={}, u={})", self.inner.sigma(), self.inner.shape())
    }
}

#[pyfunction]
fn estimate_params(samples: Vec<f64>) -> PyResult<PyGgdParams> {
    Ok(PyGgdParams { inner: ggd::estimate_params(&samples).map_err(to_py)? })
}

#[pyclass(name = "ReducedMap", module = "pywavepeel", frozen)]
struct PyReducedMap {
    inner: detmap::ReducedMap,
}

#[pymethods]
impl PyReducedMap {
    #[new]
    fn new(factor: f64, u: f64) -> PyResult<Self> {
        Ok(Self { inner: detmap::ReducedMap::new(factor, u).map_err(to_py)? })
    }

    #[getter]
    fn factor(&self) -> f64 {
        self.inner.factor()
    }

    #[getter]
    fn shape(&self) -> f64 {
        self.inner.shape()
    }

    fn value(&self, x: f64) -> PyResult<f64> {
        self.inner.value(x).map_err(to_py)
    }

    fn value_scaled(&self, sigma: f64, x: f64) -> PyResult<f64> {
        self.inner.value_scaled(sigma, x).map_err(to_py)
    }

    fn derivative(&self, x: f64) -> PyResult<f64> {
        self.inner.derivative(x).map_err(to_py)
    }

    fn sup(&self) -> f64 {
        self.inner.sup()
    }

    fn inflection_point(&self) -> f64 {
        self.inner.inflection_point()
    }

    /// `sup g(x)/x`
    fn max_slope_ratio(&self) -> f64 {
        self.inner.max_slope_ratio()
    }
}

#[pyclass(name = "CriticalSolution", module = "pywavepeel", frozen, get_all)]
struct PyCriticalSolution {
    shape: f64,
    factor: f64,
    fixed_point: f64,
}

#[pymethods]
impl PyCriticalSolution {
    fn __repr__(&self) -> String {
        format!("CriticalSolution(u={}, F_c={}, x_c={})", self.shape, self.factor, self.fixed_point)
    }
}

#[pyfunction]
fn critical_constant(u: f64) -> PyResult<PyCriticalSolution> {
    let c = detmap::critical_constant(u).map_err(to_py)?;
    Ok(PyCriticalSolution { shape: c.shape, factor: c.factor, fixed_point: c.fixed_point })
}

#[pyfunction]
fn fm_bound(u: f64) -> PyResult<f64> {
    detmap::fm_bound(u).map_err(to_py)
}

/// `(unstable, stable, contraction)` for `F > F_c`.
#[pyfunction]
fn supercritical_structure(factor: f64, u: f64) -> PyResult<(f64, f64, f64)> {
    let crit = detmap::critical_constant(u).map_err(to_py)?;
    let map = detmap::ReducedMap::new(factor, u).map_err(to_py)?;
    let s = detmap::supercritical_structure(&map, &crit).map_err(to_py)?;
    Ok((s.unstable, s.stable, s.contraction))
}

#[pyfunction]
fn classify_regime(factor: f64, u: f64) -> PyResult<String> {
    Ok(format!("{:?}", detmap::classify_regime(factor, u).map_err(to_py)?).to_ascii_lowercase())
}

#[pyfunction]
fn iteration_count(n: usize, contraction: f64, alpha: f64, eta: f64) -> PyResult<usize> {
    detmap::iteration_count(n, contraction, alpha, eta).map_err(to_py)
}

#[pyclass(name = "PeelingTrace", module = "pywavepeel", frozen)]
struct PyPeelingTrace {
    inner: peeling::PeelingTrace,
}

#[pymethods]
impl PyPeelingTrace {
    /// `U_0 = inf, U_1, ...`
    #[getter]
    fn u(&self) -> Vec<f64> {
        self.inner.u_sequence.clone()
    }

    #[getter]
    fn t_final(&self) -> f64 {
        self.inner.t_final
    }

    #[getter]
    fn iterations(&self) -> usize {
        self.inner.iterations_run
    }

    #[getter]
    fn stop_reason(&self) -> String {
        serde_json::to_value(self.inner.stop_reason)
            .ok()
            .and_then(|v| v.as_str().map(str::to_string))
            .unwrap_or_default()
    }

    #[getter]
    fn fluctuations(&self) -> Option<Vec<f64>> {
        self.inner.fluctuations.clone()
    }

    fn to_json(&self) -> PyResult<String> {
        serde_json::to_string(&self.inner).map_err(|e| PyValueError::new_err(e.to_string()))
    }
}

/// `stop` is `"fixed"` (needs `iterations`), `"energy"` (needs `epsilon`) or
/// `"fixed_point"`. With `reference_sigma` set, fluctuations against the
/// deterministic map are recorded.
#[pyfunction]
#[pyo3(signature = (coeffs, factor, stop="fixed_point", iterations=None, epsilon=None, max_iterations=None, reference_sigma=None, shape=None))]
#[allow(clippy::too_many_arguments)]
fn run_peeling(
    coeffs: Vec<f64>,
    factor: f64,
    stop: &str,
    iterations: Option<usize>,
    epsilon: Option<f64>,
    max_iterations: Option<usize>,
    reference_sigma: Option<f64>,
    shape: Option<f64>,
) -> PyResult<PyPeelingTrace> {
    let rule = match stop {
        "fixed" => StopRule::FixedIterations(
            iterations.ok_or_else(|| PyValueError::new_err("stop='fixed' needs iterations"))?,
        ),
        "energy" => StopRule::EnergyDrop(epsilon.ok_or_else(|| PyValueError::new_err("stop='energy' needs epsilon"))?),
        "fixed_point" => StopRule::ExactFixedPoint,
        other => return Err(PyValueError::new_err(format!("unknown stop rule '{other}'"))),
    };
    let cap = max_iterations.unwrap_or(match rule {
        StopRule::FixedIterations(n) => n,
        _ => coeffs.len() + 1,
    });
    let cfg = PeelingConfig::new(factor, rule, cap).map_err(to_py)?;
    let reference = match (reference_sigma, shape) {
        (Some(s), Some(u)) => Some((s, detmap::ReducedMap::new(factor, u).map_err(to_py)?)),
        (None, None) => None,
        _ => return Err(PyValueError::new_err("reference_sigma and shape go together")),
    };
    let trace = peeling::run_peeling(&coeffs, &cfg, reference.as_ref().map(|(s, m)| (*s, m))).map_err(to_py)?;
    Ok(PyPeelingTrace { inner: trace })
}

/// Threshold name to value; data-driven entries need `coeffs`.
#[pyfunction]
#[pyo3(signature = (sigma, u, coeffs=None, budget_name="ln"))]
fn threshold_catalog<'py>(
    py: Python<'py>,
    sigma: f64,
    u: f64,
    coeffs: Option<Vec<f64>>,
    budget_name: &str,
) -> PyResult<Bound<'py, PyDict>> {
    let cat = peeling::threshold_catalog(sigma, u, coeffs.as_deref(), budget(budget_name)?).map_err(to_py)?;
    let d = PyDict::new(py);
    for (k, v) in &cat.values {
        d.set_item(k.name(), v)?;
    }
    Ok(d)
}

#[pyfunction]
fn deterministic_threshold(sigma: f64, u: f64, kind: &str) -> PyResult<f64> {
    let k = ThresholdKind::from_name(kind).ok_or_else(|| PyValueError::new_err(format!("unknown threshold '{kind}'")))?;
    peeling::deterministic_threshold(sigma, u, k).map_err(to_py)
}

#[pyfunction]
#[pyo3(signature = (coeffs, threshold, mode="soft"))]
fn apply_threshold(coeffs: Vec<f64>, threshold: f64, mode: &str) -> PyResult<Vec<f64>> {
    let m: ThresholdMode = mode.parse().map_err(to_py)?;
    Ok(peeling::apply_threshold(&coeffs, threshold, m))
}

#[pyclass(name = "WaveletCoeffs", module = "pywavepeel", frozen)]
struct PyWaveletCoeffs {
    inner: wavelet::WaveletCoeffs,
}

#[pymethods]
impl PyWaveletCoeffs {
    #[getter]
    fn approx(&self) -> Vec<f64> {
        self.inner.approx.clone()
    }

    /// Coarsest level first.
    #[getter]
    fn details(&self) -> Vec<Vec<f64>> {
        self.inner.details.clone()
    }

    #[getter]
    fn levels(&self) -> usize {
        self.inner.levels
    }

    #[getter]
    fn filter_name(&self) -> String {
        self.inner.filter_name.clone()
    }

    /// `[approx, details coarse to fine]`
    fn flatten(&self) -> Vec<f64> {
        self.inner.flatten(true).0
    }

    /// Same layout with new values, as produced by [`flatten`].
    fn with_flat(&self, flat: Vec<f64>) -> PyResult<Self> {
        let (_, layout) = self.inner.flatten(true);
        Ok(Self { inner: wavelet::WaveletCoeffs::unflatten(&flat, &layout).map_err(to_py)? })
    }
}

#[pyfunction]
#[pyo3(signature = (signal, filter="sym8", levels=None))]
fn dwt(signal: Vec<f64>, filter: &str, levels: Option<usize>) -> PyResult<PyWaveletCoeffs> {
    let f = FilterPair::by_name(filter).map_err(to_py)?;
    let levels = levels.unwrap_or_else(|| wavelet::default_levels(signal.len(), &f));
    Ok(PyWaveletCoeffs { inner: wavelet::dwt(&signal, &f, levels).map_err(to_py)? })
}

#[pyfunction]
fn idwt(coeffs: &PyWaveletCoeffs) -> PyResult<Vec<f64>> {
    let f = FilterPair::by_name(&coeffs.inner.filter_name).map_err(to_py)?;
    wavelet::idwt(&coeffs.inner, &f).map_err(to_py)
}

#[pyfunction]
fn make_benchmark(name: &str, n: usize) -> PyResult<Vec<f64>> {
    let b: Benchmark = name.parse().map_err(to_py)?;
    bl::make_benchmark(b, n).map_err(to_py)
}

#[pyfunction]
fn snr_den(x: Vec<f64>, xhat: Vec<f64>) -> PyResult<f64> {
    bl::snr_den(&x, &xhat).map_err(to_py)
}

#[pyfunction]
fn universal_threshold(n: usize, sigma: f64) -> PyResult<f64> {
    bl::universal_threshold(n, sigma).map_err(to_py)
}

#[pyfunction]
fn sure_threshold(coeffs: Vec<f64>, sigma: f64) -> PyResult<f64> {
    bl::sure_threshold(&coeffs, sigma).map_err(to_py)
}

/// Runs a bench config (key = value text) and returns the CSV or JSON report.
#[pyfunction]
#[pyo3(signature = (config, workers=0, format="csv"))]
fn run_bench(py: Python<'_>, config: &str, workers: usize, format: &str) -> PyResult<String> {
    let plan = BenchPlan::parse(config).map_err(to_py)?;
    let reports = py
        .detach(|| plan.configs().iter().map(|c| bl::run_denoise_experiment(c, workers)).collect::<Result<Vec<_>, _>>())
        .map_err(to_py)?;
    match format {
        "csv" => Ok(bench_csv(&reports)),
        "json" => to_json(&reports).map_err(to_py),
        other => Err(PyValueError::new_err(format!("unknown format '{other}'"))),
    }
}

/// Runs a convergence config and returns the CSV or JSON table.
#[pyfunction]
#[pyo3(signature = (config, workers=0, format="csv"))]
fn run_converge(py: Python<'_>, config: &str, workers: usize, format: &str) -> PyResult<String> {
    let cfg = parse_convergence_config(config).map_err(to_py)?;
    let table = py.detach(|| bl::run_convergence_experiment(&cfg, workers)).map_err(to_py)?;
    match format {
        "csv" => Ok(convergence_csv(&table)),
        "json" => to_json(&table).map_err(to_py),
        other => Err(PyValueError::new_err(format!("unknown format '{other}'"))),
    }
}

#[pymodule]
fn pywavepeel(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyGgdParams>()?;
    m.add_class::<PyReducedMap>()?;
    m.add_class::<PyCriticalSolution>()?;
    m.add_class::<PyPeelingTrace>()?;
    m.add_class::<PyWaveletCoeffs>()?;
    m.add_function(wrap_pyfunction!(estimate_params, m)?)?;
    m.add_function(wrap_pyfunction!(critical_constant, m)?)?;
    m.add_function(wrap_pyfunction!(fm_bound, m)?)?;
    m.add_function(wrap_pyfunction!(supercritical_structure, m)?)?;
    m.add_function(wrap_pyfunction!(classify_regime, m)?)?;
    m.add_function(wrap_pyfunction!(iteration_count, m)?)?;
    m.add_function(wrap_pyfunction!(run_peeling, m)?)?;
    m.add_function(wrap_pyfunction!(threshold_catalog, m)?)?;
    m.add_function(wrap_pyfunction!(deterministic_threshold, m)?)?;
    m.add_function(wrap_pyfunction!(apply_threshold, m)?)?;
    m.add_function(wrap_pyfunction!(dwt, m)?)?;
    m.add_function(wrap_pyfunction!(idwt, m)?)?;
    m.add_function(wrap_pyfunction!(make_benchmark, m)?)?;
    m.add_function(wrap_pyfunction!(snr_den, m)?)?;
    m.add_function(wrap_pyfunction!(universal_threshold, m)?)?;
    m.add_function(wrap_pyfunction!(sure_threshold, m)?)?;
    m.add_function(wrap_pyfunction!(run_bench, m)?)?;
    m.add_function(wrap_pyfunction!(run_converge, m)?)?;
    Ok(())
}
