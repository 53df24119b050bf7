//! Python bindings: fields, scheduled parameters, bumps, inflation runs and sweeps.

use gibq::construction::{make_bump, schedule, InflationParams};
use gibq::harness::{run_inflation, sweep as run_sweep, NormFamily, RunSpec, SweepConfig};
use gibq::ktree::count_trees as tree_table;
use gibq::lattice::{FrequencyLattice, SpectralField, C64};
use gibq::norms::{norm as field_norm, NormSpec};
use gibq::verify::{run_suite, suite_csv};
use gibq::GibqError;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

fn to_py(e: GibqError) -> PyErr {
    if e.is_config() || matches!(e, GibqError::Domain(_)) {
        PyValueError::new_err(e.to_string())
    } else {
        PyRuntimeError::new_err(e.to_string())
    }
}

/// Sparse Fourier coefficients on a lattice of the given period.
#[pyclass(name = "Field", frozen)]
struct PyField {
    inner: SpectralField,
}

#[pymethods]
impl PyField {
    #[new]
    #[pyo3(signature = (entries, period = 1.0))]
    fn new(entries: Vec<(i64, f64, f64)>, period: f64) -> PyResult<Self> {
        let lattice = if period == 1.0 {
            FrequencyLattice::torus()
        } else {
            FrequencyLattice::line_approx(period).map_err(to_py)?
        };
        let inner = SpectralField::from_entries(lattice, entries.into_iter().map(|(xi, re, im)| (xi, C64::new(re, im))))
            .map_err(to_py)?;
        Ok(Self { inner })
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        Ok(Self {
            inner: SpectralField::from_json(text).map_err(to_py)?,
        })
    }

    /// `(xi, re, im)` sorted by frequency.
    fn entries(&self) -> Vec<(i64, f64, f64)> {
        self.inner.entries().iter().map(|&(xi, c)| (xi, c.re, c.im)).collect()
    }

    /// Norm by spec string such as `sobolev,-0.75` or `fl,-0.75,inf`.
    fn norm(&self, spec: &str) -> PyResult<f64> {
        let spec: NormSpec = spec.parse().map_err(to_py)?;
        field_norm(&self.inner, &spec).map_err(to_py)
    }

    fn l1(&self) -> f64 {
        self.inner.l1()
    }

    fn to_json(&self) -> PyResult<String> {
        self.inner.to_json().map_err(to_py)
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn __repr__(&self) -> String {
        format!("Field(len={}, period={})", self.inner.len(), self.inner.lattice().period())
    }
}

/// Inflation parameters `(n, k, s, sigma, delta)` with derived `N, R, T, A`.
#[pyclass(name = "Params", frozen)]
struct PyParams {
    inner: InflationParams,
}

#[pymethods]
impl PyParams {
    #[staticmethod]
    #[pyo3(signature = (n, k, s, sigma = None, delta = None))]
    fn schedule(n: u64, k: usize, s: f64, sigma: Option<f64>, delta: Option<f64>) -> PyResult<Self> {
        Ok(Self {
            inner: schedule(n, k, s, sigma.unwrap_or(s), delta).map_err(to_py)?,
        })
    }

    #[staticmethod]
    #[pyo3(signature = (n, k, s, big_n, sigma = None, delta = None))]
    fn with_frequency(n: u64, k: usize, s: f64, big_n: i64, sigma: Option<f64>, delta: Option<f64>) -> PyResult<Self> {
        Ok(Self {
            inner: InflationParams::with_frequency(n, k, s, sigma.unwrap_or(s), delta, big_n).map_err(to_py)?,
        })
    }

    #[getter]
    fn n(&self) -> u64 {
        self.inner.n
    }
    #[getter]
    fn k(&self) -> usize {
        self.inner.k
    }
    #[getter]
    fn s(&self) -> f64 {
        self.inner.s
    }
    #[getter]
    fn sigma(&self) -> f64 {
        self.inner.sigma
    }
    #[getter]
    fn delta(&self) -> f64 {
        self.inner.delta
    }
    #[getter]
    fn big_n(&self) -> i64 {
        self.inner.big_n
    }
    #[getter]
    fn r(&self) -> f64 {
        self.inner.r
    }
    #[getter]
    fn t(&self) -> f64 {
        self.inner.t
    }
    #[getter]
    fn a(&self) -> i64 {
        self.inner.a
    }

    fn to_json(&self) -> PyResult<String> {
        self.inner.to_json().map_err(to_py)
    }

    /// Position component `u0` of the bump data.
    fn bump(&self) -> PyResult<PyField> {
        Ok(PyField {
            inner: make_bump(&self.inner).map_err(to_py)?.phi.u0,
        })
    }

    fn __repr__(&self) -> String {
        let p = &self.inner;
        format!("Params(n={}, k={}, s={}, N={}, R={:.4e}, T={:.4e}, A={})", p.n, p.k, p.s, p.big_n, p.r, p.t, p.a)
    }
}

/// Tree counts `|T(0)|..|T(J)|` as Python integers.
#[pyfunction]
fn count_trees(py: Python<'_>, k: usize, max_gen: usize) -> PyResult<Vec<Py<PyAny>>> {
    let table = tree_table(k, max_gen).map_err(to_py)?;
    let int = py.import("builtins")?.getattr("int")?;
    (0..=max_gen)
        .map(|j| Ok(int.call1((table.count(j).to_string(),))?.unbind()))
        .collect()
}

/// Inflation report as a JSON string. A diverging series still returns its
/// report, with `status == "diverged"`.
#[pyfunction]
#[pyo3(signature = (params, families = vec!["sobolev".to_string()], seed = 0, max_gen = 8, base_amplitude = 0.0))]
fn inflate(
    py: Python<'_>,
    params: &PyParams,
    families: Vec<String>,
    seed: u64,
    max_gen: usize,
    base_amplitude: f64,
) -> PyResult<String> {
    let families = families
        .iter()
        .map(|f| f.parse::<NormFamily>())
        .collect::<Result<Vec<_>, _>>()
        .map_err(to_py)?;
    let spec = RunSpec {
        seed,
        base_amplitude,
        families,
        max_gen,
        ..RunSpec::default()
    };
    let params = params.inner.clone();
    let report = py.detach(move || match run_inflation(&params, &spec) {
        Ok(r) => Ok(r),
        Err(GibqError::SeriesDivergence { report, .. }) => Ok(*report),
        Err(e) => Err(e),
    });
    report.and_then(|r| r.to_json()).map_err(to_py)
}

/// Runs a sweep config (JSON text); returns `(runs_csv, manifest_json)`.
#[pyfunction]
fn sweep(py: Python<'_>, config: &str) -> PyResult<(String, String)> {
    let cfg = SweepConfig::from_json(config).map_err(to_py)?;
    let out = py.detach(move || run_sweep(&cfg)).map_err(to_py)?;
    Ok((out.csv, out.manifest))
}

/// Invariant suite as CSV.
#[pyfunction]
#[pyo3(signature = (quick = true))]
fn verify_all(py: Python<'_>, quick: bool) -> PyResult<String> {
    let verdicts = py.detach(move || run_suite(quick)).map_err(to_py)?;
    Ok(suite_csv(&verdicts))
}

#[pymodule]
pub fn pygibq(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyField>()?;
    m.add_class::<PyParams>()?;
    m.add_function(wrap_pyfunction!(count_trees, m)?)?;
    m.add_function(wrap_pyfunction!(inflate, m)?)?;
    m.add_function(wrap_pyfunction!(sweep, m)?)?;
    m.add_function(wrap_pyfunction!(verify_all, m)?)?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}
