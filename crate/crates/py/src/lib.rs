//! Python bindings. Structured results come back as plain dicts and lists
//! (via JSON), exact rationals as strings.

use num_bigint::BigInt;
use num_rational::Rational64;
use pyo3::create_exception;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyModule;
use serde::Serialize;

use tractor_calc::cli::config::RunConfig;
use tractor_calc::cli::invariance::{check_invariance as check_inv, InvariantOp};
use tractor_calc::decomposition::{parse_rational, MatrixFactorSystem};
use tractor_calc::dtn_model::{
    dtn_table, scattering_parameter, translation_report, vector_harmonic_probes, DtNTable, RadialConfig, TwistedDtn,
};
use tractor_calc::einstein_gjms::GjmsSpec;
use tractor_calc::fields_charts::{curvature_pack, MetricModel};
use tractor_calc::hypersurface::measure_robin_constant;
use tractor_calc::CalcError;

create_exception!(tractor_calc_py, TractorCalcError, PyValueError);

fn err(e: CalcError) -> PyErr {
    TractorCalcError::new_err(e.to_string())
}

fn to_py<'py>(py: Python<'py>, v: &impl Serialize) -> PyResult<Bound<'py, PyAny>> {
    let s = serde_json::to_string(v).map_err(|e| TractorCalcError::new_err(e.to_string()))?;
    PyModule::import(py, "json")?.call_method1("loads", (s,))
}

fn weight(s: &str) -> PyResult<Rational64> {
    let w = parse_rational(s).map_err(err)?;
    let conv = |x: &BigInt| i64::try_from(x).map_err(|_| TractorCalcError::new_err("weight out of range"));
    Ok(Rational64::new(conv(w.numer())?, conv(w.denom())?))
}

/// A model metric: `flat`, `sphere` or `hyperbolic` (Poincaré ball).
#[pyclass(module = "tractor_calc_py")]
struct Metric {
    inner: MetricModel,
}

#[pymethods]
impl Metric {
    #[new]
    #[pyo3(signature = (family, dim, radius = 1.0))]
    fn new(family: &str, dim: usize, radius: f64) -> PyResult<Self> {
        let inner = match family {
            "flat" => MetricModel::flat(dim),
            "sphere" => MetricModel::sphere(dim, radius),
            "hyperbolic" => MetricModel::hyperbolic_ball(dim),
            _ => return Err(TractorCalcError::new_err(format!("unknown metric family '{family}'"))),
        }
        .map_err(err)?;
        Ok(Metric { inner })
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    /// Seeded sample points inside the chart.
    fn sample(&self, seed: u64, count: usize) -> Vec<Vec<f64>> {
        self.inner.chart.sample(seed, count)
    }

    /// Christoffel, Riemann, Ricci, Weyl, Schouten, J at a point; tensors are
    /// flattened row-major.
    fn curvature<'py>(&self, py: Python<'py>, point: Vec<f64>) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &curvature_pack(&self.inner, &point).map_err(err)?)
    }

    fn __repr__(&self) -> String {
        format!("Metric({}, dim={})", self.inner.family.name(), self.inner.dim())
    }
}

/// Radial DtN eigenvalues `Λ_l`, `l = 0..=lmax`, on the hyperbolic ball with
/// boundary dimension `n` and the `s` selected by the even order `k`.
#[pyclass(module = "tractor_calc_py")]
struct DtnTable {
    inner: DtNTable,
}

#[pymethods]
impl DtnTable {
    #[new]
    #[pyo3(signature = (n = 3, k = 2, lmax = 20, grid = 0.1))]
    fn new(py: Python<'_>, n: usize, k: usize, lmax: usize, grid: f64) -> PyResult<Self> {
        let s = scattering_parameter(k, n, 0).map_err(err)?;
        let cfg = RadialConfig { h: grid, ..RadialConfig::default() };
        let inner = py.detach(|| dtn_table(n, s, lmax, &cfg)).map_err(err)?;
        Ok(DtnTable { inner })
    }

    #[getter]
    fn s(&self) -> f64 {
        self.inner.s
    }

    #[getter]
    fn lambdas(&self) -> Vec<f64> {
        self.inner.lambdas()
    }

    /// `(l, Λ_l, fit_residual)` rows.
    fn rows(&self) -> Vec<(usize, f64, f64)> {
        self.inner.rows.iter().map(|r| (r.l, r.lambda, r.fit_residual)).collect()
    }

    /// Relative spread of `Λ_l / l` over `lo..=hi`.
    fn ratio_spread(&self, lo: usize, hi: usize) -> PyResult<f64> {
        self.inner.ratio_spread(lo, hi).map_err(err)
    }

    fn __len__(&self) -> usize {
        self.inner.rows.len()
    }
}

/// Exact decomposition of vectors along a matrix with known distinct spectrum.
#[pyclass(module = "tractor_calc_py")]
struct MatrixDecomposition {
    inner: MatrixFactorSystem,
}

fn rationals(v: &[String]) -> PyResult<Vec<num_rational::BigRational>> {
    v.iter().map(|s| parse_rational(s).map_err(err)).collect()
}

#[pymethods]
impl MatrixDecomposition {
    /// Entries and eigenvalues are strings such as `"3"`, `"-1/2"`, `"0.25"`.
    #[new]
    fn new(matrix: Vec<Vec<String>>, mu: Vec<String>) -> PyResult<Self> {
        let e = matrix.iter().map(|r| rationals(r)).collect::<PyResult<_>>()?;
        Ok(MatrixDecomposition { inner: MatrixFactorSystem::new(e, rationals(&mu)?).map_err(err)? })
    }

    fn project<'py>(&self, py: Python<'py>, vector: Vec<String>) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &self.inner.project(&rationals(&vector)?).map_err(err)?)
    }

    /// Exact residual of `Σ q_i ∏_{j≠i}(E − μ_j) v − v`, as a string.
    fn identity_residual(&self, vector: Vec<String>) -> PyResult<String> {
        Ok(self.inner.identity_decomposition_check(&rationals(&vector)?).map_err(err)?.to_string())
    }

    fn projector(&self, i: usize) -> PyResult<Vec<Vec<String>>> {
        let p = self.inner.projector(i).map_err(err)?;
        Ok(p.iter().map(|r| r.iter().map(|x| x.to_string()).collect()).collect())
    }
}

/// Two-scale invariance check; `op` is one of yamabe, thomas-d, boxk,
/// robin, delta.
#[pyfunction]
#[pyo3(signature = (op, dim, seed = 1, points = 10, k = 4, ell = 2, weight = None))]
#[allow(clippy::too_many_arguments)]
fn check_invariance<'py>(
    py: Python<'py>,
    op: &str,
    dim: usize,
    seed: u64,
    points: usize,
    k: usize,
    ell: usize,
    weight: Option<&str>,
) -> PyResult<Bound<'py, PyAny>> {
    let op = InvariantOp::parse(op, k, ell).map_err(err)?;
    let w = weight.map(self::weight).transpose()?;
    let r = py.detach(|| check_inv(op, dim, w, seed, points)).map_err(err)?;
    to_py(py, &r)
}

/// Measured Robin constant for weight `weight` (string rational) in dimension `d`.
#[pyfunction]
#[pyo3(signature = (d, weight, probes = 20, seed = 1))]
fn robin_constant<'py>(py: Python<'py>, d: usize, weight: &str, probes: usize, seed: u64) -> PyResult<Bound<'py, PyAny>> {
    let w = self::weight(weight)?;
    to_py(py, &measure_robin_constant(d, w, probes, seed).map_err(err)?)
}

/// Exact GJMS factorization data for order `k` in dimension `d`.
#[pyfunction]
fn gjms_parameters<'py>(py: Python<'py>, k: usize, d: usize) -> PyResult<Bound<'py, PyAny>> {
    to_py(py, &GjmsSpec::new(k, d).map_err(err)?)
}

/// Symmetry and gain of the translated operator for the k = 2 DtN on the
/// 3-sphere, over the built-in vector-harmonic probes.
#[pyfunction]
#[pyo3(signature = (lmax = 10, max_grad = 3))]
fn twisted_translation<'py>(py: Python<'py>, lmax: usize, max_grad: usize) -> PyResult<Bound<'py, PyAny>> {
    let r = py
        .detach(|| {
            let t = dtn_table(3, scattering_parameter(2, 3, 0)?, lmax, &RadialConfig::default())?;
            translation_report(&TwistedDtn::new(3, t.lambdas())?, &vector_harmonic_probes(max_grad))
        })
        .map_err(err)?;
    to_py(py, &r)
}

/// Run a CLI verb with `key=value` options; returns the report as a dict.
#[pyfunction]
#[pyo3(signature = (verb, **options))]
fn run<'py>(py: Python<'py>, verb: &str, options: Option<&Bound<'py, pyo3::types::PyDict>>) -> PyResult<Bound<'py, PyAny>> {
    let mut flags = Vec::new();
    if let Some(o) = options {
        for (k, v) in o.iter() {
            flags.push((k.extract::<String>()?.replace('_', "-"), v.str()?.to_string()));
        }
    }
    let rep = py
        .detach(|| {
            let cfg = RunConfig::resolve(verb, None, &flags, None)?;
            tractor_calc::cli::run_verb(&cfg)?.to_json()
        })
        .map_err(err)?;
    PyModule::import(py, "json")?.call_method1("loads", (rep,))
}

#[pymodule]
pub fn tractor_calc_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("TractorCalcError", m.py().get_type::<TractorCalcError>())?;
    m.add_class::<Metric>()?;
    m.add_class::<DtnTable>()?;
    m.add_class::<MatrixDecomposition>()?;
    m.add_function(wrap_pyfunction!(check_invariance, m)?)?;
    m.add_function(wrap_pyfunction!(robin_constant, m)?)?;
    m.add_function(wrap_pyfunction!(gjms_parameters, m)?)?;
    m.add_function(wrap_pyfunction!(twisted_translation, m)?)?;
    m.add_function(wrap_pyfunction!(run, m)?)?;
    Ok(())
}
