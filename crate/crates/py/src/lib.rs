//! Python bindings. Import as `nncalc`.

use std::cell::RefCell;
use std::cmp::Ordering;

use nncalc::bell::{self, ChshSettings, McConfig, Outcome};
use nncalc::calculus::{self, QuadratureConfig, QuadratureMethod};
use nncalc::generator::Interval;
use nncalc::{ArithmeticContext, Error};
use pyo3::exceptions::{
    PyArithmeticError, PyOverflowError, PyRuntimeError, PyValueError, PyZeroDivisionError,
};
use pyo3::prelude::*;
use pyo3::types::PyDict;

fn to_py(err: Error) -> PyErr {
    let msg = err.to_string();
    match err {
        Error::Domain(_) | Error::InvalidGenerator(_) | Error::InvalidConfig(_) => {
            PyValueError::new_err(msg)
        }
        Error::DivisionByZero(_) => PyZeroDivisionError::new_err(msg),
        Error::Overflow(_) => PyOverflowError::new_err(msg),
        Error::QuadratureBudget { .. }
        | Error::NonFiniteIntegrand(_)
        | Error::Differentiation(_) => PyArithmeticError::new_err(msg),
        _ => PyRuntimeError::new_err(msg),
    }
}

/// Wraps a Python callable as `f64 -> f64`. The first exception raised is
/// kept and the call returns NaN so the core aborts; [`Callback::finish`]
/// re-raises it in preference to the resulting core error.
struct Callback<'py> {
    func: Bound<'py, PyAny>,
    error: RefCell<Option<PyErr>>,
}

impl<'py> Callback<'py> {
    fn new(func: Bound<'py, PyAny>) -> PyResult<Self> {
        if !func.is_callable() {
            return Err(PyValueError::new_err("integrand must be callable"));
        }
        Ok(Callback {
            func,
            error: RefCell::new(None),
        })
    }

    fn call(&self, x: f64) -> f64 {
        if self.error.borrow().is_some() {
            return f64::NAN;
        }
        match self.func.call1((x,)).and_then(|v| v.extract::<f64>()) {
            Ok(v) => v,
            Err(e) => {
                *self.error.borrow_mut() = Some(e);
                f64::NAN
            }
        }
    }

    fn finish<T>(self, result: nncalc::Result<T>) -> PyResult<T> {
        match (self.error.into_inner(), result) {
            (Some(e), _) => Err(e),
            (None, r) => r.map_err(to_py),
        }
    }
}

fn parse_outcome(s: &str) -> PyResult<Outcome> {
    s.parse().map_err(to_py)
}

fn cfg_or_default(cfg: Option<PyRef<'_, PyQuadratureConfig>>) -> QuadratureConfig {
    cfg.map(|c| c.inner).unwrap_or_default()
}

/// Strictly increasing bijection between the reals and the r-domain.
#[pyclass(name = "Generator", module = "nncalc", frozen)]
struct PyGenerator {
    inner: nncalc::Generator,
}

#[pymethods]
impl PyGenerator {
    /// Piecewise sin²/arcsin generator; every quarter-integer is a fixed point.
    #[staticmethod]
    fn paper_sin2() -> Self {
        PyGenerator {
            inner: nncalc::Generator::paper_sin2(),
        }
    }

    #[staticmethod]
    fn identity() -> Self {
        PyGenerator {
            inner: nncalc::Generator::identity(),
        }
    }

    #[staticmethod]
    fn by_name(name: &str) -> PyResult<Self> {
        nncalc::Generator::by_name(name)
            .map(|inner| PyGenerator { inner })
            .ok_or_else(|| PyValueError::new_err(format!("unknown generator {name:?}")))
    }

    /// User-supplied pair of maps. Exceptions inside either map surface as
    /// errors from whichever operation evaluated it.
    #[staticmethod]
    #[pyo3(signature = (name, forward, inverse, lo = f64::NEG_INFINITY, hi = f64::INFINITY))]
    fn custom(
        name: String,
        forward: Py<PyAny>,
        inverse: Py<PyAny>,
        lo: f64,
        hi: f64,
    ) -> PyResult<Self> {
        let wrap = |f: Py<PyAny>| {
            move |x: f64| {
                Python::attach(|py| f.call1(py, (x,)).and_then(|v| v.extract::<f64>(py)))
                    .unwrap_or(f64::NAN)
            }
        };
        let domain = Interval::new(lo, hi).map_err(to_py)?;
        nncalc::Generator::custom(name, domain, wrap(forward), wrap(inverse))
            .map(|inner| PyGenerator { inner })
            .map_err(to_py)
    }

    #[getter]
    fn name(&self) -> &str {
        self.inner.name()
    }

    fn forward(&self, x: f64) -> PyResult<f64> {
        self.inner.forward(x).map_err(to_py)
    }

    fn inverse(&self, r: f64) -> PyResult<f64> {
        self.inner.inverse(r).map_err(to_py)
    }

    fn __repr__(&self) -> String {
        format!("Generator({:?})", self.inner.name())
    }
}

/// Arithmetic transported through a generator.
#[pyclass(name = "Arithmetic", module = "nncalc", frozen)]
struct PyArithmetic {
    inner: ArithmeticContext,
}

#[pymethods]
impl PyArithmetic {
    #[new]
    #[pyo3(signature = (generator = None))]
    fn new(generator: Option<PyRef<'_, PyGenerator>>) -> PyResult<Self> {
        let gen = generator
            .map(|g| g.inner.clone())
            .unwrap_or_else(nncalc::Generator::paper_sin2);
        ArithmeticContext::new(gen)
            .map(|inner| PyArithmetic { inner })
            .map_err(to_py)
    }

    #[getter]
    fn zero(&self) -> f64 {
        self.inner.zero()
    }

    #[getter]
    fn one(&self) -> f64 {
        self.inner.one()
    }

    fn add(&self, x: f64, y: f64) -> PyResult<f64> {
        self.inner.add(x, y).map_err(to_py)
    }

    fn sub(&self, x: f64, y: f64) -> PyResult<f64> {
        self.inner.sub(x, y).map_err(to_py)
    }

    fn mul(&self, x: f64, y: f64) -> PyResult<f64> {
        self.inner.mul(x, y).map_err(to_py)
    }

    fn div(&self, x: f64, y: f64) -> PyResult<f64> {
        self.inner.div(x, y).map_err(to_py)
    }

    /// -1, 0 or 1.
    fn compare(&self, x: f64, y: f64) -> PyResult<i8> {
        Ok(match self.inner.compare(x, y).map_err(to_py)? {
            Ordering::Less => -1,
            Ordering::Equal => 0,
            Ordering::Greater => 1,
        })
    }
}

#[pyclass(name = "QuadratureConfig", module = "nncalc", frozen)]
struct PyQuadratureConfig {
    inner: QuadratureConfig,
}

#[pymethods]
impl PyQuadratureConfig {
    /// `method` is one of `adaptive_simpson`, `gauss_legendre_composite`,
    /// `riemann_oracle`.
    #[new]
    #[pyo3(signature = (method = "adaptive_simpson", tolerance = 1e-10, max_subdivisions = 1 << 20, oracle_panels = 1_000_000))]
    fn new(
        method: &str,
        tolerance: f64,
        max_subdivisions: usize,
        oracle_panels: usize,
    ) -> PyResult<Self> {
        let method = match method {
            "adaptive_simpson" => QuadratureMethod::AdaptiveSimpson,
            "gauss_legendre_composite" => QuadratureMethod::GaussLegendreComposite,
            "riemann_oracle" => QuadratureMethod::RiemannOracle,
            other => {
                return Err(PyValueError::new_err(format!(
                    "unknown quadrature method {other:?}"
                )))
            }
        };
        let inner = QuadratureConfig {
            method,
            tolerance,
            max_subdivisions,
            oracle_panels,
        };
        inner.validate().map_err(to_py)?;
        Ok(PyQuadratureConfig { inner })
    }

    #[getter]
    fn tolerance(&self) -> f64 {
        self.inner.tolerance
    }

    #[getter]
    fn oracle_panels(&self) -> usize {
        self.inner.oracle_panels
    }
}

#[pyfunction]
fn derivative(gen: PyRef<'_, PyGenerator>, func: Bound<'_, PyAny>, x: f64) -> PyResult<f64> {
    let cb = Callback::new(func)?;
    let r = calculus::nn_derivative(&gen.inner, |t| cb.call(t), x);
    cb.finish(r)
}

/// Limit of the deformed difference quotient over `deltas` (a strictly
/// decreasing positive sequence; a default ladder when omitted).
#[pyfunction]
#[pyo3(signature = (gen, func, x, deltas = None))]
fn derivative_limit(
    gen: PyRef<'_, PyGenerator>,
    func: Bound<'_, PyAny>,
    x: f64,
    deltas: Option<Vec<f64>>,
) -> PyResult<f64> {
    let deltas = deltas.unwrap_or_else(calculus::default_deltas);
    let cb = Callback::new(func)?;
    let r = calculus::nn_derivative_limit(&gen.inner, |t| cb.call(t), x, &deltas);
    cb.finish(r)
}

#[pyfunction]
#[pyo3(signature = (gen, func, x1, x2, config = None, breakpoints = None))]
fn integral(
    gen: PyRef<'_, PyGenerator>,
    func: Bound<'_, PyAny>,
    x1: f64,
    x2: f64,
    config: Option<PyRef<'_, PyQuadratureConfig>>,
    breakpoints: Option<Vec<f64>>,
) -> PyResult<f64> {
    let cfg = cfg_or_default(config);
    let cb = Callback::new(func)?;
    let r = calculus::nn_integral_split(
        &gen.inner,
        |t| cb.call(t),
        x1,
        x2,
        &breakpoints.unwrap_or_default(),
        &cfg,
    );
    cb.finish(r)
}

/// Deformed Riemann sum built only from the transported operations.
#[pyfunction]
#[pyo3(signature = (gen, func, x1, x2, config = None))]
fn integral_oracle(
    gen: PyRef<'_, PyGenerator>,
    func: Bound<'_, PyAny>,
    x1: f64,
    x2: f64,
    config: Option<PyRef<'_, PyQuadratureConfig>>,
) -> PyResult<f64> {
    let cfg = cfg_or_default(config);
    let cb = Callback::new(func)?;
    let r = calculus::nn_integral_oracle(&gen.inner, |t| cb.call(t), x1, x2, &cfg);
    cb.finish(r)
}

#[pyfunction]
#[pyo3(signature = (gen, a, b, x1, x2, config = None))]
fn linearity_gap<'py>(
    py: Python<'py>,
    gen: PyRef<'_, PyGenerator>,
    a: Bound<'py, PyAny>,
    b: Bound<'py, PyAny>,
    x1: f64,
    x2: f64,
    config: Option<PyRef<'_, PyQuadratureConfig>>,
) -> PyResult<Bound<'py, PyDict>> {
    let cfg = cfg_or_default(config);
    let (ca, cb) = (Callback::new(a)?, Callback::new(b)?);
    let r = calculus::linearity_gap(&gen.inner, |t| ca.call(t), |t| cb.call(t), x1, x2, &cfg);
    let r = match ca.error.take() {
        Some(e) => Err(e),
        None => cb.finish(r),
    }?;
    let d = PyDict::new(py);
    d.set_item("integral_of_sum", r.integral_of_sum)?;
    d.set_item("sum_of_integrals", r.sum_of_integrals)?;
    d.set_item("integral_of_oplus", r.integral_of_oplus)?;
    d.set_item("oplus_of_integrals", r.oplus_of_integrals)?;
    d.set_item("gap_ordinary", r.gap_ordinary)?;
    d.set_item("gap_deformed", r.gap_deformed)?;
    Ok(d)
}

#[pyfunction]
fn density(gen: PyRef<'_, PyGenerator>) -> PyResult<f64> {
    bell::density_value(&gen.inner).map_err(to_py)
}

#[pyfunction]
#[pyo3(signature = (gen, alpha, beta, config = None))]
fn arc_probability(
    gen: PyRef<'_, PyGenerator>,
    alpha: f64,
    beta: f64,
    config: Option<PyRef<'_, PyQuadratureConfig>>,
) -> PyResult<f64> {
    bell::arc_probability(&gen.inner, alpha, beta, &cfg_or_default(config)).map_err(to_py)
}

/// `outcome` is `"++"`, `"+-"`, `"-+"` or `"--"`.
#[pyfunction]
#[pyo3(signature = (gen, outcome, alpha, beta, config = None))]
fn joint_probability(
    gen: PyRef<'_, PyGenerator>,
    outcome: &str,
    alpha: f64,
    beta: f64,
    config: Option<PyRef<'_, PyQuadratureConfig>>,
) -> PyResult<f64> {
    bell::joint_probability(
        &gen.inner,
        parse_outcome(outcome)?,
        alpha,
        beta,
        &cfg_or_default(config),
    )
    .map_err(to_py)
}

#[pyfunction]
fn joint_probability_closed(outcome: &str, alpha: f64, beta: f64) -> PyResult<f64> {
    Ok(bell::joint_probability_closed(
        parse_outcome(outcome)?,
        alpha,
        beta,
    ))
}

/// All four coincidence probabilities keyed by outcome.
#[pyfunction]
#[pyo3(signature = (gen, alpha, beta, config = None))]
fn joint_probabilities<'py>(
    py: Python<'py>,
    gen: PyRef<'_, PyGenerator>,
    alpha: f64,
    beta: f64,
    config: Option<PyRef<'_, PyQuadratureConfig>>,
) -> PyResult<Bound<'py, PyDict>> {
    let p = bell::joint_probabilities(&gen.inner, alpha, beta, &cfg_or_default(config))
        .map_err(to_py)?;
    let d = PyDict::new(py);
    for o in Outcome::ALL {
        d.set_item(o.to_string(), p.get(o))?;
    }
    Ok(d)
}

#[pyfunction]
#[pyo3(signature = (gen, alpha, beta, config = None))]
fn correlator(
    gen: PyRef<'_, PyGenerator>,
    alpha: f64,
    beta: f64,
    config: Option<PyRef<'_, PyQuadratureConfig>>,
) -> PyResult<f64> {
    bell::correlator(&gen.inner, alpha, beta, &cfg_or_default(config)).map_err(to_py)
}

/// CHSH combination; defaults to the canonical angles.
#[pyfunction]
#[pyo3(signature = (gen, a = None, a_prime = None, b = None, b_prime = None, config = None))]
fn chsh<'py>(
    py: Python<'py>,
    gen: PyRef<'_, PyGenerator>,
    a: Option<f64>,
    a_prime: Option<f64>,
    b: Option<f64>,
    b_prime: Option<f64>,
    config: Option<PyRef<'_, PyQuadratureConfig>>,
) -> PyResult<Bound<'py, PyDict>> {
    let c = ChshSettings::CANONICAL;
    let settings = ChshSettings {
        a: a.unwrap_or(c.a),
        a_prime: a_prime.unwrap_or(c.a_prime),
        b: b.unwrap_or(c.b),
        b_prime: b_prime.unwrap_or(c.b_prime),
    };
    let r = bell::chsh(&gen.inner, settings, &cfg_or_default(config)).map_err(to_py)?;
    let d = PyDict::new(py);
    d.set_item("correlators", r.correlators.to_vec())?;
    d.set_item("s", r.s_value)?;
    Ok(d)
}

/// Seeded Monte-Carlo estimate of one coincidence probability. The result
/// depends only on `samples` and `seed`, not on the thread count.
#[pyfunction]
#[pyo3(signature = (gen, outcome, alpha, beta, samples = 1_000_000, seed = 42))]
fn mc_estimate<'py>(
    py: Python<'py>,
    gen: PyRef<'_, PyGenerator>,
    outcome: &str,
    alpha: f64,
    beta: f64,
    samples: u64,
    seed: u64,
) -> PyResult<Bound<'py, PyDict>> {
    let outcome = parse_outcome(outcome)?;
    let mc = McConfig::new(samples, seed).map_err(to_py)?;
    let g = gen.inner.clone();
    let est = py
        .detach(|| bell::mc_estimate(&g, outcome, alpha, beta, &mc))
        .map_err(to_py)?;
    let d = PyDict::new(py);
    d.set_item("hits", est.hits)?;
    d.set_item("samples", est.samples)?;
    d.set_item("frequency", est.frequency)?;
    d.set_item("value", est.value)?;
    Ok(d)
}

#[pymodule(name = "nncalc")]
fn nncalc_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyGenerator>()?;
    m.add_class::<PyArithmetic>()?;
    m.add_class::<PyQuadratureConfig>()?;
    m.add_function(wrap_pyfunction!(derivative, m)?)?;
    m.add_function(wrap_pyfunction!(derivative_limit, m)?)?;
    m.add_function(wrap_pyfunction!(integral, m)?)?;
    m.add_function(wrap_pyfunction!(integral_oracle, m)?)?;
    m.add_function(wrap_pyfunction!(linearity_gap, m)?)?;
    m.add_function(wrap_pyfunction!(density, m)?)?;
    m.add_function(wrap_pyfunction!(arc_probability, m)?)?;
    m.add_function(wrap_pyfunction!(joint_probability, m)?)?;
    m.add_function(wrap_pyfunction!(joint_probability_closed, m)?)?;
    m.add_function(wrap_pyfunction!(joint_probabilities, m)?)?;
    m.add_function(wrap_pyfunction!(correlator, m)?)?;
    m.add_function(wrap_pyfunction!(chsh, m)?)?;
    m.add_function(wrap_pyfunction!(mc_estimate, m)?)?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}
