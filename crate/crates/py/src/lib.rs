//! Python bindings. Every object is built from a `Config`, mirroring the command-line tool.

use num_complex::Complex64;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use jointva_core::config::RunConfig;
use jointva_core::contract::ContractSpec;
use jointva_core::levy::NigParams;
use jointva_core::mortality::CoupleMortality;
use jointva_core::oracle::{oracle_price as core_oracle_price, OracleEstimate};
use jointva_core::pricing::{self, Evaluator, GridAxis, MethodChoice, PriceBreakdown, SensitivityParam};
use jointva_core::term_structure::MarketModel;
use jointva_core::validation::{run_checks, Outcome};
use jointva_core::Error;

fn value_err(e: Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn runtime_err(e: Error) -> PyErr {
    PyRuntimeError::new_err(e.to_string())
}

/// Run configuration. `Config()` gives the reference parameters; keys are addressed as
/// `section.key`, e.g. `cfg.set("contract.maturity", 4.0)`.
#[pyclass(name = "Config", from_py_object)]
#[derive(Clone)]
struct PyConfig {
    inner: RunConfig,
}

fn split_key(key: &str) -> PyResult<(&str, &str)> {
    key.split_once('.').ok_or_else(|| PyValueError::new_err(format!("expected `section.key`, got `{key}`")))
}

fn to_toml(v: &Bound<'_, PyAny>) -> PyResult<toml::Value> {
    if let Ok(b) = v.extract::<bool>() {
        Ok(toml::Value::Boolean(b))
    } else if let Ok(i) = v.extract::<i64>() {
        Ok(toml::Value::Integer(i))
    } else if let Ok(f) = v.extract::<f64>() {
        Ok(toml::Value::Float(f))
    } else if let Ok(s) = v.extract::<String>() {
        Ok(toml::Value::String(s))
    } else if let Ok(knots) = v.extract::<Vec<(f64, f64)>>() {
        Ok(toml::Value::Array(knots.into_iter().map(|(t, r)| toml::Value::Array(vec![t.into(), r.into()])).collect()))
    } else {
        Err(PyValueError::new_err("unsupported value type"))
    }
}

#[pymethods]
impl PyConfig {
    #[new]
    fn new() -> Self {
        PyConfig { inner: RunConfig::default() }
    }

    #[staticmethod]
    fn from_toml(text: &str) -> PyResult<Self> {
        RunConfig::from_toml_str(text).map(|inner| PyConfig { inner }).map_err(value_err)
    }

    #[staticmethod]
    fn load(path: &str) -> PyResult<Self> {
        RunConfig::load(path.as_ref()).map(|inner| PyConfig { inner }).map_err(value_err)
    }

    fn to_toml(&self) -> PyResult<String> {
        self.inner.to_toml_string().map_err(value_err)
    }

    fn get(&self, py: Python<'_>, key: &str) -> PyResult<Py<PyAny>> {
        let (section, name) = split_key(key)?;
        let table = toml::Value::try_from(&self.inner).map_err(|e| PyValueError::new_err(e.to_string()))?;
        let v = table.get(section).and_then(|s| s.get(name)).ok_or_else(|| PyValueError::new_err(format!("unknown key `{key}`")))?;
        Ok(match v {
            toml::Value::Float(f) => f.into_pyobject(py)?.into_any().unbind(),
            toml::Value::Integer(i) => i.into_pyobject(py)?.into_any().unbind(),
            toml::Value::String(s) => s.into_pyobject(py)?.into_any().unbind(),
            other => other.to_string().into_pyobject(py)?.into_any().unbind(),
        })
    }

    /// Sets one key; integers are accepted for float keys.
    fn set(&mut self, key: &str, value: &Bound<'_, PyAny>) -> PyResult<()> {
        let (section, name) = split_key(key)?;
        let mut table = toml::Value::try_from(&self.inner).map_err(|e| PyValueError::new_err(e.to_string()))?;
        let sec = table
            .get_mut(section)
            .and_then(|s| s.as_table_mut())
            .ok_or_else(|| PyValueError::new_err(format!("unknown section `{section}`")))?;
        let old = sec.get(name).ok_or_else(|| PyValueError::new_err(format!("unknown key `{key}`")))?;
        let mut new = to_toml(value)?;
        if let (toml::Value::Float(_), toml::Value::Integer(i)) = (old, &new) {
            new = toml::Value::Float(*i as f64);
        }
        sec.insert(name.to_string(), new);
        self.inner = table.try_into().map_err(|e: toml::de::Error| PyValueError::new_err(e.to_string()))?;
        Ok(())
    }

    fn validate(&self) -> PyResult<()> {
        self.inner.validate().map_err(value_err)
    }

    fn market_model(&self) -> PyResult<PyMarketModel> {
        self.inner.market_model().map(|inner| PyMarketModel { inner }).map_err(value_err)
    }

    fn mortality(&self) -> PyResult<PyCoupleMortality> {
        self.inner.couple().map(|inner| PyCoupleMortality { inner }).map_err(value_err)
    }

    fn contract(&self) -> PyResult<PyContract> {
        self.inner.contract_spec().map(|inner| PyContract { inner }).map_err(value_err)
    }

    fn __repr__(&self) -> String {
        format!("Config(maturity={}, seed={}, method={})", self.inner.contract.maturity, self.inner.numerics.seed, self.inner.numerics.method)
    }
}

#[pyclass(name = "MarketModel")]
struct PyMarketModel {
    inner: MarketModel,
}

#[pymethods]
impl PyMarketModel {
    /// B(0, t).
    fn bond_price(&self, t: f64) -> PyResult<f64> {
        self.inner.bond_price0(t).map_err(value_err)
    }

    /// ω(t) = t·θ²(σ2).
    fn omega(&self, t: f64) -> PyResult<f64> {
        self.inner.omega(t).map_err(value_err)
    }

    fn drift(&self, u: f64, t: f64) -> PyResult<f64> {
        self.inner.drift_a(u, t).map_err(value_err)
    }

    /// Cumulant of driver 1 or 2 at complex z.
    fn theta(&self, driver: u8, z: Complex64) -> PyResult<Complex64> {
        match driver {
            1 => self.inner.nig1().theta(z),
            2 => self.inner.nig2().theta(z),
            _ => return Err(PyValueError::new_err("driver must be 1 or 2")),
        }
        .map_err(value_err)
    }
}

#[pyclass(name = "CoupleMortality")]
struct PyCoupleMortality {
    inner: CoupleMortality,
}

#[pymethods]
impl PyCoupleMortality {
    /// P(τ1 > t, τ2 > t).
    fn joint_survival(&self, t: f64) -> f64 {
        self.inner.joint_survival(t)
    }

    fn joint_density(&self, t1: f64, t2: f64) -> PyResult<f64> {
        self.inner.joint_density(t1, t2).map_err(value_err)
    }

    /// P(at least one spouse alive at t).
    fn prob_union_alive(&self, t: f64) -> PyResult<f64> {
        self.inner.prob_union_alive(t).map_err(value_err)
    }

    fn normalization(&self, py: Python<'_>) -> PyResult<f64> {
        py.detach(|| self.inner.normalization()).map_err(runtime_err)
    }

    #[getter]
    fn t_star(&self) -> f64 {
        self.inner.t_star()
    }
}

#[pyclass(name = "Contract")]
struct PyContract {
    inner: ContractSpec,
}

#[pymethods]
impl PyContract {
    #[getter]
    fn maturity(&self) -> f64 {
        self.inner.maturity()
    }

    #[getter]
    fn surrender_dates(&self) -> Vec<f64> {
        self.inner.surrender_dates().to_vec()
    }

    #[getter]
    fn death_dates(&self) -> Vec<f64> {
        self.inner.death_dates().to_vec()
    }

    /// (j, i) pairs whose death benefit needs the surrender-interval integrals.
    fn admissible_pairs(&self) -> Vec<(usize, usize)> {
        self.inner.admissible_pairs()
    }

    fn penalty_factor(&self, t: f64) -> PyResult<f64> {
        self.inner.penalty_factor(t).map_err(value_err)
    }
}

/// Prices are (value, std_error) pairs.
#[pyclass(name = "PriceBreakdown")]
struct PyPriceBreakdown {
    inner: PriceBreakdown,
}

#[pymethods]
impl PyPriceBreakdown {
    #[getter]
    fn gmab(&self) -> (f64, f64) {
        (self.inner.gmab.value, self.inner.gmab.std_error)
    }
    #[getter]
    fn sb(&self) -> (f64, f64) {
        (self.inner.sb.value, self.inner.sb.std_error)
    }
    #[getter]
    fn db(&self) -> (f64, f64) {
        (self.inner.db.value, self.inner.db.std_error)
    }
    #[getter]
    fn total(&self) -> (f64, f64) {
        (self.inner.total.value, self.inner.total.std_error)
    }

    /// label -> (value, std_error, method).
    #[getter]
    fn integrals(&self) -> Vec<(String, f64, f64, String)> {
        self.inner.integrals.iter().map(|(k, e)| (k.label(), e.value, e.std_error, e.method.to_string())).collect()
    }

    #[getter]
    fn warnings(&self) -> Vec<String> {
        self.inner.warnings.clone()
    }

    fn __repr__(&self) -> String {
        let b = &self.inner;
        format!("PriceBreakdown(gmab={:.6}, sb={:.6}, db={:.6}, total={:.6})", b.gmab.value, b.sb.value, b.db.value, b.total.value)
    }
}

#[pyclass(name = "OracleEstimate")]
struct PyOracleEstimate {
    inner: OracleEstimate,
}

#[pymethods]
impl PyOracleEstimate {
    #[getter]
    fn gmab(&self) -> (f64, f64) {
        (self.inner.gmab.value, self.inner.gmab.std_error)
    }
    #[getter]
    fn sb(&self) -> (f64, f64) {
        (self.inner.sb.value, self.inner.sb.std_error)
    }
    #[getter]
    fn db(&self) -> (f64, f64) {
        (self.inner.db.value, self.inner.db.std_error)
    }
    #[getter]
    fn total(&self) -> (f64, f64) {
        (self.inner.total.value, self.inner.total.std_error)
    }
    #[getter]
    fn paths(&self) -> u64 {
        self.inner.paths
    }
    #[getter]
    fn seed(&self) -> u64 {
        self.inner.seed
    }
}

fn evaluator(cfg: &RunConfig, method: Option<&str>) -> PyResult<Evaluator> {
    let mut ev = cfg.evaluator();
    if let Some(m) = method {
        ev.method = match m {
            "auto" => MethodChoice::Auto,
            "quad" => MethodChoice::Quadrature,
            "mc" => MethodChoice::MonteCarlo,
            _ => return Err(PyValueError::new_err(format!("method must be auto, quad or mc, got `{m}`"))),
        };
    }
    Ok(ev)
}

/// GMAB, SB and DB prices. `method` overrides numerics.method.
#[pyfunction]
#[pyo3(signature = (config, method=None))]
fn price_total(py: Python<'_>, config: &PyConfig, method: Option<&str>) -> PyResult<PyPriceBreakdown> {
    let cfg = &config.inner;
    let ev = evaluator(cfg, method)?;
    let (model, couple, spec) = (cfg.market_model().map_err(value_err)?, cfg.couple().map_err(value_err)?, cfg.contract_spec().map_err(value_err)?);
    let inner = py.detach(|| pricing::price_total(&model, &spec, &couple, &ev)).map_err(runtime_err)?;
    Ok(PyPriceBreakdown { inner })
}

/// Path-simulation price; `paths` overrides numerics.oracle_paths.
#[pyfunction]
#[pyo3(signature = (config, paths=None))]
fn oracle_price(py: Python<'_>, config: &PyConfig, paths: Option<u64>) -> PyResult<PyOracleEstimate> {
    let cfg = &config.inner;
    let mut opts = cfg.oracle_options();
    if let Some(n) = paths {
        opts.paths = n;
    }
    let (model, couple, spec) = (cfg.market_model().map_err(value_err)?, cfg.couple().map_err(value_err)?, cfg.contract_spec().map_err(value_err)?);
    let inner = py.detach(|| core_oracle_price(&model, &spec, &couple, &opts)).map_err(runtime_err)?;
    Ok(PyOracleEstimate { inner })
}

/// Grid of total prices: list of (x, y, gmab, sb, db, total) values, row-major in x.
#[pyfunction]
#[pyo3(signature = (config, axis1, values1, axis2, values2, method=None))]
fn sensitivity_grid(
    py: Python<'_>,
    config: &PyConfig,
    axis1: &str,
    values1: Vec<f64>,
    axis2: &str,
    values2: Vec<f64>,
    method: Option<&str>,
) -> PyResult<Vec<(f64, f64, f64, f64, f64, f64)>> {
    let cfg = &config.inner;
    let ev = evaluator(cfg, method)?;
    let a1 = GridAxis::new(SensitivityParam::parse(axis1).map_err(value_err)?, values1).map_err(value_err)?;
    let a2 = GridAxis::new(SensitivityParam::parse(axis2).map_err(value_err)?, values2).map_err(value_err)?;
    let (model, couple, params) = (cfg.market_model().map_err(value_err)?, cfg.couple().map_err(value_err)?, cfg.contract_params().map_err(value_err)?);
    let cells = py.detach(|| pricing::sensitivity_grid(&model, &params, &couple, &ev, &a1, &a2)).map_err(runtime_err)?;
    Ok(cells
        .iter()
        .map(|c| {
            let b = &c.breakdown;
            (c.x, c.y, b.gmab.value, b.sb.value, b.db.value, b.total.value)
        })
        .collect())
}

/// Invariant battery: list of (name, "pass" | "fail" | "skipped", detail).
#[pyfunction]
#[pyo3(signature = (config, paths=20_000))]
fn validate(py: Python<'_>, config: &PyConfig, paths: u64) -> Vec<(String, String, String)> {
    let cfg = config.inner.clone();
    py.detach(|| run_checks(&cfg, paths))
        .into_iter()
        .map(|r| {
            let o = match r.outcome {
                Outcome::Pass => "pass",
                Outcome::Fail => "fail",
                Outcome::Skipped => "skipped",
            };
            (r.name, o.to_string(), r.detail)
        })
        .collect()
}

/// θ(z) = δ(√(α²−β²) − √(α²−(β+z)²)).
#[pyfunction]
fn nig_cumulant(alpha: f64, beta: f64, delta: f64, z: Complex64) -> PyResult<Complex64> {
    NigParams::new(alpha, beta, delta).and_then(|p| p.theta(z)).map_err(value_err)
}

#[pymodule]
fn jointva(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    m.add_class::<PyConfig>()?;
    m.add_class::<PyMarketModel>()?;
    m.add_class::<PyCoupleMortality>()?;
    m.add_class::<PyContract>()?;
    m.add_class::<PyPriceBreakdown>()?;
    m.add_class::<PyOracleEstimate>()?;
    m.add_function(wrap_pyfunction!(price_total, m)?)?;
    m.add_function(wrap_pyfunction!(oracle_price, m)?)?;
    m.add_function(wrap_pyfunction!(sensitivity_grid, m)?)?;
    m.add_function(wrap_pyfunction!(validate, m)?)?;
    m.add_function(wrap_pyfunction!(nig_cumulant, m)?)?;
    Ok(())
}
