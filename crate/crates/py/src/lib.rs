//! Python bindings: the probabilistic primitives, fast-forward scenario
//! reduction, the CVaR-blended cost, and config-driven pipeline runs that
//! return JSON-encoded results.

use std::path::Path;

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use energy_park_core::config::load_config;
use energy_park_core::optimizer::builder::CvarConfig;
use energy_park_core::optimizer::ClarabelBackend;
use energy_park_core::pipeline::{ActionSet, Pipeline};
use energy_park_core::rng::stream;
use energy_park_core::scenario::{self, AnnualizationInputs};
use energy_park_core::uncertainty::{
    self, McmcSettings, MeasurementModel, TruncatedGaussianSpec,
};
use energy_park_core::Error;

fn py_err(e: Error) -> PyErr {
    match e {
        Error::InvalidParam(_) | Error::Config(_) => PyValueError::new_err(e.to_string()),
        other => PyRuntimeError::new_err(other.to_string()),
    }
}

/// Gaussian truncated to a finite interval; priors use bounds at two
/// standard deviations.
#[pyclass(name = "TruncatedGaussian", from_py_object)]
#[derive(Clone)]
struct PyTruncatedGaussian {
    inner: TruncatedGaussianSpec,
}

#[pymethods]
impl PyTruncatedGaussian {
    /// TruncatedGaussian(mean, std, lower=None, upper=None)
    #[new]
    #[pyo3(signature = (mean, std, lower = None, upper = None))]
    fn new(mean: f64, std: f64, lower: Option<f64>, upper: Option<f64>) -> PyResult<Self> {
        let inner = match (lower, upper) {
            (None, None) => TruncatedGaussianSpec::symmetric(mean, std),
            (Some(l), Some(u)) => TruncatedGaussianSpec::with_bounds(mean, std, l, u),
            _ => {
                return Err(PyValueError::new_err(
                    "provide both bounds or neither",
                ))
            }
        }
        .map_err(py_err)?;
        Ok(PyTruncatedGaussian { inner })
    }

    #[getter]
    fn mean(&self) -> f64 {
        self.inner.mean
    }

    #[getter]
    fn std(&self) -> f64 {
        self.inner.std
    }

    #[getter]
    fn lower(&self) -> f64 {
        self.inner.lower
    }

    #[getter]
    fn upper(&self) -> f64 {
        self.inner.upper
    }

    fn pdf(&self, x: f64) -> f64 {
        self.inner.pdf(x)
    }

    /// Exact mean of the truncated distribution.
    fn truncated_mean(&self) -> f64 {
        self.inner.truncated_mean()
    }

    /// Exact standard deviation of the truncated distribution.
    fn truncated_std(&self) -> f64 {
        self.inner.truncated_std()
    }

    /// Deterministic inverse-CDF draws for a seed.
    #[pyo3(signature = (seed, n = 1))]
    fn sample(&self, seed: u64, n: usize) -> Vec<f64> {
        let mut rng = stream(seed, "py-sample");
        (0..n).map(|_| self.inner.sample(&mut rng)).collect()
    }

    fn __repr__(&self) -> String {
        format!(
            "TruncatedGaussian(mean={}, std={}, lower={}, upper={})",
            self.inner.mean, self.inner.std, self.inner.lower, self.inner.upper
        )
    }
}

/// Closed-form posterior after one demonstrator measurement `z` with
/// uncertainty reduction factor `r`: Gaussian-product moments truncated to
/// the prior's interval.
#[pyfunction]
fn conjugate_posterior(
    prior: &PyTruncatedGaussian,
    z: f64,
    r: f64,
) -> PyResult<PyTruncatedGaussian> {
    let model = MeasurementModel::for_prior(&prior.inner, r).map_err(py_err)?;
    let inner = uncertainty::conjugate_posterior(&prior.inner, z, &model).map_err(py_err)?;
    Ok(PyTruncatedGaussian { inner })
}

/// Random-walk Metropolis samples of the same posterior; returns
/// (samples, acceptance_rate).
#[pyfunction]
#[pyo3(signature = (prior, z, r, n_samples = 250, burn_in = 250, thinning = 10, proposal_frac = 0.5, seed = 0))]
#[allow(clippy::too_many_arguments)]
fn mcmc_posterior_samples(
    prior: &PyTruncatedGaussian,
    z: f64,
    r: f64,
    n_samples: usize,
    burn_in: usize,
    thinning: usize,
    proposal_frac: f64,
    seed: u64,
) -> PyResult<(Vec<f64>, f64)> {
    let model = MeasurementModel::for_prior(&prior.inner, r).map_err(py_err)?;
    let settings = McmcSettings { n_samples, burn_in, thinning, proposal_frac };
    let mut rng = stream(seed, "py-mcmc");
    let run = uncertainty::mcmc_posterior_samples(&prior.inner, z, &model, &settings, &mut rng)
        .map_err(py_err)?;
    Ok((run.samples, run.acceptance_rate))
}

/// Capital cost per year of lifetime plus annual operating cost.
#[pyfunction]
fn annualize(capex: f64, opex_per_yr: f64, lifetime_yr: f64) -> PyResult<f64> {
    scenario::annualize(&AnnualizationInputs { capex, opex_per_yr, lifetime_yr }).map_err(py_err)
}

/// Greedy fast-forward reduction on a cost signature; returns
/// (selected_indices, weights, kantorovich_residual).
#[pyfunction]
fn fast_forward_select(
    costs: Vec<f64>,
    probabilities: Vec<f64>,
    target: usize,
) -> PyResult<(Vec<usize>, Vec<f64>, f64)> {
    scenario::fast_forward_select(&costs, &probabilities, target).map_err(py_err)
}

/// Expected cost blended with the CVaR of the alpha tail, rescaled back
/// onto the cost axis; `tail_weight` = 0 reduces to the expected cost.
#[pyfunction]
fn risk_adjusted_cost(
    costs: Vec<f64>,
    probabilities: Vec<f64>,
    alpha: f64,
    tail_weight: f64,
) -> PyResult<f64> {
    if costs.len() != probabilities.len() {
        return Err(PyValueError::new_err("costs and probabilities must align"));
    }
    let cvar = CvarConfig { alpha, tail_weight };
    cvar.validate().map_err(py_err)?;
    Ok(energy_park_core::optimizer::builder::risk_adjusted_cost(
        &costs,
        &probabilities,
        &cvar,
    ))
}

fn pipeline_json<F>(config_path: &str, run: F) -> PyResult<String>
where
    F: FnOnce(&Pipeline) -> Result<serde_json::Value, Error>,
{
    let config = load_config(Path::new(config_path)).map_err(py_err)?;
    let inputs = config.build_inputs(None).map_err(py_err)?;
    let analysis = config.analysis_settings();
    let backend = ClarabelBackend::default();
    let pipeline =
        Pipeline::new(&inputs, &analysis, &backend, config.digest()).map_err(py_err)?;
    let value = run(&pipeline).map_err(py_err)?;
    serde_json::to_string_pretty(&value).map_err(|e| PyRuntimeError::new_err(e.to_string()))
}

/// Size the park for every technology subset under the prior; returns the
/// design reports as a JSON string.
#[pyfunction]
fn prior_design(config_path: &str) -> PyResult<String> {
    pipeline_json(config_path, |pipeline| {
        let prior = pipeline.prior_design()?;
        Ok(serde_json::json!({
            "baseline": prior.baseline,
            "reports": prior.reports,
            "selected": prior.best,
        }))
    })
}

/// Full value-of-information run (prior + restricted posterior designs);
/// returns a JSON string.
#[pyfunction]
fn value_of_information(config_path: &str) -> PyResult<String> {
    pipeline_json(config_path, |pipeline| {
        let prior = pipeline.prior_design()?;
        let restricted = pipeline
            .preposterior_value(&ActionSet::Restricted(prior.best_subset().to_vec()), &prior)?;
        let voi = pipeline.compute_evii(prior.best_report(), &restricted)?;
        Ok(serde_json::json!({
            "prior": prior.best_report(),
            "result": voi,
            "samples": restricted.records,
        }))
    })
}

/// Full value-of-optionality run (restricted and expanded posterior
/// designs on common measurement samples); returns a JSON string.
#[pyfunction]
fn value_of_optionality(config_path: &str) -> PyResult<String> {
    pipeline_json(config_path, |pipeline| {
        let run = pipeline.run_full()?;
        Ok(serde_json::json!({
            "prior": run.prior.best_report(),
            "voi": run.voi,
            "result": run.voo,
        }))
    })
}

#[pymodule]
fn energy_park(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyTruncatedGaussian>()?;
    m.add_function(wrap_pyfunction!(conjugate_posterior, m)?)?;
    m.add_function(wrap_pyfunction!(mcmc_posterior_samples, m)?)?;
    m.add_function(wrap_pyfunction!(annualize, m)?)?;
    m.add_function(wrap_pyfunction!(fast_forward_select, m)?)?;
    m.add_function(wrap_pyfunction!(risk_adjusted_cost, m)?)?;
    m.add_function(wrap_pyfunction!(prior_design, m)?)?;
    m.add_function(wrap_pyfunction!(value_of_information, m)?)?;
    m.add_function(wrap_pyfunction!(value_of_optionality, m)?)?;
    Ok(())
}
