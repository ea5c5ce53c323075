//! Python bindings: simulate, fit, predict, survival curves and LPML.

use std::collections::HashMap;

use pyo3::exceptions::{PyNotImplementedError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use gbart::data::RawTable;
use gbart::engine::{self, ChainTrace, Draw, SamplerConfig};
use gbart::simulate::{Scenario, ScenarioKind};
use gbart::{special, Dataset, Error, Scaling, ScalingMethod};

fn to_py(e: Error) -> PyErr {
    match e {
        Error::Unsupported(m) => PyNotImplementedError::new_err(m),
        Error::Validation(_) | Error::Input(_) | Error::Parse { .. } | Error::Structural(_) => {
            PyValueError::new_err(e.to_string())
        }
        other => PyRuntimeError::new_err(other.to_string()),
    }
}

fn flatten(x: &[Vec<f64>]) -> PyResult<(Vec<f64>, usize)> {
    let p = x.first().map_or(0, Vec::len);
    if p == 0 {
        return Err(PyValueError::new_err("x must be a non-empty list of non-empty rows"));
    }
    if let Some(i) = x.iter().position(|r| r.len() != p) {
        return Err(PyValueError::new_err(format!("row {} has {} values, expected {p}", i + 1, x[i].len())));
    }
    Ok((x.concat(), p))
}

fn columns<'py>(py: Python<'py>, cols: Vec<(&str, Vec<f64>)>) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    for (k, v) in cols {
        d.set_item(k, v)?;
    }
    Ok(d)
}

/// Simulates a Friedman scenario. Returns a dict with `x`, `y`, `delta`
/// (None unless survival), `truth_lambda` and `truth_mean`.
#[pyfunction]
#[pyo3(signature = (scenario, n=None, p=None, seed=0))]
fn simulate<'py>(py: Python<'py>, scenario: &str, n: Option<usize>, p: Option<usize>, seed: u64) -> PyResult<Bound<'py, PyDict>> {
    let kind: ScenarioKind = scenario.parse().map_err(to_py)?;
    let mut s = Scenario::new(kind, seed);
    s = s.with_size(n.unwrap_or(s.n), p.unwrap_or(s.p));
    let (data, truth) = gbart::simulate(&s).map_err(to_py)?;
    let d = PyDict::new(py);
    let rows: Vec<Vec<f64>> = data.rows().map(<[f64]>::to_vec).collect();
    d.set_item("x", rows)?;
    d.set_item("y", data.outcomes().collect::<Vec<_>>())?;
    let delta: Option<Vec<bool>> = data
        .has_censoring()
        .then(|| data.obs().iter().map(|o| o.event.unwrap_or(true)).collect());
    d.set_item("delta", delta)?;
    d.set_item("truth_lambda", truth.lambda)?;
    d.set_item("truth_mean", truth.mean)?;
    Ok(d)
}

/// A fitted model: kept posterior draws plus the per-iteration trace.
#[pyclass(frozen, module = "pygbart")]
struct Fit {
    config: SamplerConfig,
    scaling: Scaling,
    traces: Vec<ChainTrace>,
    draws: Vec<Draw>,
}

impl Fit {
    fn scale(&self, x: &[Vec<f64>]) -> PyResult<Dataset> {
        let (flat, p) = flatten(x)?;
        let n = flat.len() / p;
        let table = RawTable {
            x: flat,
            p,
            y: vec![0.0; n],
            delta: None,
        };
        table.scale_with(&self.scaling).map_err(to_py)
    }
}

#[pymethods]
impl Fit {
    #[getter]
    fn model(&self) -> String {
        self.config.model.name().to_string()
    }

    #[getter]
    fn num_draws(&self) -> usize {
        self.draws.len()
    }

    /// Posterior mean and 95% band of `r(x)` and of its mean-scale transform.
    fn predict<'py>(&self, py: Python<'py>, x: Vec<Vec<f64>>) -> PyResult<Bound<'py, PyDict>> {
        let data = self.scale(&x)?;
        let s = engine::predict(&self.draws, &data).map_err(to_py)?;
        let col = |f: &dyn Fn(&engine::PointSummary) -> f64| s.points.iter().map(f).collect::<Vec<f64>>();
        columns(
            py,
            vec![
                ("lambda_mean", col(&|p| p.lambda.mean)),
                ("lambda_lower", col(&|p| p.lambda.lower)),
                ("lambda_upper", col(&|p| p.lambda.upper)),
                ("mean", col(&|p| p.transformed.mean)),
                ("mean_lower", col(&|p| p.transformed.lower)),
                ("mean_upper", col(&|p| p.transformed.upper)),
            ],
        )
    }

    /// Posterior survival curve at one covariate row.
    fn survival<'py>(&self, py: Python<'py>, x: Vec<f64>, times: Vec<f64>) -> PyResult<Bound<'py, PyDict>> {
        let data = self.scale(&[x])?;
        let c = engine::survival_curve(&self.draws, data.row(0), &times).map_err(to_py)?;
        columns(
            py,
            vec![
                ("t", c.times.clone()),
                ("mean", c.bands.iter().map(|b| b.mean).collect()),
                ("lower", c.bands.iter().map(|b| b.lower).collect()),
                ("upper", c.bands.iter().map(|b| b.upper).collect()),
            ],
        )
    }

    /// `(lpml, log_cpo)` from the kept draws.
    fn lpml(&self) -> PyResult<(f64, Vec<f64>)> {
        let l = engine::lpml_of_draws(&self.draws).map_err(to_py)?;
        Ok((l.lpml, l.log_cpo))
    }

    /// Kept draws x training rows.
    fn pointwise_loglik(&self) -> Vec<Vec<f64>> {
        self.draws.iter().map(|d| d.pointwise_loglik.clone()).collect()
    }

    fn split_probs(&self) -> PyResult<Vec<f64>> {
        engine::mean_split_probs(&self.draws).map_err(to_py)
    }

    fn gengamma_variance(&self) -> PyResult<Vec<f64>> {
        engine::gengamma_variance(&self.draws).map_err(to_py)
    }

    /// Per-iteration trace columns over all chains.
    fn trace<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyDict>> {
        let records = || self.traces.iter().flat_map(|t| t.records.iter().map(move |r| (t.chain, r)));
        let mut cols = vec![
            ("chain", records().map(|(c, _)| c as f64).collect()),
            ("iteration", records().map(|(_, r)| r.iteration as f64).collect()),
            ("sigma_mu", records().map(|(_, r)| r.sigma_mu).collect()),
            ("log_likelihood", records().map(|(_, r)| r.log_likelihood).collect()),
            ("log_posterior", records().map(|(_, r)| r.log_posterior).collect()),
            ("mean_leaves", records().map(|(_, r)| r.mean_leaves).collect()),
        ];
        let names: Vec<&'static str> = records().next().map(|(_, r)| r.nuisance.iter().map(|(k, _)| *k).collect()).unwrap_or_default();
        for (j, name) in names.into_iter().enumerate() {
            cols.push((name, records().map(|(_, r)| r.nuisance[j].1).collect()));
        }
        columns(py, cols)
    }

    fn __repr__(&self) -> String {
        format!(
            "Fit(model={}, trees={}, chains={}, draws={})",
            self.config.model,
            self.config.num_trees,
            self.config.chains,
            self.draws.len()
        )
    }
}

/// Fits a model to raw covariates `x` (rows) and outcomes `y`. Covariates
/// are min-max scaled to the unit cube. `options` takes any config key
/// (e.g. `{"k": "2", "link": "exp"}`).
#[pyfunction]
#[pyo3(signature = (x, y, model="gaussian", delta=None, num_trees=None, iterations=None, burn_in=None, thin=None, chains=None, seed=None, options=None))]
#[allow(clippy::too_many_arguments)]
fn fit(
    py: Python<'_>,
    x: Vec<Vec<f64>>,
    y: Vec<f64>,
    model: &str,
    delta: Option<Vec<bool>>,
    num_trees: Option<usize>,
    iterations: Option<usize>,
    burn_in: Option<usize>,
    thin: Option<usize>,
    chains: Option<usize>,
    seed: Option<u64>,
    options: Option<HashMap<String, String>>,
) -> PyResult<Fit> {
    let mut config = SamplerConfig::default();
    config.set("model", model).map_err(to_py)?;
    let mut opts: Vec<(String, String)> = options.unwrap_or_default().into_iter().collect();
    opts.sort();
    for (k, v) in opts {
        config.set(&k, &v).map_err(to_py)?;
    }
    config.num_trees = num_trees.unwrap_or(config.num_trees);
    config.iterations = iterations.unwrap_or(config.iterations);
    config.burn_in = burn_in.unwrap_or(config.burn_in);
    config.thin = thin.unwrap_or(config.thin);
    config.chains = chains.unwrap_or(config.chains);
    config.seed = seed.unwrap_or(config.seed);
    config.validate().map_err(to_py)?;

    let (flat, p) = flatten(&x)?;
    if y.len() != x.len() {
        return Err(PyValueError::new_err(format!("x has {} rows but y has {}", x.len(), y.len())));
    }
    if let Some(d) = &delta {
        if d.len() != y.len() {
            return Err(PyValueError::new_err(format!("delta has {} entries but y has {}", d.len(), y.len())));
        }
    } else if config.model.is_survival() {
        return Err(PyValueError::new_err(format!("the {} model needs delta", config.model)));
    }
    let data = RawTable { x: flat, p, y, delta }.into_dataset(ScalingMethod::MinMax).map_err(to_py)?;
    let scaling = data.scaling().expect("scaled above").clone();
    let traces = py.detach(|| engine::run_chains(&config, &data)).map_err(to_py)?;
    let draws = engine::combine_draws(&traces);
    Ok(Fit {
        config,
        scaling,
        traces,
        draws,
    })
}

/// Harmonic-mean LPML of a draws x observations log-likelihood matrix;
/// returns `(lpml, log_cpo)`.
#[pyfunction]
fn lpml(matrix: Vec<Vec<f64>>) -> PyResult<(f64, Vec<f64>)> {
    let l = engine::lpml(&matrix).map_err(to_py)?;
    Ok((l.lpml, l.log_cpo))
}

#[pyfunction]
fn friedman(x: Vec<f64>) -> PyResult<f64> {
    gbart::simulate::friedman(&x).map_err(to_py)
}

#[pyfunction]
fn digamma(x: f64) -> PyResult<f64> {
    special::digamma(x).map_err(to_py)
}

#[pyfunction]
fn trigamma(x: f64) -> PyResult<f64> {
    special::trigamma(x).map_err(to_py)
}

#[pyfunction]
fn log_gamma(x: f64) -> PyResult<f64> {
    special::log_gamma_fn(x).map_err(to_py)
}

/// Regularized upper incomplete gamma `Q(a, x)`.
#[pyfunction]
fn gamma_q(a: f64, x: f64) -> PyResult<f64> {
    special::reg_upper_inc_gamma(a, x).map_err(to_py)
}

#[pymodule]
fn pygbart(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Fit>()?;
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    m.add_function(wrap_pyfunction!(fit, m)?)?;
    m.add_function(wrap_pyfunction!(lpml, m)?)?;
    m.add_function(wrap_pyfunction!(friedman, m)?)?;
    m.add_function(wrap_pyfunction!(digamma, m)?)?;
    m.add_function(wrap_pyfunction!(trigamma, m)?)?;
    m.add_function(wrap_pyfunction!(log_gamma, m)?)?;
    m.add_function(wrap_pyfunction!(gamma_q, m)?)?;
    Ok(())
}
