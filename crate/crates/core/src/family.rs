//! The likelihood-family contract consumed by the sampler, plus the
//! finite-difference machinery for families without analytic derivatives.

use std::fmt;
use std::sync::Arc;

use rand::RngCore;

use crate::error::{Error, Result};

/// Default step for central finite differences.
pub const DEFAULT_FD_DELTA: f64 = 1e-6;

/// One outcome. `event` is the censoring indicator used by survival families:
/// `Some(true)` when the event time was observed.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Observation {
    pub y: f64,
    pub event: Option<bool>,
}

impl Observation {
    pub fn new(y: f64) -> Self {
        Observation { y, event: None }
    }

    pub fn censored(y: f64, event: bool) -> Self {
        Observation { y, event: Some(event) }
    }

    /// `delta` as 0/1; uncensored when absent.
    pub fn delta(&self) -> f64 {
        match self.event {
            Some(false) => 0.0,
            _ => 1.0,
        }
    }
}

/// A model `f_eta(y | lambda)` where `lambda = r(x)` is the forest output.
///
/// The per-observation methods are on the sampler's hot path and signal
/// numerical trouble with non-finite values rather than `Result`s; the
/// sampler rejects any proposal that produces one.
pub trait LikelihoodFamily: Send + Sync + fmt::Debug {
    fn name(&self) -> &'static str;

    /// Checks that an outcome is in the support of the model.
    fn validate(&self, obs: &Observation) -> Result<()>;

    fn log_density(&self, obs: &Observation, lambda: f64) -> f64;

    /// `U(y | lambda)`, the derivative of `log_density` in `lambda`.
    fn score(&self, obs: &Observation, lambda: f64) -> f64;

    /// `J(y | lambda) = -dU/dlambda`.
    fn observed_info(&self, obs: &Observation, lambda: f64) -> f64;

    /// `I(lambda) = E[J(Y | lambda)]`, when available in closed form.
    fn fisher_info(&self, _lambda: f64) -> Option<f64> {
        None
    }

    /// Score and the curvature used by the Laplace proposal: Fisher
    /// information when the family has it, observed information otherwise.
    fn score_and_curvature(&self, obs: &Observation, lambda: f64) -> (f64, f64) {
        let curvature = match self.fisher_info(lambda) {
            Some(i) => i,
            None => self.observed_info(obs, lambda),
        };
        (self.score(obs, lambda), curvature)
    }

    /// Current nuisance parameters as `(name, value)` pairs.
    fn nuisance(&self) -> Vec<(&'static str, f64)> {
        Vec::new()
    }

    fn set_nuisance(&mut self, name: &str, _value: f64) -> Result<()> {
        Err(Error::Validation(format!("{} has no nuisance parameter '{name}'", self.name())))
    }

    /// Sets data-dependent defaults (initial values, prior scales).
    fn initialize(&mut self, _obs: &[Observation]) {}

    /// One Markov transition for the nuisance parameters given the current
    /// forest fit at each observation.
    fn update_nuisance(&mut self, _obs: &[Observation], _fit: &[f64], _rng: &mut dyn RngCore) {}

    /// Mean-scale summary of `lambda` (e.g. `E[Y]` or a median time).
    fn predict_transform(&self, lambda: f64) -> f64 {
        lambda
    }

    /// `P(T > t | lambda)` for survival families.
    fn survival(&self, _t: f64, _lambda: f64) -> Option<f64> {
        None
    }

    fn is_survival(&self) -> bool {
        false
    }

    /// Draws an outcome at `lambda` (uncensored for survival families).
    fn simulate(&self, lambda: f64, rng: &mut dyn RngCore) -> Observation;

    fn clone_box(&self) -> Box<dyn LikelihoodFamily>;
}

impl Clone for Box<dyn LikelihoodFamily> {
    fn clone(&self) -> Self {
        self.clone_box()
    }
}

fn finite_or_err(v: f64, at: f64) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::Numerical(format!("function is not finite near {at}")))
    }
}

/// Central difference `(f(x + d) - f(x - d)) / 2d`.
pub fn fd_gradient<F: Fn(f64) -> f64>(f: F, x: f64, delta: f64) -> Result<f64> {
    let hi = finite_or_err(f(x + delta), x + delta)?;
    let lo = finite_or_err(f(x - delta), x - delta)?;
    Ok((hi - lo) / (2.0 * delta))
}

/// Second central difference `(f(x + d) - 2 f(x) + f(x - d)) / d^2`.
pub fn fd_hessian<F: Fn(f64) -> f64>(f: F, x: f64, delta: f64) -> Result<f64> {
    let hi = finite_or_err(f(x + delta), x + delta)?;
    let mid = finite_or_err(f(x), x)?;
    let lo = finite_or_err(f(x - delta), x - delta)?;
    Ok((hi - 2.0 * mid + lo) / (delta * delta))
}

/// First and second central differences from the same three evaluations.
/// Non-finite evaluations yield NaN.
#[inline]
pub(crate) fn fd_both<F: Fn(f64) -> f64>(f: F, x: f64, delta: f64) -> (f64, f64) {
    let (hi, mid, lo) = (f(x + delta), f(x), f(x - delta));
    if !(hi.is_finite() && mid.is_finite() && lo.is_finite()) {
        return (f64::NAN, f64::NAN);
    }
    ((hi - lo) / (2.0 * delta), (hi - 2.0 * mid + lo) / (delta * delta))
}

pub type LogDensityFn = dyn Fn(&Observation, f64) -> f64 + Send + Sync;

/// A family defined only by its log density; score and observed information
/// come from central differences, and there is no Fisher information, so the
/// sampler falls back to Newton steps.
#[derive(Clone)]
pub struct FiniteDifferenceFamily {
    log_density: Arc<LogDensityFn>,
    delta: f64,
}

impl fmt::Debug for FiniteDifferenceFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FiniteDifferenceFamily").field("delta", &self.delta).finish()
    }
}

pub fn wrap_with_fd<F>(log_density: F, delta: f64) -> FiniteDifferenceFamily
where
    F: Fn(&Observation, f64) -> f64 + Send + Sync + 'static,
{
    FiniteDifferenceFamily {
        log_density: Arc::new(log_density),
        delta,
    }
}

impl FiniteDifferenceFamily {
    pub fn delta(&self) -> f64 {
        self.delta
    }
}

impl LikelihoodFamily for FiniteDifferenceFamily {
    fn name(&self) -> &'static str {
        "finite_difference"
    }

    fn validate(&self, obs: &Observation) -> Result<()> {
        if obs.y.is_finite() {
            Ok(())
        } else {
            Err(Error::Input(format!("non-finite outcome {}", obs.y)))
        }
    }

    fn log_density(&self, obs: &Observation, lambda: f64) -> f64 {
        (self.log_density)(obs, lambda)
    }

    fn score(&self, obs: &Observation, lambda: f64) -> f64 {
        fd_gradient(|l| (self.log_density)(obs, l), lambda, self.delta).unwrap_or(f64::NAN)
    }

    fn observed_info(&self, obs: &Observation, lambda: f64) -> f64 {
        fd_hessian(|l| (self.log_density)(obs, l), lambda, self.delta).map_or(f64::NAN, |h| -h)
    }

    fn score_and_curvature(&self, obs: &Observation, lambda: f64) -> (f64, f64) {
        let (g, h) = fd_both(|l| (self.log_density)(obs, l), lambda, self.delta);
        (g, -h)
    }

    fn simulate(&self, lambda: f64, _rng: &mut dyn RngCore) -> Observation {
        Observation::new(lambda)
    }

    fn clone_box(&self) -> Box<dyn LikelihoodFamily> {
        Box::new(self.clone())
    }
}

/// `log f = 0` for every outcome: the posterior equals the prior. Used to
/// check that the sampler targets the right tree prior.
#[derive(Clone, Copy, Debug, Default)]
pub struct ConstantLikelihood;

impl LikelihoodFamily for ConstantLikelihood {
    fn name(&self) -> &'static str {
        "constant"
    }

    fn validate(&self, _obs: &Observation) -> Result<()> {
        Ok(())
    }

    fn log_density(&self, _obs: &Observation, _lambda: f64) -> f64 {
        0.0
    }

    fn score(&self, _obs: &Observation, _lambda: f64) -> f64 {
        0.0
    }

    fn observed_info(&self, _obs: &Observation, _lambda: f64) -> f64 {
        0.0
    }

    fn simulate(&self, _lambda: f64, _rng: &mut dyn RngCore) -> Observation {
        Observation::new(0.0)
    }

    fn clone_box(&self) -> Box<dyn LikelihoodFamily> {
        Box::new(*self)
    }
}
