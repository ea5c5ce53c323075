use rand::{Rng, RngCore};

use crate::error::{Error, Result};
use crate::family::{LikelihoodFamily, Observation};
use crate::special::{log_logistic, logistic};

/// `Y ~ Bernoulli(s(lambda))`; no nuisance parameters.
#[derive(Clone, Copy, Debug, Default)]
pub struct Logistic;

impl LikelihoodFamily for Logistic {
    fn name(&self) -> &'static str {
        "logistic"
    }

    fn validate(&self, obs: &Observation) -> Result<()> {
        if obs.y == 0.0 || obs.y == 1.0 {
            Ok(())
        } else {
            Err(Error::Input(format!("logistic outcomes must be 0 or 1, got {}", obs.y)))
        }
    }

    fn log_density(&self, obs: &Observation, lambda: f64) -> f64 {
        obs.y * log_logistic(lambda) + (1.0 - obs.y) * log_logistic(-lambda)
    }

    fn score(&self, obs: &Observation, lambda: f64) -> f64 {
        obs.y - logistic(lambda)
    }

    fn observed_info(&self, _obs: &Observation, lambda: f64) -> f64 {
        let s = logistic(lambda);
        s * (1.0 - s)
    }

    fn fisher_info(&self, lambda: f64) -> Option<f64> {
        let s = logistic(lambda);
        Some(s * (1.0 - s))
    }

    fn predict_transform(&self, lambda: f64) -> f64 {
        logistic(lambda)
    }

    fn simulate(&self, lambda: f64, rng: &mut dyn RngCore) -> Observation {
        let y = if rng.random::<f64>() < logistic(lambda) { 1.0 } else { 0.0 };
        Observation::new(y)
    }

    fn clone_box(&self) -> Box<dyn LikelihoodFamily> {
        Box::new(*self)
    }
}
