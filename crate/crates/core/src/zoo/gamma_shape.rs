use rand::RngCore;
use rand_distr::{Distribution, Gamma};

use super::require_positive_outcome;
use crate::error::{Error, Result};
use crate::family::{LikelihoodFamily, Observation};
use crate::slice::{log_half_cauchy, slice_positive, SliceSettings};
use crate::special::{digamma, ln_gamma_unchecked, trigamma};

/// Gamma regression on the shape: `Y ~ Gam(e^lambda, rate beta)`.
#[derive(Clone, Debug)]
pub struct GammaShape {
    beta: f64,
}

impl GammaShape {
    pub fn new(beta: f64) -> Self {
        assert!(beta > 0.0, "gamma rate must be positive");
        GammaShape { beta }
    }

    pub fn rate(&self) -> f64 {
        self.beta
    }

    fn contribution(beta: f64, y: f64, lambda: f64) -> f64 {
        let alpha = lambda.exp();
        alpha * beta.ln() - ln_gamma_unchecked(alpha) + (alpha - 1.0) * y.ln() - beta * y
    }
}

impl LikelihoodFamily for GammaShape {
    fn name(&self) -> &'static str {
        "gamma_shape"
    }

    fn validate(&self, obs: &Observation) -> Result<()> {
        require_positive_outcome(obs)
    }

    fn log_density(&self, obs: &Observation, lambda: f64) -> f64 {
        Self::contribution(self.beta, obs.y, lambda)
    }

    fn score(&self, obs: &Observation, lambda: f64) -> f64 {
        let alpha = lambda.exp();
        let psi = digamma(alpha).unwrap_or(f64::NAN);
        alpha * (self.beta.ln() - psi + obs.y.ln())
    }

    fn observed_info(&self, obs: &Observation, lambda: f64) -> f64 {
        self.fisher_info(lambda).unwrap_or(f64::NAN) - self.score(obs, lambda)
    }

    fn fisher_info(&self, lambda: f64) -> Option<f64> {
        let alpha = lambda.exp();
        Some(alpha * alpha * trigamma(alpha).unwrap_or(f64::NAN))
    }

    fn nuisance(&self) -> Vec<(&'static str, f64)> {
        vec![("beta", self.beta)]
    }

    fn set_nuisance(&mut self, name: &str, value: f64) -> Result<()> {
        match name {
            "beta" if value > 0.0 => {
                self.beta = value;
                Ok(())
            }
            _ => Err(Error::Validation(format!("invalid gamma_shape nuisance {name}={value}"))),
        }
    }

    fn initialize(&mut self, _obs: &[Observation]) {
        self.beta = 1.0;
    }

    fn update_nuisance(&mut self, obs: &[Observation], fit: &[f64], rng: &mut dyn RngCore) {
        // Only the beta-dependent terms of the likelihood matter here.
        let sum_alpha: f64 = fit.iter().map(|l| l.exp()).sum();
        let sum_y: f64 = obs.iter().map(|o| o.y).sum();
        self.beta = slice_positive(
            self.beta,
            |b| sum_alpha * b.ln() - b * sum_y + log_half_cauchy(b, 1.0),
            SliceSettings::default(),
            rng,
        );
    }

    /// `E[Y] = alpha / beta`.
    fn predict_transform(&self, lambda: f64) -> f64 {
        lambda.exp() / self.beta
    }

    fn simulate(&self, lambda: f64, rng: &mut dyn RngCore) -> Observation {
        let y = Gamma::new(lambda.exp(), 1.0 / self.beta).map_or(f64::NAN, |d| d.sample(rng));
        Observation::new(y.max(f64::MIN_POSITIVE))
    }

    fn clone_box(&self) -> Box<dyn LikelihoodFamily> {
        Box::new(self.clone())
    }
}
