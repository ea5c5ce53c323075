use std::f64::consts::PI;

use rand::RngCore;
use rand_distr::{Distribution, StandardNormal};

use super::outcome_sd;
use crate::error::{Error, Result};
use crate::family::{LikelihoodFamily, Observation};
use crate::slice::{log_half_cauchy, slice_positive, SliceSettings};

/// `Y ~ Normal(lambda, sigma^2)`. The error sd has a half-Cauchy prior whose
/// scale is the outcome sd.
#[derive(Clone, Debug)]
pub struct Gaussian {
    sigma: f64,
    prior_scale: f64,
}

impl Gaussian {
    pub fn new(sigma: f64) -> Self {
        assert!(sigma > 0.0, "sigma must be positive");
        Gaussian { sigma, prior_scale: 1.0 }
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }
}

impl LikelihoodFamily for Gaussian {
    fn name(&self) -> &'static str {
        "gaussian"
    }

    fn validate(&self, obs: &Observation) -> Result<()> {
        if obs.y.is_finite() {
            Ok(())
        } else {
            Err(Error::Input(format!("non-finite outcome {}", obs.y)))
        }
    }

    fn log_density(&self, obs: &Observation, lambda: f64) -> f64 {
        let r = (obs.y - lambda) / self.sigma;
        -0.5 * (2.0 * PI).ln() - self.sigma.ln() - 0.5 * r * r
    }

    fn score(&self, obs: &Observation, lambda: f64) -> f64 {
        (obs.y - lambda) / (self.sigma * self.sigma)
    }

    fn observed_info(&self, _obs: &Observation, _lambda: f64) -> f64 {
        1.0 / (self.sigma * self.sigma)
    }

    fn fisher_info(&self, _lambda: f64) -> Option<f64> {
        Some(1.0 / (self.sigma * self.sigma))
    }

    fn nuisance(&self) -> Vec<(&'static str, f64)> {
        vec![("sigma", self.sigma)]
    }

    fn set_nuisance(&mut self, name: &str, value: f64) -> Result<()> {
        match name {
            "sigma" if value > 0.0 => {
                self.sigma = value;
                Ok(())
            }
            _ => Err(Error::Validation(format!("invalid gaussian nuisance {name}={value}"))),
        }
    }

    fn initialize(&mut self, obs: &[Observation]) {
        let sd = outcome_sd(obs.iter().map(|o| o.y));
        self.sigma = sd;
        self.prior_scale = sd;
    }

    fn update_nuisance(&mut self, obs: &[Observation], fit: &[f64], rng: &mut dyn RngCore) {
        let n = obs.len() as f64;
        let sse: f64 = obs.iter().zip(fit).map(|(o, f)| (o.y - f).powi(2)).sum();
        let scale = self.prior_scale;
        self.sigma = slice_positive(
            self.sigma,
            |s| -n * s.ln() - sse / (2.0 * s * s) + log_half_cauchy(s, scale),
            SliceSettings::default(),
            rng,
        );
    }

    fn simulate(&self, lambda: f64, rng: &mut dyn RngCore) -> Observation {
        let z: f64 = StandardNormal.sample(rng);
        Observation::new(lambda + self.sigma * z)
    }

    fn clone_box(&self) -> Box<dyn LikelihoodFamily> {
        Box::new(self.clone())
    }
}
