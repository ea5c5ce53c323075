use rand::{Rng, RngCore};

use super::{require_event_flag, require_positive_outcome};
use crate::error::{Error, Result};
use crate::family::{LikelihoodFamily, Observation};
use crate::slice::{log_half_cauchy, slice_positive, SliceSettings};

/// Weibull model with hazard `h(t) = (k / e^lambda) (t / e^lambda)^(k-1)`.
#[derive(Clone, Debug)]
pub struct Weibull {
    k: f64,
}

impl Weibull {
    pub fn new(k: f64) -> Self {
        assert!(k > 0.0, "Weibull shape must be positive");
        Weibull { k }
    }

    pub fn shape(&self) -> f64 {
        self.k
    }

    fn contribution(k: f64, obs: &Observation, lambda: f64) -> f64 {
        let ln_y = obs.y.ln();
        let w = (k * (ln_y - lambda)).exp();
        -w + obs.delta() * (k.ln() - k * lambda + (k - 1.0) * ln_y)
    }

    /// Location information of the uncensored model, `k^2`.
    pub fn uncensored_info(&self) -> f64 {
        self.k * self.k
    }
}

impl LikelihoodFamily for Weibull {
    fn name(&self) -> &'static str {
        "weibull"
    }

    fn validate(&self, obs: &Observation) -> Result<()> {
        require_positive_outcome(obs)?;
        require_event_flag(obs)
    }

    fn log_density(&self, obs: &Observation, lambda: f64) -> f64 {
        Self::contribution(self.k, obs, lambda)
    }

    fn score(&self, obs: &Observation, lambda: f64) -> f64 {
        let w = (self.k * (obs.y.ln() - lambda)).exp();
        self.k * (w - obs.delta())
    }

    fn observed_info(&self, obs: &Observation, lambda: f64) -> f64 {
        let w = (self.k * (obs.y.ln() - lambda)).exp();
        self.k * self.k * w
    }

    fn nuisance(&self) -> Vec<(&'static str, f64)> {
        vec![("k", self.k)]
    }

    fn set_nuisance(&mut self, name: &str, value: f64) -> Result<()> {
        match name {
            "k" if value > 0.0 => {
                self.k = value;
                Ok(())
            }
            _ => Err(Error::Validation(format!("invalid weibull nuisance {name}={value}"))),
        }
    }

    fn initialize(&mut self, _obs: &[Observation]) {
        self.k = 1.0;
    }

    fn update_nuisance(&mut self, obs: &[Observation], fit: &[f64], rng: &mut dyn RngCore) {
        self.k = slice_positive(
            self.k,
            |k| obs.iter().zip(fit).map(|(o, &l)| Self::contribution(k, o, l)).sum::<f64>() + log_half_cauchy(k, 1.0),
            SliceSettings::default(),
            rng,
        );
    }

    /// Scale `e^lambda` of the time distribution.
    fn predict_transform(&self, lambda: f64) -> f64 {
        lambda.exp()
    }

    fn survival(&self, t: f64, lambda: f64) -> Option<f64> {
        if t <= 0.0 {
            return Some(1.0);
        }
        Some((-(self.k * (t.ln() - lambda)).exp()).exp())
    }

    fn is_survival(&self) -> bool {
        true
    }

    fn simulate(&self, lambda: f64, rng: &mut dyn RngCore) -> Observation {
        let u: f64 = rng.random::<f64>().max(1e-300);
        Observation::censored(lambda.exp() * (-u.ln()).powf(1.0 / self.k), true)
    }

    fn clone_box(&self) -> Box<dyn LikelihoodFamily> {
        Box::new(self.clone())
    }
}
