use rand::RngCore;
use rand_distr::{Distribution, Poisson as PoissonDist};

use crate::error::{Error, Result};
use crate::family::{LikelihoodFamily, Observation};
use crate::special::ln_gamma_unchecked;

/// Log-linear `Y ~ Poisson(e^lambda)`.
#[derive(Clone, Copy, Debug, Default)]
pub struct Poisson;

impl LikelihoodFamily for Poisson {
    fn name(&self) -> &'static str {
        "poisson"
    }

    fn validate(&self, obs: &Observation) -> Result<()> {
        if obs.y >= 0.0 && obs.y.fract() == 0.0 && obs.y.is_finite() {
            Ok(())
        } else {
            Err(Error::Input(format!("poisson outcomes must be non-negative integers, got {}", obs.y)))
        }
    }

    fn log_density(&self, obs: &Observation, lambda: f64) -> f64 {
        obs.y * lambda - lambda.exp() - ln_gamma_unchecked(obs.y + 1.0)
    }

    fn score(&self, obs: &Observation, lambda: f64) -> f64 {
        obs.y - lambda.exp()
    }

    fn observed_info(&self, _obs: &Observation, lambda: f64) -> f64 {
        lambda.exp()
    }

    fn fisher_info(&self, lambda: f64) -> Option<f64> {
        Some(lambda.exp())
    }

    fn predict_transform(&self, lambda: f64) -> f64 {
        lambda.exp()
    }

    fn simulate(&self, lambda: f64, rng: &mut dyn RngCore) -> Observation {
        let y = PoissonDist::new(lambda.exp()).map_or(0.0, |d| d.sample(rng));
        Observation::new(y)
    }

    fn clone_box(&self) -> Box<dyn LikelihoodFamily> {
        Box::new(*self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn closed_forms() {
        assert_eq!(Poisson.score(&Observation::new(3.0), 0.0), 2.0);
        assert_eq!(Poisson.fisher_info(0.0), Some(1.0));
        let lf = Poisson.log_density(&Observation::new(2.0), 0.0);
        assert!((lf + 1.693_147_180_559_945).abs() < 1e-12);
        assert!(Poisson.validate(&Observation::new(1.5)).is_err());
        assert!(Poisson.validate(&Observation::new(-1.0)).is_err());
    }
}
