//! Accelerated failure time models `log T = lambda + sigma * eps`.
//!
//! Contributions are `log S_eps(z) + delta * (log f_eps(z) - log S_eps(z) - log sigma - log y)`
//! with `z = (log y - lambda) / sigma`, i.e. the censored-data density of the
//! observed time itself, so values are comparable with the Weibull family.

use rand::{Rng, RngCore};
use rand_distr::{Distribution, Gamma};

use super::{require_event_flag, require_positive_outcome};
use crate::error::{Error, Result};
use crate::family::{fd_both, fd_gradient, fd_hessian, LikelihoodFamily, Observation, DEFAULT_FD_DELTA};
use crate::slice::{log_half_cauchy, slice_positive, slice_step_out, SliceSettings};
use crate::special::{ln_gamma_unchecked, ln_reg_upper_inc_gamma, log_logistic, logistic, trigamma};

fn validate_survival(obs: &Observation) -> Result<()> {
    require_positive_outcome(obs)?;
    require_event_flag(obs)
}

/// Log-logistic AFT: `eps ~ Logistic(0, 1)`.
#[derive(Clone, Debug)]
pub struct AftLogLogistic {
    sigma: f64,
}

impl AftLogLogistic {
    pub fn new(sigma: f64) -> Self {
        assert!(sigma > 0.0, "sigma must be positive");
        AftLogLogistic { sigma }
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    fn contribution(sigma: f64, obs: &Observation, lambda: f64) -> f64 {
        let ln_y = obs.y.ln();
        let z = (ln_y - lambda) / sigma;
        log_logistic(-z) + obs.delta() * (log_logistic(z) - sigma.ln() - ln_y)
    }

    /// Location Fisher information of the uncensored model, `1 / (3 sigma^2)`.
    pub fn uncensored_info(&self) -> f64 {
        1.0 / (3.0 * self.sigma * self.sigma)
    }
}

impl LikelihoodFamily for AftLogLogistic {
    fn name(&self) -> &'static str {
        "aft_loglogistic"
    }

    fn validate(&self, obs: &Observation) -> Result<()> {
        validate_survival(obs)
    }

    fn log_density(&self, obs: &Observation, lambda: f64) -> f64 {
        Self::contribution(self.sigma, obs, lambda)
    }

    fn score(&self, obs: &Observation, lambda: f64) -> f64 {
        let z = (obs.y.ln() - lambda) / self.sigma;
        let d = obs.delta();
        (logistic(z) * (1.0 + d) - d) / self.sigma
    }

    fn observed_info(&self, obs: &Observation, lambda: f64) -> f64 {
        let z = (obs.y.ln() - lambda) / self.sigma;
        let s = logistic(z);
        (1.0 + obs.delta()) * s * (1.0 - s) / (self.sigma * self.sigma)
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
            _ => Err(Error::Validation(format!("invalid aft_loglogistic nuisance {name}={value}"))),
        }
    }

    fn initialize(&mut self, _obs: &[Observation]) {
        self.sigma = 1.0;
    }

    fn update_nuisance(&mut self, obs: &[Observation], fit: &[f64], rng: &mut dyn RngCore) {
        self.sigma = slice_positive(
            self.sigma,
            |s| {
                obs.iter().zip(fit).map(|(o, &l)| Self::contribution(s, o, l)).sum::<f64>() + log_half_cauchy(s, 1.0)
            },
            SliceSettings::default(),
            rng,
        );
    }

    /// Median survival time `e^lambda`.
    fn predict_transform(&self, lambda: f64) -> f64 {
        lambda.exp()
    }

    fn survival(&self, t: f64, lambda: f64) -> Option<f64> {
        if t <= 0.0 {
            return Some(1.0);
        }
        Some(logistic(-(t.ln() - lambda) / self.sigma))
    }

    fn is_survival(&self) -> bool {
        true
    }

    fn simulate(&self, lambda: f64, rng: &mut dyn RngCore) -> Observation {
        let u: f64 = rng.random::<f64>().clamp(1e-300, 1.0 - 1e-16);
        let eps = (u / (1.0 - u)).ln();
        Observation::censored((lambda + self.sigma * eps).exp(), true)
    }

    fn clone_box(&self) -> Box<dyn LikelihoodFamily> {
        Box::new(self.clone())
    }
}

/// Generalized-gamma AFT: `eps ~ log Gam(alpha, alpha)`.
///
/// Score and observed information come from central differences of the log
/// density; there is no closed-form Fisher information.
#[derive(Clone, Debug)]
pub struct AftGenGamma {
    sigma: f64,
    alpha: f64,
    delta: f64,
    alpha_max: f64,
}

impl AftGenGamma {
    pub const DEFAULT_ALPHA_MAX: f64 = 40.0;

    pub fn new(sigma: f64, alpha: f64) -> Self {
        assert!(sigma > 0.0 && alpha > 0.0, "sigma and alpha must be positive");
        AftGenGamma {
            sigma,
            alpha,
            delta: DEFAULT_FD_DELTA,
            alpha_max: Self::DEFAULT_ALPHA_MAX,
        }
    }

    pub fn with_fd_delta(mut self, delta: f64) -> Self {
        self.delta = delta;
        self
    }

    /// Upper bound of the uniform prior on `alpha`.
    pub fn with_alpha_max(mut self, alpha_max: f64) -> Self {
        self.alpha_max = alpha_max;
        self
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn fd_delta(&self) -> f64 {
        self.delta
    }

    /// `Var(log T | r) = sigma^2 psi'(alpha)`.
    pub fn log_time_variance(&self) -> f64 {
        self.sigma * self.sigma * trigamma(self.alpha).unwrap_or(f64::NAN)
    }

    /// Location information of the uncensored model, `alpha / sigma^2`.
    pub fn uncensored_info(&self) -> f64 {
        self.alpha / (self.sigma * self.sigma)
    }

    /// Censored log density for given `(sigma, alpha)`.
    pub fn contribution(sigma: f64, alpha: f64, obs: &Observation, lambda: f64) -> f64 {
        let ln_y = obs.y.ln();
        let z = (ln_y - lambda) / sigma;
        if obs.delta() == 1.0 {
            alpha * alpha.ln() + alpha * z - alpha * z.exp() - ln_gamma_unchecked(alpha) - sigma.ln() - ln_y
        } else {
            ln_reg_upper_inc_gamma(alpha, alpha * z.exp()).unwrap_or(f64::NAN)
        }
    }

    fn total(sigma: f64, alpha: f64, obs: &[Observation], fit: &[f64]) -> f64 {
        obs.iter().zip(fit).map(|(o, &l)| Self::contribution(sigma, alpha, o, l)).sum()
    }
}

impl LikelihoodFamily for AftGenGamma {
    fn name(&self) -> &'static str {
        "aft_gengamma"
    }

    fn validate(&self, obs: &Observation) -> Result<()> {
        validate_survival(obs)
    }

    fn log_density(&self, obs: &Observation, lambda: f64) -> f64 {
        Self::contribution(self.sigma, self.alpha, obs, lambda)
    }

    fn score(&self, obs: &Observation, lambda: f64) -> f64 {
        fd_gradient(|l| self.log_density(obs, l), lambda, self.delta).unwrap_or(f64::NAN)
    }

    fn observed_info(&self, obs: &Observation, lambda: f64) -> f64 {
        fd_hessian(|l| self.log_density(obs, l), lambda, self.delta).map_or(f64::NAN, |h| -h)
    }

    fn score_and_curvature(&self, obs: &Observation, lambda: f64) -> (f64, f64) {
        let (g, h) = fd_both(|l| self.log_density(obs, l), lambda, self.delta);
        (g, -h)
    }

    fn nuisance(&self) -> Vec<(&'static str, f64)> {
        vec![("sigma", self.sigma), ("alpha", self.alpha)]
    }

    fn set_nuisance(&mut self, name: &str, value: f64) -> Result<()> {
        match name {
            "sigma" if value > 0.0 => self.sigma = value,
            "alpha" if value > 0.0 => self.alpha = value,
            _ => return Err(Error::Validation(format!("invalid aft_gengamma nuisance {name}={value}"))),
        }
        Ok(())
    }

    fn initialize(&mut self, _obs: &[Observation]) {
        self.sigma = 1.0;
        self.alpha = 1.0;
    }

    /// Sweeps `(log V, log alpha)` with `V = sigma^2 psi'(alpha)`: the
    /// well-identified variance is updated first, then `alpha` moves along
    /// the ridge of constant variance. The map from `(log sigma, log alpha)`
    /// is linear in `log sigma` with constant Jacobian.
    fn update_nuisance(&mut self, obs: &[Observation], fit: &[f64], rng: &mut dyn RngCore) {
        let alpha_max = self.alpha_max;
        let log_target = |sigma: f64, alpha: f64| -> f64 {
            if !(alpha > 0.0 && alpha < alpha_max && sigma > 0.0) {
                return f64::NEG_INFINITY;
            }
            Self::total(sigma, alpha, obs, fit) + log_half_cauchy(sigma, 1.0) + sigma.ln() + alpha.ln()
        };
        let ln_tri = |a: f64| trigamma(a).map_or(f64::NAN, f64::ln);
        let sigma_from = |log_v: f64, alpha: f64| ((log_v - ln_tri(alpha)) / 2.0).exp();

        let mut log_alpha = self.alpha.ln();
        let mut log_v = 2.0 * self.sigma.ln() + ln_tri(self.alpha);
        let settings = SliceSettings::default();

        let alpha = log_alpha.exp();
        log_v = slice_step_out(log_v, None, |u| log_target(sigma_from(u, alpha), alpha), settings, rng).0;
        log_alpha = slice_step_out(
            log_alpha,
            None,
            |u| {
                let a = u.exp();
                log_target(sigma_from(log_v, a), a)
            },
            settings,
            rng,
        )
        .0;

        let alpha = log_alpha.exp();
        let sigma = sigma_from(log_v, alpha);
        if sigma > 0.0 && sigma.is_finite() && alpha > 0.0 && alpha < alpha_max {
            self.sigma = sigma;
            self.alpha = alpha;
        }
    }

    /// Time scale `e^lambda`.
    fn predict_transform(&self, lambda: f64) -> f64 {
        lambda.exp()
    }

    fn survival(&self, t: f64, lambda: f64) -> Option<f64> {
        if t <= 0.0 {
            return Some(1.0);
        }
        let z = (t.ln() - lambda) / self.sigma;
        ln_reg_upper_inc_gamma(self.alpha, self.alpha * z.exp()).ok().map(f64::exp)
    }

    fn is_survival(&self) -> bool {
        true
    }

    fn simulate(&self, lambda: f64, rng: &mut dyn RngCore) -> Observation {
        let g: f64 = Gamma::new(self.alpha, 1.0 / self.alpha).map_or(1.0, |d| d.sample(rng));
        let eps = g.max(f64::MIN_POSITIVE).ln();
        Observation::censored((lambda + self.sigma * eps).exp(), true)
    }

    fn clone_box(&self) -> Box<dyn LikelihoodFamily> {
        Box::new(self.clone())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::family::wrap_with_fd;

    #[test]
    fn loglogistic_at_median() {
        let f = AftLogLogistic::new(1.0);
        let ev = Observation::censored(1.0, true);
        assert!((f.log_density(&ev, 0.0) + 1.386_294_361_119_890_6).abs() < 1e-12);
        let cens = Observation::censored(1.0, false);
        assert!((f.log_density(&cens, 0.0) - 0.5f64.ln()).abs() < 1e-12);
        for sigma in [0.3, 1.0, 4.0] {
            let f = AftLogLogistic::new(sigma);
            assert!((f.survival(1.7f64.exp(), 1.7).unwrap() - 0.5).abs() < 1e-12);
        }
    }

    #[test]
    fn loglogistic_closed_form_matches_fd() {
        let f = AftLogLogistic::new(0.8);
        for obs in [Observation::censored(2.0, true), Observation::censored(0.4, false)] {
            for l in [-1.0, 0.0, 0.9] {
                let g = fd_gradient(|x| f.log_density(&obs, x), l, 1e-6).unwrap();
                assert!((f.score(&obs, l) - g).abs() < 1e-6);
                let h = fd_hessian(|x| f.log_density(&obs, x), l, 1e-4).unwrap();
                assert!((f.observed_info(&obs, l) + h).abs() < 1e-4);
            }
        }
    }

    #[test]
    fn gengamma_unit_shape_survival_is_gumbel() {
        let f = AftGenGamma::new(1.0, 1.0);
        for z in [-2.0, -0.3, 0.0, 0.7, 1.5] {
            let s = f.survival(f64::exp(z), 0.0).unwrap();
            assert!((s - (-f64::exp(z)).exp()).abs() < 1e-12);
        }
        assert!((f.log_time_variance() - std::f64::consts::PI.powi(2) / 6.0).abs() < 1e-9);
    }

    #[test]
    fn early_censoring_carries_no_information() {
        let f = AftGenGamma::new(1.0, 2.5);
        let v = f.log_density(&Observation::censored(1e-300, false), 5.0);
        assert!(v.abs() < 1e-12);
    }

    #[test]
    fn gengamma_matches_its_fd_wrapper_exactly() {
        let (sigma, alpha) = (1.3, 2.2);
        let fam = AftGenGamma::new(sigma, alpha);
        let wrapped = wrap_with_fd(move |o, l| AftGenGamma::contribution(sigma, alpha, o, l), DEFAULT_FD_DELTA);
        for obs in [Observation::censored(3.0, true), Observation::censored(0.5, false)] {
            for l in [-1.0, 0.2, 1.4] {
                assert_eq!(fam.score(&obs, l), wrapped.score(&obs, l));
                assert_eq!(fam.observed_info(&obs, l), wrapped.observed_info(&obs, l));
            }
        }
    }

    #[test]
    fn rejects_missing_censoring_or_nonpositive_times() {
        let f = AftLogLogistic::new(1.0);
        assert!(f.validate(&Observation::new(1.0)).is_err());
        assert!(f.validate(&Observation::censored(0.0, true)).is_err());
        assert!(f.validate(&Observation::censored(2.0, false)).is_ok());
    }
}
