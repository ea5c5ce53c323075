use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use rand::RngCore;
use rand_distr::{Distribution, Gamma, StandardNormal};

use crate::error::{Error, Result};
use crate::family::{LikelihoodFamily, Observation};
use crate::slice::{log_half_cauchy, slice_positive, SliceSettings};

/// Mean link `m = g(lambda)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MeanLink {
    Identity,
    Exp,
}

impl MeanLink {
    /// `(g, g', g'')` at `lambda`.
    fn eval(self, lambda: f64) -> (f64, f64, f64) {
        match self {
            MeanLink::Identity => (lambda, 1.0, 0.0),
            MeanLink::Exp => {
                let e = lambda.exp();
                (e, e, e)
            }
        }
    }
}

impl fmt::Display for MeanLink {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MeanLink::Identity => "identity",
            MeanLink::Exp => "exp",
        })
    }
}

impl FromStr for MeanLink {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "identity" => Ok(MeanLink::Identity),
            "exp" => Ok(MeanLink::Exp),
            other => Err(Error::Validation(format!("unknown mean link '{other}' (identity|exp)"))),
        }
    }
}

/// Variance function `V(m)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum VarianceFn {
    Constant,
    Linear,
    Quadratic,
}

impl VarianceFn {
    /// `(V, V', V'')` at `m`.
    fn eval(self, m: f64) -> (f64, f64, f64) {
        match self {
            VarianceFn::Constant => (1.0, 0.0, 0.0),
            VarianceFn::Linear => (m, 1.0, 0.0),
            VarianceFn::Quadratic => (m * m, 2.0 * m, 2.0),
        }
    }
}

impl fmt::Display for VarianceFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            VarianceFn::Constant => "constant",
            VarianceFn::Linear => "m",
            VarianceFn::Quadratic => "m2",
        })
    }
}

impl FromStr for VarianceFn {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "constant" | "1" => Ok(VarianceFn::Constant),
            "m" | "linear" => Ok(VarianceFn::Linear),
            "m2" | "quadratic" => Ok(VarianceFn::Quadratic),
            other => Err(Error::Validation(format!("unknown variance function '{other}' (constant|m|m2)"))),
        }
    }
}

/// Prior on the dispersion.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum PhiPrior {
    /// Flat on `tau = 1/phi`'s gamma full conditional; `tau` is drawn exactly.
    Flat,
    /// Half-Cauchy on `phi` with the given scale, updated by slice sampling.
    HalfCauchy(f64),
}

impl fmt::Display for PhiPrior {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PhiPrior::Flat => f.write_str("flat"),
            PhiPrior::HalfCauchy(s) => write!(f, "half_cauchy:{s}"),
        }
    }
}

impl FromStr for PhiPrior {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s == "flat" {
            return Ok(PhiPrior::Flat);
        }
        if s == "half_cauchy" {
            return Ok(PhiPrior::HalfCauchy(1.0));
        }
        if let Some(scale) = s.strip_prefix("half_cauchy:") {
            if let Ok(v) = scale.parse::<f64>() {
                if v > 0.0 {
                    return Ok(PhiPrior::HalfCauchy(v));
                }
            }
        }
        Err(Error::Validation(format!("unknown phi prior '{s}' (flat|half_cauchy[:scale])")))
    }
}

/// Structured-variance working model `Y ~ Normal(m, phi V(m))`, `m = g(lambda)`.
#[derive(Clone, Debug)]
pub struct HetVar {
    link: MeanLink,
    variance: VarianceFn,
    phi: f64,
    phi_prior: PhiPrior,
}

impl HetVar {
    pub fn new(link: MeanLink, variance: VarianceFn, phi: f64) -> Self {
        assert!(phi > 0.0, "phi must be positive");
        HetVar {
            link,
            variance,
            phi,
            phi_prior: PhiPrior::Flat,
        }
    }

    pub fn with_phi_prior(mut self, prior: PhiPrior) -> Self {
        self.phi_prior = prior;
        self
    }

    pub fn phi(&self) -> f64 {
        self.phi
    }

    pub fn link(&self) -> MeanLink {
        self.link
    }

    pub fn variance_fn(&self) -> VarianceFn {
        self.variance
    }

    /// `V(g(lambda))`, rejecting non-positive variances.
    pub fn variance_at(&self, lambda: f64) -> Result<f64> {
        let (m, _, _) = self.link.eval(lambda);
        let (v, _, _) = self.variance.eval(m);
        if v > 0.0 && v.is_finite() {
            Ok(v)
        } else {
            Err(Error::Numerical(format!("variance function is {v} at m={m}")))
        }
    }

    /// `A(m)` with `U = A(m) g'(lambda)`.
    fn score_factor(&self, y: f64, m: f64, v: f64, dv: f64) -> f64 {
        let r = y - m;
        -dv / (2.0 * v) + dv * r * r / (2.0 * self.phi * v * v) + r / (self.phi * v)
    }

    /// Draws `tau = 1/phi` from `Gam(N/2, sum (y - m)^2 / (2 V(m)))`.
    pub fn sample_tau(&self, obs: &[Observation], fit: &[f64], rng: &mut dyn RngCore) -> f64 {
        let rate = self.weighted_sse(obs, fit) / 2.0;
        let shape = obs.len() as f64 / 2.0;
        Gamma::new(shape, 1.0 / rate).map_or(1.0 / self.phi, |d| d.sample(rng))
    }

    fn weighted_sse(&self, obs: &[Observation], fit: &[f64]) -> f64 {
        obs.iter()
            .zip(fit)
            .map(|(o, &l)| {
                let (m, _, _) = self.link.eval(l);
                let (v, _, _) = self.variance.eval(m);
                (o.y - m).powi(2) / v
            })
            .sum()
    }
}

impl LikelihoodFamily for HetVar {
    fn name(&self) -> &'static str {
        "hetvar"
    }

    fn validate(&self, obs: &Observation) -> Result<()> {
        if obs.y.is_finite() {
            Ok(())
        } else {
            Err(Error::Input(format!("non-finite outcome {}", obs.y)))
        }
    }

    fn log_density(&self, obs: &Observation, lambda: f64) -> f64 {
        let (m, _, _) = self.link.eval(lambda);
        let (v, _, _) = self.variance.eval(m);
        if !(v > 0.0) {
            return f64::NEG_INFINITY;
        }
        -0.5 * (2.0 * PI * self.phi).ln() - 0.5 * v.ln() - (obs.y - m).powi(2) / (2.0 * self.phi * v)
    }

    fn score(&self, obs: &Observation, lambda: f64) -> f64 {
        let (m, dg, _) = self.link.eval(lambda);
        let (v, dv, _) = self.variance.eval(m);
        if !(v > 0.0) {
            return f64::NAN;
        }
        self.score_factor(obs.y, m, v, dv) * dg
    }

    fn observed_info(&self, obs: &Observation, lambda: f64) -> f64 {
        let (m, dg, d2g) = self.link.eval(lambda);
        let (v, dv, d2v) = self.variance.eval(m);
        if !(v > 0.0) {
            return f64::NAN;
        }
        let (r, phi) = (obs.y - m, self.phi);
        let da = -(v * d2v - dv * dv) / (2.0 * v * v)
            + (d2v * r * r / (v * v) - 2.0 * dv * dv * r * r / (v * v * v) - 2.0 * dv * r / (v * v)) / (2.0 * phi)
            - (1.0 / v + r * dv / (v * v)) / phi;
        -(da * dg * dg + self.score_factor(obs.y, m, v, dv) * d2g)
    }

    fn fisher_info(&self, lambda: f64) -> Option<f64> {
        let (m, dg, _) = self.link.eval(lambda);
        let (v, dv, _) = self.variance.eval(m);
        if !(v > 0.0) {
            return Some(f64::NAN);
        }
        Some((dv * dv / (2.0 * v * v) + 1.0 / (self.phi * v)) * dg * dg)
    }

    fn nuisance(&self) -> Vec<(&'static str, f64)> {
        vec![("phi", self.phi)]
    }

    fn set_nuisance(&mut self, name: &str, value: f64) -> Result<()> {
        match name {
            "phi" if value > 0.0 => {
                self.phi = value;
                Ok(())
            }
            _ => Err(Error::Validation(format!("invalid hetvar nuisance {name}={value}"))),
        }
    }

    fn initialize(&mut self, _obs: &[Observation]) {
        self.phi = 1.0;
    }

    fn update_nuisance(&mut self, obs: &[Observation], fit: &[f64], rng: &mut dyn RngCore) {
        match self.phi_prior {
            PhiPrior::Flat => {
                let tau = self.sample_tau(obs, fit, rng);
                if tau > 0.0 && tau.is_finite() {
                    self.phi = 1.0 / tau;
                }
            }
            PhiPrior::HalfCauchy(scale) => {
                let wsse = self.weighted_sse(obs, fit);
                let n = obs.len() as f64;
                self.phi = slice_positive(
                    self.phi,
                    |phi| -0.5 * n * phi.ln() - wsse / (2.0 * phi) + log_half_cauchy(phi, scale),
                    SliceSettings::default(),
                    rng,
                );
            }
        }
    }

    fn predict_transform(&self, lambda: f64) -> f64 {
        self.link.eval(lambda).0
    }

    fn simulate(&self, lambda: f64, rng: &mut dyn RngCore) -> Observation {
        let (m, _, _) = self.link.eval(lambda);
        let (v, _, _) = self.variance.eval(m);
        let z: f64 = StandardNormal.sample(rng);
        Observation::new(m + (self.phi * v.max(0.0)).sqrt() * z)
    }

    fn clone_box(&self) -> Box<dyn LikelihoodFamily> {
        Box::new(self.clone())
    }
}
