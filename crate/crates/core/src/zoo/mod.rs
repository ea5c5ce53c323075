//! Built-in likelihood families and their selection by name.

mod aft;
mod gamma_shape;
mod gaussian;
mod hetvar;
mod logistic;
mod poisson;
mod weibull;

use std::fmt;
use std::str::FromStr;

pub use aft::{AftGenGamma, AftLogLogistic};
pub use gamma_shape::GammaShape;
pub use gaussian::Gaussian;
pub use hetvar::{HetVar, MeanLink, PhiPrior, VarianceFn};
pub use logistic::Logistic;
pub use poisson::Poisson;
pub use weibull::Weibull;

use crate::error::{Error, Result};
use crate::family::LikelihoodFamily;

/// Options for the structured-variance family.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HetVarSpec {
    pub link: MeanLink,
    pub variance: VarianceFn,
    pub phi_prior: PhiPrior,
}

impl Default for HetVarSpec {
    fn default() -> Self {
        HetVarSpec {
            link: MeanLink::Exp,
            variance: VarianceFn::Linear,
            phi_prior: PhiPrior::Flat,
        }
    }
}

/// Which family to fit, with any structural options it takes.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ModelSpec {
    Gaussian,
    Logistic,
    Poisson,
    HetVar(HetVarSpec),
    AftLogLogistic,
    AftGenGamma,
    Weibull,
    GammaShape,
}

impl ModelSpec {
    pub const NAMES: [&'static str; 8] = [
        "gaussian",
        "logistic",
        "poisson",
        "hetvar",
        "aft_loglogistic",
        "aft_gengamma",
        "weibull",
        "gamma_shape",
    ];

    pub fn name(&self) -> &'static str {
        match self {
            ModelSpec::Gaussian => "gaussian",
            ModelSpec::Logistic => "logistic",
            ModelSpec::Poisson => "poisson",
            ModelSpec::HetVar(_) => "hetvar",
            ModelSpec::AftLogLogistic => "aft_loglogistic",
            ModelSpec::AftGenGamma => "aft_gengamma",
            ModelSpec::Weibull => "weibull",
            ModelSpec::GammaShape => "gamma_shape",
        }
    }

    pub fn is_survival(&self) -> bool {
        matches!(self, ModelSpec::AftLogLogistic | ModelSpec::AftGenGamma | ModelSpec::Weibull)
    }

    /// Structural options beyond the name, as `(key, value)` text pairs.
    pub fn options(&self) -> Vec<(&'static str, String)> {
        match self {
            ModelSpec::HetVar(h) => vec![
                ("link", h.link.to_string()),
                ("variance", h.variance.to_string()),
                ("phi_prior", h.phi_prior.to_string()),
            ],
            _ => Vec::new(),
        }
    }

    /// Sets one structural option by key.
    pub fn set_option(&mut self, key: &str, value: &str) -> Result<()> {
        match (self, key) {
            (ModelSpec::HetVar(h), "link") => h.link = value.parse()?,
            (ModelSpec::HetVar(h), "variance") => h.variance = value.parse()?,
            (ModelSpec::HetVar(h), "phi_prior") => h.phi_prior = value.parse()?,
            (spec, _) => {
                return Err(Error::Validation(format!("model {} has no option '{key}'", spec.name())));
            }
        }
        Ok(())
    }

    /// Builds the family at its default nuisance values. `fd_delta` is the
    /// finite-difference step for families that use numerical derivatives.
    pub fn build(&self, fd_delta: f64) -> Box<dyn LikelihoodFamily> {
        match *self {
            ModelSpec::Gaussian => Box::new(Gaussian::new(1.0)),
            ModelSpec::Logistic => Box::new(Logistic),
            ModelSpec::Poisson => Box::new(Poisson),
            ModelSpec::HetVar(spec) => Box::new(HetVar::new(spec.link, spec.variance, 1.0).with_phi_prior(spec.phi_prior)),
            ModelSpec::AftLogLogistic => Box::new(AftLogLogistic::new(1.0)),
            ModelSpec::AftGenGamma => Box::new(AftGenGamma::new(1.0, 1.0).with_fd_delta(fd_delta)),
            ModelSpec::Weibull => Box::new(Weibull::new(1.0)),
            ModelSpec::GammaShape => Box::new(GammaShape::new(1.0)),
        }
    }
}

impl fmt::Display for ModelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ModelSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.trim() {
            "gaussian" => ModelSpec::Gaussian,
            "logistic" => ModelSpec::Logistic,
            "poisson" => ModelSpec::Poisson,
            "hetvar" => ModelSpec::HetVar(HetVarSpec::default()),
            "aft_loglogistic" => ModelSpec::AftLogLogistic,
            "aft_gengamma" => ModelSpec::AftGenGamma,
            "weibull" => ModelSpec::Weibull,
            "gamma_shape" => ModelSpec::GammaShape,
            other => {
                return Err(Error::Validation(format!(
                    "unknown model '{other}' (expected one of {})",
                    ModelSpec::NAMES.join(", ")
                )))
            }
        })
    }
}

/// Sample standard deviation, or 1 when it is zero or undefined.
pub(crate) fn outcome_sd(ys: impl Iterator<Item = f64>) -> f64 {
    let v: Vec<f64> = ys.collect();
    if v.len() < 2 {
        return 1.0;
    }
    let mean = v.iter().sum::<f64>() / v.len() as f64;
    let var = v.iter().map(|y| (y - mean).powi(2)).sum::<f64>() / (v.len() - 1) as f64;
    let sd = var.sqrt();
    if sd > 0.0 && sd.is_finite() {
        sd
    } else {
        1.0
    }
}

pub(crate) fn require_positive_outcome(obs: &crate::family::Observation) -> Result<()> {
    if obs.y > 0.0 && obs.y.is_finite() {
        Ok(())
    } else {
        Err(Error::Input(format!("outcome must be positive, got {}", obs.y)))
    }
}

pub(crate) fn require_event_flag(obs: &crate::family::Observation) -> Result<()> {
    if obs.event.is_some() {
        Ok(())
    } else {
        Err(Error::Input("survival models need a censoring indicator for every outcome".into()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_round_trip() {
        for name in ModelSpec::NAMES {
            let spec: ModelSpec = name.parse().unwrap();
            assert_eq!(spec.name(), name);
            assert_eq!(spec.build(1e-6).name(), name);
        }
        assert!("probit".parse::<ModelSpec>().is_err());
    }
}
