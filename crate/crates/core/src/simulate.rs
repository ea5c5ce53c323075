//! Friedman-function simulation scenarios.

use std::f64::consts::PI;
use std::fmt;
use std::io::Write;
use std::str::FromStr;

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::data::{fmt_f64, Dataset};
use crate::error::{Error, Result};
use crate::family::{LikelihoodFamily, Observation};
use crate::zoo::{AftGenGamma, AftLogLogistic, GammaShape, Gaussian, Logistic, Poisson};

/// `10 sin(pi x1 x2) + 20 (x3 - 0.5)^2 + 10 x4 + 5 x5`; later covariates are ignored.
pub fn friedman(x: &[f64]) -> Result<f64> {
    if x.len() < 5 {
        return Err(Error::Validation(format!("the Friedman function needs 5 covariates, got {}", x.len())));
    }
    Ok(10.0 * (PI * x[0] * x[1]).sin() + 20.0 * (x[2] - 0.5).powi(2) + 10.0 * x[3] + 5.0 * x[4])
}

/// Centered and scaled Friedman function, roughly mean 0 and variance 1.
pub fn friedman_standardized(x: &[f64]) -> Result<f64> {
    Ok((friedman(x)? - 14.0) / 5.0)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ScenarioKind {
    Gaussian,
    Logistic,
    HetPoisson,
    AftLogLogistic,
    AftGenGamma,
    GammaShape,
}

impl ScenarioKind {
    pub const ALL: [ScenarioKind; 6] = [
        ScenarioKind::Gaussian,
        ScenarioKind::Logistic,
        ScenarioKind::HetPoisson,
        ScenarioKind::AftLogLogistic,
        ScenarioKind::AftGenGamma,
        ScenarioKind::GammaShape,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ScenarioKind::Gaussian => "friedman_gaussian",
            ScenarioKind::Logistic => "friedman_logistic",
            ScenarioKind::HetPoisson => "friedman_hetpoisson",
            ScenarioKind::AftLogLogistic => "friedman_aft_loglogistic",
            ScenarioKind::AftGenGamma => "friedman_aft_gengamma",
            ScenarioKind::GammaShape => "friedman_gammashape",
        }
    }

    /// Default `(N, P)`.
    pub fn default_size(self) -> (usize, usize) {
        match self {
            ScenarioKind::Gaussian | ScenarioKind::Logistic => (500, 20),
            ScenarioKind::HetPoisson | ScenarioKind::AftLogLogistic | ScenarioKind::AftGenGamma => (500, 10),
            ScenarioKind::GammaShape => (100, 10),
        }
    }

    /// `r(x)` on the scale of the generating model's `lambda`.
    pub fn true_lambda(self, x: &[f64]) -> Result<f64> {
        match self {
            ScenarioKind::Gaussian => friedman(x),
            ScenarioKind::Logistic | ScenarioKind::AftLogLogistic | ScenarioKind::AftGenGamma => friedman_standardized(x),
            ScenarioKind::HetPoisson | ScenarioKind::GammaShape => Ok(2.0 + friedman_standardized(x)?),
        }
    }

    /// The model that generates outcomes from `lambda`, with its true
    /// nuisance values. For the Poisson scenario this is the Poisson model
    /// with log link (mean `e^lambda`).
    pub fn generating_family(self) -> Box<dyn LikelihoodFamily> {
        match self {
            ScenarioKind::Gaussian => Box::new(Gaussian::new(1.0)),
            ScenarioKind::Logistic => Box::new(Logistic),
            ScenarioKind::HetPoisson => Box::new(Poisson),
            ScenarioKind::AftLogLogistic => Box::new(AftLogLogistic::new(1.0)),
            ScenarioKind::AftGenGamma => Box::new(AftGenGamma::new(1.0, 1.0)),
            ScenarioKind::GammaShape => Box::new(GammaShape::new(1.0)),
        }
    }

    pub fn is_survival(self) -> bool {
        matches!(self, ScenarioKind::AftLogLogistic | ScenarioKind::AftGenGamma)
    }
}

impl fmt::Display for ScenarioKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ScenarioKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ScenarioKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| {
                let names: Vec<&str> = ScenarioKind::ALL.iter().map(|k| k.name()).collect();
                Error::Validation(format!("unknown scenario '{s}' (expected one of {})", names.join(", ")))
            })
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Scenario {
    pub kind: ScenarioKind,
    pub n: usize,
    pub p: usize,
    pub seed: u64,
}

impl Scenario {
    pub fn new(kind: ScenarioKind, seed: u64) -> Self {
        let (n, p) = kind.default_size();
        Scenario { kind, n, p, seed }
    }

    pub fn with_size(mut self, n: usize, p: usize) -> Self {
        self.n = n;
        self.p = p;
        self
    }
}

/// The generating values behind a simulated dataset.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Truth {
    /// True `r(x_i)` on the model's `lambda` scale.
    pub lambda: Vec<f64>,
    /// True mean-scale value (mean, probability, or median/scale time).
    pub mean: Vec<f64>,
}

impl Truth {
    pub fn write<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "lambda,mean")?;
        for (l, m) in self.lambda.iter().zip(&self.mean) {
            writeln!(out, "{},{}", fmt_f64(*l), fmt_f64(*m))?;
        }
        Ok(())
    }

    pub fn read(text: &str) -> Result<Truth> {
        let mut truth = Truth::default();
        for (k, line) in text.lines().enumerate().skip(1) {
            let line_no = k + 1;
            let mut parts = line.split(',');
            let mut next = |name: &str| -> Result<f64> {
                parts.next().and_then(|v| v.trim().parse().ok()).ok_or_else(|| Error::Parse {
                    line: line_no,
                    message: format!("missing or invalid {name}"),
                })
            };
            truth.lambda.push(next("lambda")?);
            truth.mean.push(next("mean")?);
        }
        Ok(truth)
    }
}

/// Simulates a scenario with a generator seeded from `scenario.seed`.
pub fn simulate(scenario: &Scenario) -> Result<(Dataset, Truth)> {
    let mut rng = ChaCha8Rng::seed_from_u64(scenario.seed);
    simulate_with(scenario, &mut rng)
}

/// Simulates a scenario drawing from `rng`.
pub fn simulate_with(scenario: &Scenario, rng: &mut dyn RngCore) -> Result<(Dataset, Truth)> {
    let Scenario { kind, n, p, .. } = *scenario;
    if p < 5 {
        return Err(Error::Validation(format!("Friedman scenarios need P >= 5, got {p}")));
    }
    if n == 0 {
        return Err(Error::Validation("scenario needs N >= 1".into()));
    }
    let family = kind.generating_family();
    let x: Vec<f64> = (0..n * p).map(|_| rng.random::<f64>()).collect();
    let mut truth = Truth::default();
    let mut obs = Vec::with_capacity(n);
    for row in x.chunks_exact(p) {
        let lambda = kind.true_lambda(row)?;
        let o = if kind.is_survival() {
            let t = family.simulate(lambda, rng).y;
            let c = family.simulate(lambda, rng).y;
            Observation::censored(t.min(c), t <= c)
        } else {
            family.simulate(lambda, rng)
        };
        truth.lambda.push(lambda);
        truth.mean.push(family.predict_transform(lambda));
        obs.push(o);
    }
    Ok((Dataset::new(x, p, obs)?, truth))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn friedman_values() {
        let mut x = vec![0.0; 7];
        x[2] = 0.5;
        assert_eq!(friedman(&x).unwrap(), 0.0);
        x[0] = 1.0;
        x[1] = 0.5;
        assert!((friedman(&x).unwrap() - 10.0).abs() < 1e-12);
        let v = friedman(&[0.5; 5]).unwrap();
        assert!((v - (10.0 * (PI / 4.0).sin() + 7.5)).abs() < 1e-12);
        assert!((v - 14.5711).abs() < 1e-4);
        assert!(friedman(&[0.5; 4]).is_err());
    }

    #[test]
    fn same_seed_same_data() {
        for kind in ScenarioKind::ALL {
            let s = Scenario::new(kind, 42).with_size(50, 6);
            assert_eq!(simulate(&s).unwrap(), simulate(&s).unwrap());
        }
    }

    #[test]
    fn truth_matches_the_defining_transform() {
        let (data, truth) = simulate(&Scenario::new(ScenarioKind::HetPoisson, 3)).unwrap();
        for i in 0..data.n() {
            let want = (2.0 + (friedman(data.row(i)).unwrap() - 14.0) / 5.0).exp();
            assert_eq!(truth.mean[i], want);
        }
    }

    #[test]
    fn names_parse() {
        for kind in ScenarioKind::ALL {
            assert_eq!(kind.name().parse::<ScenarioKind>().unwrap(), kind);
        }
        assert!("friedman".parse::<ScenarioKind>().is_err());
    }
}
