//! `key = value` config files for [`SamplerConfig`].

use std::fmt::Write as _;
use std::path::Path;

use crate::data::fmt_f64;
use crate::engine::SamplerConfig;
use crate::error::{Error, Result};
use crate::sampler::TreeUpdate;

pub const KEYS: [&str; 16] = [
    "model",
    "num_trees",
    "gamma",
    "beta",
    "k",
    "xi",
    "p_birth",
    "p_death",
    "p_change",
    "iterations",
    "burn_in",
    "thin",
    "chains",
    "seed",
    "fd_delta",
    "tree_update",
];

fn parse<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::Validation(format!("invalid value '{value}' for {key}")))
}

impl std::str::FromStr for TreeUpdate {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "rjmcmc" => Ok(TreeUpdate::Rjmcmc),
            "conjugate" => Ok(TreeUpdate::ConjugateGaussian),
            other => Err(Error::Validation(format!(
                "unknown tree update '{other}' (expected rjmcmc or conjugate)"
            ))),
        }
    }
}

impl std::fmt::Display for TreeUpdate {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            TreeUpdate::Rjmcmc => "rjmcmc",
            TreeUpdate::ConjugateGaussian => "conjugate",
        })
    }
}

impl SamplerConfig {
    /// Sets one field by key. Model options (`link`, `variance`,
    /// `phi_prior`) are accepted directly and apply to the current model, so
    /// `model` must come first.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let value = value.trim();
        match key.trim() {
            "model" => self.model = value.parse()?,
            "num_trees" => self.num_trees = parse(key, value)?,
            "gamma" => self.gamma = parse(key, value)?,
            "beta" => self.beta = parse(key, value)?,
            "k" => self.k = parse(key, value)?,
            "xi" => self.xi = parse(key, value)?,
            "p_birth" => self.moves.birth = parse(key, value)?,
            "p_death" => self.moves.death = parse(key, value)?,
            "p_change" => self.moves.change = parse(key, value)?,
            "iterations" => self.iterations = parse(key, value)?,
            "burn_in" => self.burn_in = parse(key, value)?,
            "thin" => self.thin = parse(key, value)?,
            "chains" => self.chains = parse(key, value)?,
            "seed" => self.seed = parse(key, value)?,
            "fd_delta" => self.fd_delta = parse(key, value)?,
            "tree_update" => self.tree_update = value.parse()?,
            other => self.model.set_option(other, value)?,
        }
        Ok(())
    }

    /// Parses a config file body on top of the defaults. Blank lines and
    /// lines starting with `#` are skipped.
    pub fn from_text(text: &str) -> Result<SamplerConfig> {
        let mut config = SamplerConfig::default();
        config.apply_text(text)?;
        Ok(config)
    }

    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (k, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| Error::Parse {
                line: k + 1,
                message: format!("expected key = value, got '{line}'"),
            })?;
            self.set(key, value).map_err(|e| Error::Parse {
                line: k + 1,
                message: e.to_string(),
            })?;
        }
        Ok(())
    }

    pub fn load(path: &Path) -> Result<SamplerConfig> {
        SamplerConfig::from_text(&std::fs::read_to_string(path)?)
    }

    /// Text that [`SamplerConfig::from_text`] reads back to the same config.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let mut line = |k: &str, v: String| {
            let _ = writeln!(s, "{k} = {v}");
        };
        line("model", self.model.name().to_string());
        for (k, v) in self.model.options() {
            line(k, v);
        }
        line("num_trees", self.num_trees.to_string());
        line("gamma", fmt_f64(self.gamma));
        line("beta", fmt_f64(self.beta));
        line("k", fmt_f64(self.k));
        line("xi", fmt_f64(self.xi));
        line("p_birth", fmt_f64(self.moves.birth));
        line("p_death", fmt_f64(self.moves.death));
        line("p_change", fmt_f64(self.moves.change));
        line("iterations", self.iterations.to_string());
        line("burn_in", self.burn_in.to_string());
        line("thin", self.thin.to_string());
        line("chains", self.chains.to_string());
        line("seed", self.seed.to_string());
        line("fd_delta", fmt_f64(self.fd_delta));
        line("tree_update", self.tree_update.to_string());
        s
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_text())?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::zoo::{ModelSpec, HetVarSpec, MeanLink, PhiPrior, VarianceFn};

    #[test]
    fn text_round_trip() {
        let mut c = SamplerConfig {
            model: ModelSpec::HetVar(HetVarSpec {
                link: MeanLink::Identity,
                variance: VarianceFn::Quadratic,
                phi_prior: PhiPrior::HalfCauchy(2.5),
            }),
            num_trees: 7,
            gamma: 0.9,
            seed: 99,
            thin: 3,
            ..Default::default()
        };
        c.moves.change = 0.0;
        c.k = 1.0 / 3.0;
        assert_eq!(SamplerConfig::from_text(&c.to_text()).unwrap(), c);
    }

    #[test]
    fn errors_carry_line_numbers() {
        let e = SamplerConfig::from_text("# comment\nmodel = gaussian\nthin = x\n").unwrap_err();
        assert!(matches!(e, Error::Parse { line: 3, .. }), "{e}");
        let e = SamplerConfig::from_text("model = gaussian\nlink = exp\n").unwrap_err();
        assert!(matches!(e, Error::Parse { line: 2, .. }));
        assert!(SamplerConfig::from_text("nonsense").is_err());
    }
}
