//! Running chains and summarizing their draws.

use std::io::Write;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::data::{fmt_f64, Dataset};
use crate::error::{Error, Result};
use crate::family::LikelihoodFamily;
use crate::forest_io::ForestDraw;
use crate::sampler::{gibbs_iteration, ChainState, ChainStats, MoveCounts, MoveProbs, SamplerSettings, TreeUpdate};
use crate::simulate::Truth;
use crate::special::trigamma;
use crate::tree::{Forest, TreePriorParams};
use crate::zoo::ModelSpec;

/// Everything that controls a fit.
#[derive(Clone, Debug, PartialEq)]
pub struct SamplerConfig {
    pub model: ModelSpec,
    pub num_trees: usize,
    pub gamma: f64,
    pub beta: f64,
    /// Multiplier in the leaf-scale prior `c = k / sqrt(T)`.
    pub k: f64,
    pub xi: f64,
    pub moves: MoveProbs,
    pub iterations: usize,
    pub burn_in: usize,
    pub thin: usize,
    pub chains: usize,
    pub seed: u64,
    pub fd_delta: f64,
    pub tree_update: TreeUpdate,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        SamplerConfig {
            model: ModelSpec::Gaussian,
            num_trees: 50,
            gamma: 0.95,
            beta: 2.0,
            k: 1.0,
            xi: 1.0,
            moves: MoveProbs::default(),
            iterations: 10_000,
            burn_in: 5_000,
            thin: 1,
            chains: 1,
            seed: 0,
            fd_delta: crate::family::DEFAULT_FD_DELTA,
            tree_update: TreeUpdate::Rjmcmc,
        }
    }
}

impl SamplerConfig {
    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::Validation(m));
        if self.iterations <= self.burn_in {
            return fail(format!(
                "iterations ({}) must exceed burn_in ({})",
                self.iterations, self.burn_in
            ));
        }
        if self.thin == 0 {
            return fail("thin must be at least 1".into());
        }
        if self.chains == 0 {
            return fail("chains must be at least 1".into());
        }
        if self.num_trees == 0 {
            return fail("num_trees must be at least 1".into());
        }
        if !(self.k > 0.0 && self.k.is_finite()) {
            return fail(format!("k must be positive, got {}", self.k));
        }
        if !(self.xi > 0.0 && self.xi.is_finite()) {
            return fail(format!("xi must be positive, got {}", self.xi));
        }
        if !(self.fd_delta > 0.0 && self.fd_delta.is_finite()) {
            return fail(format!("fd_delta must be positive, got {}", self.fd_delta));
        }
        TreePriorParams::new(self.gamma, self.beta)?;
        MoveProbs::new(self.moves.birth, self.moves.death, self.moves.change)?;
        if self.tree_update == TreeUpdate::ConjugateGaussian && self.model != ModelSpec::Gaussian {
            return Err(Error::Unsupported(format!(
                "the conjugate tree update needs the gaussian model, not {}",
                self.model.name()
            )));
        }
        Ok(())
    }

    /// Kept draws per chain: iterations `i > burn_in` with `(i - burn_in) % thin == 0`.
    pub fn kept_per_chain(&self) -> usize {
        (self.iterations - self.burn_in) / self.thin
    }

    pub fn is_kept(&self, iteration: usize) -> bool {
        iteration > self.burn_in && (iteration - self.burn_in) % self.thin == 0
    }

    pub fn sampler_settings(&self) -> Result<SamplerSettings> {
        let mut s = SamplerSettings::new(self.num_trees, self.k);
        s.prior = TreePriorParams::new(self.gamma, self.beta)?;
        s.moves = self.moves;
        s.xi = self.xi;
        s.tree_update = self.tree_update;
        Ok(s)
    }
}

/// Per-iteration trace values.
#[derive(Clone, Debug, PartialEq)]
pub struct IterationRecord {
    pub iteration: usize,
    pub kept: bool,
    pub sigma_mu: f64,
    pub nuisance: Vec<(&'static str, f64)>,
    pub log_likelihood: f64,
    pub log_posterior: f64,
    pub moves: MoveCounts,
    pub laplace_capped: u64,
    pub mean_leaves: f64,
}

/// A kept posterior draw.
#[derive(Clone, Debug)]
pub struct Draw {
    pub chain: usize,
    pub iteration: usize,
    pub forest: Forest,
    pub family: Box<dyn LikelihoodFamily>,
    /// `log f(y_i | r(x_i))` for each training row; empty for draws loaded
    /// from a forest file.
    pub pointwise_loglik: Vec<f64>,
}

impl Draw {
    pub fn from_saved(saved: &ForestDraw, fd_delta: f64) -> Result<Draw> {
        Ok(Draw {
            chain: saved.chain,
            iteration: saved.iteration,
            forest: saved.forest.clone(),
            family: saved.family(fd_delta)?,
            pointwise_loglik: Vec::new(),
        })
    }

    pub fn to_saved(&self, model: ModelSpec) -> ForestDraw {
        ForestDraw::new(model, self.chain, self.iteration, self.forest.clone(), self.family.as_ref())
    }
}

#[derive(Clone, Debug)]
pub struct ChainTrace {
    pub chain: usize,
    pub model: ModelSpec,
    pub records: Vec<IterationRecord>,
    pub draws: Vec<Draw>,
    pub stats: ChainStats,
}

fn check_data(data: &Dataset, family: &dyn LikelihoodFamily) -> Result<()> {
    if data.n() == 0 {
        return Err(Error::Validation("no training data".into()));
    }
    for (i, o) in data.obs().iter().enumerate() {
        family
            .validate(o)
            .map_err(|e| Error::Validation(format!("row {} is invalid for the {} model: {e}", i + 1, family.name())))?;
    }
    Ok(())
}

/// Runs one chain. Its random stream is determined by `(config.seed, chain)`.
pub fn run_chain(config: &SamplerConfig, data: &Dataset, chain: usize) -> Result<ChainTrace> {
    run_chain_with(config, data, chain, |_| {})
}

/// Runs one chain, calling `monitor` after every sweep.
pub fn run_chain_with<F>(config: &SamplerConfig, data: &Dataset, chain: usize, mut monitor: F) -> Result<ChainTrace>
where
    F: FnMut(&ChainState),
{
    config.validate()?;
    let settings = config.sampler_settings()?;
    let mut family = config.model.build(config.fd_delta);
    check_data(data, family.as_ref())?;
    family.initialize(data.obs());

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(chain as u64);
    let forest = Forest::new(config.num_trees, data.p(), settings.sigma_mu_scale);
    let mut state = ChainState::new(forest, family, data);

    let mut records = Vec::with_capacity(config.iterations);
    let mut draws = Vec::with_capacity(config.kept_per_chain());
    for iteration in 1..=config.iterations {
        let summary = gibbs_iteration(&mut state, data, &settings, &mut rng)?;
        let kept = config.is_kept(iteration);
        let leaves: usize = state.forest.trees.iter().map(|t| t.num_leaves()).sum();
        records.push(IterationRecord {
            iteration,
            kept,
            sigma_mu: state.forest.sigma_mu,
            nuisance: state.family.nuisance(),
            log_likelihood: summary.log_likelihood,
            log_posterior: summary.log_posterior,
            moves: summary.moves,
            laplace_capped: summary.laplace_capped,
            mean_leaves: leaves as f64 / config.num_trees as f64,
        });
        if kept {
            draws.push(Draw {
                chain,
                iteration,
                forest: state.forest.clone(),
                family: state.family.clone(),
                pointwise_loglik: summary.pointwise_loglik,
            });
        }
        monitor(&state);
    }
    Ok(ChainTrace {
        chain,
        model: config.model,
        records,
        draws,
        stats: state.stats,
    })
}

/// Runs `config.chains` chains concurrently, returned in chain order.
pub fn run_chains(config: &SamplerConfig, data: &Dataset) -> Result<Vec<ChainTrace>> {
    config.validate()?;
    if config.chains == 1 {
        return Ok(vec![run_chain(config, data, 0)?]);
    }
    std::thread::scope(|scope| {
        let handles: Vec<_> = (0..config.chains)
            .map(|c| scope.spawn(move || run_chain(config, data, c)))
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("chain thread panicked"))
            .collect()
    })
}

/// Kept draws of all chains, chain by chain.
pub fn combine_draws(traces: &[ChainTrace]) -> Vec<Draw> {
    traces.iter().flat_map(|t| t.draws.iter().cloned()).collect()
}

/// Type-7 (linear interpolation) sample quantile of sorted values.
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let h = (n - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(n - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Posterior mean with a pointwise 95% equal-tailed interval.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Band {
    pub mean: f64,
    pub lower: f64,
    pub upper: f64,
}

impl Band {
    pub fn from_values(values: &mut [f64]) -> Band {
        let mean = values.iter().sum::<f64>() / values.len() as f64;
        values.sort_by(f64::total_cmp);
        Band {
            mean,
            lower: quantile_sorted(values, 0.025),
            upper: quantile_sorted(values, 0.975),
        }
    }

    pub fn contains(&self, v: f64) -> bool {
        self.lower <= v && v <= self.upper
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PointSummary {
    /// `r(x)`.
    pub lambda: Band,
    /// The family's mean-scale transform of `r(x)`.
    pub transformed: Band,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PosteriorSummary {
    pub points: Vec<PointSummary>,
}

impl PosteriorSummary {
    pub fn lambda_means(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.lambda.mean).collect()
    }

    pub fn transformed_means(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.transformed.mean).collect()
    }
}

fn require_draws(draws: &[Draw]) -> Result<()> {
    if draws.is_empty() {
        return Err(Error::Validation("no posterior draws".into()));
    }
    Ok(())
}

fn check_dims(draws: &[Draw], p: usize) -> Result<()> {
    let want = draws[0].forest.num_features();
    if p != want {
        return Err(Error::Validation(format!(
            "query points have {p} covariates but the forest was fit with {want}"
        )));
    }
    Ok(())
}

/// Summarizes `r(x)` and its transform over the draws at each query row.
pub fn predict(draws: &[Draw], data: &Dataset) -> Result<PosteriorSummary> {
    require_draws(draws)?;
    check_dims(draws, data.p())?;
    let m = draws.len();
    let mut points = Vec::with_capacity(data.n());
    let mut lam = vec![0.0; m];
    let mut tr = vec![0.0; m];
    for x in data.rows() {
        for (k, d) in draws.iter().enumerate() {
            lam[k] = d.forest.evaluate(x);
            tr[k] = d.family.predict_transform(lam[k]);
        }
        points.push(PointSummary {
            lambda: Band::from_values(&mut lam),
            transformed: Band::from_values(&mut tr),
        });
    }
    Ok(PosteriorSummary { points })
}

/// Per-draw survival curves at one covariate row (draws x grid).
pub fn survival_draws(draws: &[Draw], x: &[f64], grid: &[f64]) -> Result<Vec<Vec<f64>>> {
    require_draws(draws)?;
    check_dims(draws, x.len())?;
    draws
        .iter()
        .map(|d| {
            let lambda = d.forest.evaluate(x);
            grid.iter()
                .map(|&t| {
                    d.family.survival(t, lambda).ok_or_else(|| {
                        Error::Unsupported(format!("{} is not a survival model", d.family.name()))
                    })
                })
                .collect()
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct SurvivalCurve {
    pub times: Vec<f64>,
    pub bands: Vec<Band>,
}

/// Posterior survival curve with pointwise 95% bands.
pub fn survival_curve(draws: &[Draw], x: &[f64], grid: &[f64]) -> Result<SurvivalCurve> {
    let per_draw = survival_draws(draws, x, grid)?;
    let bands = (0..grid.len())
        .map(|g| {
            let mut col: Vec<f64> = per_draw.iter().map(|row| row[g]).collect();
            Band::from_values(&mut col)
        })
        .collect();
    Ok(SurvivalCurve {
        times: grid.to_vec(),
        bands,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct Lpml {
    pub lpml: f64,
    pub log_cpo: Vec<f64>,
}

impl Lpml {
    pub fn cpo(&self) -> Vec<f64> {
        self.log_cpo.iter().map(|v| v.exp()).collect()
    }
}

/// Harmonic-mean CPO estimates from a draws x observations log-likelihood
/// matrix, and their log sum.
pub fn lpml(matrix: &[Vec<f64>]) -> Result<Lpml> {
    let m = matrix.len();
    if m == 0 {
        return Err(Error::Validation("log-likelihood matrix has no rows".into()));
    }
    let n = matrix[0].len();
    if matrix.iter().any(|r| r.len() != n) {
        return Err(Error::Validation("log-likelihood matrix rows differ in length".into()));
    }
    if let Some((r, c)) = matrix
        .iter()
        .enumerate()
        .find_map(|(r, row)| row.iter().position(|v| !v.is_finite()).map(|c| (r, c)))
    {
        return Err(Error::Validation(format!(
            "log-likelihood matrix entry ({}, {}) is not finite",
            r + 1,
            c + 1
        )));
    }
    let log_m = (m as f64).ln();
    let log_cpo: Vec<f64> = (0..n)
        .map(|i| {
            let max = matrix.iter().map(|row| -row[i]).fold(f64::NEG_INFINITY, f64::max);
            let lse = max + matrix.iter().map(|row| (-row[i] - max).exp()).sum::<f64>().ln();
            -(lse - log_m)
        })
        .collect();
    Ok(Lpml {
        lpml: log_cpo.iter().sum(),
        log_cpo,
    })
}

/// LPML of the kept draws' pointwise log-likelihoods.
pub fn lpml_of_draws(draws: &[Draw]) -> Result<Lpml> {
    let matrix: Vec<Vec<f64>> = draws.iter().map(|d| d.pointwise_loglik.clone()).collect();
    lpml(&matrix)
}

/// Held-out diagnostics of one draw.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DrawMetrics {
    pub chain: usize,
    pub iteration: usize,
    /// `mean (y - r(x))^2`, Gaussian model only.
    pub mse: Option<f64>,
    /// `sum log f(y | r(x))` over the held-out rows.
    pub log_likelihood: f64,
    /// RMSE of `r(x)` against the true `r`.
    pub rmse_lambda: Option<f64>,
    /// RMSE of the mean-scale transform against the true mean.
    pub rmse_mean: Option<f64>,
}

/// Per-draw held-out metrics, with RMSEs when the truth is known.
pub fn heldout_metrics(draws: &[Draw], heldout: &Dataset, truth: Option<&Truth>) -> Result<Vec<DrawMetrics>> {
    require_draws(draws)?;
    check_dims(draws, heldout.p())?;
    if heldout.n() == 0 {
        return Err(Error::Validation("held-out set is empty".into()));
    }
    if let Some(t) = truth {
        if t.lambda.len() != heldout.n() || t.mean.len() != heldout.n() {
            return Err(Error::Validation(format!(
                "truth has {} rows but the held-out set has {}",
                t.lambda.len(),
                heldout.n()
            )));
        }
    }
    if draws[0].family.is_survival() && !heldout.has_censoring() {
        return Err(Error::Validation(
            "held-out data for a survival model needs a delta column".into(),
        ));
    }
    let n = heldout.n() as f64;
    let mut out = Vec::with_capacity(draws.len());
    for d in draws {
        let fam = d.family.as_ref();
        let lam: Vec<f64> = heldout.rows().map(|x| d.forest.evaluate(x)).collect();
        let log_likelihood = heldout.obs().iter().zip(&lam).map(|(o, &l)| fam.log_density(o, l)).sum();
        let mse = (fam.name() == "gaussian")
            .then(|| heldout.obs().iter().zip(&lam).map(|(o, l)| (o.y - l).powi(2)).sum::<f64>() / n);
        let rmse = |a: &mut dyn Iterator<Item = (f64, f64)>| (a.map(|(u, v)| (u - v).powi(2)).sum::<f64>() / n).sqrt();
        let (rmse_lambda, rmse_mean) = match truth {
            Some(t) => (
                Some(rmse(&mut lam.iter().copied().zip(t.lambda.iter().copied()))),
                Some(rmse(&mut lam.iter().map(|&l| fam.predict_transform(l)).zip(t.mean.iter().copied()))),
            ),
            None => (None, None),
        };
        out.push(DrawMetrics {
            chain: d.chain,
            iteration: d.iteration,
            mse,
            log_likelihood,
            rmse_lambda,
            rmse_mean,
        });
    }
    Ok(out)
}

fn nuisance_value(family: &dyn LikelihoodFamily, name: &str) -> Option<f64> {
    family.nuisance().into_iter().find(|(k, _)| *k == name).map(|(_, v)| v)
}

/// Per-draw `V = sigma^2 psi'(alpha)` of a generalized-gamma fit.
pub fn gengamma_variance(draws: &[Draw]) -> Result<Vec<f64>> {
    require_draws(draws)?;
    draws
        .iter()
        .map(|d| {
            let fam = d.family.as_ref();
            if fam.name() != "aft_gengamma" {
                return Err(Error::Unsupported(format!(
                    "log-time variance is defined for aft_gengamma, not {}",
                    fam.name()
                )));
            }
            let sigma = nuisance_value(fam, "sigma").expect("gengamma has sigma");
            let alpha = nuisance_value(fam, "alpha").expect("gengamma has alpha");
            Ok(sigma * sigma * trigamma(alpha)?)
        })
        .collect()
}

/// Posterior mean of the split probabilities.
pub fn mean_split_probs(draws: &[Draw]) -> Result<Vec<f64>> {
    require_draws(draws)?;
    let p = draws[0].forest.num_features();
    let mut mean = vec![0.0; p];
    for d in draws {
        for (m, s) in mean.iter_mut().zip(&d.forest.split_probs) {
            *m += s;
        }
    }
    Ok(mean.into_iter().map(|m| m / draws.len() as f64).collect())
}

/// Writes the per-iteration trace of every chain as CSV.
pub fn write_trace_csv<W: Write>(mut out: W, traces: &[ChainTrace]) -> Result<()> {
    let nuisance_names: Vec<&str> = traces
        .first()
        .and_then(|t| t.records.first())
        .map(|r| r.nuisance.iter().map(|(k, _)| *k).collect())
        .unwrap_or_default();
    let mut header = vec!["chain", "iteration", "kept", "sigma_mu"];
    header.extend(nuisance_names.iter().copied());
    header.extend([
        "log_likelihood",
        "log_posterior",
        "birth_attempts",
        "birth_accepts",
        "death_attempts",
        "death_accepts",
        "change_attempts",
        "change_accepts",
        "degenerate_rejects",
        "laplace_capped",
        "mean_leaves",
    ]);
    writeln!(out, "{}", header.join(","))?;
    for t in traces {
        for r in &t.records {
            let mut f = vec![
                t.chain.to_string(),
                r.iteration.to_string(),
                u8::from(r.kept).to_string(),
                fmt_f64(r.sigma_mu),
            ];
            f.extend(r.nuisance.iter().map(|(_, v)| fmt_f64(*v)));
            f.push(fmt_f64(r.log_likelihood));
            f.push(fmt_f64(r.log_posterior));
            let m = &r.moves;
            for c in [m.birth, m.death, m.change] {
                f.push(c.attempts.to_string());
                f.push(c.accepts.to_string());
            }
            f.push(m.degenerate.to_string());
            f.push(r.laplace_capped.to_string());
            f.push(fmt_f64(r.mean_leaves));
            writeln!(out, "{}", f.join(","))?;
        }
    }
    Ok(())
}

/// Writes the kept draws' pointwise log-likelihoods (draws x observations).
pub fn write_pointwise_csv<W: Write>(mut out: W, draws: &[Draw]) -> Result<()> {
    let n = draws.first().map_or(0, |d| d.pointwise_loglik.len());
    let mut header = vec!["chain".to_string(), "iteration".to_string()];
    header.extend((1..=n).map(|i| format!("obs{i}")));
    writeln!(out, "{}", header.join(","))?;
    for d in draws {
        let mut f = vec![d.chain.to_string(), d.iteration.to_string()];
        f.extend(d.pointwise_loglik.iter().map(|&v| fmt_f64(v)));
        writeln!(out, "{}", f.join(","))?;
    }
    Ok(())
}

/// Reads a matrix written by [`write_pointwise_csv`].
pub fn read_pointwise_csv(text: &str) -> Result<Vec<Vec<f64>>> {
    text.lines()
        .enumerate()
        .skip(1)
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(k, line)| {
            line.split(',')
                .skip(2)
                .map(|v| {
                    v.trim().parse::<f64>().map_err(|_| Error::Parse {
                        line: k + 1,
                        message: format!("invalid number '{v}'"),
                    })
                })
                .collect()
        })
        .collect()
}
