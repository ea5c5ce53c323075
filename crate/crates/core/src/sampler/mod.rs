//! The reversible-jump backfitting sweep and its building blocks.

mod conjugate;
mod hyper;
mod laplace;
mod moves;

pub use conjugate::{conjugate_gaussian_tree_update, conjugate_leaf_posterior, gaussian_sigma, log_integrated_likelihood};
pub use hyper::{update_sigma_mu, update_split_probs};
pub use laplace::{
    laplace_leaf_proposal, leaf_score_and_curvature, log_node_score, log_normal_density, node_members, tree_node_score,
    LaplaceStats, LeafProposal, NodeContext, CURVATURE_FLOOR, MAX_SCORING_ITERATIONS,
};
pub use moves::{
    acceptance_log_ratio, log_tree_structure_prior, merge_members, partition, propose_birth, propose_change,
    propose_death, rj_update_tree, split_members, LeafMembers, MoveCount, MoveCounts, MoveKind, MoveMembers, MoveProbs,
    MoveProposals, ProposedMove,
};

use rand::RngCore;

use crate::data::Dataset;
use crate::error::Result;
use crate::family::LikelihoodFamily;
use crate::slice::{log_half_cauchy, slice_step_out, SliceSettings};
use crate::tree::{DecisionTree, Forest, TreePriorParams};

/// How each tree is updated within a sweep.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum TreeUpdate {
    /// Reversible jump with Laplace proposals, then slice-sampled leaves.
    #[default]
    Rjmcmc,
    /// Integrated-likelihood structure moves with exact leaf draws
    /// (Gaussian model only).
    ConjugateGaussian,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SamplerSettings {
    pub prior: TreePriorParams,
    pub moves: MoveProbs,
    /// Scale `c` of the half-Cauchy prior on the leaf sd.
    pub sigma_mu_scale: f64,
    /// Concentration of the Dirichlet prior on split probabilities.
    pub xi: f64,
    pub update_sigma_mu: bool,
    pub update_split_probs: bool,
    pub update_nuisance: bool,
    pub tree_update: TreeUpdate,
}

impl SamplerSettings {
    /// Defaults for a forest of `num_trees` trees with multiplier `k`.
    pub fn new(num_trees: usize, k: f64) -> Self {
        SamplerSettings {
            prior: TreePriorParams::default(),
            moves: MoveProbs::default(),
            sigma_mu_scale: k / (num_trees as f64).sqrt(),
            xi: 1.0,
            update_sigma_mu: true,
            update_split_probs: true,
            update_nuisance: true,
            tree_update: TreeUpdate::Rjmcmc,
        }
    }
}

/// One step-out slice pass over every leaf value, each targeting its full
/// conditional. The initial width is the inverse root curvature at the
/// current value.
pub fn slice_refresh_leaves(tree: &mut DecisionTree, leaves: &LeafMembers, ctx: &NodeContext<'_>, rng: &mut dyn RngCore) {
    for (&path, members) in leaves {
        let mu = tree.leaf_value(path).expect("partition matches tree");
        let (_, info) = leaf_score_and_curvature(ctx, members, mu);
        let width = if info.is_finite() && info > 0.0 {
            info.sqrt().recip()
        } else {
            ctx.sigma_mu
        };
        let settings = SliceSettings { width, max_steps: 50 };
        let (new_mu, _) = slice_step_out(mu, None, |m| log_node_score(ctx, members, m), settings, rng);
        tree.set_leaf_value(path, new_mu).expect("path is a leaf");
    }
}

/// Cumulative diagnostics for a chain.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct ChainStats {
    pub moves: MoveCounts,
    pub laplace: LaplaceStats,
}

/// What one sweep did and where it ended up.
#[derive(Clone, Debug, PartialEq)]
pub struct IterationSummary {
    pub moves: MoveCounts,
    pub laplace_capped: u64,
    pub log_likelihood: f64,
    pub log_posterior: f64,
    /// `log f(y_i | r(x_i))` at the end of the sweep.
    pub pointwise_loglik: Vec<f64>,
}

/// Everything a chain carries between sweeps.
#[derive(Clone, Debug)]
pub struct ChainState {
    pub forest: Forest,
    pub family: Box<dyn LikelihoodFamily>,
    fit: Vec<f64>,
    lambda: Vec<f64>,
    pub stats: ChainStats,
}

impl ChainState {
    pub fn new(forest: Forest, family: Box<dyn LikelihoodFamily>, data: &Dataset) -> Self {
        let mut state = ChainState {
            forest,
            family,
            fit: Vec::new(),
            lambda: vec![0.0; data.n()],
            stats: ChainStats::default(),
        };
        state.recompute_fit(data);
        state
    }

    /// Forest output at each training row.
    pub fn fit(&self) -> &[f64] {
        &self.fit
    }

    pub fn recompute_fit(&mut self, data: &Dataset) {
        self.fit = data.rows().map(|x| self.forest.evaluate(x)).collect();
    }

    /// Largest gap between the cached fit and a fresh evaluation.
    pub fn max_fit_error(&self, data: &Dataset) -> f64 {
        data.rows()
            .zip(&self.fit)
            .map(|(x, f)| (self.forest.evaluate(x) - f).abs())
            .fold(0.0, f64::max)
    }

    /// Backfitting update of tree `t`: remove it from the fit, update it, and
    /// add it back.
    pub fn update_tree(
        &mut self,
        t: usize,
        data: &Dataset,
        settings: &SamplerSettings,
        counts: &mut MoveCounts,
        rng: &mut dyn RngCore,
    ) -> Result<()> {
        let tree = &self.forest.trees[t];
        let mut leaves = partition(tree, data);
        for (&path, members) in &leaves {
            let v = tree.leaf_value(path).expect("partition matches tree");
            for &i in members {
                self.lambda[i] = self.fit[i] - v;
            }
        }
        let ctx = NodeContext {
            obs: data.obs(),
            lambda: &self.lambda,
            family: self.family.as_ref(),
            sigma_mu: self.forest.sigma_mu,
        };
        let new_tree = match settings.tree_update {
            TreeUpdate::Rjmcmc => {
                let mut new_tree = rj_update_tree(
                    tree,
                    &mut leaves,
                    data,
                    &ctx,
                    &self.forest.split_probs,
                    &settings.prior,
                    &settings.moves,
                    counts,
                    &mut self.stats.laplace,
                    rng,
                );
                slice_refresh_leaves(&mut new_tree, &leaves, &ctx, rng);
                new_tree
            }
            TreeUpdate::ConjugateGaussian => {
                let residuals: Vec<f64> = data.obs().iter().zip(&self.lambda).map(|(o, l)| o.y - l).collect();
                conjugate_gaussian_tree_update(
                    tree,
                    &mut leaves,
                    data,
                    &residuals,
                    self.family.as_ref(),
                    self.forest.sigma_mu,
                    &self.forest.split_probs,
                    &settings.prior,
                    &settings.moves,
                    counts,
                    rng,
                )?
            }
        };
        for (&path, members) in &leaves {
            let v = new_tree.leaf_value(path).expect("partition matches tree");
            for &i in members {
                self.fit[i] = self.lambda[i] + v;
            }
        }
        self.forest.trees[t] = new_tree;
        Ok(())
    }

    /// `sum_i log f(y_i | r(x_i))` at the cached fit, per observation.
    pub fn pointwise_loglik(&self, data: &Dataset) -> Vec<f64> {
        data.obs()
            .iter()
            .zip(&self.fit)
            .map(|(o, &l)| self.family.log_density(o, l))
            .collect()
    }

    /// Unnormalized log posterior of the current state (nuisance priors excluded).
    pub fn log_posterior(&self, loglik: f64, settings: &SamplerSettings) -> f64 {
        let sigma_mu = self.forest.sigma_mu;
        let mut total = loglik + log_half_cauchy(sigma_mu, settings.sigma_mu_scale);
        for tree in &self.forest.trees {
            total += log_tree_structure_prior(tree, &settings.prior, &self.forest.split_probs);
            total += tree.leaf_values().map(|m| log_normal_density(m, 0.0, sigma_mu)).sum::<f64>();
        }
        total
    }
}

/// One full sweep: every tree in turn, then the leaf scale, the split
/// probabilities and the family's nuisance parameters.
pub fn gibbs_iteration(
    state: &mut ChainState,
    data: &Dataset,
    settings: &SamplerSettings,
    rng: &mut dyn RngCore,
) -> Result<IterationSummary> {
    state.recompute_fit(data);
    let capped_before = state.stats.laplace.capped;
    let mut counts = MoveCounts::default();
    for t in 0..state.forest.trees.len() {
        state.update_tree(t, data, settings, &mut counts, rng)?;
    }
    if settings.update_sigma_mu {
        let leaves = state.forest.leaf_values();
        state.forest.sigma_mu = update_sigma_mu(state.forest.sigma_mu, &leaves, settings.sigma_mu_scale, rng);
    }
    if settings.update_split_probs {
        let counts = state.forest.feature_counts();
        state.forest.split_probs = update_split_probs(&counts, settings.xi, rng);
    }
    if settings.update_nuisance {
        state.family.update_nuisance(data.obs(), &state.fit, rng);
    }
    state.stats.moves.add(&counts);
    let pointwise = state.pointwise_loglik(data);
    let log_likelihood: f64 = pointwise.iter().sum();
    Ok(IterationSummary {
        moves: counts,
        laplace_capped: state.stats.laplace.capped - capped_before,
        log_likelihood,
        log_posterior: state.log_posterior(log_likelihood, settings),
        pointwise_loglik: pointwise,
    })
}
