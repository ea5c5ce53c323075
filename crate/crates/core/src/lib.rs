//! Generalized Bayesian additive regression trees fit by reversible-jump
//! MCMC with Laplace-approximation leaf proposals.

pub mod config;
pub mod data;
pub mod engine;
pub mod error;
pub mod family;
pub mod forest_io;
pub mod sampler;
pub mod simulate;
pub mod slice;
pub mod special;
pub mod tree;
pub mod zoo;

pub use data::{Dataset, Scaling, ScalingMethod};
pub use engine::{
    combine_draws, gengamma_variance, heldout_metrics, lpml, predict, run_chain, run_chains, survival_curve, ChainTrace,
    Draw, PosteriorSummary, SamplerConfig,
};
pub use error::{Error, Result};
pub use family::{LikelihoodFamily, Observation};
pub use simulate::{simulate, Scenario, ScenarioKind, Truth};
pub use tree::{DecisionTree, Forest, NodePath, SplitRule, TreePriorParams};
pub use zoo::ModelSpec;
