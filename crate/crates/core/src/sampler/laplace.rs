//! Leaf full conditionals and their Laplace approximations.

use std::f64::consts::PI;

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::family::{LikelihoodFamily, Observation};
use crate::tree::{DecisionTree, Node, NodePath};

/// Floor applied to the summed data curvature before the prior term is added.
pub const CURVATURE_FLOOR: f64 = 1e-8;
/// Fisher-scoring iterations allowed before the current iterate is returned.
pub const MAX_SCORING_ITERATIONS: usize = 50;

/// What a leaf's full conditional depends on besides its members.
#[derive(Clone, Copy)]
pub struct NodeContext<'a> {
    pub obs: &'a [Observation],
    /// Fit of all other trees at each observation.
    pub lambda: &'a [f64],
    pub family: &'a dyn LikelihoodFamily,
    pub sigma_mu: f64,
}

pub fn log_normal_density(x: f64, mean: f64, sd: f64) -> f64 {
    let z = (x - mean) / sd;
    -0.5 * z * z - sd.ln() - 0.5 * (2.0 * PI).ln()
}

/// `log pi_mu(mu) + sum_i log f(y_i | lambda_i + mu)` over the members.
pub fn log_node_score(ctx: &NodeContext<'_>, members: &[usize], mu: f64) -> f64 {
    let mut total = log_normal_density(mu, 0.0, ctx.sigma_mu);
    for &i in members {
        total += ctx.family.log_density(&ctx.obs[i], ctx.lambda[i] + mu);
    }
    total
}

/// Indices of the rows routed through `path`, in increasing order.
pub fn node_members(tree: &DecisionTree, path: NodePath, data: &Dataset) -> Result<Vec<usize>> {
    if tree.get(path).is_none() {
        return Err(Error::Structural(format!("unknown node {path}")));
    }
    let mut members = Vec::new();
    for i in 0..data.n() {
        let x = data.row(i);
        let mut at = NodePath::ROOT;
        loop {
            if at == path {
                members.push(i);
                break;
            }
            match tree.get(at) {
                Some(Node::Branch(rule)) if at.depth() < path.depth() => {
                    at = if rule.goes_left(x) { at.left() } else { at.right() };
                }
                _ => break,
            }
        }
    }
    Ok(members)
}

/// The node score of `path` in `tree` at leaf value `mu`.
pub fn tree_node_score(tree: &DecisionTree, path: NodePath, mu: f64, data: &Dataset, ctx: &NodeContext<'_>) -> Result<f64> {
    let members = node_members(tree, path, data)?;
    Ok(log_node_score(ctx, &members, mu))
}

/// A `Normal(mean, sd^2)` proposal for one leaf value.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LeafProposal {
    pub mean: f64,
    pub sd: f64,
}

impl LeafProposal {
    pub fn log_density(&self, mu: f64) -> f64 {
        log_normal_density(mu, self.mean, self.sd)
    }
}

/// Bookkeeping for the scoring iterations behind the proposals.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct LaplaceStats {
    pub calls: u64,
    pub iterations: u64,
    /// Calls that stopped at the iteration cap.
    pub capped: u64,
    /// Calls that hit a non-finite score or curvature and fell back to the prior.
    pub failed: u64,
}

/// Penalized score and curvature of the leaf's log full conditional.
pub fn leaf_score_and_curvature(ctx: &NodeContext<'_>, members: &[usize], mu: f64) -> (f64, f64) {
    let (mut u, mut info) = (0.0, 0.0);
    for &i in members {
        let (s, c) = ctx.family.score_and_curvature(&ctx.obs[i], ctx.lambda[i] + mu);
        u += s;
        info += c;
    }
    if info <= 0.0 {
        info = CURVATURE_FLOOR;
    }
    let prec = 1.0 / (ctx.sigma_mu * ctx.sigma_mu);
    (u - mu * prec, info + prec)
}

/// Laplace approximation to a leaf's full conditional by Fisher scoring
/// (Newton when the family has no Fisher information) from `init`.
pub fn laplace_leaf_proposal(ctx: &NodeContext<'_>, members: &[usize], init: f64, stats: &mut LaplaceStats) -> LeafProposal {
    stats.calls += 1;
    let prior = LeafProposal {
        mean: 0.0,
        sd: ctx.sigma_mu,
    };
    if members.is_empty() {
        return prior;
    }
    let mut m = init;
    for iter in 0..=MAX_SCORING_ITERATIONS {
        let (u, info) = leaf_score_and_curvature(ctx, members, m);
        if !(u.is_finite() && info.is_finite() && m.is_finite()) {
            stats.failed += 1;
            return prior;
        }
        if u.abs() <= info.sqrt() / 10.0 {
            return LeafProposal {
                mean: m,
                sd: info.sqrt().recip(),
            };
        }
        if iter == MAX_SCORING_ITERATIONS {
            stats.capped += 1;
            return LeafProposal {
                mean: m,
                sd: info.sqrt().recip(),
            };
        }
        m += u / info;
        stats.iterations += 1;
    }
    unreachable!()
}
