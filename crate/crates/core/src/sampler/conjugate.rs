//! Marginal-likelihood tree update for the Gaussian model, used as a
//! reference sampler.

use std::f64::consts::PI;

use rand::{Rng, RngCore};

use super::moves::{accept, choose_target, merge_members, split_members, LeafMembers, MoveCounts, MoveKind, MoveProbs};
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::family::LikelihoodFamily;
use crate::tree::{DecisionTree, TreeMove, TreePriorParams};

/// Log of the leaf's likelihood integrated over `mu ~ Normal(0, tau^2)` for
/// residuals `r` with noise sd `sigma`. An empty leaf contributes 0.
pub fn log_integrated_likelihood(r: &[f64], sigma: f64, tau: f64) -> f64 {
    if r.is_empty() {
        return 0.0;
    }
    let n = r.len() as f64;
    let (s2, t2) = (sigma * sigma, tau * tau);
    let sum: f64 = r.iter().sum();
    let ss: f64 = r.iter().map(|v| v * v).sum();
    let denom = s2 + n * t2;
    -0.5 * n * (2.0 * PI * s2).ln() - ss / (2.0 * s2) + 0.5 * (s2 / denom).ln() + sum * sum * t2 / (2.0 * s2 * denom)
}

/// Mean and sd of a leaf value given its residuals.
pub fn conjugate_leaf_posterior(r: &[f64], sigma: f64, tau: f64) -> (f64, f64) {
    let n = r.len() as f64;
    let (s2, t2) = (sigma * sigma, tau * tau);
    let denom = s2 + n * t2;
    (t2 * r.iter().sum::<f64>() / denom, (s2 * t2 / denom).sqrt())
}

/// Noise sd of a Gaussian family, or an unsupported-model error.
pub fn gaussian_sigma(family: &dyn LikelihoodFamily) -> Result<f64> {
    if family.name() != "gaussian" {
        return Err(Error::Unsupported(format!(
            "the conjugate tree update needs the gaussian model, not {}",
            family.name()
        )));
    }
    family
        .nuisance()
        .into_iter()
        .find(|(n, _)| *n == "sigma")
        .map(|(_, v)| v)
        .ok_or_else(|| Error::Unsupported("gaussian family without sigma".into()))
}

/// Structure update by the integrated-likelihood ratio, followed by exact
/// draws of every leaf value. `residuals` are `y_i - lambda_i`.
#[allow(clippy::too_many_arguments)]
pub fn conjugate_gaussian_tree_update(
    tree: &DecisionTree,
    leaves: &mut LeafMembers,
    data: &Dataset,
    residuals: &[f64],
    family: &dyn LikelihoodFamily,
    sigma_mu: f64,
    split_probs: &[f64],
    prior: &TreePriorParams,
    moves: &MoveProbs,
    counts: &mut MoveCounts,
    rng: &mut dyn RngCore,
) -> Result<DecisionTree> {
    let sigma = gaussian_sigma(family)?;
    let lam = |m: &[usize]| {
        let r: Vec<f64> = m.iter().map(|&i| residuals[i]).collect();
        log_integrated_likelihood(&r, sigma, sigma_mu)
    };

    let target = choose_target(tree, split_probs, moves, rng);
    counts.get_mut(target.kind).attempts += 1;
    let mut new_tree = tree.clone();
    if target.degenerate {
        counts.degenerate += 1;
    } else {
        let node = target.node;
        let d = node.depth();
        let rho = prior.branch_prob(d);
        let log_struct = rho.ln() + 2.0 * (-prior.branch_prob(d + 1)).ln_1p() - (-rho).ln_1p();
        let (mv, log_r, update): (TreeMove, f64, Box<dyn FnOnce(&mut LeafMembers)>) = match target.kind {
            MoveKind::Birth => {
                let rule = target.rule.unwrap();
                let merged = leaves[&node].clone();
                let (l, r) = split_members(&rule, &merged, data);
                let mv = TreeMove::Birth {
                    leaf: node,
                    rule,
                    left_value: 0.0,
                    right_value: 0.0,
                };
                let after = tree.apply_move(&mv).expect("BIRTH target is a leaf");
                let log_r = log_struct + lam(&l) + lam(&r) - lam(&merged)
                    + moves.prob(MoveKind::Death, &after).ln()
                    - (after.node_sets().nog.len() as f64).ln()
                    - moves.prob(MoveKind::Birth, tree).ln()
                    + (tree.num_leaves() as f64).ln();
                let update = Box::new(move |lv: &mut LeafMembers| {
                    lv.remove(&node);
                    lv.insert(node.left(), l);
                    lv.insert(node.right(), r);
                });
                (mv, log_r, update)
            }
            MoveKind::Death => {
                let (l, r) = (&leaves[&node.left()], &leaves[&node.right()]);
                let merged = merge_members(l, r);
                let mv = TreeMove::Death { branch: node, value: 0.0 };
                let after = tree.apply_move(&mv).expect("DEATH target is a NOG branch");
                let log_r = -log_struct + lam(&merged) - lam(l) - lam(r)
                    + moves.prob(MoveKind::Birth, &after).ln()
                    - (after.num_leaves() as f64).ln()
                    - moves.prob(MoveKind::Death, tree).ln()
                    + (tree.node_sets().nog.len() as f64).ln();
                let update = Box::new(move |lv: &mut LeafMembers| {
                    lv.remove(&node.left());
                    lv.remove(&node.right());
                    lv.insert(node, merged);
                });
                (mv, log_r, update)
            }
            MoveKind::Change => {
                let rule = target.rule.unwrap();
                let (l, r) = (&leaves[&node.left()], &leaves[&node.right()]);
                let merged = merge_members(l, r);
                let (nl, nr) = split_members(&rule, &merged, data);
                let mv = TreeMove::Change {
                    branch: node,
                    rule,
                    left_value: 0.0,
                    right_value: 0.0,
                };
                let log_r = lam(&nl) + lam(&nr) - lam(l) - lam(r);
                let update = Box::new(move |lv: &mut LeafMembers| {
                    lv.insert(node.left(), nl);
                    lv.insert(node.right(), nr);
                });
                (mv, log_r, update)
            }
        };
        if accept(log_r, rng) {
            counts.get_mut(target.kind).accepts += 1;
            new_tree = tree.apply_move(&mv).expect("move target has the right kind");
            update(leaves);
        }
    }

    for (&path, members) in leaves.iter() {
        let r: Vec<f64> = members.iter().map(|&i| residuals[i]).collect();
        let (mean, sd) = conjugate_leaf_posterior(&r, sigma, sigma_mu);
        let z: f64 = rng.sample(rand_distr::StandardNormal);
        new_tree.set_leaf_value(path, mean + sd * z)?;
    }
    Ok(new_tree)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::zoo::Logistic;

    #[test]
    fn single_residual_marginal() {
        let v = log_integrated_likelihood(&[0.0], 1.0, 1.0).exp();
        assert!((v - 1.0 / (4.0 * PI).sqrt()).abs() < 1e-12);
        assert_eq!(log_integrated_likelihood(&[], 1.3, 0.2), 0.0);
    }

    #[test]
    fn marginal_matches_quadrature() {
        let r = [0.3, -1.2, 2.0];
        let (sigma, tau): (f64, f64) = (0.8, 0.6);
        let h = 1e-3;
        let mut total = 0.0;
        let mut mu: f64 = -10.0;
        while mu < 10.0 {
            let mut lf = -0.5 * (mu / tau).powi(2) - (tau * (2.0 * PI).sqrt()).ln();
            for v in r {
                lf += -0.5 * ((v - mu) / sigma).powi(2) - (sigma * (2.0 * PI).sqrt()).ln();
            }
            total += lf.exp() * h;
            mu += h;
        }
        assert!((total.ln() - log_integrated_likelihood(&r, sigma, tau)).abs() < 1e-6);
    }

    #[test]
    fn rejects_other_families() {
        assert!(matches!(gaussian_sigma(&Logistic), Err(Error::Unsupported(_))));
    }
}
