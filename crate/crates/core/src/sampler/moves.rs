//! BIRTH / DEATH / CHANGE proposals and their acceptance ratios.

use std::collections::BTreeMap;

use rand::{Rng, RngCore};

use super::laplace::{laplace_leaf_proposal, LaplaceStats, LeafProposal, NodeContext};
use super::laplace::log_node_score;
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::tree::{sample_split_rule, DecisionTree, Node, NodePath, SplitRule, TreeMove, TreePriorParams};

/// Members of every leaf, each list in increasing row order.
pub type LeafMembers = BTreeMap<NodePath, Vec<usize>>;

/// Routes every row of `data` to its leaf.
pub fn partition(tree: &DecisionTree, data: &Dataset) -> LeafMembers {
    let mut out = BTreeMap::new();
    let mut stack = vec![(NodePath::ROOT, (0..data.n()).collect::<Vec<_>>())];
    while let Some((path, idx)) = stack.pop() {
        match tree.get(path) {
            Some(Node::Leaf(_)) => {
                out.insert(path, idx);
            }
            Some(Node::Branch(rule)) => {
                let (l, r) = split_members(rule, &idx, data);
                stack.push((path.left(), l));
                stack.push((path.right(), r));
            }
            None => panic!("tree is missing node {path}"),
        }
    }
    out
}

pub fn split_members(rule: &SplitRule, members: &[usize], data: &Dataset) -> (Vec<usize>, Vec<usize>) {
    let mut left = Vec::with_capacity(members.len());
    let mut right = Vec::with_capacity(members.len());
    for &i in members {
        if rule.goes_left(data.row(i)) {
            left.push(i);
        } else {
            right.push(i);
        }
    }
    (left, right)
}

/// Merges two ascending index lists.
pub fn merge_members(a: &[usize], b: &[usize]) -> Vec<usize> {
    let mut out = Vec::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        if a[i] < b[j] {
            out.push(a[i]);
            i += 1;
        } else {
            out.push(b[j]);
            j += 1;
        }
    }
    out.extend_from_slice(&a[i..]);
    out.extend_from_slice(&b[j..]);
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum MoveKind {
    Birth,
    Death,
    Change,
}

/// Unnormalized move weights; a root-only tree always proposes BIRTH.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MoveProbs {
    pub birth: f64,
    pub death: f64,
    pub change: f64,
}

impl Default for MoveProbs {
    fn default() -> Self {
        MoveProbs {
            birth: 0.25,
            death: 0.25,
            change: 0.5,
        }
    }
}

impl MoveProbs {
    pub fn new(birth: f64, death: f64, change: f64) -> Result<Self> {
        let ok = [birth, death, change].iter().all(|p| p.is_finite() && *p >= 0.0);
        if !ok || birth <= 0.0 || death <= 0.0 {
            return Err(Error::Validation(format!(
                "move probabilities must be non-negative with BIRTH and DEATH positive, got ({birth}, {death}, {change})"
            )));
        }
        Ok(MoveProbs { birth, death, change })
    }

    /// Probability of proposing `kind` for `tree`.
    pub fn prob(&self, kind: MoveKind, tree: &DecisionTree) -> f64 {
        if tree.is_root_only() {
            return if kind == MoveKind::Birth { 1.0 } else { 0.0 };
        }
        let total = self.birth + self.death + self.change;
        match kind {
            MoveKind::Birth => self.birth / total,
            MoveKind::Death => self.death / total,
            MoveKind::Change => self.change / total,
        }
    }

    pub fn choose(&self, tree: &DecisionTree, rng: &mut dyn RngCore) -> MoveKind {
        let u: f64 = rng.random();
        let pb = self.prob(MoveKind::Birth, tree);
        let pd = self.prob(MoveKind::Death, tree);
        if u < pb {
            MoveKind::Birth
        } else if u < pb + pd {
            MoveKind::Death
        } else {
            MoveKind::Change
        }
    }
}

/// Leaf-value proposals for a move and for its reverse.
///
/// BIRTH: forward `[left, right]`, reverse `[merged]`. DEATH: forward
/// `[merged]`, reverse `[left, right]`. CHANGE: forward the children under
/// the new rule, reverse the children under the old rule.
#[derive(Clone, Debug, PartialEq)]
pub struct MoveProposals {
    pub forward: Vec<LeafProposal>,
    pub reverse: Vec<LeafProposal>,
}

/// Rows of the nodes a move touches.
///
/// `merged` holds the rows of the target node; `before` the current children
/// (DEATH, CHANGE) and `after` the proposed children (BIRTH, CHANGE).
#[derive(Clone, Debug, Default, PartialEq)]
pub struct MoveMembers {
    pub merged: Vec<usize>,
    pub before: (Vec<usize>, Vec<usize>),
    pub after: (Vec<usize>, Vec<usize>),
}

fn leaf_value(tree: &DecisionTree, path: NodePath) -> f64 {
    tree.leaf_value(path).unwrap_or_else(|| panic!("{path} is not a leaf"))
}

fn log_birth_prior_ratio(prior: &TreePriorParams, d: usize) -> f64 {
    let rho = prior.branch_prob(d);
    let rho_child = prior.branch_prob(d + 1);
    rho.ln() + 2.0 * (-rho_child).ln_1p() - (-rho).ln_1p()
}

/// Log acceptance ratio of `mv`, which takes `before` to `after`.
///
/// The split-rule prior cancels against the rule proposal and is omitted.
/// The DEATH ratio uses `|NOG|` of the current tree, making it the exact
/// reciprocal of the matching BIRTH ratio.
#[allow(clippy::too_many_arguments)]
pub fn acceptance_log_ratio(
    mv: &TreeMove,
    before: &DecisionTree,
    after: &DecisionTree,
    proposals: &MoveProposals,
    prior: &TreePriorParams,
    moves: &MoveProbs,
    ctx: &NodeContext<'_>,
    members: &MoveMembers,
) -> f64 {
    let f = |m: &[usize], mu: f64| log_node_score(ctx, m, mu);
    match *mv {
        TreeMove::Birth {
            leaf,
            left_value,
            right_value,
            ..
        } => {
            let mu = leaf_value(before, leaf);
            let n_leaves = before.num_leaves() as f64;
            let n_nog_after = after.node_sets().nog.len() as f64;
            log_birth_prior_ratio(prior, leaf.depth())
                + f(&members.after.0, left_value)
                + f(&members.after.1, right_value)
                - f(&members.merged, mu)
                + moves.prob(MoveKind::Death, after).ln()
                - n_nog_after.ln()
                - moves.prob(MoveKind::Birth, before).ln()
                + n_leaves.ln()
                + proposals.reverse[0].log_density(mu)
                - proposals.forward[0].log_density(left_value)
                - proposals.forward[1].log_density(right_value)
        }
        TreeMove::Death { branch, value } => {
            let (mu_l, mu_r) = (leaf_value(before, branch.left()), leaf_value(before, branch.right()));
            let n_nog_before = before.node_sets().nog.len() as f64;
            let n_leaves_after = after.num_leaves() as f64;
            -log_birth_prior_ratio(prior, branch.depth())
                + f(&members.merged, value)
                - f(&members.before.0, mu_l)
                - f(&members.before.1, mu_r)
                + moves.prob(MoveKind::Birth, after).ln()
                - n_leaves_after.ln()
                - moves.prob(MoveKind::Death, before).ln()
                + n_nog_before.ln()
                + proposals.reverse[0].log_density(mu_l)
                + proposals.reverse[1].log_density(mu_r)
                - proposals.forward[0].log_density(value)
        }
        TreeMove::Change {
            branch,
            left_value,
            right_value,
            ..
        } => {
            let (mu_l, mu_r) = (leaf_value(before, branch.left()), leaf_value(before, branch.right()));
            f(&members.after.0, left_value) + f(&members.after.1, right_value)
                - f(&members.before.0, mu_l)
                - f(&members.before.1, mu_r)
                + proposals.reverse[0].log_density(mu_l)
                + proposals.reverse[1].log_density(mu_r)
                - proposals.forward[0].log_density(left_value)
                - proposals.forward[1].log_density(right_value)
        }
    }
}

/// Acceptance counts for one move kind.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct MoveCount {
    pub attempts: u64,
    pub accepts: u64,
}

impl MoveCount {
    pub fn rejects(&self) -> u64 {
        self.attempts - self.accepts
    }

    pub fn rate(&self) -> f64 {
        if self.attempts == 0 {
            f64::NAN
        } else {
            self.accepts as f64 / self.attempts as f64
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct MoveCounts {
    pub birth: MoveCount,
    pub death: MoveCount,
    pub change: MoveCount,
    /// Proposals rejected outright because their split interval had no width.
    pub degenerate: u64,
}

impl MoveCounts {
    pub fn get_mut(&mut self, kind: MoveKind) -> &mut MoveCount {
        match kind {
            MoveKind::Birth => &mut self.birth,
            MoveKind::Death => &mut self.death,
            MoveKind::Change => &mut self.change,
        }
    }

    pub fn add(&mut self, other: &MoveCounts) {
        for (a, b) in [
            (&mut self.birth, other.birth),
            (&mut self.death, other.death),
            (&mut self.change, other.change),
        ] {
            a.attempts += b.attempts;
            a.accepts += b.accepts;
        }
        self.degenerate += other.degenerate;
    }
}

/// A fully specified move with everything needed to score it.
pub struct ProposedMove {
    pub mv: TreeMove,
    pub tree: DecisionTree,
    pub proposals: MoveProposals,
    pub members: MoveMembers,
}

fn draw(p: &LeafProposal, rng: &mut dyn RngCore) -> f64 {
    let z: f64 = rng.sample(rand_distr::StandardNormal);
    p.mean + p.sd * z
}

/// Proposes a BIRTH at `leaf` with `rule`, drawing child values from their
/// Laplace proposals started at the parent's value.
#[allow(clippy::too_many_arguments)]
pub fn propose_birth(
    tree: &DecisionTree,
    leaf: NodePath,
    rule: SplitRule,
    members: &[usize],
    data: &Dataset,
    ctx: &NodeContext<'_>,
    stats: &mut LaplaceStats,
    rng: &mut dyn RngCore,
) -> ProposedMove {
    let mu = leaf_value(tree, leaf);
    let (l, r) = split_members(&rule, members, data);
    let pl = laplace_leaf_proposal(ctx, &l, mu, stats);
    let pr = laplace_leaf_proposal(ctx, &r, mu, stats);
    let (vl, vr) = (draw(&pl, rng), draw(&pr, rng));
    let mv = TreeMove::Birth {
        leaf,
        rule,
        left_value: vl,
        right_value: vr,
    };
    let reverse = laplace_leaf_proposal(ctx, members, 0.5 * (vl + vr), stats);
    ProposedMove {
        tree: tree.apply_move(&mv).expect("BIRTH target is a leaf"),
        mv,
        proposals: MoveProposals {
            forward: vec![pl, pr],
            reverse: vec![reverse],
        },
        members: MoveMembers {
            merged: members.to_vec(),
            before: Default::default(),
            after: (l, r),
        },
    }
}

/// Proposes a DEATH of the NOG branch `branch`.
pub fn propose_death(
    tree: &DecisionTree,
    branch: NodePath,
    left: &[usize],
    right: &[usize],
    ctx: &NodeContext<'_>,
    stats: &mut LaplaceStats,
    rng: &mut dyn RngCore,
) -> ProposedMove {
    let (mu_l, mu_r) = (leaf_value(tree, branch.left()), leaf_value(tree, branch.right()));
    let merged = merge_members(left, right);
    let p = laplace_leaf_proposal(ctx, &merged, 0.5 * (mu_l + mu_r), stats);
    let value = draw(&p, rng);
    let mv = TreeMove::Death { branch, value };
    let rl = laplace_leaf_proposal(ctx, left, value, stats);
    let rr = laplace_leaf_proposal(ctx, right, value, stats);
    ProposedMove {
        tree: tree.apply_move(&mv).expect("DEATH target is a NOG branch"),
        mv,
        proposals: MoveProposals {
            forward: vec![p],
            reverse: vec![rl, rr],
        },
        members: MoveMembers {
            merged,
            before: (left.to_vec(), right.to_vec()),
            after: Default::default(),
        },
    }
}

/// Proposes replacing the rule of the NOG branch `branch` with `rule`.
#[allow(clippy::too_many_arguments)]
pub fn propose_change(
    tree: &DecisionTree,
    branch: NodePath,
    rule: SplitRule,
    left: &[usize],
    right: &[usize],
    data: &Dataset,
    ctx: &NodeContext<'_>,
    stats: &mut LaplaceStats,
    rng: &mut dyn RngCore,
) -> ProposedMove {
    let (mu_l, mu_r) = (leaf_value(tree, branch.left()), leaf_value(tree, branch.right()));
    let merged = merge_members(left, right);
    let (nl, nr) = split_members(&rule, &merged, data);
    let pl = laplace_leaf_proposal(ctx, &nl, mu_l, stats);
    let pr = laplace_leaf_proposal(ctx, &nr, mu_r, stats);
    let (vl, vr) = (draw(&pl, rng), draw(&pr, rng));
    let mv = TreeMove::Change {
        branch,
        rule,
        left_value: vl,
        right_value: vr,
    };
    let rl = laplace_leaf_proposal(ctx, left, vl, stats);
    let rr = laplace_leaf_proposal(ctx, right, vr, stats);
    ProposedMove {
        tree: tree.apply_move(&mv).expect("CHANGE target is a NOG branch"),
        mv,
        proposals: MoveProposals {
            forward: vec![pl, pr],
            reverse: vec![rl, rr],
        },
        members: MoveMembers {
            merged,
            before: (left.to_vec(), right.to_vec()),
            after: (nl, nr),
        },
    }
}

/// Structural part of a move: which node, and (BIRTH/CHANGE) which rule.
pub(crate) struct MoveTarget {
    pub kind: MoveKind,
    pub node: NodePath,
    pub rule: Option<SplitRule>,
    pub degenerate: bool,
}

pub(crate) fn choose_target(
    tree: &DecisionTree,
    split_probs: &[f64],
    moves: &MoveProbs,
    rng: &mut dyn RngCore,
) -> MoveTarget {
    let kind = moves.choose(tree, rng);
    let sets = tree.node_sets();
    let pool = if kind == MoveKind::Birth { &sets.leaves } else { &sets.nog };
    let node = pool[rng.random_range(0..pool.len())];
    let (rule, degenerate) = match kind {
        MoveKind::Death => (None, false),
        _ => {
            let region = tree.node_region(node, split_probs.len()).expect("node exists");
            let s = sample_split_rule(rng, &region, split_probs);
            (Some(s.rule), s.degenerate || (kind == MoveKind::Birth && node.depth() >= NodePath::MAX_DEPTH))
        }
    };
    MoveTarget {
        kind,
        node,
        rule,
        degenerate,
    }
}

/// Metropolis-Hastings accept step on the log scale.
pub(crate) fn accept(log_ratio: f64, rng: &mut dyn RngCore) -> bool {
    if log_ratio.is_nan() {
        return false;
    }
    log_ratio >= 0.0 || rng.random::<f64>().ln() < log_ratio
}

/// One reversible-jump update of a single tree given the other trees' fit.
///
/// `leaves` is kept in sync with the returned tree.
#[allow(clippy::too_many_arguments)]
pub fn rj_update_tree(
    tree: &DecisionTree,
    leaves: &mut LeafMembers,
    data: &Dataset,
    ctx: &NodeContext<'_>,
    split_probs: &[f64],
    prior: &TreePriorParams,
    moves: &MoveProbs,
    counts: &mut MoveCounts,
    stats: &mut LaplaceStats,
    rng: &mut dyn RngCore,
) -> DecisionTree {
    let target = choose_target(tree, split_probs, moves, rng);
    counts.get_mut(target.kind).attempts += 1;
    if target.degenerate {
        counts.degenerate += 1;
        return tree.clone();
    }
    let node = target.node;
    let proposed = match target.kind {
        MoveKind::Birth => propose_birth(tree, node, target.rule.unwrap(), &leaves[&node], data, ctx, stats, rng),
        MoveKind::Death => {
            propose_death(tree, node, &leaves[&node.left()], &leaves[&node.right()], ctx, stats, rng)
        }
        MoveKind::Change => propose_change(
            tree,
            node,
            target.rule.unwrap(),
            &leaves[&node.left()],
            &leaves[&node.right()],
            data,
            ctx,
            stats,
            rng,
        ),
    };
    let log_r = acceptance_log_ratio(
        &proposed.mv,
        tree,
        &proposed.tree,
        &proposed.proposals,
        prior,
        moves,
        ctx,
        &proposed.members,
    );
    if !accept(log_r, rng) {
        return tree.clone();
    }
    counts.get_mut(target.kind).accepts += 1;
    let ProposedMove { tree: new_tree, members, .. } = proposed;
    match target.kind {
        MoveKind::Birth => {
            leaves.remove(&node);
            leaves.insert(node.left(), members.after.0);
            leaves.insert(node.right(), members.after.1);
        }
        MoveKind::Death => {
            leaves.remove(&node.left());
            leaves.remove(&node.right());
            leaves.insert(node, members.merged);
        }
        MoveKind::Change => {
            leaves.insert(node.left(), members.after.0);
            leaves.insert(node.right(), members.after.1);
        }
    }
    new_tree
}

/// Log prior density of a tree's structure and rules (leaf values excluded).
pub fn log_tree_structure_prior(tree: &DecisionTree, prior: &TreePriorParams, split_probs: &[f64]) -> f64 {
    let mut total = 0.0;
    for (&path, node) in tree.nodes() {
        let rho = prior.branch_prob(path.depth());
        match node {
            Node::Leaf(_) => total += (-rho).ln_1p(),
            Node::Branch(rule) => {
                let region = tree.node_region(path, split_probs.len()).expect("node exists");
                total += rho.ln() + split_probs[rule.feature].ln() - region.width(rule.feature).ln();
            }
        }
    }
    total
}
