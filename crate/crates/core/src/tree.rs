//! Decision trees over the unit hypercube, their regions, structural edits and
//! the branching-process prior.
//!
//! Nodes are keyed by their path from the root, a string over `{L, R}`. The
//! path is the canonical identity used both in memory and on disk; the root is
//! written as `"."`.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rand::{Rng, RngCore};
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};

/// Intervals narrower than this cannot host a cutpoint.
pub const DEGENERATE_WIDTH: f64 = 1e-12;

/// Position of a node: the sequence of left/right turns taken from the root.
///
/// Bit `i` of `bits` is set when the `i`-th turn goes right.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NodePath {
    depth: u8,
    bits: u64,
}

impl NodePath {
    pub const ROOT: NodePath = NodePath { depth: 0, bits: 0 };
    pub const MAX_DEPTH: usize = 63;

    pub fn depth(self) -> usize {
        self.depth as usize
    }

    pub fn is_root(self) -> bool {
        self.depth == 0
    }

    pub fn left(self) -> NodePath {
        assert!(self.depth() < Self::MAX_DEPTH, "node path too deep");
        NodePath {
            depth: self.depth + 1,
            bits: self.bits,
        }
    }

    pub fn right(self) -> NodePath {
        assert!(self.depth() < Self::MAX_DEPTH, "node path too deep");
        NodePath {
            depth: self.depth + 1,
            bits: self.bits | (1 << self.depth),
        }
    }

    pub fn parent(self) -> Option<NodePath> {
        if self.is_root() {
            return None;
        }
        let depth = self.depth - 1;
        Some(NodePath {
            depth,
            bits: self.bits & !(1 << depth),
        })
    }

    /// Direction of the `i`-th turn; `true` means right.
    fn turn(self, i: usize) -> bool {
        (self.bits >> i) & 1 == 1
    }

    /// Ancestors from the root down to (excluding) `self`, each with the turn
    /// taken out of it.
    fn ancestry(self) -> impl Iterator<Item = (NodePath, bool)> {
        let mut node = NodePath::ROOT;
        (0..self.depth()).map(move |i| {
            let here = node;
            let right = self.turn(i);
            node = if right { node.right() } else { node.left() };
            (here, right)
        })
    }
}

impl fmt::Display for NodePath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_root() {
            return f.write_str(".");
        }
        for i in 0..self.depth() {
            f.write_str(if self.turn(i) { "R" } else { "L" })?;
        }
        Ok(())
    }
}

impl fmt::Debug for NodePath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "NodePath({self})")
    }
}

impl FromStr for NodePath {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "." || s.is_empty() {
            return Ok(NodePath::ROOT);
        }
        if s.len() > Self::MAX_DEPTH {
            return Err(Error::Input(format!("node path '{s}' exceeds maximum depth")));
        }
        s.chars().try_fold(NodePath::ROOT, |p, c| match c {
            'L' => Ok(p.left()),
            'R' => Ok(p.right()),
            _ => Err(Error::Input(format!("invalid node path '{s}'"))),
        })
    }
}

/// `[x_feature <= cutpoint]`; points satisfying the rule go left.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SplitRule {
    pub feature: usize,
    pub cutpoint: f64,
}

impl SplitRule {
    pub fn new(feature: usize, cutpoint: f64) -> Self {
        SplitRule { feature, cutpoint }
    }

    #[inline]
    pub fn goes_left(&self, x: &[f64]) -> bool {
        x[self.feature] <= self.cutpoint
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Node {
    Branch(SplitRule),
    Leaf(f64),
}

impl Node {
    pub fn is_leaf(&self) -> bool {
        matches!(self, Node::Leaf(_))
    }
}

/// Axis-aligned box `[lower, upper]` inside `[0,1]^P`.
#[derive(Clone, Debug, PartialEq)]
pub struct Region {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl Region {
    pub fn unit(p: usize) -> Self {
        Region {
            lower: vec![0.0; p],
            upper: vec![1.0; p],
        }
    }

    pub fn width(&self, j: usize) -> f64 {
        self.upper[j] - self.lower[j]
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.iter()
            .zip(self.lower.iter().zip(&self.upper))
            .all(|(v, (lo, hi))| lo <= v && v <= hi)
    }

    /// True when `self` lies inside `other`.
    pub fn is_within(&self, other: &Region) -> bool {
        (0..self.lower.len())
            .all(|j| self.lower[j] >= other.lower[j] && self.upper[j] <= other.upper[j])
    }

    fn restrict(&mut self, rule: &SplitRule, right: bool) {
        let j = rule.feature;
        if right {
            self.lower[j] = self.lower[j].max(rule.cutpoint);
        } else {
            self.upper[j] = self.upper[j].min(rule.cutpoint);
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct NodeSets {
    pub leaves: Vec<NodePath>,
    pub branches: Vec<NodePath>,
    /// Branches whose children are both leaves.
    pub nog: Vec<NodePath>,
}

/// A structural edit proposed by the sampler.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum TreeMove {
    Birth {
        leaf: NodePath,
        rule: SplitRule,
        left_value: f64,
        right_value: f64,
    },
    Death {
        branch: NodePath,
        value: f64,
    },
    Change {
        branch: NodePath,
        rule: SplitRule,
        left_value: f64,
        right_value: f64,
    },
}

impl TreeMove {
    pub fn target(&self) -> NodePath {
        match *self {
            TreeMove::Birth { leaf, .. } => leaf,
            TreeMove::Death { branch, .. } | TreeMove::Change { branch, .. } => branch,
        }
    }
}

/// Full binary tree of split rules and leaf values.
#[derive(Clone, Debug, PartialEq)]
pub struct DecisionTree {
    nodes: BTreeMap<NodePath, Node>,
}

impl Default for DecisionTree {
    fn default() -> Self {
        DecisionTree::leaf(0.0)
    }
}

impl DecisionTree {
    /// Root-only tree.
    pub fn leaf(value: f64) -> Self {
        let mut nodes = BTreeMap::new();
        nodes.insert(NodePath::ROOT, Node::Leaf(value));
        DecisionTree { nodes }
    }

    /// Builds a tree from explicit nodes, checking that it is full binary and
    /// connected to the root.
    pub fn from_nodes(nodes: BTreeMap<NodePath, Node>) -> Result<Self> {
        if !nodes.contains_key(&NodePath::ROOT) {
            return Err(Error::Structural("tree has no root node".into()));
        }
        for (&path, node) in &nodes {
            if let Some(parent) = path.parent() {
                match nodes.get(&parent) {
                    Some(Node::Branch(_)) => {}
                    Some(Node::Leaf(_)) => {
                        return Err(Error::Structural(format!("node {path} has a leaf parent")))
                    }
                    None => return Err(Error::Structural(format!("node {path} has no parent"))),
                }
            }
            if let Node::Branch(_) = node {
                if path.depth() >= NodePath::MAX_DEPTH {
                    return Err(Error::Structural(format!("branch {path} is too deep")));
                }
                for child in [path.left(), path.right()] {
                    if !nodes.contains_key(&child) {
                        return Err(Error::Structural(format!("branch {path} is missing child {child}")));
                    }
                }
            }
        }
        Ok(DecisionTree { nodes })
    }

    pub fn nodes(&self) -> &BTreeMap<NodePath, Node> {
        &self.nodes
    }

    pub fn get(&self, path: NodePath) -> Option<&Node> {
        self.nodes.get(&path)
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn num_leaves(&self) -> usize {
        self.nodes.values().filter(|n| n.is_leaf()).count()
    }

    pub fn is_root_only(&self) -> bool {
        self.nodes.len() == 1
    }

    pub fn leaf_value(&self, path: NodePath) -> Option<f64> {
        match self.nodes.get(&path) {
            Some(Node::Leaf(v)) => Some(*v),
            _ => None,
        }
    }

    pub fn rule(&self, path: NodePath) -> Option<SplitRule> {
        match self.nodes.get(&path) {
            Some(Node::Branch(r)) => Some(*r),
            _ => None,
        }
    }

    pub fn leaf_values(&self) -> impl Iterator<Item = f64> + '_ {
        self.nodes.values().filter_map(|n| match n {
            Node::Leaf(v) => Some(*v),
            Node::Branch(_) => None,
        })
    }

    pub fn rules(&self) -> impl Iterator<Item = &SplitRule> + '_ {
        self.nodes.values().filter_map(|n| match n {
            Node::Branch(r) => Some(r),
            Node::Leaf(_) => None,
        })
    }

    /// Sets the value of an existing leaf.
    pub fn set_leaf_value(&mut self, path: NodePath, value: f64) -> Result<()> {
        match self.nodes.get_mut(&path) {
            Some(Node::Leaf(v)) => {
                *v = value;
                Ok(())
            }
            _ => Err(Error::Structural(format!("{path} is not a leaf"))),
        }
    }

    /// The leaf whose region contains `x`. Ties at a cutpoint go left.
    pub fn route(&self, x: &[f64]) -> Result<NodePath> {
        let mut path = NodePath::ROOT;
        loop {
            match self.nodes.get(&path) {
                Some(Node::Leaf(_)) => return Ok(path),
                Some(Node::Branch(rule)) => {
                    path = if rule.goes_left(x) { path.left() } else { path.right() };
                }
                None => return Err(Error::Structural(format!("missing node {path}"))),
            }
        }
    }

    /// Leaf path and value reached by `x`.
    #[inline]
    pub fn lookup(&self, x: &[f64]) -> (NodePath, f64) {
        let mut path = NodePath::ROOT;
        loop {
            match self.nodes[&path] {
                Node::Leaf(v) => return (path, v),
                Node::Branch(rule) => {
                    path = if rule.goes_left(x) { path.left() } else { path.right() };
                }
            }
        }
    }

    /// `g(x; T, M)`: the value of the leaf reached by `x`.
    #[inline]
    pub fn evaluate(&self, x: &[f64]) -> f64 {
        self.lookup(x).1
    }

    pub fn node_sets(&self) -> NodeSets {
        let mut sets = NodeSets::default();
        for (&path, node) in &self.nodes {
            match node {
                Node::Leaf(_) => sets.leaves.push(path),
                Node::Branch(_) => {
                    sets.branches.push(path);
                    if self.is_nog(path) {
                        sets.nog.push(path);
                    }
                }
            }
        }
        sets
    }

    fn is_nog(&self, path: NodePath) -> bool {
        matches!(self.nodes.get(&path), Some(Node::Branch(_)))
            && self.nodes.get(&path.left()).is_some_and(Node::is_leaf)
            && self.nodes.get(&path.right()).is_some_and(Node::is_leaf)
    }

    /// The hyperrectangle of points routed through `path`.
    pub fn node_region(&self, path: NodePath, p: usize) -> Result<Region> {
        if !self.nodes.contains_key(&path) {
            return Err(Error::Structural(format!("unknown node {path}")));
        }
        let mut region = Region::unit(p);
        for (ancestor, right) in path.ancestry() {
            match self.nodes.get(&ancestor) {
                Some(Node::Branch(rule)) => region.restrict(rule, right),
                _ => return Err(Error::Structural(format!("{ancestor} is not a branch"))),
            }
        }
        Ok(region)
    }

    pub fn depth(&self) -> usize {
        self.nodes.keys().map(|p| p.depth()).max().unwrap_or(0)
    }

    /// Applies `mv`, returning the edited tree; `self` is unchanged.
    pub fn apply_move(&self, mv: &TreeMove) -> Result<DecisionTree> {
        let mut out = self.clone();
        match *mv {
            TreeMove::Birth {
                leaf,
                rule,
                left_value,
                right_value,
            } => {
                if !matches!(self.nodes.get(&leaf), Some(Node::Leaf(_))) {
                    return Err(Error::Structural(format!("BIRTH target {leaf} is not a leaf")));
                }
                if leaf.depth() >= NodePath::MAX_DEPTH {
                    return Err(Error::Structural(format!("BIRTH target {leaf} is too deep")));
                }
                out.nodes.insert(leaf, Node::Branch(rule));
                out.nodes.insert(leaf.left(), Node::Leaf(left_value));
                out.nodes.insert(leaf.right(), Node::Leaf(right_value));
            }
            TreeMove::Death { branch, value } => {
                if !self.is_nog(branch) {
                    return Err(Error::Structural(format!("DEATH target {branch} is not a NOG branch")));
                }
                out.nodes.remove(&branch.left());
                out.nodes.remove(&branch.right());
                out.nodes.insert(branch, Node::Leaf(value));
            }
            TreeMove::Change {
                branch,
                rule,
                left_value,
                right_value,
            } => {
                if !self.is_nog(branch) {
                    return Err(Error::Structural(format!("CHANGE target {branch} is not a NOG branch")));
                }
                out.nodes.insert(branch, Node::Branch(rule));
                out.nodes.insert(branch.left(), Node::Leaf(left_value));
                out.nodes.insert(branch.right(), Node::Leaf(right_value));
            }
        }
        Ok(out)
    }
}

/// Depth-dependent branching probability `rho_d = gamma (1 + d)^-beta`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TreePriorParams {
    pub gamma: f64,
    pub beta: f64,
}

impl Default for TreePriorParams {
    fn default() -> Self {
        TreePriorParams {
            gamma: 0.95,
            beta: 2.0,
        }
    }
}

impl TreePriorParams {
    pub fn new(gamma: f64, beta: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&gamma) || !(beta >= 0.0) {
            return Err(Error::Validation(format!(
                "tree prior needs 0 <= gamma < 1 and beta >= 0 (got gamma={gamma}, beta={beta})"
            )));
        }
        Ok(TreePriorParams { gamma, beta })
    }

    pub fn branch_prob(&self, depth: usize) -> f64 {
        branch_prob(depth, self)
    }
}

pub fn branch_prob(depth: usize, params: &TreePriorParams) -> f64 {
    params.gamma * (1.0 + depth as f64).powf(-params.beta)
}

/// A split rule drawn from the prior, flagged when its interval has no width.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SampledRule {
    pub rule: SplitRule,
    pub degenerate: bool,
}

/// Draws a feature from `split_probs` and a cutpoint uniformly inside the
/// region's interval for that feature.
pub fn sample_split_rule<R: Rng + ?Sized>(rng: &mut R, region: &Region, split_probs: &[f64]) -> SampledRule {
    let feature = sample_categorical(rng, split_probs);
    let (lo, hi) = (region.lower[feature], region.upper[feature]);
    let degenerate = hi - lo < DEGENERATE_WIDTH;
    let cutpoint = if degenerate { lo } else { lo + (hi - lo) * rng.random::<f64>() };
    SampledRule {
        rule: SplitRule::new(feature, cutpoint),
        degenerate,
    }
}

pub(crate) fn sample_categorical<R: Rng + ?Sized>(rng: &mut R, probs: &[f64]) -> usize {
    let total: f64 = probs.iter().sum();
    let mut u = rng.random::<f64>() * total;
    for (j, &p) in probs.iter().enumerate() {
        if u < p {
            return j;
        }
        u -= p;
    }
    // Rounding left `u` just past the last positive weight.
    probs.iter().rposition(|&p| p > 0.0).unwrap_or(probs.len() - 1)
}

/// Draws a tree from the branching-process prior with leaf values
/// `Normal(0, sigma_mu^2)`.
pub fn sample_tree_prior(
    rng: &mut dyn RngCore,
    params: &TreePriorParams,
    split_probs: &[f64],
    sigma_mu: f64,
) -> DecisionTree {
    let p = split_probs.len();
    let leaf_dist = Normal::new(0.0, sigma_mu).expect("sigma_mu must be positive and finite");
    let mut nodes = BTreeMap::new();
    let mut stack = vec![(NodePath::ROOT, Region::unit(p))];
    while let Some((path, region)) = stack.pop() {
        let d = path.depth();
        if d < NodePath::MAX_DEPTH && rng.random::<f64>() < params.branch_prob(d) {
            let SampledRule { rule, .. } = sample_split_rule(rng, &region, split_probs);
            let mut left = region.clone();
            left.restrict(&rule, false);
            let mut right = region;
            right.restrict(&rule, true);
            nodes.insert(path, Node::Branch(rule));
            stack.push((path.right(), right));
            stack.push((path.left(), left));
        } else {
            nodes.insert(path, Node::Leaf(leaf_dist.sample(rng)));
        }
    }
    DecisionTree { nodes }
}

/// Sum of `T` trees with the hyperparameters they share.
#[derive(Clone, Debug, PartialEq)]
pub struct Forest {
    pub trees: Vec<DecisionTree>,
    pub sigma_mu: f64,
    pub split_probs: Vec<f64>,
}

impl Forest {
    /// `num_trees` root-only trees at zero with uniform split probabilities.
    pub fn new(num_trees: usize, num_features: usize, sigma_mu: f64) -> Self {
        Forest {
            trees: vec![DecisionTree::leaf(0.0); num_trees],
            sigma_mu,
            split_probs: vec![1.0 / num_features as f64; num_features],
        }
    }

    pub fn num_features(&self) -> usize {
        self.split_probs.len()
    }

    /// `r(x)`, the sum of the per-tree leaf values reached by `x`.
    pub fn evaluate(&self, x: &[f64]) -> f64 {
        self.trees.iter().map(|t| t.evaluate(x)).sum()
    }

    pub fn leaf_values(&self) -> Vec<f64> {
        self.trees.iter().flat_map(|t| t.leaf_values()).collect()
    }

    /// Number of branches splitting on each feature.
    pub fn feature_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.num_features()];
        for rule in self.trees.iter().flat_map(|t| t.rules()) {
            counts[rule.feature] += 1;
        }
        counts
    }
}

pub fn forest_eval(x: &[f64], forest: &Forest) -> f64 {
    forest.evaluate(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn stump(feature: usize, cut: f64) -> DecisionTree {
        DecisionTree::leaf(0.0)
            .apply_move(&TreeMove::Birth {
                leaf: NodePath::ROOT,
                rule: SplitRule::new(feature, cut),
                left_value: 1.0,
                right_value: 2.0,
            })
            .unwrap()
    }

    fn path(s: &str) -> NodePath {
        s.parse().unwrap()
    }

    #[test]
    fn path_round_trips_through_text() {
        for s in [".", "L", "R", "LR", "RRLRL"] {
            assert_eq!(path(s).to_string(), s);
        }
        assert_eq!(path("LR").parent(), Some(path("L")));
        assert!("LX".parse::<NodePath>().is_err());
    }

    #[test]
    fn route_single_root() {
        let t = DecisionTree::leaf(3.0);
        assert_eq!(t.route(&[0.2, 0.9]).unwrap(), NodePath::ROOT);
    }

    #[test]
    fn route_ties_go_left() {
        let t = stump(0, 0.5);
        assert_eq!(t.route(&[0.5]).unwrap(), path("L"));
        assert_eq!(t.route(&[0.500001]).unwrap(), path("R"));
    }

    #[test]
    fn route_depth_two() {
        let t = stump(0, 0.3)
            .apply_move(&TreeMove::Birth {
                leaf: path("R"),
                rule: SplitRule::new(1, 0.7),
                left_value: 0.0,
                right_value: 0.0,
            })
            .unwrap();
        assert_eq!(t.route(&[0.4, 0.9]).unwrap(), path("RR"));
    }

    #[test]
    fn route_reports_missing_child() {
        let mut nodes = BTreeMap::new();
        nodes.insert(NodePath::ROOT, Node::Branch(SplitRule::new(0, 0.5)));
        nodes.insert(path("L"), Node::Leaf(0.0));
        assert!(matches!(DecisionTree::from_nodes(nodes.clone()), Err(Error::Structural(_))));
        let broken = DecisionTree { nodes };
        assert!(broken.route(&[0.9]).is_err());
    }

    #[test]
    fn node_sets_shapes() {
        let single = DecisionTree::leaf(0.0).node_sets();
        assert_eq!(single.leaves, vec![NodePath::ROOT]);
        assert!(single.branches.is_empty() && single.nog.is_empty());

        let one = stump(0, 0.5).node_sets();
        assert_eq!(one.leaves, vec![path("L"), path("R")]);
        assert_eq!(one.branches, vec![NodePath::ROOT]);
        assert_eq!(one.nog, vec![NodePath::ROOT]);

        // Root splits, then its left child splits again.
        let fig = stump(0, 0.5)
            .apply_move(&TreeMove::Birth {
                leaf: path("L"),
                rule: SplitRule::new(1, 0.5),
                left_value: 0.0,
                right_value: 0.0,
            })
            .unwrap()
            .node_sets();
        assert_eq!(fig.nog, vec![path("L")]);
        assert_eq!(fig.branches.len() + fig.leaves.len(), 5);
    }

    #[test]
    fn regions() {
        let t = stump(0, 0.3);
        assert_eq!(t.node_region(NodePath::ROOT, 2).unwrap(), Region::unit(2));
        let l = t.node_region(path("L"), 2).unwrap();
        assert_eq!((l.lower[0], l.upper[0]), (0.0, 0.3));

        let t = stump(0, 0.6)
            .apply_move(&TreeMove::Birth {
                leaf: path("L"),
                rule: SplitRule::new(0, 0.2),
                left_value: 0.0,
                right_value: 0.0,
            })
            .unwrap();
        let lr = t.node_region(path("LR"), 1).unwrap();
        assert_eq!((lr.lower[0], lr.upper[0]), (0.2, 0.6));
        assert!(t.node_region(path("RR"), 1).is_err());
    }

    #[test]
    fn forest_sums_trees() {
        let mut f = Forest::new(2, 1, 1.0);
        assert_eq!(f.evaluate(&[0.1]), 0.0);
        f.trees[0] = DecisionTree::leaf(1.0);
        f.trees[1] = DecisionTree::leaf(-0.25);
        assert_eq!(forest_eval(&[0.1], &f), 0.75);
        let single = Forest {
            trees: vec![DecisionTree::leaf(2.5)],
            sigma_mu: 1.0,
            split_probs: vec![1.0],
        };
        assert_eq!(single.evaluate(&[0.4]), 2.5);
    }

    #[test]
    fn branching_probabilities() {
        let p = TreePriorParams::default();
        assert_eq!(branch_prob(0, &p), 0.95);
        assert!((branch_prob(1, &p) - 0.2375).abs() < 1e-15);
        assert_eq!(branch_prob(4, &TreePriorParams::new(0.0, 2.0).unwrap()), 0.0);
    }

    #[test]
    fn split_rule_sampling() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let s = [0.0, 0.0, 0.0, 1.0];
        for _ in 0..100 {
            assert_eq!(sample_split_rule(&mut rng, &Region::unit(4), &s).rule.feature, 3);
        }
        let mut region = Region::unit(2);
        region.lower[1] = 0.4;
        region.upper[1] = 0.4;
        let r = sample_split_rule(&mut rng, &region, &[0.0, 1.0]);
        assert!(r.degenerate);

        let n = 20_000;
        let hits = (0..n)
            .filter(|_| sample_split_rule(&mut rng, &Region::unit(2), &[0.5, 0.5]).rule.feature == 0)
            .count();
        let sd = (n as f64 * 0.25).sqrt();
        assert!((hits as f64 - n as f64 * 0.5).abs() < 3.0 * sd);
    }

    #[test]
    fn zero_gamma_prior_is_root_only() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let params = TreePriorParams::new(0.0, 2.0).unwrap();
        for _ in 0..50 {
            assert!(sample_tree_prior(&mut rng, &params, &[0.5, 0.5], 1.0).is_root_only());
        }
    }

    #[test]
    fn birth_death_change_edits() {
        let t = DecisionTree::leaf(0.7);
        let born = t
            .apply_move(&TreeMove::Birth {
                leaf: NodePath::ROOT,
                rule: SplitRule::new(0, 0.5),
                left_value: 1.0,
                right_value: 2.0,
            })
            .unwrap();
        assert_eq!(born.node_sets().nog, vec![NodePath::ROOT]);
        assert_eq!(t, DecisionTree::leaf(0.7));

        let back = born
            .apply_move(&TreeMove::Death {
                branch: NodePath::ROOT,
                value: 0.7,
            })
            .unwrap();
        assert_eq!(back, t);

        let changed = born
            .apply_move(&TreeMove::Change {
                branch: NodePath::ROOT,
                rule: SplitRule::new(0, 0.1),
                left_value: 5.0,
                right_value: 6.0,
            })
            .unwrap();
        assert_eq!(changed.node_sets(), born.node_sets());
        assert_eq!(changed.rule(NodePath::ROOT).unwrap().cutpoint, 0.1);

        assert!(t
            .apply_move(&TreeMove::Death {
                branch: NodePath::ROOT,
                value: 0.0
            })
            .is_err());
        assert!(born
            .apply_move(&TreeMove::Birth {
                leaf: NodePath::ROOT,
                rule: SplitRule::new(0, 0.5),
                left_value: 0.0,
                right_value: 0.0
            })
            .is_err());
    }
}
