//! Forest-level hyperparameter updates.

use rand::{Rng, RngCore};
use rand_distr::{Distribution, Gamma};

use crate::slice::{log_half_cauchy, slice_positive, SliceSettings};

/// One slice step for the leaf scale under a half-Cauchy prior with scale `c`.
pub fn update_sigma_mu(sigma_mu: f64, leaf_values: &[f64], c: f64, rng: &mut dyn RngCore) -> f64 {
    let n = leaf_values.len() as f64;
    let ss: f64 = leaf_values.iter().map(|m| m * m).sum();
    slice_positive(
        sigma_mu,
        |s| -n * s.ln() - ss / (2.0 * s * s) + log_half_cauchy(s, c),
        SliceSettings::default(),
        rng,
    )
}

/// Draws `s ~ Dirichlet(xi/P + counts)`.
///
/// Gamma variates are drawn on the log scale (`log G(a+1) + log U / a`) so
/// that the tiny shapes typical of sparse priors do not underflow.
pub fn update_split_probs(counts: &[usize], xi: f64, rng: &mut dyn RngCore) -> Vec<f64> {
    let p = counts.len();
    let base = xi / p as f64;
    let logs: Vec<f64> = counts
        .iter()
        .map(|&c| {
            let a = base + c as f64;
            let g: f64 = Gamma::new(a + 1.0, 1.0).expect("positive shape").sample(rng);
            let u: f64 = rng.random::<f64>();
            g.ln() + u.ln() / a
        })
        .collect();
    let max = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let w: Vec<f64> = logs.iter().map(|l| (l - max).exp()).collect();
    let total: f64 = w.iter().sum();
    let mut s: Vec<f64> = w.iter().map(|v| v / total).collect();
    // Put any rounding residue on the largest weight so the sum is exactly 1.
    let residue = 1.0 - s.iter().sum::<f64>();
    let jmax = s.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).map_or(0, |(j, _)| j);
    s[jmax] += residue;
    s
}
