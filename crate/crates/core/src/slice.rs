//! Univariate slice sampling with stepping out and shrinkage.

use rand::Rng;

/// Bound on shrinkage proposals; the bracket collapses onto the current point
/// long before this in floating point.
const MAX_SHRINK: usize = 2_000;

#[derive(Clone, Copy, Debug)]
pub struct SliceSettings {
    pub width: f64,
    pub max_steps: usize,
}

impl Default for SliceSettings {
    fn default() -> Self {
        SliceSettings {
            width: 1.0,
            max_steps: 50,
        }
    }
}

fn clean(v: f64) -> f64 {
    if v.is_nan() {
        f64::NEG_INFINITY
    } else {
        v
    }
}

/// One slice-sampling transition from `x0` targeting `exp(log_target)`.
///
/// `log_x0` is `log_target(x0)` when the caller already has it. Returns the new
/// point and its log-target value.
pub fn slice_step_out<F, R>(
    x0: f64,
    log_x0: Option<f64>,
    mut log_target: F,
    settings: SliceSettings,
    rng: &mut R,
) -> (f64, f64)
where
    F: FnMut(f64) -> f64,
    R: Rng + ?Sized,
{
    let w = if settings.width > 0.0 && settings.width.is_finite() {
        settings.width
    } else {
        1.0
    };
    let mut f = |x: f64| clean(log_target(x));
    let fx0 = log_x0.map(clean).unwrap_or_else(|| f(x0));
    let level = fx0 + rng.random::<f64>().ln();

    let mut lo = x0 - w * rng.random::<f64>();
    let mut hi = lo + w;
    let m = settings.max_steps.max(1);
    let mut j = (m as f64 * rng.random::<f64>()).floor() as usize;
    let mut k = m - 1 - j;
    while j > 0 && level < f(lo) {
        lo -= w;
        j -= 1;
    }
    while k > 0 && level < f(hi) {
        hi += w;
        k -= 1;
    }

    for _ in 0..MAX_SHRINK {
        let x1 = lo + (hi - lo) * rng.random::<f64>();
        let fx1 = f(x1);
        if level < fx1 {
            return (x1, fx1);
        }
        if x1 < x0 {
            lo = x1;
        } else {
            hi = x1;
        }
    }
    (x0, fx0)
}

/// Slice step for a positive parameter, performed on its logarithm.
///
/// `log_target` is the log density of the parameter itself; the Jacobian of
/// the log transform is added here.
pub fn slice_positive<F, R>(value: f64, mut log_target: F, settings: SliceSettings, rng: &mut R) -> f64
where
    F: FnMut(f64) -> f64,
    R: Rng + ?Sized,
{
    let (theta, _) = slice_step_out(value.ln(), None, |t| log_target(t.exp()) + t, settings, rng);
    theta.exp()
}

/// Log density (up to a constant) of a half-Cauchy with the given scale.
pub fn log_half_cauchy(x: f64, scale: f64) -> f64 {
    if x <= 0.0 {
        return f64::NEG_INFINITY;
    }
    let r = x / scale;
    -(r * r).ln_1p()
}
