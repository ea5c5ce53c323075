//! Special functions used by the likelihood families.

use std::f64::consts::PI;

use crate::error::{Error, Result};

const LANCZOS_G: f64 = 7.0;
const LANCZOS_COEF: [f64; 9] = [
    0.999_999_999_999_809_93,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_13,
    -176.615_029_162_140_59,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_571_6e-6,
    1.505_632_735_149_311_6e-7,
];

/// Below this the asymptotic expansions are not used directly.
const ASYMPTOTIC_FROM: f64 = 10.0;
const MAX_ITER: usize = 10_000;
const FPMIN: f64 = 1e-300;

fn require_positive(name: &str, x: f64) -> Result<()> {
    if x > 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(Error::Numerical(format!("{name} requires a positive finite argument, got {x}")))
    }
}

/// `ln Γ(x)` for `x > 0` (Lanczos, g = 7).
pub fn log_gamma_fn(x: f64) -> Result<f64> {
    require_positive("log_gamma_fn", x)?;
    Ok(ln_gamma_unchecked(x))
}

pub(crate) fn ln_gamma_unchecked(x: f64) -> f64 {
    if x < 0.5 {
        // Reflection keeps the approximation in its accurate range.
        return (PI / (PI * x).sin()).ln() - ln_gamma_unchecked(1.0 - x);
    }
    let x = x - 1.0;
    let t = x + LANCZOS_G + 0.5;
    let series = LANCZOS_COEF[1..]
        .iter()
        .enumerate()
        .fold(LANCZOS_COEF[0], |acc, (i, c)| acc + c / (x + (i + 1) as f64));
    0.5 * (2.0 * PI).ln() + (x + 0.5) * t.ln() - t + series.ln()
}

/// `ψ(x) = d/dx ln Γ(x)`.
pub fn digamma(x: f64) -> Result<f64> {
    require_positive("digamma", x)?;
    let (mut x, mut acc) = (x, 0.0);
    while x < ASYMPTOTIC_FROM {
        acc -= 1.0 / x;
        x += 1.0;
    }
    let f = 1.0 / (x * x);
    let tail = f * (1.0 / 12.0 - f * (1.0 / 120.0 - f * (1.0 / 252.0 - f * (1.0 / 240.0 - f / 132.0))));
    Ok(acc + x.ln() - 0.5 / x - tail)
}

/// `ψ'(x)`.
pub fn trigamma(x: f64) -> Result<f64> {
    require_positive("trigamma", x)?;
    let (mut x, mut acc) = (x, 0.0);
    while x < ASYMPTOTIC_FROM {
        acc += 1.0 / (x * x);
        x += 1.0;
    }
    let f = 1.0 / (x * x);
    let tail = (1.0 / 6.0 - f * (1.0 / 30.0 - f * (1.0 / 42.0 - f * (1.0 / 30.0 - 5.0 * f / 66.0)))) / (x * x * x);
    Ok(acc + 1.0 / x + 0.5 * f + tail)
}

/// Regularized upper incomplete gamma `Q(a, x) = Γ(a, x) / Γ(a)`.
pub fn reg_upper_inc_gamma(a: f64, x: f64) -> Result<f64> {
    ln_reg_upper_inc_gamma(a, x).map(f64::exp)
}

/// `ln Q(a, x)`, accurate far into the upper tail where `Q` underflows.
///
/// Series for `P = 1 - Q` when `x < a + 1`, Lentz continued fraction
/// otherwise.
pub fn ln_reg_upper_inc_gamma(a: f64, x: f64) -> Result<f64> {
    require_positive("reg_upper_inc_gamma (shape)", a)?;
    if x.is_nan() || x < 0.0 {
        return Err(Error::Numerical(format!("reg_upper_inc_gamma requires x >= 0, got {x}")));
    }
    if x == 0.0 {
        return Ok(0.0);
    }
    if x.is_infinite() {
        return Ok(f64::NEG_INFINITY);
    }
    let ln_prefactor = a * x.ln() - x - ln_gamma_unchecked(a);
    if x < a + 1.0 {
        let (mut ap, mut del) = (a, 1.0 / a);
        let mut sum = del;
        let mut converged = false;
        for _ in 0..MAX_ITER {
            ap += 1.0;
            del *= x / ap;
            sum += del;
            if del.abs() < sum.abs() * 1e-16 {
                converged = true;
                break;
            }
        }
        if !converged {
            return Err(Error::Numerical(format!("incomplete gamma series did not converge (a={a}, x={x})")));
        }
        let p = (sum.ln() + ln_prefactor).exp().min(1.0);
        Ok((-p).ln_1p())
    } else {
        let mut b = x + 1.0 - a;
        let mut c = 1.0 / FPMIN;
        let mut d = 1.0 / b;
        let mut h = d;
        for i in 1..MAX_ITER {
            let an = -(i as f64) * (i as f64 - a);
            b += 2.0;
            d = an * d + b;
            if d.abs() < FPMIN {
                d = FPMIN;
            }
            c = b + an / c;
            if c.abs() < FPMIN {
                c = FPMIN;
            }
            d = 1.0 / d;
            let del = d * c;
            h *= del;
            if (del - 1.0).abs() < 1e-16 {
                return Ok(ln_prefactor + h.ln());
            }
        }
        Err(Error::Numerical(format!(
            "incomplete gamma continued fraction did not converge (a={a}, x={x})"
        )))
    }
}

/// Logistic function `s(x) = 1 / (1 + e^-x)`.
pub fn logistic(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// `ln(1 + e^x)` without overflow.
pub fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

/// `ln s(x)`.
pub fn log_logistic(x: f64) -> f64 {
    -softplus(-x)
}
