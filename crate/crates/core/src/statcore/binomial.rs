use std::f64::consts::LN_10;

use super::special::ln_beta_inc;
use crate::error::{Error, Result};

/// `log10 P(X ≥ k)` for `X ~ Binomial(n, p)`, with `n` and `k` allowed to be
/// real: the tail is the regularized incomplete beta `I_p(k, n − k + 1)`.
pub fn log10_binomial_tail(n: f64, k: f64, p: f64) -> Result<f64> {
    if !(n >= 0.0) || !n.is_finite() {
        return Err(Error::invalid(format!(
            "trial count must be non-negative, got {n}"
        )));
    }
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::invalid(format!(
            "success probability must lie in (0, 1), got {p}"
        )));
    }
    if k.is_nan() || k > n {
        return Err(Error::invalid(format!(
            "success count {k} exceeds trial count {n}"
        )));
    }
    if k <= 0.0 {
        return Ok(0.0);
    }
    Ok(ln_beta_inc(k, n - k + 1.0, p) / LN_10)
}

pub fn binomial_tail(n: f64, k: f64, p: f64) -> Result<f64> {
    Ok(10f64.powf(log10_binomial_tail(n, k, p)?))
}
