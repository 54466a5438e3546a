use std::f64::consts::LN_10;

use super::special::ln_gamma_pq;
use crate::error::{Error, Result};

fn check(x: f64, df: f64) -> Result<()> {
    if !(df > 0.0) || !df.is_finite() {
        return Err(Error::invalid(format!(
            "degrees of freedom must be positive, got {df}"
        )));
    }
    if !(x >= 0.0) {
        return Err(Error::invalid(format!(
            "chi-squared argument must be non-negative, got {x}"
        )));
    }
    Ok(())
}

/// CDF of the χ² law with `df` (possibly fractional) degrees of freedom.
pub fn chi2_cdf(x: f64, df: f64) -> Result<f64> {
    check(x, df)?;
    let (ln_p, ln_q) = ln_gamma_pq(df / 2.0, x / 2.0);
    Ok(if ln_p > ln_q {
        -ln_q.exp_m1()
    } else {
        ln_p.exp()
    })
}

/// Upper tail `1 − CDF`, computed directly rather than by subtraction.
pub fn chi2_sf(x: f64, df: f64) -> Result<f64> {
    check(x, df)?;
    let (ln_p, ln_q) = ln_gamma_pq(df / 2.0, x / 2.0);
    Ok(if ln_q > ln_p {
        -ln_p.exp_m1()
    } else {
        ln_q.exp()
    })
}

/// `log10(1 − CDF)`; finite for any finite `x`.
pub fn log10_chi2_sf(x: f64, df: f64) -> Result<f64> {
    check(x, df)?;
    Ok(ln_gamma_pq(df / 2.0, x / 2.0).1 / LN_10)
}

/// The `x` with `chi2_cdf(x, df) = p`.
pub fn chi2_quantile(p: f64, df: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::invalid(format!(
            "quantile level must lie in (0, 1), got {p}"
        )));
    }
    check(0.0, df)?;
    let cdf = |x: f64| {
        let (ln_p, ln_q) = ln_gamma_pq(df / 2.0, x / 2.0);
        if ln_p > ln_q {
            -ln_q.exp_m1()
        } else {
            ln_p.exp()
        }
    };
    let mut lo = 0.0;
    let mut hi = df.max(1.0);
    while cdf(hi) < p {
        lo = hi;
        hi *= 2.0;
    }
    for _ in 0..400 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if cdf(mid) < p {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Frozen 50-digit references: `(x, df, P, log10 Q)`.
    const REFERENCE: &[(f64, f64, f64, f64)] = &[
        (0.5, 1.0, 0.5204998778130465, -0.31921127782572034),
        (3.0, 1.0, 0.9167354833364496, -1.0795400346112236),
        (6.634896601021214, 1.0, 0.99, -1.9999999999999996),
        (1.0, 3.0, 0.1987480430987992, -0.09623089679249551),
        (7.8, 3.0, 0.9496689021401467, -1.2981635963408682),
        (45.0, 45.0, 0.5280410367430595, -0.3260957615478077),
        (80.0, 45.0, 0.9989811409248506, -2.991885881859578),
        (300.0, 45.0, 1.0, -38.668665111299575),
        (0.3, 0.0625, 0.9546353412644284, -1.3432823518387376),
        (2.0, 0.5, 0.9320788679898911, -1.16799508451842),
        (10.0, 2.5, 0.9883919628521234, -1.9352412107450279),
        (5000.0, 5000.0, 0.5026596211076548, -0.3033462791184139),
        (5200.0, 5000.0, 0.9761810019792594, -1.6230765116700283),
        (9800.0, 10000.0, 0.07794495622651391, -0.03524315216378794),
        (10000.0, 10000.0, 0.5018806340338173, -0.3026665733674867),
        (1000000.0, 10000.0, 1.0, -204980.01276036506),
        (2000.0, 45.0, 1.0, -390.1621403470343),
        (100000.0, 3.0, 1.0, -21712.322150758228),
    ];

    #[test]
    fn matches_high_precision_reference() {
        for &(x, df, p, log10_q) in REFERENCE {
            let cdf = chi2_cdf(x, df).unwrap();
            assert!((cdf - p).abs() < 1e-12, "cdf({x}, {df}) = {cdf}, want {p}");
            let lq = log10_chi2_sf(x, df).unwrap();
            assert!(
                (lq - log10_q).abs() < 1e-10 * log10_q.abs().max(1.0),
                "log10 sf({x}, {df}) = {lq}, want {log10_q}"
            );
        }
    }

    #[test]
    fn closed_forms_for_two_degrees() {
        assert_eq!(chi2_cdf(0.0, 7.0).unwrap(), 0.0);
        assert!((chi2_cdf(2.0 * std::f64::consts::LN_2, 2.0).unwrap() - 0.5).abs() < 1e-15);
        assert!((chi2_cdf(4.605170, 2.0).unwrap() - 0.9).abs() < 1e-6);
        assert!((chi2_quantile(0.99, 2.0).unwrap() - 9.210340).abs() < 1e-5);
        assert!((chi2_quantile(0.5, 2.0).unwrap() - 1.386294).abs() < 1e-5);
    }

    #[test]
    fn quantile_roundtrips() {
        for &df in &[0.3, 1.0, 2.0, 3.0, 17.5, 45.0, 300.0] {
            for &p in &[1e-6, 0.01, 0.2, 0.5, 0.9, 0.99, 0.999999] {
                let x = chi2_quantile(p, df).unwrap();
                let back = chi2_cdf(x, df).unwrap();
                assert!((back - p).abs() < 1e-10, "df {df} p {p}: {back}");
            }
        }
    }

    #[test]
    fn monotone_in_x_and_df() {
        for &df in &[0.5, 1.0, 3.0, 45.0] {
            let mut prev = 0.0;
            for i in 0..400 {
                let c = chi2_cdf(i as f64 * 0.25, df).unwrap();
                assert!(c >= prev);
                prev = c;
            }
        }
        for i in 1..80 {
            let x = i as f64 * 0.7;
            let mut prev = 1.0;
            for df in (1..60).map(|d| d as f64 * 0.5) {
                let c = chi2_cdf(x, df).unwrap();
                assert!(c <= prev + 1e-15, "x {x} df {df}");
                prev = c;
            }
        }
    }

    #[test]
    fn rejects_bad_arguments() {
        assert!(chi2_cdf(-1.0, 2.0).is_err());
        assert!(chi2_cdf(1.0, 0.0).is_err());
        assert!(chi2_cdf(1.0, -2.0).is_err());
        assert!(chi2_quantile(0.0, 2.0).is_err());
        assert!(chi2_quantile(1.0, 2.0).is_err());
        assert!(chi2_quantile(f64::NAN, 2.0).is_err());
    }
}
