//! Large-`n` expected test counts for conservative two-stage schemes.
//!
//! Every formula returns the expected number of tests divided by `n`
//! (the aspect ratio). Multiply by `n` for a test count.

use std::f64::consts::{E, LN_2};

use crate::design::SchemeConfig;
use crate::error::{Error, Result};

/// Prevalence above which individual testing is optimal: `(3 - sqrt 5) / 2`.
pub fn ungar_threshold() -> f64 {
    (3.0 - 5f64.sqrt()) / 2.0
}

/// Prevalence above which the optimal Bernoulli first stage is empty: `1 / (e + 1)`.
pub fn bernoulli_threshold() -> f64 {
    1.0 / (E + 1.0)
}

fn check_prob(name: &'static str, p: f64) -> Result<()> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(Error::invalid(name, format!("must lie in [0, 1], got {p}")))
    }
}

fn check_open_prob(p: f64) -> Result<()> {
    if p > 0.0 && p < 1.0 {
        Ok(())
    } else {
        Err(Error::invalid("p", format!("must lie in (0, 1), got {p}")))
    }
}

fn check_count(name: &'static str, v: usize) -> Result<()> {
    if v == 0 {
        Err(Error::invalid(name, "must be at least 1"))
    } else {
        Ok(())
    }
}

/// Binary entropy in bits, with `0 log 0 = 0`.
pub fn entropy(p: f64) -> Result<f64> {
    check_prob("p", p)?;
    let term = |x: f64| if x > 0.0 { -x * x.log2() } else { 0.0 };
    Ok(term(p) + term(1.0 - p))
}

/// Bits learned per test: `H(p) / et_per_item`.
pub fn rate(p: f64, et_per_item: f64) -> Result<f64> {
    if et_per_item <= 0.0 || et_per_item.is_nan() {
        return Err(Error::invalid("et_per_item", format!("must be positive, got {et_per_item}")));
    }
    Ok(entropy(p)? / et_per_item)
}

/// Dorfman pools of size `s`: `1/s + 1 - (1-p)^s`.
pub fn dorfman_et(s: usize, p: f64) -> Result<f64> {
    check_count("s", s)?;
    check_prob("p", p)?;
    Ok(1.0 / s as f64 + 1.0 - (1.0 - p).powi(s as i32))
}

/// Bernoulli first stage with `t1_frac = T1/n` tests and `sigma` items per test on average.
pub fn bernoulli_et(t1_frac: f64, sigma: f64, p: f64) -> Result<f64> {
    if t1_frac < 0.0 {
        return Err(Error::invalid("t1_frac", format!("must be non-negative, got {t1_frac}")));
    }
    if sigma <= 0.0 {
        return Err(Error::invalid("sigma", format!("must be positive, got {sigma}")));
    }
    check_prob("p", p)?;
    let exponent = -sigma * (-sigma * p).exp() * t1_frac;
    Ok(t1_frac + p + (1.0 - p) * exponent.exp())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BernoulliOptimum {
    pub sigma: f64,
    pub t1_frac: f64,
    pub et_per_item: f64,
}

impl BernoulliOptimum {
    /// Inclusion probability `sigma / n` for a population of `n`.
    pub fn pi(&self, n: usize) -> f64 {
        self.sigma / n as f64
    }

    pub fn has_first_stage(&self) -> bool {
        self.t1_frac > 0.0
    }
}

/// Closed-form Bernoulli optimum: `sigma = 1/p`,
/// `T1/n = e p ln((1-p) / (e p))`, clamped to no first stage for `p >= 1/(e+1)`.
pub fn bernoulli_optimum(p: f64) -> Result<BernoulliOptimum> {
    check_open_prob(p)?;
    let sigma = 1.0 / p;
    if p >= bernoulli_threshold() {
        return Ok(BernoulliOptimum { sigma, t1_frac: 0.0, et_per_item: 1.0 });
    }
    let t1_frac = (E * p * ((1.0 - p) / (E * p)).ln()).max(0.0);
    let et_per_item = (p * (E * ((1.0 - p) / p).ln() + 1.0)).min(1.0);
    Ok(BernoulliOptimum { sigma, t1_frac, et_per_item })
}

/// Constant `r` tests per item, `sigma` items per test on average.
pub fn ctpi_et(r: usize, sigma: f64, p: f64) -> Result<f64> {
    check_count("r", r)?;
    if sigma <= 0.0 {
        return Err(Error::invalid("sigma", format!("must be positive, got {sigma}")));
    }
    check_prob("p", p)?;
    let all_positive = (1.0 - (-p * sigma).exp()).powi(r as i32);
    Ok(r as f64 / sigma + p + (1.0 - p) * all_positive)
}

/// Doubly constant: `r` tests per item, `s` items per test.
pub fn dc_et(r: usize, s: usize, p: f64) -> Result<f64> {
    check_count("r", r)?;
    check_count("s", s)?;
    check_prob("p", p)?;
    let q = 1.0 - p;
    let all_positive = (1.0 - q.powi(s as i32 - 1)).powi(r as i32);
    Ok(r as f64 / s as f64 + p + q * all_positive)
}

/// Reported small-`p` cost of the multi-stage hypercube scheme: `e p ln(1/p)`.
pub fn mutesa_asymptotic_et(p: f64) -> Result<f64> {
    check_open_prob(p)?;
    Ok(E * p * (1.0 / p).ln())
}

/// Limiting rate of the hypercube scheme, `1 / (e ln 2)`.
pub fn mutesa_rate() -> f64 {
    1.0 / (E * LN_2)
}

/// Asymptotic aspect ratio of a concrete scheme on `n` items, where a
/// closed form exists. The hypercube family has none.
pub fn scheme_et(scheme: &SchemeConfig, n: usize, p: f64) -> Result<Option<f64>> {
    let et = match *scheme {
        SchemeConfig::Individual => {
            check_prob("p", p)?;
            1.0
        }
        SchemeConfig::Dorfman { s } => dorfman_et(s, p)?,
        SchemeConfig::Bernoulli { pi, t1 } => bernoulli_et(t1 as f64 / n as f64, pi * n as f64, p)?,
        SchemeConfig::Ctpi { r, t1 } => {
            check_count("t1", t1)?;
            ctpi_et(r, (n * r) as f64 / t1 as f64, p)?
        }
        SchemeConfig::DoublyConstant { r, s } => dc_et(r, s, p)?,
        SchemeConfig::Hypercube { .. } => return Ok(None),
    };
    Ok(Some(et))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    const P: f64 = 0.027;

    #[test]
    fn entropy_values() {
        assert_eq!(entropy(0.5).unwrap(), 1.0);
        assert_eq!(entropy(0.0).unwrap(), 0.0);
        assert_eq!(entropy(1.0).unwrap(), 0.0);
        // 30-digit reference value
        assert_abs_diff_eq!(entropy(P).unwrap(), 0.179_116_319_181_651_87, epsilon = 1e-15);
        assert!(entropy(-0.1).is_err());
        assert!(entropy(1.1).is_err());
    }

    #[test]
    fn entropy_matches_natural_log_route() {
        for k in 1..100 {
            let p = k as f64 / 100.0;
            let nats = -p * p.ln() - (1.0 - p) * (1.0 - p).ln();
            assert_abs_diff_eq!(entropy(p).unwrap(), nats / LN_2, epsilon = 1e-14);
        }
    }

    #[test]
    fn dorfman_values() {
        for p in [0.0, 0.1, 0.5] {
            assert_abs_diff_eq!(dorfman_et(1, p).unwrap(), 1.0 + p, epsilon = 1e-15);
        }
        assert_abs_diff_eq!(dorfman_et(7, P).unwrap() * 1000.0, 317.2, epsilon = 0.05);
        assert_eq!(dorfman_et(2, 0.5).unwrap(), 1.25);
        assert!(dorfman_et(0, 0.1).is_err());
    }

    #[test]
    fn bernoulli_values() {
        assert_abs_diff_eq!(bernoulli_et(0.19, 37.0, P).unwrap(), 0.2901, epsilon = 5e-5);
        assert_eq!(bernoulli_et(0.0, 10.0, 0.3).unwrap(), 1.0);
        // sigma = 1/p maximizes sigma e^{-sigma p}, so it minimizes et for fixed t1.
        let best = bernoulli_et(0.19, 1.0 / P, P).unwrap();
        for sigma in [20.0, 30.0, 35.0, 40.0, 50.0] {
            assert!(bernoulli_et(0.19, sigma, P).unwrap() >= best);
        }
        assert!(bernoulli_et(-0.1, 1.0, P).is_err());
        assert!(bernoulli_et(0.1, 0.0, P).is_err());
    }

    #[test]
    fn bernoulli_optimum_values() {
        let opt = bernoulli_optimum(P).unwrap();
        assert_abs_diff_eq!(opt.sigma, 37.037, epsilon = 1e-3);
        assert_abs_diff_eq!(opt.t1_frac, 0.1897, epsilon = 5e-5);
        assert_eq!((opt.t1_frac * 1000.0).round(), 190.0);
        assert_abs_diff_eq!(opt.et_per_item, 0.2901, epsilon = 5e-5);
        // closed form agrees with the formula at the optimum
        let direct = bernoulli_et(opt.t1_frac, opt.sigma, P).unwrap();
        assert_abs_diff_eq!(direct, opt.et_per_item, epsilon = 1e-12);

        let high = bernoulli_optimum(0.3).unwrap();
        assert_eq!(high.t1_frac, 0.0);
        assert_eq!(high.et_per_item, 1.0);
        assert!(!high.has_first_stage());

        let edge = bernoulli_optimum(bernoulli_threshold()).unwrap();
        assert_eq!(edge.t1_frac, 0.0);
        assert_abs_diff_eq!(bernoulli_threshold(), 0.269, epsilon = 5e-4);
    }

    #[test]
    fn ctpi_values() {
        assert_abs_diff_eq!(ctpi_et(4, 25.0, P).unwrap() * 1000.0, 243.5, epsilon = 0.05);
        assert_eq!(ctpi_et(3, 12.0, 0.0).unwrap(), 0.25);
        let (sigma, p) = (9.0f64, 0.08f64);
        let expect = 1.0 / sigma + p + (1.0 - p) * (1.0 - (-p * sigma).exp());
        assert_abs_diff_eq!(ctpi_et(1, sigma, p).unwrap(), expect, epsilon = 1e-15);
        assert!(ctpi_et(0, 1.0, p).is_err());
    }

    #[test]
    fn dc_values() {
        assert_abs_diff_eq!(dc_et(4, 25, P).unwrap() * 1000.0, 239.3, epsilon = 0.05);
        for s in [1, 2, 7, 40] {
            assert_abs_diff_eq!(dc_et(1, s, 0.13).unwrap(), dorfman_et(s, 0.13).unwrap(), epsilon = 1e-14);
        }
        assert_abs_diff_eq!(dc_et(3, 8, 1.0).unwrap(), 3.0 / 8.0 + 1.0, epsilon = 1e-15);
        assert!(dc_et(0, 3, 0.1).is_err());
    }

    #[test]
    fn mutesa_values() {
        assert_abs_diff_eq!(mutesa_asymptotic_et((-1f64).exp()).unwrap(), 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(mutesa_asymptotic_et(0.01).unwrap(), 0.12518, epsilon = 5e-6);
        assert_abs_diff_eq!(mutesa_rate(), 0.531, epsilon = 5e-4);
    }

    #[test]
    fn rate_values() {
        assert_eq!(rate(0.2, 1.0).unwrap(), entropy(0.2).unwrap());
        assert_abs_diff_eq!(rate(P, 0.2393).unwrap(), 0.748_501_124_871_09, epsilon = 1e-12);
        assert_abs_diff_eq!(rate(P, 0.2901).unwrap(), 0.617_429_573_187_36, epsilon = 1e-12);
        assert!(rate(P, 0.0).is_err());
    }

    #[test]
    fn scheme_et_table_row_values() {
        let n = 1000;
        let rows = [
            (SchemeConfig::Individual, 1000.0),
            (SchemeConfig::Dorfman { s: 7 }, 317.2),
            (SchemeConfig::Bernoulli { pi: 1.0 / 27.0, t1: 190 }, 290.1),
            (SchemeConfig::Ctpi { r: 4, t1: 160 }, 243.5),
            (SchemeConfig::DoublyConstant { r: 4, s: 25 }, 239.3),
        ];
        for (scheme, expect) in rows {
            let et = scheme_et(&scheme, n, P).unwrap().unwrap();
            assert_abs_diff_eq!(et * n as f64, expect, epsilon = 0.05);
        }
        assert_eq!(scheme_et(&SchemeConfig::Hypercube { a: 3, r2: 2 }, 9, P).unwrap(), None);
    }

    #[test]
    fn ungar_threshold_value() {
        assert_abs_diff_eq!(ungar_threshold(), 0.38197, epsilon = 1e-5);
    }
}
