//! Lower bounds on the expected number of tests, per item.
//!
//! Two-stage schemes need at least `(ln f + 1) / f` tests per item, and
//! conservative ones need the maximum of the counting bound `H(p)`, the
//! Ungar bound (individual testing is optimal for `p >= (3 - sqrt 5)/2`),
//! and two bounds driven by
//!
//! ```text
//! f(p) = max_{w >= 2} -w ln(1 - q^(w-1))
//! g(p) = max_{w >= 2} -w ln(1 - q^w)
//! ```
//!
//! with `q = 1 - p`. Each bound minimizes `T1 + n c exp(-k T1 / n)` over
//! `T1 >= 0`; when the interior optimum would be negative the bound is
//! evaluated at `T1 = 0`, giving 1 test per item.

use std::f64::consts::LN_2;
use std::fmt;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::theory::{entropy, ungar_threshold};

/// Best integer `w` and the maximized value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WMax {
    pub value: f64,
    pub argmax_w: usize,
}

fn check_open(p: f64) -> Result<()> {
    if p > 0.0 && p < 1.0 {
        Ok(())
    } else {
        Err(Error::invalid("p", format!("must lie in (0, 1), got {p}")))
    }
}

/// Upper end of the `w` scan: `ceil(6 ln 2 / -ln(1-p)) + 4`.
pub fn w_scan_limit(p: f64) -> usize {
    (6.0 * LN_2 / -(-p).ln_1p()).ceil() as usize + 4
}

/// Maximizes `-w ln(1 - q^(w - shift))` over `w in [2, w_max]`.
///
/// `shift = 1` gives `f`, `shift = 0` gives `g`.
pub fn maximize_over_w(p: f64, shift: usize, w_max: usize) -> Result<WMax> {
    check_open(p)?;
    let ln_q = (-p).ln_1p();
    let mut best = WMax { value: f64::NEG_INFINITY, argmax_w: 2 };
    for w in 2..=w_max.max(2) {
        let q_pow = ((w - shift) as f64 * ln_q).exp();
        let value = -(w as f64) * (-q_pow).ln_1p();
        if value > best.value {
            best = WMax { value, argmax_w: w };
        }
    }
    Ok(best)
}

pub fn f_of_p(p: f64) -> Result<WMax> {
    check_open(p)?;
    maximize_over_w(p, 1, w_scan_limit(p))
}

pub fn g_of_p(p: f64) -> Result<WMax> {
    check_open(p)?;
    maximize_over_w(p, 0, w_scan_limit(p))
}

/// `min_{x >= 0} x + exp(-k x) / k`-type optimum, `(ln k + 1) / k`, or 1 when `k <= 1`.
///
/// Returns `(value, optimal T1/n)`.
fn clamped_optimum(k: f64) -> (f64, f64) {
    if k > 1.0 {
        ((k.ln() + 1.0) / k, k.ln() / k)
    } else {
        (1.0, 0.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoStageBound {
    pub et_per_item: f64,
    pub t1_frac: f64,
    pub f: WMax,
}

/// Lower bound for any two-stage scheme (conservative or not).
pub fn two_stage_lower_bound(p: f64) -> Result<TwoStageBound> {
    let f = f_of_p(p)?;
    let (et_per_item, t1_frac) = clamped_optimum(f.value);
    Ok(TwoStageBound { et_per_item, t1_frac, f })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Binding {
    Counting,
    Ungar,
    Bound2,
    Bound3,
}

impl Binding {
    pub fn label(&self) -> &'static str {
        match self {
            Binding::Counting => "counting",
            Binding::Ungar => "ungar",
            Binding::Bound2 => "bound2",
            Binding::Bound3 => "bound3",
        }
    }
}

impl fmt::Display for Binding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundReport {
    pub p: f64,
    pub counting: f64,
    pub thm1_two_stage: f64,
    /// `Some(1.0)` when `p >= (3 - sqrt 5)/2`, otherwise inactive.
    pub bound1_ungar: Option<f64>,
    pub bound2: f64,
    pub bound3: f64,
    pub best: f64,
    pub binding: Binding,
    pub rate_ceiling: f64,
    pub f: WMax,
    pub g: WMax,
}

/// Bound 2 alone: `(ln g + 1) / g`, clamped.
pub fn bound2(p: f64) -> Result<f64> {
    Ok(clamped_optimum(g_of_p(p)?.value).0)
}

/// Bound 3 alone: `p + (ln((1-p) f) + 1) / f`, clamped.
pub fn bound3(p: f64) -> Result<f64> {
    Ok(bound3_from_f(p, f_of_p(p)?.value))
}

fn bound3_from_f(p: f64, f: f64) -> f64 {
    let k = (1.0 - p) * f;
    if k > 1.0 {
        p + (k.ln() + 1.0) / f
    } else {
        1.0
    }
}

/// All conservative two-stage lower bounds at `p`, and which one binds.
pub fn conservative_lower_bound(p: f64) -> Result<BoundReport> {
    let f = f_of_p(p)?;
    let g = g_of_p(p)?;
    let counting = entropy(p)?;
    let thm1_two_stage = clamped_optimum(f.value).0;
    let bound1_ungar = (p >= ungar_threshold()).then_some(1.0);
    let bound2 = clamped_optimum(g.value).0;
    let bound3 = bound3_from_f(p, f.value);

    // Earlier entries win ties.
    let candidates = [
        (Binding::Ungar, bound1_ungar),
        (Binding::Bound3, Some(bound3)),
        (Binding::Bound2, Some(bound2)),
        (Binding::Counting, Some(counting)),
    ];
    let (binding, best) = candidates
        .iter()
        .filter_map(|&(b, v)| v.map(|v| (b, v)))
        .fold((Binding::Counting, f64::NEG_INFINITY), |acc, (b, v)| if v > acc.1 { (b, v) } else { acc });

    Ok(BoundReport {
        p,
        counting,
        thm1_two_stage,
        bound1_ungar,
        bound2,
        bound3,
        best,
        binding,
        rate_ceiling: counting / best,
        f,
        g,
    })
}

/// Locates the sign change of `bound2 - bound3` on `[lo, hi]` by bisection to `1e-6`.
pub fn bound_crossover(lo: f64, hi: f64) -> Result<f64> {
    if lo.partial_cmp(&hi) != Some(std::cmp::Ordering::Less) {
        return Err(Error::invalid("lo", format!("need lo < hi, got [{lo}, {hi}]")));
    }
    let diff = |p: f64| -> Result<f64> { Ok(bound2(p)? - bound3(p)?) };
    let (mut a, mut b) = (lo, hi);
    let da = diff(a)?;
    let db = diff(b)?;
    if (da * db).partial_cmp(&0.0) != Some(std::cmp::Ordering::Less) {
        return Err(Error::NoSignChange { lo, hi });
    }
    let left_sign = da > 0.0;
    while b - a > 1e-6 {
        let mid = 0.5 * (a + b);
        if (diff(mid)? > 0.0) == left_sign {
            a = mid;
        } else {
            b = mid;
        }
    }
    Ok(0.5 * (a + b))
}
