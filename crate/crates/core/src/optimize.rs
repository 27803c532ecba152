//! Parameter optimization for each scheme family at a given prevalence.
//!
//! Integer parameters are scanned; the real `sigma` of the constant
//! tests-per-item family is bracketed on a grid and refined by golden-section
//! search. Individual testing (aspect ratio 1) is always a candidate.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::theory::{self, bernoulli_optimum, ctpi_et, dc_et, dorfman_et};

/// Candidates whose aspect ratios differ by at most this are treated as tied.
pub const TIE_TOLERANCE: f64 = 1e-12;

const SIGMA_GRID_POINTS: usize = 1024;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Dorfman,
    Bernoulli,
    Ctpi,
    DoublyConstant,
}

impl Family {
    pub const ALL: [Family; 4] = [Family::Dorfman, Family::Bernoulli, Family::Ctpi, Family::DoublyConstant];

    pub fn label(&self) -> &'static str {
        match self {
            Family::Dorfman => "dorfman",
            Family::Bernoulli => "bernoulli",
            Family::Ctpi => "ctpi",
            Family::DoublyConstant => "dc",
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "dorfman" => Ok(Family::Dorfman),
            "bernoulli" => Ok(Family::Bernoulli),
            "ctpi" => Ok(Family::Ctpi),
            "dc" | "doubly_constant" | "doubly-constant" => Ok(Family::DoublyConstant),
            other => Err(Error::invalid(
                "family",
                format!("unknown family `{other}` (expected dorfman, bernoulli, ctpi or dc)"),
            )),
        }
    }
}

/// The chosen stage-one parameterization. `None` means test everyone individually.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "first_stage", rename_all = "snake_case")]
pub enum FirstStage {
    None,
    Dorfman { s: usize },
    Bernoulli { sigma: f64, t1_frac: f64 },
    Ctpi { r: usize, sigma: f64 },
    DoublyConstant { r: usize, s: usize },
}

impl FirstStage {
    /// Stage-one tests per item.
    pub fn t1_frac(&self) -> f64 {
        match *self {
            FirstStage::None => 0.0,
            FirstStage::Dorfman { s } => 1.0 / s as f64,
            FirstStage::Bernoulli { t1_frac, .. } => t1_frac,
            FirstStage::Ctpi { r, sigma } => r as f64 / sigma,
            FirstStage::DoublyConstant { r, s } => r as f64 / s as f64,
        }
    }

    pub fn is_none(&self) -> bool {
        matches!(self, FirstStage::None)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Optimum {
    pub family: Family,
    pub p: f64,
    pub first_stage: FirstStage,
    pub et_per_item: f64,
    pub rate: f64,
}

/// Search ranges. `None` limits default to `ceil(8/p)` for `s` and `8/p` for `sigma`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchLimits {
    pub r_max: usize,
    pub s_max: Option<usize>,
    pub sigma_max: Option<f64>,
}

impl Default for SearchLimits {
    fn default() -> Self {
        Self { r_max: 20, s_max: None, sigma_max: None }
    }
}

impl SearchLimits {
    fn s_max(&self, p: f64) -> usize {
        self.s_max.unwrap_or_else(|| (8.0 / p).ceil() as usize)
    }

    fn sigma_max(&self, p: f64) -> f64 {
        self.sigma_max.unwrap_or(8.0 / p)
    }
}

/// Golden-section search for the minimum of a unimodal `f` on `[lo, hi]`.
///
/// Returns `(x_min, f_min)`.
pub fn golden_section_min<F>(f: F, mut lo: f64, mut hi: f64, tol: f64) -> (f64, f64)
where
    F: Fn(f64) -> f64,
{
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - inv_phi * (hi - lo);
    let mut x2 = lo + inv_phi * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    while hi - lo > tol * (1.0 + lo.abs() + hi.abs()) {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = f(x2);
        }
    }
    if f1 <= f2 {
        (x1, f1)
    } else {
        (x2, f2)
    }
}

struct Best {
    stage: FirstStage,
    et: f64,
}

impl Best {
    fn individual() -> Self {
        Self { stage: FirstStage::None, et: 1.0 }
    }

    fn offer(&mut self, stage: FirstStage, et: f64) {
        let better = et < self.et - TIE_TOLERANCE
            || ((et - self.et).abs() <= TIE_TOLERANCE && stage.t1_frac() < self.stage.t1_frac());
        if better {
            self.stage = stage;
            self.et = et;
        }
    }
}

/// Minimizes `r/sigma + p + (1-p)(1 - e^{-p sigma})^r` over `sigma in (0, sigma_max]`.
pub fn minimize_ctpi_sigma(r: usize, p: f64, sigma_max: f64) -> Result<(f64, f64)> {
    if sigma_max <= 0.0 {
        return Err(Error::EmptySearchRange(format!("sigma_max = {sigma_max}")));
    }
    let et = |sigma: f64| ctpi_et(r, sigma, p).unwrap_or(f64::INFINITY);
    let h = sigma_max / SIGMA_GRID_POINTS as f64;
    let (k, _) = (1..=SIGMA_GRID_POINTS).map(|k| (k, et(k as f64 * h))).fold((1, f64::INFINITY), |acc, (k, v)| {
        if v < acc.1 {
            (k, v)
        } else {
            acc
        }
    });
    let lo = ((k - 1) as f64 * h).max(h * 1e-6);
    let hi = ((k + 1) as f64 * h).min(sigma_max);
    Ok(golden_section_min(et, lo, hi, 1e-12))
}

/// Minimizes the family's aspect ratio at prevalence `p`.
pub fn optimize_scheme(family: Family, p: f64, limits: &SearchLimits) -> Result<Optimum> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::invalid("p", format!("must lie in (0, 1), got {p}")));
    }
    let mut best = Best::individual();
    match family {
        Family::Dorfman => {
            let s_max = limits.s_max(p);
            if s_max < 2 {
                return Err(Error::EmptySearchRange(format!("s in [2, {s_max}]")));
            }
            for s in 2..=s_max {
                best.offer(FirstStage::Dorfman { s }, dorfman_et(s, p)?);
            }
        }
        Family::Bernoulli => {
            let opt = bernoulli_optimum(p)?;
            if opt.has_first_stage() {
                best.offer(FirstStage::Bernoulli { sigma: opt.sigma, t1_frac: opt.t1_frac }, opt.et_per_item);
            }
        }
        Family::Ctpi => {
            if limits.r_max == 0 {
                return Err(Error::EmptySearchRange("r in [1, 0]".into()));
            }
            let sigma_max = limits.sigma_max(p);
            for r in 1..=limits.r_max {
                let (sigma, et) = minimize_ctpi_sigma(r, p, sigma_max)?;
                best.offer(FirstStage::Ctpi { r, sigma }, et);
            }
        }
        Family::DoublyConstant => {
            let s_max = limits.s_max(p);
            if limits.r_max == 0 || s_max < 2 {
                return Err(Error::EmptySearchRange(format!("r in [1, {}], s in [2, {s_max}]", limits.r_max)));
            }
            for r in 1..=limits.r_max {
                for s in 2..=s_max {
                    best.offer(FirstStage::DoublyConstant { r, s }, dc_et(r, s, p)?);
                }
            }
        }
    }
    Ok(Optimum { family, p, first_stage: best.stage, et_per_item: best.et, rate: theory::rate(p, best.et)? })
}
