//! Prevalence grids and the curve tables behind the aspect-ratio and rate plots.

use rayon::prelude::*;

use crate::bounds::{conservative_lower_bound, BoundReport};
use crate::error::{Error, Result};
use crate::optimize::{optimize_scheme, Family, Optimum, SearchLimits};
use crate::theory::entropy;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepSpec {
    pub p_min: f64,
    pub p_max: f64,
    pub steps: usize,
    pub log: bool,
}

impl SweepSpec {
    pub fn single(p: f64) -> Self {
        Self { p_min: p, p_max: p, steps: 1, log: false }
    }

    /// 200 log-spaced points on `[1e-3, 0.5]`.
    pub fn default_figure() -> Self {
        Self { p_min: 1e-3, p_max: 0.5, steps: 200, log: true }
    }

    /// Narrower range for the zoomed rate panel.
    pub fn default_zoom() -> Self {
        Self { p_min: 5e-3, p_max: 0.1, steps: 200, log: true }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.p_min > 0.0 && self.p_min <= self.p_max && self.p_max < 1.0) {
            return Err(Error::invalid(
                "p_min",
                format!("need 0 < p_min <= p_max < 1, got [{}, {}]", self.p_min, self.p_max),
            ));
        }
        if self.steps == 0 {
            return Err(Error::invalid("steps", "need at least one point"));
        }
        Ok(())
    }

    pub fn grid(&self) -> Result<Vec<f64>> {
        self.validate()?;
        if self.steps == 1 {
            return Ok(vec![self.p_min]);
        }
        let last = (self.steps - 1) as f64;
        Ok((0..self.steps)
            .map(|i| {
                let frac = i as f64 / last;
                if self.log {
                    self.p_min * (self.p_max / self.p_min).powf(frac)
                } else {
                    self.p_min + (self.p_max - self.p_min) * frac
                }
            })
            .collect())
    }
}

/// Optimized schemes and lower bounds at one prevalence.
#[derive(Debug, Clone, PartialEq)]
pub struct CurvePoint {
    pub p: f64,
    pub entropy: f64,
    pub optima: Vec<Optimum>,
    pub bounds: BoundReport,
}

impl CurvePoint {
    pub fn optimum(&self, family: Family) -> &Optimum {
        self.optima.iter().find(|o| o.family == family).expect("every family is optimized")
    }
}

pub fn curve_point(p: f64, limits: &SearchLimits) -> Result<CurvePoint> {
    let optima = Family::ALL.iter().map(|&f| optimize_scheme(f, p, limits)).collect::<Result<Vec<_>>>()?;
    Ok(CurvePoint { p, entropy: entropy(p)?, optima, bounds: conservative_lower_bound(p)? })
}

/// Evaluates every grid point, in parallel, returned in grid order.
pub fn curve_points(grid: &[f64], limits: &SearchLimits) -> Result<Vec<CurvePoint>> {
    grid.par_iter().map(|&p| curve_point(p, limits)).collect()
}

/// One `(p, series, value)` entry of a long-format panel table.
#[derive(Debug, Clone, PartialEq)]
pub struct PanelRow {
    pub p: f64,
    pub series: &'static str,
    pub value: f64,
}

fn sorted(mut rows: Vec<PanelRow>) -> Vec<PanelRow> {
    rows.sort_by(|a, b| a.p.total_cmp(&b.p).then_with(|| a.series.cmp(b.series)));
    rows
}

fn family_rows<'a>(point: &'a CurvePoint, value: impl Fn(&Optimum) -> f64 + 'a) -> impl Iterator<Item = PanelRow> + 'a {
    point.optima.iter().map(move |o| PanelRow { p: point.p, series: o.family.label(), value: value(o) })
}

/// Expected tests per item for each optimized family, individual testing,
/// the counting bound and the best conservative lower bound.
pub fn aspect_ratio_panel(points: &[CurvePoint]) -> Vec<PanelRow> {
    let rows = points.iter().flat_map(|pt| {
        family_rows(pt, |o| o.et_per_item).chain([
            PanelRow { p: pt.p, series: "individual", value: 1.0 },
            PanelRow { p: pt.p, series: "counting", value: pt.entropy },
            PanelRow { p: pt.p, series: "lower_bound", value: pt.bounds.best },
        ])
    });
    sorted(rows.collect())
}

/// Bits per test for the same series; the lower bound becomes a rate ceiling.
pub fn rate_panel(points: &[CurvePoint]) -> Vec<PanelRow> {
    let rows = points.iter().flat_map(|pt| {
        family_rows(pt, |o| o.rate).chain([
            PanelRow { p: pt.p, series: "individual", value: pt.entropy },
            PanelRow { p: pt.p, series: "counting", value: 1.0 },
            PanelRow { p: pt.p, series: "lower_bound", value: pt.bounds.rate_ceiling },
        ])
    });
    sorted(rows.collect())
}

/// Doubly constant rate against the rate ceiling.
pub fn rate_zoom_panel(points: &[CurvePoint]) -> Vec<PanelRow> {
    let rows = points.iter().flat_map(|pt| {
        [
            PanelRow {
                p: pt.p,
                series: Family::DoublyConstant.label(),
                value: pt.optimum(Family::DoublyConstant).rate,
            },
            PanelRow { p: pt.p, series: "lower_bound", value: pt.bounds.rate_ceiling },
        ]
    });
    sorted(rows.collect())
}
