//! Seeded Monte Carlo harness for two-stage schemes.
//!
//! Every trial draws a fresh defective set and a fresh stage-one design from
//! a seed derived from `(master_seed, trial_index)`, so experiments are
//! reproducible and trials can run in parallel.

use std::io::{self, Write};

use rand::seq::index;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::decode::{run_tests, stage2_count, Mode};
use crate::design::{seeded_rng, SchemeConfig};
use crate::error::{Error, Result};
use crate::format::sig6;
use crate::theory::scheme_et;

/// How the defective set is drawn.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DefectivePrior {
    Iid { p: f64 },
    FixedK { k: usize },
}

impl DefectivePrior {
    pub fn validate(&self, n: usize) -> Result<()> {
        match *self {
            DefectivePrior::Iid { p } if !(0.0..=1.0).contains(&p) => {
                Err(Error::invalid("p", format!("must lie in [0, 1], got {p}")))
            }
            DefectivePrior::FixedK { k } if k > n => {
                Err(Error::invalid("k", format!("{k} defectives exceed {n} items")))
            }
            _ => Ok(()),
        }
    }

    /// Prevalence `p`, or `k / n` for the fixed-k prior.
    pub fn prevalence(&self, n: usize) -> f64 {
        match *self {
            DefectivePrior::Iid { p } => p,
            DefectivePrior::FixedK { k } => k as f64 / n as f64,
        }
    }
}

/// Stable 64-bit mix (SplitMix64 finalizer).
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed for trial `index` of an experiment started from `master_seed`.
pub fn trial_seed(master_seed: u64, index: u64) -> u64 {
    splitmix64(splitmix64(master_seed) ^ index)
}

/// Sorted defective set.
pub fn sample_defectives(prior: &DefectivePrior, n: usize, seed: u64) -> Result<Vec<usize>> {
    prior.validate(n)?;
    let mut rng = seeded_rng(seed);
    let set = match *prior {
        DefectivePrior::Iid { p } => (0..n).filter(|_| rng.random_bool(p)).collect(),
        DefectivePrior::FixedK { k } => {
            let mut v = index::sample(&mut rng, n, k).into_vec();
            v.sort_unstable();
            v
        }
    };
    Ok(set)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrialResult {
    pub t1: usize,
    pub t2: usize,
    pub total: usize,
    pub defective_count: usize,
}

/// One two-stage run: sample defectives, build a design, decode, count.
pub fn run_trial(
    scheme: &SchemeConfig,
    prior: &DefectivePrior,
    n: usize,
    mode: Mode,
    seed: u64,
) -> Result<TrialResult> {
    scheme.validate(n)?;
    let defectives = sample_defectives(prior, n, splitmix64(seed))?;
    let (t1, t2) = match scheme {
        SchemeConfig::Individual => (0, n),
        _ => {
            let design = scheme.generate(n, splitmix64(seed ^ 0x5EED_D351_6E00_0001))?;
            let outcomes = run_tests(&design, &defectives)?;
            (design.t1(), stage2_count(&design, &outcomes, mode)?)
        }
    };
    Ok(TrialResult { t1, t2, total: t1 + t2, defective_count: defectives.len() })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentSummary {
    pub scheme: SchemeConfig,
    pub prior: DefectivePrior,
    pub n: usize,
    pub mode: Mode,
    pub trials: usize,
    /// Stage-one tests (mean over trials; constant for every built-in family).
    pub t1: f64,
    pub mean_total: f64,
    pub decile10: usize,
    pub decile90: usize,
    /// Asymptotic aspect ratio for the scheme, if a closed form exists.
    pub theory_et_per_item: Option<f64>,
    /// Population size the theory column is scaled to.
    pub theory_n: usize,
    pub seed: u64,
}

impl ExperimentSummary {
    /// Theoretical expected total, `theory_n * et_per_item`.
    pub fn theory(&self) -> Option<f64> {
        self.theory_et_per_item.map(|et| et * self.theory_n as f64)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Experiment {
    pub summary: ExperimentSummary,
    pub trials: Vec<TrialResult>,
}

/// Order statistic at 1-based rank `ceil(num/den * M)` of an ascending slice.
pub fn order_statistic(sorted: &[usize], num: usize, den: usize) -> usize {
    let m = sorted.len();
    let rank = (num * m).div_ceil(den).clamp(1, m);
    sorted[rank - 1]
}

/// `(mean_total, mean_t1, decile10, decile90)`. Independent of trial order.
pub fn aggregate(trials: &[TrialResult]) -> (f64, f64, usize, usize) {
    let m = trials.len();
    assert!(m > 0, "aggregate needs at least one trial");
    let sum_total: u64 = trials.iter().map(|t| t.total as u64).sum();
    let sum_t1: u64 = trials.iter().map(|t| t.t1 as u64).sum();
    let mut totals: Vec<usize> = trials.iter().map(|t| t.total).collect();
    totals.sort_unstable();
    (
        sum_total as f64 / m as f64,
        sum_t1 as f64 / m as f64,
        order_statistic(&totals, 1, 10),
        order_statistic(&totals, 9, 10),
    )
}

pub fn run_experiment(
    scheme: &SchemeConfig,
    prior: &DefectivePrior,
    n: usize,
    mode: Mode,
    trials: usize,
    master_seed: u64,
) -> Result<Experiment> {
    if trials == 0 {
        return Err(Error::invalid("trials", "need at least one trial"));
    }
    scheme.validate(n)?;
    prior.validate(n)?;
    let results = (0..trials as u64)
        .into_par_iter()
        .map(|i| run_trial(scheme, prior, n, mode, trial_seed(master_seed, i)))
        .collect::<Result<Vec<_>>>()?;
    let (mean_total, t1, decile10, decile90) = aggregate(&results);
    let theory_et_per_item = scheme_et(scheme, n, prior.prevalence(n))?;
    Ok(Experiment {
        summary: ExperimentSummary {
            scheme: *scheme,
            prior: *prior,
            n,
            mode,
            trials,
            t1,
            mean_total,
            decile10,
            decile90,
            theory_et_per_item,
            theory_n: n,
            seed: master_seed,
        },
        trials: results,
    })
}

pub const TABLE1_PREVALENCE: f64 = 0.027;
pub const TABLE1_TRIALS: usize = 1000;

/// The five `p = 0.027` configurations, with their population sizes.
pub fn table1_schemes() -> [(SchemeConfig, usize); 5] {
    [
        (SchemeConfig::Individual, 1000),
        (SchemeConfig::Dorfman { s: 7 }, 1001),
        (SchemeConfig::Bernoulli { pi: 1.0 / 27.0, t1: 190 }, 1000),
        (SchemeConfig::Ctpi { r: 4, t1: 160 }, 1000),
        (SchemeConfig::DoublyConstant { r: 4, s: 25 }, 1000),
    ]
}

/// Runs the `p = 0.027` comparison with `trials` trials per scheme.
///
/// The theory column is scaled to 1000 items for every row, including the
/// Dorfman row simulated on 1001 items.
pub fn table1_preset_with_trials(master_seed: u64, trials: usize) -> Result<Vec<Experiment>> {
    let prior = DefectivePrior::Iid { p: TABLE1_PREVALENCE };
    table1_schemes()
        .iter()
        .map(|(scheme, n)| {
            let mut exp = run_experiment(scheme, &prior, *n, Mode::Conservative, trials, master_seed)?;
            exp.summary.theory_n = 1000;
            Ok(exp)
        })
        .collect()
}

pub fn table1_preset(master_seed: u64) -> Result<Vec<Experiment>> {
    table1_preset_with_trials(master_seed, TABLE1_TRIALS)
}

/// Exact expected stage-two count for a doubly constant design under the
/// fixed-k prior: `k + (n-k) (1 - C(n-k-1, s-1) / C(n-1, s-1))^r`.
pub fn exact_dc_fixed_k_et2(n: usize, k: usize, r: usize, s: usize) -> Result<f64> {
    if r == 0 || s == 0 || s > n {
        return Err(Error::invalid("s", format!("need r >= 1 and 1 <= s <= n, got r={r}, s={s}, n={n}")));
    }
    if !n.is_multiple_of(s) {
        return Err(Error::NotDivisible { what: "n", numerator: n, divisor: s });
    }
    if k > n {
        return Err(Error::invalid("k", format!("{k} defectives exceed {n} items")));
    }
    if k == n {
        return Ok(n as f64);
    }
    // P(test holding a given nondefective is negative), as a product of ratios.
    let negative: f64 = (0..s - 1)
        .map(|j| {
            let good = (n - k - 1) as f64 - j as f64;
            (good / (n - 1 - j) as f64).max(0.0)
        })
        .product();
    Ok(k as f64 + (n - k) as f64 * (1.0 - negative).powi(r as i32))
}

pub fn write_trials_csv<W: Write>(mut out: W, experiments: &[Experiment]) -> io::Result<()> {
    writeln!(out, "scheme,trial,defectives,t1,t2,total")?;
    for exp in experiments {
        let label = exp.summary.scheme.label();
        for (i, t) in exp.trials.iter().enumerate() {
            writeln!(out, "{label},{i},{},{},{},{}", t.defective_count, t.t1, t.t2, t.total)?;
        }
    }
    Ok(())
}

pub fn write_summary_csv<W: Write>(mut out: W, summaries: &[&ExperimentSummary]) -> io::Result<()> {
    writeln!(out, "scheme,n,p,trials,t1,mean,decile10,decile90,theory")?;
    for s in summaries {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            s.scheme.label(),
            s.n,
            sig6(s.prior.prevalence(s.n)),
            s.trials,
            sig6(s.t1),
            sig6(s.mean_total),
            s.decile10,
            s.decile90,
            s.theory().map(sig6).unwrap_or_default(),
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn prior_extremes() {
        assert!(sample_defectives(&DefectivePrior::Iid { p: 0.0 }, 50, 1).unwrap().is_empty());
        assert_eq!(sample_defectives(&DefectivePrior::Iid { p: 1.0 }, 5, 1).unwrap(), vec![0, 1, 2, 3, 4]);
        assert_eq!(sample_defectives(&DefectivePrior::FixedK { k: 6 }, 6, 9).unwrap(), (0..6).collect::<Vec<_>>());
        let k3 = sample_defectives(&DefectivePrior::FixedK { k: 3 }, 40, 2).unwrap();
        assert_eq!(k3.len(), 3);
        assert!(sample_defectives(&DefectivePrior::FixedK { k: 7 }, 6, 0).is_err());
        assert!(sample_defectives(&DefectivePrior::Iid { p: 1.2 }, 6, 0).is_err());
    }

    #[test]
    fn iid_prior_mean() {
        let seeds = 10_000u64;
        let total: usize = (0..seeds)
            .map(|s| sample_defectives(&DefectivePrior::Iid { p: 0.027 }, 1000, trial_seed(5, s)).unwrap().len())
            .sum();
        let mean = total as f64 / seeds as f64;
        let se = (1000.0 * 0.027 * 0.973f64).sqrt() / (seeds as f64).sqrt();
        assert!((mean - 27.0).abs() < 3.0 * se, "mean {mean}");
    }

    #[test]
    fn individual_trial() {
        let prior = DefectivePrior::Iid { p: 0.027 };
        for seed in 0..20 {
            let t = run_trial(&SchemeConfig::Individual, &prior, 1000, Mode::Conservative, seed).unwrap();
            assert_eq!((t.t1, t.t2, t.total), (0, 1000, 1000));
        }
    }

    #[test]
    fn dorfman_all_negative() {
        let t =
            run_trial(&SchemeConfig::Dorfman { s: 7 }, &DefectivePrior::FixedK { k: 0 }, 1001, Mode::Conservative, 3)
                .unwrap();
        assert_eq!(t.total, 143);
    }

    #[test]
    fn trial_determinism_and_invariants() {
        let scheme = SchemeConfig::DoublyConstant { r: 4, s: 25 };
        let prior = DefectivePrior::Iid { p: 0.027 };
        for seed in 0..50 {
            let a = run_trial(&scheme, &prior, 1000, Mode::Conservative, seed).unwrap();
            assert_eq!(a, run_trial(&scheme, &prior, 1000, Mode::Conservative, seed).unwrap());
            assert_eq!(a.total, a.t1 + a.t2);
            assert!(a.t2 >= a.defective_count && a.t2 <= 1000);
            let nc = run_trial(&scheme, &prior, 1000, Mode::Nonconservative, seed).unwrap();
            assert!(nc.t2 <= a.t2);
        }
    }

    #[test]
    fn single_trial_experiment() {
        let prior = DefectivePrior::Iid { p: 0.05 };
        let scheme = SchemeConfig::Ctpi { r: 2, t1: 20 };
        let exp = run_experiment(&scheme, &prior, 100, Mode::Conservative, 1, 77).unwrap();
        let t = exp.trials[0];
        assert_eq!(exp.summary.mean_total, t.total as f64);
        assert_eq!(exp.summary.decile10, t.total);
        assert_eq!(exp.summary.decile90, t.total);
        assert!(run_experiment(&scheme, &prior, 100, Mode::Conservative, 0, 77).is_err());
    }

    #[test]
    fn order_statistics() {
        let v: Vec<usize> = (1..=1000).collect();
        assert_eq!(order_statistic(&v, 1, 10), 100);
        assert_eq!(order_statistic(&v, 9, 10), 900);
        let w = [5, 7, 9];
        assert_eq!(order_statistic(&w, 1, 10), 5);
        assert_eq!(order_statistic(&w, 9, 10), 9);
    }

    #[test]
    fn aggregation_ignores_order() {
        let prior = DefectivePrior::Iid { p: 0.1 };
        let exp = run_experiment(&SchemeConfig::Dorfman { s: 4 }, &prior, 200, Mode::Conservative, 101, 3).unwrap();
        let mut shuffled = exp.trials.clone();
        shuffled.reverse();
        shuffled.rotate_left(17);
        assert_eq!(aggregate(&exp.trials), aggregate(&shuffled));
    }

    #[test]
    fn exact_dc_examples() {
        assert_abs_diff_eq!(exact_dc_fixed_k_et2(20, 2, 2, 5).unwrap(), 4.681_440_443_213_30, epsilon = 1e-12);
        let direct = 2.0 + 18.0 * (1.0 - 2380.0 / 3876.0f64).powi(2);
        assert_abs_diff_eq!(exact_dc_fixed_k_et2(20, 2, 2, 5).unwrap(), direct, epsilon = 1e-12);
        assert_eq!(exact_dc_fixed_k_et2(30, 0, 3, 6).unwrap(), 0.0);
        assert_eq!(exact_dc_fixed_k_et2(30, 30, 3, 6).unwrap(), 30.0);
        assert!(exact_dc_fixed_k_et2(20, 2, 2, 3).is_err());
        assert!(exact_dc_fixed_k_et2(20, 21, 2, 5).is_err());
    }

    #[test]
    fn summary_csv_layout() {
        let prior = DefectivePrior::Iid { p: 0.027 };
        let exp = run_experiment(&SchemeConfig::Individual, &prior, 1000, Mode::Conservative, 5, 1).unwrap();
        let mut buf = Vec::new();
        write_summary_csv(&mut buf, &[&exp.summary]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(
            text,
            "scheme,n,p,trials,t1,mean,decile10,decile90,theory\nindividual,1000,0.027,5,0,1000,1000,1000,1000\n"
        );
    }
}
