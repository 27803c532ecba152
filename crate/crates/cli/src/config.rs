use anyhow::{bail, Context, Result};
use serde::Deserialize;

use twostage::decode::Mode;
use twostage::design::SchemeConfig;
use twostage::simulate::DefectivePrior;

fn default_trials() -> usize {
    1000
}

fn default_seed() -> u64 {
    1
}

fn default_mode() -> Mode {
    Mode::Conservative
}

/// Flat JSON simulation config.
///
/// ```json
/// {"scheme": "dc", "r": 4, "s": 25, "n": 1000, "p": 0.027, "trials": 1000, "seed": 1, "mode": "conservative"}
/// ```
///
/// Setting `k` switches from the i.i.d. prior to exactly `k` defectives.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    pub scheme: String,
    pub n: usize,
    #[serde(default)]
    pub p: Option<f64>,
    #[serde(default)]
    pub k: Option<usize>,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_mode")]
    pub mode: Mode,
    #[serde(default)]
    pub s: Option<usize>,
    #[serde(default)]
    pub r: Option<usize>,
    #[serde(default)]
    pub t1: Option<usize>,
    #[serde(default)]
    pub pi: Option<f64>,
    #[serde(default)]
    pub a: Option<usize>,
    #[serde(default)]
    pub r2: Option<usize>,
}

impl SimConfig {
    pub fn scheme(&self) -> Result<SchemeConfig> {
        let need = |v: Option<usize>, key: &str| v.with_context(|| format!("scheme `{}` needs `{key}`", self.scheme));
        let scheme = match self.scheme.as_str() {
            "individual" => SchemeConfig::Individual,
            "dorfman" => SchemeConfig::Dorfman { s: need(self.s, "s")? },
            "bernoulli" => SchemeConfig::Bernoulli {
                pi: self.pi.context("scheme `bernoulli` needs `pi`")?,
                t1: need(self.t1, "t1")?,
            },
            "ctpi" => SchemeConfig::Ctpi { r: need(self.r, "r")?, t1: need(self.t1, "t1")? },
            "dc" | "doubly_constant" => SchemeConfig::DoublyConstant { r: need(self.r, "r")?, s: need(self.s, "s")? },
            "hypercube" => SchemeConfig::Hypercube { a: need(self.a, "a")?, r2: need(self.r2, "r2")? },
            other => bail!("unknown scheme `{other}`"),
        };
        scheme.validate(self.n)?;
        if self.p.is_none() && self.k.is_none() {
            bail!("config needs `p` or `k`");
        }
        Ok(scheme)
    }

    pub fn prior(&self) -> DefectivePrior {
        match (self.k, self.p) {
            (Some(k), _) => DefectivePrior::FixedK { k },
            (None, Some(p)) => DefectivePrior::Iid { p },
            (None, None) => unreachable!("checked in scheme()"),
        }
    }
}
