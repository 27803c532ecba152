//! Stage-one pooling designs.
//!
//! A [`PoolingDesign`] is the bipartite incidence structure between `n` items
//! and `t1` tests. Every generator here is a pure function of its parameters
//! and seed.

use std::fmt;
use std::io::{self, Write};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub(crate) fn seeded_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Incidence between `n` items and `t1` tests, stored in both orientations.
///
/// Test members and per-item test lists are kept sorted ascending.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PoolingDesign {
    n: usize,
    tests: Vec<Vec<usize>>,
    item_tests: Vec<Vec<usize>>,
}

impl PoolingDesign {
    /// Builds a design from its test membership lists.
    ///
    /// Members are sorted; duplicate or out-of-range items are rejected.
    pub fn from_tests(n: usize, mut tests: Vec<Vec<usize>>) -> Result<Self> {
        if n == 0 {
            return Err(Error::invalid("n", "need at least one item"));
        }
        let mut item_tests = vec![Vec::new(); n];
        for (t, members) in tests.iter_mut().enumerate() {
            members.sort_unstable();
            for w in members.windows(2) {
                if w[0] == w[1] {
                    return Err(Error::invalid("tests", format!("test {t} contains item {} twice", w[0])));
                }
            }
            for &i in members.iter() {
                if i >= n {
                    return Err(Error::ItemOutOfRange { item: i, n });
                }
                item_tests[i].push(t);
            }
        }
        Ok(Self { n, tests, item_tests })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of stage-one tests.
    pub fn t1(&self) -> usize {
        self.tests.len()
    }

    pub fn tests(&self) -> &[Vec<usize>] {
        &self.tests
    }

    pub fn test(&self, t: usize) -> &[usize] {
        &self.tests[t]
    }

    /// Tests containing item `i`.
    pub fn item_tests(&self, i: usize) -> &[usize] {
        &self.item_tests[i]
    }

    /// Row weights `w_t`.
    pub fn test_weights(&self) -> Vec<usize> {
        self.tests.iter().map(Vec::len).collect()
    }

    /// Column weights (tests per item).
    pub fn item_weights(&self) -> Vec<usize> {
        self.item_tests.iter().map(Vec::len).collect()
    }

    pub fn contains(&self, t: usize, i: usize) -> bool {
        self.tests[t].binary_search(&i).is_ok()
    }

    /// Checks that the two orientations describe the same incidence pairs.
    pub fn is_consistent(&self) -> bool {
        if self.item_tests.len() != self.n {
            return false;
        }
        let mut pairs = 0usize;
        for (t, members) in self.tests.iter().enumerate() {
            if members.windows(2).any(|w| w[0] >= w[1]) {
                return false;
            }
            for &i in members {
                if i >= self.n || self.item_tests[i].binary_search(&t).is_err() {
                    return false;
                }
                pairs += 1;
            }
        }
        let transposed: usize = self.item_tests.iter().map(Vec::len).sum();
        let in_range = self.item_tests.iter().flatten().all(|&t| t < self.tests.len());
        pairs == transposed && in_range
    }

    /// Writes the incidence pairs as CSV (`test_id,item_id`), sorted by test then item.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "test_id,item_id")?;
        for (t, members) in self.tests.iter().enumerate() {
            for &i in members {
                writeln!(out, "{t},{i}")?;
            }
        }
        Ok(())
    }
}

/// Consecutive blocks of `s` items; requires `s | n`.
pub fn dorfman_design(n: usize, s: usize) -> Result<PoolingDesign> {
    if s == 0 || s > n {
        return Err(Error::invalid("s", format!("need 1 <= s <= n, got s={s}, n={n}")));
    }
    if !n.is_multiple_of(s) {
        return Err(Error::NotDivisible { what: "n", numerator: n, divisor: s });
    }
    let tests = (0..n / s).map(|g| (g * s..(g + 1) * s).collect()).collect();
    PoolingDesign::from_tests(n, tests)
}

/// Each (item, test) pair included independently with probability `pi`.
pub fn bernoulli_design(n: usize, t1: usize, pi: f64, seed: u64) -> Result<PoolingDesign> {
    if !(0.0..=1.0).contains(&pi) {
        return Err(Error::invalid("pi", format!("must lie in [0, 1], got {pi}")));
    }
    let mut rng = seeded_rng(seed);
    let tests = (0..t1).map(|_| (0..n).filter(|_| rng.random_bool(pi)).collect()).collect();
    PoolingDesign::from_tests(n, tests)
}

/// `r` rounds of `t1 / r` tests; in each round every item joins one test
/// chosen uniformly and independently.
pub fn ctpi_design(n: usize, t1: usize, r: usize, seed: u64) -> Result<PoolingDesign> {
    if r == 0 {
        return Err(Error::invalid("r", "need at least one round"));
    }
    if !t1.is_multiple_of(r) {
        return Err(Error::NotDivisible { what: "t1", numerator: t1, divisor: r });
    }
    let per_round = t1 / r;
    if per_round == 0 {
        return Err(Error::invalid("t1", "need at least one test per round"));
    }
    let mut rng = seeded_rng(seed);
    let mut tests = vec![Vec::new(); t1];
    for round in 0..r {
        for i in 0..n {
            let t = round * per_round + rng.random_range(0..per_round);
            tests[t].push(i);
        }
    }
    PoolingDesign::from_tests(n, tests)
}

/// `r` independent uniformly random partitions of the items into tests of size `s`.
pub fn doubly_constant_design(n: usize, r: usize, s: usize, seed: u64) -> Result<PoolingDesign> {
    if r == 0 {
        return Err(Error::invalid("r", "need at least one round"));
    }
    if s == 0 || s > n {
        return Err(Error::invalid("s", format!("need 1 <= s <= n, got s={s}, n={n}")));
    }
    if !n.is_multiple_of(s) {
        return Err(Error::NotDivisible { what: "n", numerator: n, divisor: s });
    }
    let mut rng = seeded_rng(seed);
    let mut order: Vec<usize> = (0..n).collect();
    let mut tests = Vec::with_capacity(r * n / s);
    for _ in 0..r {
        order.shuffle(&mut rng);
        tests.extend(order.chunks(s).map(<[usize]>::to_vec));
    }
    PoolingDesign::from_tests(n, tests)
}

/// An `a^r2` cube of items with one test per axis-aligned slice.
///
/// Item `i` has coordinates given by its base-`a` digits, least significant
/// first. Test `d * a + j` holds the items whose `d`-th coordinate is `j`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HypercubeDesign {
    design: PoolingDesign,
    side: usize,
    dims: usize,
}

impl HypercubeDesign {
    pub fn design(&self) -> &PoolingDesign {
        &self.design
    }

    pub fn side(&self) -> usize {
        self.side
    }

    pub fn dims(&self) -> usize {
        self.dims
    }

    pub fn coords(&self, item: usize) -> Vec<usize> {
        let mut rest = item;
        (0..self.dims)
            .map(|_| {
                let c = rest % self.side;
                rest /= self.side;
                c
            })
            .collect()
    }

    pub fn item_at(&self, coords: &[usize]) -> usize {
        coords.iter().rev().fold(0, |acc, &c| acc * self.side + c)
    }

    /// Index of the test for slice `coordinate[dim] == value`.
    pub fn slice_test(&self, dim: usize, value: usize) -> usize {
        dim * self.side + value
    }
}

pub fn hypercube_design(a: usize, r2: usize) -> Result<HypercubeDesign> {
    if a < 2 {
        return Err(Error::invalid("a", format!("side must be at least 2, got {a}")));
    }
    if r2 == 0 {
        return Err(Error::invalid("r2", "dimension must be at least 1"));
    }
    let n = checked_pow(a, r2)?;
    let mut tests = vec![Vec::with_capacity(n / a); a * r2];
    for item in 0..n {
        let mut rest = item;
        for d in 0..r2 {
            tests[d * a + rest % a].push(item);
            rest /= a;
        }
    }
    Ok(HypercubeDesign { design: PoolingDesign::from_tests(n, tests)?, side: a, dims: r2 })
}

fn checked_pow(a: usize, r2: usize) -> Result<usize> {
    u32::try_from(r2)
        .ok()
        .and_then(|e| a.checked_pow(e))
        .ok_or_else(|| Error::invalid("r2", format!("{a}^{r2} overflows")))
}

/// A scheme family together with its stage-one parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum SchemeConfig {
    Individual,
    Dorfman { s: usize },
    Bernoulli { pi: f64, t1: usize },
    Ctpi { r: usize, t1: usize },
    DoublyConstant { r: usize, s: usize },
    Hypercube { a: usize, r2: usize },
}

impl SchemeConfig {
    pub fn label(&self) -> &'static str {
        match self {
            SchemeConfig::Individual => "individual",
            SchemeConfig::Dorfman { .. } => "dorfman",
            SchemeConfig::Bernoulli { .. } => "bernoulli",
            SchemeConfig::Ctpi { .. } => "ctpi",
            SchemeConfig::DoublyConstant { .. } => "doubly_constant",
            SchemeConfig::Hypercube { .. } => "hypercube",
        }
    }

    /// Checks parameter ranges and divisibility against population size `n`.
    pub fn validate(&self, n: usize) -> Result<()> {
        if n == 0 {
            return Err(Error::invalid("n", "need at least one item"));
        }
        let need_divides = |what, numerator: usize, divisor: usize| {
            if numerator.is_multiple_of(divisor) {
                Ok(())
            } else {
                Err(Error::NotDivisible { what, numerator, divisor })
            }
        };
        match *self {
            SchemeConfig::Individual => Ok(()),
            SchemeConfig::Dorfman { s } => {
                if s == 0 || s > n {
                    return Err(Error::invalid("s", format!("need 1 <= s <= n, got {s}")));
                }
                need_divides("n", n, s)
            }
            SchemeConfig::Bernoulli { pi, .. } => {
                if (0.0..=1.0).contains(&pi) {
                    Ok(())
                } else {
                    Err(Error::invalid("pi", format!("must lie in [0, 1], got {pi}")))
                }
            }
            SchemeConfig::Ctpi { r, t1 } => {
                if r == 0 || t1 < r {
                    return Err(Error::invalid("r", format!("need 1 <= r <= t1, got r={r}, t1={t1}")));
                }
                need_divides("t1", t1, r)
            }
            SchemeConfig::DoublyConstant { r, s } => {
                if r == 0 {
                    return Err(Error::invalid("r", "need at least one round"));
                }
                if s == 0 || s > n {
                    return Err(Error::invalid("s", format!("need 1 <= s <= n, got {s}")));
                }
                need_divides("n", n, s)
            }
            SchemeConfig::Hypercube { a, r2 } => {
                if a < 2 || r2 == 0 {
                    return Err(Error::invalid("a", "need a >= 2 and r2 >= 1"));
                }
                let cube = checked_pow(a, r2)?;
                if cube != n {
                    return Err(Error::invalid("n", format!("hypercube needs n = {a}^{r2} = {cube}, got {n}")));
                }
                Ok(())
            }
        }
    }

    /// Number of stage-one tests used on `n` items.
    pub fn stage_one_tests(&self, n: usize) -> usize {
        match *self {
            SchemeConfig::Individual => 0,
            SchemeConfig::Dorfman { s } => n / s,
            SchemeConfig::Bernoulli { t1, .. } | SchemeConfig::Ctpi { t1, .. } => t1,
            SchemeConfig::DoublyConstant { r, s } => n * r / s,
            SchemeConfig::Hypercube { a, r2 } => a * r2,
        }
    }

    /// Mean items per test, `sigma`.
    pub fn sigma(&self, n: usize) -> Option<f64> {
        match *self {
            SchemeConfig::Individual => None,
            SchemeConfig::Dorfman { s } | SchemeConfig::DoublyConstant { s, .. } => Some(s as f64),
            SchemeConfig::Bernoulli { pi, .. } => Some(pi * n as f64),
            SchemeConfig::Ctpi { r, t1 } => Some((n * r) as f64 / t1 as f64),
            SchemeConfig::Hypercube { a, r2 } => Some(a.pow(r2 as u32 - 1) as f64),
        }
    }

    /// Generates a stage-one design for `n` items. `Individual` yields an
    /// empty design; deterministic families ignore `seed`.
    pub fn generate(&self, n: usize, seed: u64) -> Result<PoolingDesign> {
        self.validate(n)?;
        match *self {
            SchemeConfig::Individual => PoolingDesign::from_tests(n, Vec::new()),
            SchemeConfig::Dorfman { s } => dorfman_design(n, s),
            SchemeConfig::Bernoulli { pi, t1 } => bernoulli_design(n, t1, pi, seed),
            SchemeConfig::Ctpi { r, t1 } => ctpi_design(n, t1, r, seed),
            SchemeConfig::DoublyConstant { r, s } => doubly_constant_design(n, r, s, seed),
            SchemeConfig::Hypercube { a, r2 } => Ok(hypercube_design(a, r2)?.design),
        }
    }
}

impl fmt::Display for SchemeConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            SchemeConfig::Individual => write!(f, "individual"),
            SchemeConfig::Dorfman { s } => write!(f, "dorfman(s={s})"),
            SchemeConfig::Bernoulli { pi, t1 } => write!(f, "bernoulli(pi={pi},t1={t1})"),
            SchemeConfig::Ctpi { r, t1 } => write!(f, "ctpi(r={r},t1={t1})"),
            SchemeConfig::DoublyConstant { r, s } => write!(f, "doubly_constant(r={r},s={s})"),
            SchemeConfig::Hypercube { a, r2 } => write!(f, "hypercube(a={a},r2={r2})"),
        }
    }
}
