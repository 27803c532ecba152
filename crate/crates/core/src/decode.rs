//! Stage-one outcomes and item classification.
//!
//! An item in at least one negative test is a definite nondefective (DND).
//! An item in a positive test whose other members are all DND is a definite
//! defective (DD). Conservative schemes retest every non-DND item; the
//! non-conservative count also skips DDs and is kept only for comparison.

use serde::{Deserialize, Serialize};

use crate::design::{HypercubeDesign, PoolingDesign};
use crate::error::{Error, Result};

/// Stage-one results, `true` meaning the pool tested positive.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OutcomeVector(Vec<bool>);

impl OutcomeVector {
    pub fn new(outcomes: Vec<bool>) -> Self {
        Self(outcomes)
    }

    pub fn as_slice(&self) -> &[bool] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn is_positive(&self, t: usize) -> bool {
        self.0[t]
    }

    pub fn positives(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.iter().enumerate().filter(|(_, &o)| o).map(|(t, _)| t)
    }

    pub fn positive_count(&self) -> usize {
        self.0.iter().filter(|&&o| o).count()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Conservative,
    Nonconservative,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Classification {
    pub dnd: Vec<usize>,
    pub dd: Vec<usize>,
    pub stage2_conservative: usize,
    pub stage2_nonconservative: usize,
}

impl Classification {
    pub fn stage2(&self, mode: Mode) -> usize {
        match mode {
            Mode::Conservative => self.stage2_conservative,
            Mode::Nonconservative => self.stage2_nonconservative,
        }
    }
}

/// A test is positive iff it contains a defective. Empty tests are negative.
pub fn run_tests(design: &PoolingDesign, defectives: &[usize]) -> Result<OutcomeVector> {
    let n = design.n();
    let mut outcomes = vec![false; design.t1()];
    for &i in defectives {
        if i >= n {
            return Err(Error::ItemOutOfRange { item: i, n });
        }
        for &t in design.item_tests(i) {
            outcomes[t] = true;
        }
    }
    Ok(OutcomeVector(outcomes))
}

fn check_len(design: &PoolingDesign, outcomes: &OutcomeVector) -> Result<()> {
    if outcomes.len() != design.t1() {
        return Err(Error::OutcomeLength { expected: design.t1(), got: outcomes.len() });
    }
    Ok(())
}

fn dnd_mask(design: &PoolingDesign, outcomes: &OutcomeVector) -> Vec<bool> {
    (0..design.n()).map(|i| design.item_tests(i).iter().any(|&t| !outcomes.is_positive(t))).collect()
}

fn dd_mask(design: &PoolingDesign, outcomes: &OutcomeVector, dnd: &[bool]) -> Vec<bool> {
    let mut dd = vec![false; design.n()];
    for t in outcomes.positives() {
        let mut unexplained = design.test(t).iter().filter(|&&i| !dnd[i]);
        // Exactly one non-DND member: it must be the defective.
        if let (Some(&i), None) = (unexplained.next(), unexplained.next()) {
            dd[i] = true;
        }
    }
    dd
}

fn mask_to_set(mask: &[bool]) -> Vec<usize> {
    mask.iter().enumerate().filter(|(_, &m)| m).map(|(i, _)| i).collect()
}

/// Items appearing in at least one negative test. Untested items are never DND.
pub fn dnd_set(design: &PoolingDesign, outcomes: &OutcomeVector) -> Result<Vec<usize>> {
    check_len(design, outcomes)?;
    Ok(mask_to_set(&dnd_mask(design, outcomes)))
}

/// Single-pass definite defectives.
pub fn dd_set(design: &PoolingDesign, outcomes: &OutcomeVector) -> Result<Vec<usize>> {
    check_len(design, outcomes)?;
    let dnd = dnd_mask(design, outcomes);
    Ok(mask_to_set(&dd_mask(design, outcomes, &dnd)))
}

pub fn classify(design: &PoolingDesign, outcomes: &OutcomeVector) -> Result<Classification> {
    check_len(design, outcomes)?;
    let dnd = dnd_mask(design, outcomes);
    let dd = dd_mask(design, outcomes, &dnd);
    let dnd = mask_to_set(&dnd);
    let dd = mask_to_set(&dd);
    let n = design.n();
    Ok(Classification { stage2_conservative: n - dnd.len(), stage2_nonconservative: n - dnd.len() - dd.len(), dnd, dd })
}

/// Number of individual tests needed in stage two.
pub fn stage2_count(design: &PoolingDesign, outcomes: &OutcomeVector, mode: Mode) -> Result<usize> {
    check_len(design, outcomes)?;
    let dnd = dnd_mask(design, outcomes);
    let cleared = dnd.iter().filter(|&&d| d).count();
    let ruled_in = match mode {
        Mode::Conservative => 0,
        Mode::Nonconservative => dd_mask(design, outcomes, &dnd).iter().filter(|&&d| d).count(),
    };
    Ok(design.n() - cleared - ruled_in)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum HypercubeVerdict {
    AllClear,
    Resolved(usize),
    Unresolved,
}

/// Decodes a hypercube stage assuming at most one defective.
///
/// One positive slice in every dimension pins down a single item; anything
/// else needs further stages.
pub fn hypercube_decode(cube: &HypercubeDesign, outcomes: &OutcomeVector) -> Result<HypercubeVerdict> {
    check_len(cube.design(), outcomes)?;
    if outcomes.positive_count() == 0 {
        return Ok(HypercubeVerdict::AllClear);
    }
    let mut coords = Vec::with_capacity(cube.dims());
    for d in 0..cube.dims() {
        let mut hits = (0..cube.side()).filter(|&j| outcomes.is_positive(cube.slice_test(d, j)));
        match (hits.next(), hits.next()) {
            (Some(j), None) => coords.push(j),
            _ => return Ok(HypercubeVerdict::Unresolved),
        }
    }
    Ok(HypercubeVerdict::Resolved(cube.item_at(&coords)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::design::{dorfman_design, hypercube_design};

    fn two_tests() -> PoolingDesign {
        PoolingDesign::from_tests(3, vec![vec![0, 1], vec![1, 2]]).unwrap()
    }

    #[test]
    fn outcomes_follow_membership() {
        let d = two_tests();
        assert_eq!(run_tests(&d, &[0]).unwrap().as_slice(), &[true, false]);
        assert_eq!(run_tests(&d, &[]).unwrap().as_slice(), &[false, false]);
        assert!(matches!(run_tests(&d, &[3]), Err(Error::ItemOutOfRange { .. })));
    }

    #[test]
    fn hypercube_outcomes() {
        let h = hypercube_design(3, 2).unwrap();
        let item = h.item_at(&[1, 2]);
        let out = run_tests(h.design(), &[item]).unwrap();
        let pos: Vec<usize> = out.positives().collect();
        assert_eq!(pos, vec![h.slice_test(0, 1), h.slice_test(1, 2)]);
    }

    #[test]
    fn dnd_examples() {
        let d = two_tests();
        let out = OutcomeVector::new(vec![true, false]);
        assert_eq!(dnd_set(&d, &out).unwrap(), vec![1, 2]);
        let neg = OutcomeVector::new(vec![false, false]);
        assert_eq!(dnd_set(&d, &neg).unwrap(), vec![0, 1, 2]);

        // Item 3 is in no test.
        let gap = PoolingDesign::from_tests(4, vec![vec![0, 1], vec![2]]).unwrap();
        for bits in 0..4u8 {
            let out = OutcomeVector::new(vec![bits & 1 == 1, bits & 2 == 2]);
            assert!(!dnd_set(&gap, &out).unwrap().contains(&3));
        }
    }

    #[test]
    fn dd_examples() {
        let d = two_tests();
        let out = run_tests(&d, &[0]).unwrap();
        assert_eq!(dd_set(&d, &out).unwrap(), vec![0]);
        let out = run_tests(&d, &[0, 2]).unwrap();
        assert_eq!(out.as_slice(), &[true, true]);
        assert!(dnd_set(&d, &out).unwrap().is_empty());
        assert!(dd_set(&d, &out).unwrap().is_empty());

        let single = PoolingDesign::from_tests(4, vec![vec![3], vec![0, 1]]).unwrap();
        let out = run_tests(&single, &[3]).unwrap();
        assert_eq!(dd_set(&single, &out).unwrap(), vec![3]);
    }

    #[test]
    fn stage2_examples() {
        let d = two_tests();
        let out = run_tests(&d, &[0]).unwrap();
        assert_eq!(stage2_count(&d, &out, Mode::Conservative).unwrap(), 1);
        assert_eq!(stage2_count(&d, &out, Mode::Nonconservative).unwrap(), 0);

        let empty = PoolingDesign::from_tests(5, vec![]).unwrap();
        let out = run_tests(&empty, &[1, 2]).unwrap();
        assert_eq!(stage2_count(&empty, &out, Mode::Conservative).unwrap(), 5);

        let dorf = dorfman_design(12, 4).unwrap();
        let out = run_tests(&dorf, &[]).unwrap();
        assert_eq!(stage2_count(&dorf, &out, Mode::Conservative).unwrap(), 0);
    }

    #[test]
    fn classification_identities() {
        let d = two_tests();
        let out = run_tests(&d, &[0]).unwrap();
        let c = classify(&d, &out).unwrap();
        assert_eq!(c.stage2_conservative, 3 - c.dnd.len());
        assert_eq!(c.stage2_nonconservative, 3 - c.dnd.len() - c.dd.len());
        assert_eq!(c.stage2(Mode::Conservative), 1);
    }

    #[test]
    fn length_mismatch_rejected() {
        let d = two_tests();
        let out = OutcomeVector::new(vec![true]);
        assert!(matches!(dnd_set(&d, &out), Err(Error::OutcomeLength { expected: 2, got: 1 })));
        assert!(dd_set(&d, &out).is_err());
        assert!(stage2_count(&d, &out, Mode::Conservative).is_err());
    }

    #[test]
    fn hypercube_verdicts() {
        let h = hypercube_design(3, 2).unwrap();
        let target = h.item_at(&[1, 2]);
        let out = run_tests(h.design(), &[target]).unwrap();
        assert_eq!(hypercube_decode(&h, &out).unwrap(), HypercubeVerdict::Resolved(target));

        let clear = run_tests(h.design(), &[]).unwrap();
        assert_eq!(hypercube_decode(&h, &clear).unwrap(), HypercubeVerdict::AllClear);

        let diag = [h.item_at(&[0, 0]), h.item_at(&[1, 1])];
        let anti = [h.item_at(&[0, 1]), h.item_at(&[1, 0])];
        let out = run_tests(h.design(), &diag).unwrap();
        // Both candidate sets light the same slices, so no decoder can separate them.
        assert_eq!(out, run_tests(h.design(), &anti).unwrap());
        assert_eq!(hypercube_decode(&h, &out).unwrap(), HypercubeVerdict::Unresolved);
    }
}
