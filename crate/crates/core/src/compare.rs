//! The invariant `{ b(z) : z branched }` and its comparison between maps.
//!
//! Sequences are compared by exact integer equality of their truncations.
//! Both the multiset and the underlying set are compared, since either
//! reading of the invariant is preserved under conjugacy.

use std::collections::BTreeSet;
use std::fmt;

use crate::error::{Error, Result};
use crate::orbit::{b_sequence, BSequence};
use crate::ratmap::RationalMap;
use crate::scalar::Scalar;
use crate::sphere::SpherePoint;

/// Levels up to this size are enumerated to cross-check the counts.
pub const INVARIANT_ENUMERATION_CAP: usize = 1 << 12;

#[derive(Clone, Debug, PartialEq)]
pub struct InvariantEntry<F> {
    pub point: SpherePoint<F>,
    pub branch_index: usize,
    pub counts: BSequence,
}

#[derive(Clone, Debug, PartialEq)]
pub struct OrbitInvariant<F> {
    pub map_label: String,
    pub depth: usize,
    pub entries: Vec<InvariantEntry<F>>,
}

impl<F> OrbitInvariant<F> {
    pub fn sequences(&self) -> impl Iterator<Item = &BSequence> {
        self.entries.iter().map(|e| &e.counts)
    }
}

/// `b_0..=b_depth` at every critical point of `map`.
pub fn invariant<F: Scalar>(map: &RationalMap<F>, label: &str, depth: usize) -> Result<OrbitInvariant<F>> {
    if depth == 0 {
        return Err(Error::InvalidArgument("invariant depth must be at least 1".into()));
    }
    let entries = map
        .critical_points()
        .iter()
        .map(|cp| {
            let counts = b_sequence(map, &cp.location, depth, INVARIANT_ENUMERATION_CAP)?;
            Ok(InvariantEntry { point: cp.location, branch_index: cp.branch_index, counts })
        })
        .collect::<Result<_>>()?;
    Ok(OrbitInvariant { map_label: label.to_string(), depth, entries })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Side {
    Left,
    Right,
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Side::Left => "a",
            Side::Right => "b",
        })
    }
}

/// An unmatched sequence and the closest sequence on the other side.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Witness {
    pub side: Side,
    /// Index into that side's entries.
    pub entry: usize,
    pub sequence: BSequence,
    pub candidate: Option<BSequence>,
    /// First index where `sequence` and `candidate` differ.
    pub first_difference: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Verdict {
    /// Pairs `(left entry, right entry)` with identical sequences.
    Equal { matching: Vec<(usize, usize)> },
    Distinguished { witness: Witness },
}

impl Verdict {
    pub fn is_equal(&self) -> bool {
        matches!(self, Verdict::Equal { .. })
    }

    pub fn label(&self) -> &'static str {
        match self {
            Verdict::Equal { .. } => "EQUAL",
            Verdict::Distinguished { .. } => "DISTINGUISHED",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Comparison {
    pub depth: usize,
    /// Multiset comparison.
    pub verdict: Verdict,
    /// Whether the sets of distinct sequences agree.
    pub set_equal: bool,
}

impl Comparison {
    /// Set and multiset readings disagree (equal sets, different multiplicities).
    pub fn readings_differ(&self) -> bool {
        self.verdict.is_equal() != self.set_equal
    }
}

fn first_difference(a: &[u64], b: &[u64]) -> Option<usize> {
    a.iter().zip(b).position(|(x, y)| x != y).or((a.len() != b.len()).then(|| a.len().min(b.len())))
}

fn common_prefix(a: &[u64], b: &[u64]) -> usize {
    a.iter().zip(b).take_while(|(x, y)| x == y).count()
}

pub fn compare<F>(left: &OrbitInvariant<F>, right: &OrbitInvariant<F>) -> Result<Comparison> {
    if left.depth != right.depth {
        return Err(Error::DepthMismatch { left: left.depth, right: right.depth });
    }
    // greedy pairing is a maximum matching when edges are exact equality
    let mut used = vec![false; right.entries.len()];
    let mut matching = Vec::new();
    let mut unmatched_left = Vec::new();
    for (i, e) in left.entries.iter().enumerate() {
        let j = (0..right.entries.len()).find(|&j| !used[j] && right.entries[j].counts == e.counts);
        match j {
            Some(j) => {
                used[j] = true;
                matching.push((i, j));
            }
            None => unmatched_left.push(i),
        }
    }
    let unmatched_right: Vec<usize> = (0..right.entries.len()).filter(|&j| !used[j]).collect();

    let witness_for = |side: Side, entry: usize| {
        let (this, other, pool) = match side {
            Side::Left => (left, right, &unmatched_right),
            Side::Right => (right, left, &unmatched_left),
        };
        let sequence = this.entries[entry].counts.clone();
        let pool: Vec<usize> = if pool.is_empty() { (0..other.entries.len()).collect() } else { pool.clone() };
        let candidate = pool
            .iter()
            .map(|&k| &other.entries[k].counts)
            .fold(None::<&BSequence>, |best, c| match best {
                Some(b) if common_prefix(b, &sequence) >= common_prefix(c, &sequence) => Some(b),
                _ => Some(c),
            })
            .cloned();
        let first_difference = candidate.as_ref().and_then(|c| first_difference(&sequence, c));
        Witness { side, entry, sequence, candidate, first_difference }
    };

    let verdict = if let Some(&i) = unmatched_left.first() {
        Verdict::Distinguished { witness: witness_for(Side::Left, i) }
    } else if let Some(&j) = unmatched_right.first() {
        Verdict::Distinguished { witness: witness_for(Side::Right, j) }
    } else {
        Verdict::Equal { matching }
    };
    let set_l: BTreeSet<&BSequence> = left.sequences().collect();
    let set_r: BTreeSet<&BSequence> = right.sequences().collect();
    Ok(Comparison { depth: left.depth, verdict, set_equal: set_l == set_r })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::NumericConfig;
    use num_complex::Complex;

    fn quad(c: f64) -> RationalMap<f64> {
        RationalMap::polynomial(&[Complex::new(c, 0.0), Complex::new(0.0, 0.0), Complex::new(1.0, 0.0)], NumericConfig::default())
            .unwrap()
    }

    fn seqs(inv: &OrbitInvariant<f64>) -> Vec<(String, Vec<u64>)> {
        inv.entries.iter().map(|e| (e.point.to_string(), e.counts.0.clone())).collect()
    }

    #[test]
    fn example_invariants() {
        let i = invariant(&quad(0.0), "z^2", 4).unwrap();
        assert_eq!(seqs(&i), vec![("0+0i".into(), vec![1; 5]), ("inf".into(), vec![1; 5])]);
        let i = invariant(&quad(1.0), "z^2+1", 4).unwrap();
        assert_eq!(seqs(&i), vec![("0+0i".into(), vec![1, 2, 4, 8, 16]), ("inf".into(), vec![1; 5])]);
        let i = invariant(&quad(-1.0), "z^2-1", 4).unwrap();
        assert_eq!(seqs(&i), vec![("0+0i".into(), vec![1, 2, 3, 6, 11]), ("inf".into(), vec![1; 5])]);
        assert!(invariant(&quad(0.0), "z^2", 0).is_err());
    }

    #[test]
    fn distinguishes_escaping_from_periodic() {
        let a = invariant(&quad(1.0), "a", 3).unwrap();
        let b = invariant(&quad(-1.0), "b", 3).unwrap();
        let c = compare(&a, &b).unwrap();
        let Verdict::Distinguished { witness } = &c.verdict else { panic!("expected a witness") };
        assert_eq!(witness.side, Side::Left);
        assert_eq!(witness.sequence.0, vec![1, 2, 4, 8]);
        assert_eq!(witness.candidate.as_ref().unwrap().0, vec![1, 2, 3, 6]);
        assert_eq!(witness.first_difference, Some(2));
        assert!(!c.set_equal);
        assert!(!c.readings_differ());
    }

    #[test]
    fn reflexive_and_conjugate() {
        let a = invariant(&quad(-1.0), "a", 4).unwrap();
        let c = compare(&a, &a).unwrap();
        assert_eq!(c.verdict, Verdict::Equal { matching: vec![(0, 0), (1, 1)] });
        // z^2 conjugated by z + 1 is z^2 - 2z + 2
        let q = RationalMap::polynomial(
            &[Complex::new(2.0, 0.0), Complex::new(-2.0, 0.0), Complex::new(1.0, 0.0)],
            NumericConfig::default(),
        )
        .unwrap();
        let c = compare(&invariant(&quad(0.0), "p", 4).unwrap(), &invariant(&q, "q", 4).unwrap()).unwrap();
        assert!(c.verdict.is_equal());
    }

    #[test]
    fn set_and_multiset_can_differ() {
        let mk = |v: Vec<Vec<u64>>| OrbitInvariant::<f64> {
            map_label: String::new(),
            depth: 2,
            entries: v
                .into_iter()
                .map(|s| InvariantEntry { point: SpherePoint::zero(), branch_index: 2, counts: BSequence(s) })
                .collect(),
        };
        let a = mk(vec![vec![1, 1, 1], vec![1, 1, 1], vec![1, 2, 4]]);
        let b = mk(vec![vec![1, 1, 1], vec![1, 2, 4], vec![1, 2, 4]]);
        let c = compare(&a, &b).unwrap();
        assert!(c.set_equal);
        assert!(!c.verdict.is_equal());
        assert!(c.readings_differ());
        assert!(matches!(compare(&a, &mk(vec![])), Ok(Comparison { verdict: Verdict::Distinguished { .. }, .. })));
        let mut d = mk(vec![]);
        d.depth = 3;
        assert_eq!(compare(&a, &d).unwrap_err(), Error::DepthMismatch { left: 2, right: 3 });
    }
}
