//! Small finite sets as 64-bit masks.
//!
//! Ground sets are `{1,...,n}` with `n <= 64`. Internally element `i` (0-based) is bit `i`;
//! the 1-based labels only appear at the edges ([`ElementSet::from_labels`],
//! [`ElementSet::labels`], `Debug`, serialization).

use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

pub const MAX_GROUND: usize = 64;

#[derive(Clone, Copy, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ElementSet(u64);

impl ElementSet {
    pub const EMPTY: ElementSet = ElementSet(0);

    pub fn from_bits(bits: u64) -> Self {
        ElementSet(bits)
    }

    pub fn bits(self) -> u64 {
        self.0
    }

    /// `{0,...,n-1}` in 0-based indices, i.e. the labels `1..=n`.
    pub fn full(n: usize) -> Self {
        assert!(n <= MAX_GROUND, "ground set larger than {MAX_GROUND}");
        if n == MAX_GROUND {
            ElementSet(u64::MAX)
        } else {
            ElementSet((1u64 << n) - 1)
        }
    }

    pub fn singleton(index: usize) -> Self {
        ElementSet(1u64 << index)
    }

    pub fn from_indices<I: IntoIterator<Item = usize>>(indices: I) -> Self {
        indices
            .into_iter()
            .fold(ElementSet::EMPTY, |s, i| s.with(i))
    }

    /// Builds a set from 1-based labels. Panics on label 0 or labels above 64.
    pub fn from_labels(labels: &[usize]) -> Self {
        Self::try_from_labels(labels, MAX_GROUND).expect("label out of range")
    }

    /// Builds a set from 1-based labels, checking them against the ground set `{1,...,n}`.
    pub fn try_from_labels(labels: &[usize], n: usize) -> Result<Self> {
        let mut s = ElementSet::EMPTY;
        for &label in labels {
            if label == 0 || label > n || label > MAX_GROUND {
                return Err(Error::Domain { label, n });
            }
            s.insert(label - 1);
        }
        Ok(s)
    }

    pub fn contains(self, index: usize) -> bool {
        index < MAX_GROUND && self.0 >> index & 1 == 1
    }

    pub fn insert(&mut self, index: usize) {
        self.0 |= 1u64 << index;
    }

    pub fn remove(&mut self, index: usize) {
        self.0 &= !(1u64 << index);
    }

    pub fn with(mut self, index: usize) -> Self {
        self.insert(index);
        self
    }

    pub fn without(mut self, index: usize) -> Self {
        self.remove(index);
        self
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn union(self, other: Self) -> Self {
        ElementSet(self.0 | other.0)
    }

    pub fn intersection(self, other: Self) -> Self {
        ElementSet(self.0 & other.0)
    }

    pub fn difference(self, other: Self) -> Self {
        ElementSet(self.0 & !other.0)
    }

    pub fn is_subset(self, other: Self) -> bool {
        self.0 & !other.0 == 0
    }

    /// Largest 0-based index plus one, i.e. the smallest `n` with `self ⊆ {0..n}`.
    pub fn span_len(self) -> usize {
        MAX_GROUND - self.0.leading_zeros() as usize
    }

    /// 0-based indices in increasing order.
    pub fn iter(self) -> Indices {
        Indices(self.0)
    }

    /// 1-based labels in increasing order.
    pub fn labels(self) -> Vec<usize> {
        self.iter().map(|i| i + 1).collect()
    }

    /// All subsets of `self`, starting with the empty set, in increasing mask order.
    pub fn subsets(self) -> Subsets {
        Subsets {
            universe: self.0,
            next: Some(0),
        }
    }
}

impl fmt::Debug for ElementSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.labels()).finish()
    }
}

impl FromIterator<usize> for ElementSet {
    fn from_iter<I: IntoIterator<Item = usize>>(iter: I) -> Self {
        ElementSet::from_indices(iter)
    }
}

/// Serialized as the sorted array of 1-based labels.
impl Serialize for ElementSet {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        self.labels().serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for ElementSet {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let labels = Vec::<usize>::deserialize(deserializer)?;
        ElementSet::try_from_labels(&labels, MAX_GROUND).map_err(serde::de::Error::custom)
    }
}

pub struct Indices(u64);

impl Iterator for Indices {
    type Item = usize;

    fn next(&mut self) -> Option<usize> {
        if self.0 == 0 {
            return None;
        }
        let i = self.0.trailing_zeros() as usize;
        self.0 &= self.0 - 1;
        Some(i)
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let n = self.0.count_ones() as usize;
        (n, Some(n))
    }
}

impl ExactSizeIterator for Indices {}

pub struct Subsets {
    universe: u64,
    next: Option<u64>,
}

impl Iterator for Subsets {
    type Item = ElementSet;

    fn next(&mut self) -> Option<ElementSet> {
        let current = self.next?;
        // Standard submask enumeration in increasing order.
        let following = current.wrapping_sub(self.universe) & self.universe;
        self.next = if following == 0 { None } else { Some(following) };
        Some(ElementSet(current))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn labels_round_trip() {
        let s = ElementSet::from_labels(&[3, 1]);
        assert_eq!(s.labels(), vec![1, 3]);
        assert!(s.contains(0) && s.contains(2) && !s.contains(1));
        assert_eq!(format!("{s:?}"), "{1, 3}");
    }

    #[test]
    fn label_out_of_range_is_domain_error() {
        assert_eq!(
            ElementSet::try_from_labels(&[4], 3),
            Err(Error::Domain { label: 4, n: 3 })
        );
        assert!(ElementSet::try_from_labels(&[0], 3).is_err());
    }

    #[test]
    fn subsets_enumerates_power_set() {
        let s = ElementSet::from_labels(&[1, 3, 4]);
        let all: Vec<_> = s.subsets().collect();
        assert_eq!(all.len(), 8);
        assert_eq!(all[0], ElementSet::EMPTY);
        assert_eq!(*all.last().unwrap(), s);
        assert!(all.iter().all(|a| a.is_subset(s)));
        assert_eq!(ElementSet::EMPTY.subsets().count(), 1);
    }

    #[test]
    fn full_sets() {
        assert_eq!(ElementSet::full(0), ElementSet::EMPTY);
        assert_eq!(ElementSet::full(3).labels(), vec![1, 2, 3]);
        assert_eq!(ElementSet::full(64).len(), 64);
        assert_eq!(ElementSet::full(5).span_len(), 5);
    }

    #[test]
    fn serde_uses_labels() {
        let s = ElementSet::from_labels(&[2, 5]);
        let json = serde_json::to_string(&s).unwrap();
        assert_eq!(json, "[2,5]");
        let back: ElementSet = serde_json::from_str(&json).unwrap();
        assert_eq!(back, s);
    }
}
