//! Matroid partition.
//!
//! [`PartitionProblem::solve`] either partitions the domain `E` into sets `I_1,...,I_m` with
//! `I_i` independent in the `i`-th matroid, or returns a set `A ⊆ E` with
//! `|A| > Σ r_i(A)`, which rules every partition out. The search is the augmenting-path
//! algorithm over the exchange graph; [`PartitionProblem::beta_bruteforce`] is the
//! exponential check of `|A| <= Σ r_i(A)` used as its oracle.
//!
//! [`UniformTailProblem`] covers the case where the last matroid is uniform of rank `l`,
//! with the family `G = {A : |A| = l + Σ_{i<m} r_i(A)}`, its minimum `A_min`, and the set
//! `A_par` of elements that some partition puts in the uniform part.

use std::collections::VecDeque;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::{try_par_map, Execution};
use crate::matroid::{Matroid, MatroidExt, UniformMatroid};
use crate::set::{ElementSet, MAX_GROUND};

pub const DEFAULT_PARTITION_BOUND: usize = 64;
/// Cap on `|E|` for the `2^|E|` enumerations.
pub const BRUTE_FORCE_BOUND: usize = 20;

#[derive(Clone, Debug)]
pub struct PartitionProblem {
    ground: usize,
    domain: ElementSet,
    matroids: Vec<Arc<dyn Matroid>>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PartitionCertificate {
    pub parts: Vec<ElementSet>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DeficiencyWitness {
    #[serde(rename = "A")]
    pub set: ElementSet,
    /// `Σ r_i(A)`.
    pub bound: usize,
    /// `|A|`.
    pub size: usize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum PartitionOutcome {
    Certificate(PartitionCertificate),
    Witness(DeficiencyWitness),
}

impl PartitionOutcome {
    pub fn certificate(&self) -> Option<&PartitionCertificate> {
        match self {
            PartitionOutcome::Certificate(c) => Some(c),
            PartitionOutcome::Witness(_) => None,
        }
    }

    pub fn is_certificate(&self) -> bool {
        self.certificate().is_some()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum BetaOutcome {
    Holds,
    /// A set of maximal deficiency `|A| - Σ r_i(A)`.
    Violated(DeficiencyWitness),
}

impl PartitionProblem {
    /// Partition all of `{1,...,ground}`.
    pub fn new(ground: usize, matroids: Vec<Arc<dyn Matroid>>) -> Result<Self> {
        Self::on_domain(ground, ElementSet::full(ground.min(MAX_GROUND)), matroids)
    }

    /// Partition `domain ⊆ {1,...,ground}` only.
    pub fn on_domain(
        ground: usize,
        domain: ElementSet,
        matroids: Vec<Arc<dyn Matroid>>,
    ) -> Result<Self> {
        if ground > MAX_GROUND {
            return Err(Error::SizeBound {
                what: "ground set",
                size: ground,
                bound: MAX_GROUND,
            });
        }
        if let Some(m) = matroids.iter().find(|m| m.ground_size() != ground) {
            return Err(Error::Precondition(format!(
                "matroid on {} elements in a problem over {ground}",
                m.ground_size()
            )));
        }
        if let Some(i) = domain.difference(ElementSet::full(ground)).iter().next() {
            return Err(Error::Domain {
                label: i + 1,
                n: ground,
            });
        }
        Ok(PartitionProblem {
            ground,
            domain,
            matroids,
        })
    }

    pub fn ground(&self) -> usize {
        self.ground
    }

    pub fn domain(&self) -> ElementSet {
        self.domain
    }

    pub fn matroids(&self) -> &[Arc<dyn Matroid>] {
        &self.matroids
    }

    pub fn rank_sum(&self, set: ElementSet) -> usize {
        self.matroids.iter().map(|m| m.rank_unchecked(set)).sum()
    }

    pub fn solve(&self) -> Result<PartitionOutcome> {
        self.solve_bounded(DEFAULT_PARTITION_BOUND)
    }

    /// Augmenting-path matroid partition; elements and parts are scanned in increasing
    /// order, so the result is deterministic.
    pub fn solve_bounded(&self, bound: usize) -> Result<PartitionOutcome> {
        if self.domain.len() > bound {
            return Err(Error::SizeBound {
                what: "partition domain",
                size: self.domain.len(),
                bound,
            });
        }
        for (i, m) in self.matroids.iter().enumerate() {
            if !m.independent(ElementSet::EMPTY) {
                return Err(Error::InvalidMatroid(format!(
                    "matroid {} rejects the empty set",
                    i + 1
                )));
            }
        }
        if self.matroids.is_empty() {
            return Ok(if self.domain.is_empty() {
                PartitionOutcome::Certificate(PartitionCertificate { parts: vec![] })
            } else {
                let set = ElementSet::singleton(self.domain.iter().next().unwrap_or(0));
                PartitionOutcome::Witness(DeficiencyWitness {
                    set,
                    bound: 0,
                    size: 1,
                })
            });
        }

        let m = self.matroids.len();
        let mut parts = vec![ElementSet::EMPTY; m];
        let mut owner: Vec<Option<usize>> = vec![None; MAX_GROUND];

        for s in self.domain.iter() {
            match self.augment(s, &mut parts, &mut owner) {
                Some(reached) => {
                    let witness = DeficiencyWitness {
                        set: reached,
                        bound: self.rank_sum(reached),
                        size: reached.len(),
                    };
                    self.validate_witness(&witness)?;
                    return Ok(PartitionOutcome::Witness(witness));
                }
                None => continue,
            }
        }

        let certificate = PartitionCertificate { parts };
        self.validate_certificate(&certificate)?;
        Ok(PartitionOutcome::Certificate(certificate))
    }

    /// Inserts `s` along a shortest augmenting path. Returns the set reached by the search
    /// when no path exists.
    fn augment(
        &self,
        s: usize,
        parts: &mut [ElementSet],
        owner: &mut [Option<usize>],
    ) -> Option<ElementSet> {
        let m = self.matroids.len();
        let mut pred: Vec<Option<(usize, usize)>> = vec![None; MAX_GROUND];
        let mut visited = ElementSet::singleton(s);
        let mut queue = VecDeque::from([s]);
        let mut sink = None;

        'search: while let Some(x) = queue.pop_front() {
            for i in 0..m {
                if owner[x] == Some(i) {
                    continue;
                }
                let matroid = &self.matroids[i];
                if matroid.independent(parts[i].with(x)) {
                    sink = Some((x, i));
                    break 'search;
                }
                for y in parts[i].difference(visited).iter() {
                    if matroid.independent(parts[i].without(y).with(x)) {
                        visited.insert(y);
                        pred[y] = Some((x, i));
                        queue.push_back(y);
                    }
                }
            }
        }

        let (mut current, mut target) = match sink {
            Some(found) => found,
            None => return Some(visited),
        };
        loop {
            if let Some(previous) = owner[current] {
                parts[previous].remove(current);
            }
            parts[target].insert(current);
            owner[current] = Some(target);
            if current == s {
                return None;
            }
            let (from, part) = pred[current].expect("path vertex without predecessor");
            current = from;
            target = part;
        }
    }

    pub fn validate_certificate(&self, c: &PartitionCertificate) -> Result<()> {
        if c.parts.len() != self.matroids.len() {
            return Err(Error::Internal(format!(
                "certificate has {} parts for {} matroids",
                c.parts.len(),
                self.matroids.len()
            )));
        }
        let mut seen = ElementSet::EMPTY;
        for (i, (&part, matroid)) in c.parts.iter().zip(&self.matroids).enumerate() {
            if !part.intersection(seen).is_empty() {
                return Err(Error::Internal(format!("parts overlap at part {}", i + 1)));
            }
            seen = seen.union(part);
            if !matroid.independent(part) {
                return Err(Error::InvalidMatroid(format!(
                    "part {} = {part:?} is dependent after augmentation; the oracle is not a matroid",
                    i + 1
                )));
            }
            if let Some(e) = part.iter().find(|&e| !matroid.independent(part.without(e))) {
                return Err(Error::InvalidMatroid(format!(
                    "part {} = {part:?} is independent but drops to a dependent set without {}",
                    i + 1,
                    e + 1
                )));
            }
        }
        if seen != self.domain {
            return Err(Error::Internal(format!(
                "parts cover {seen:?}, expected {:?}",
                self.domain
            )));
        }
        Ok(())
    }

    pub fn validate_witness(&self, w: &DeficiencyWitness) -> Result<()> {
        let bound = self.rank_sum(w.set);
        if !w.set.is_subset(self.domain) || w.size != w.set.len() || w.bound != bound {
            return Err(Error::Internal(format!("inconsistent witness {w:?}")));
        }
        if w.size <= w.bound {
            return Err(Error::InvalidMatroid(format!(
                "search got stuck on {:?} although |A| = {} <= Σ r_i(A) = {}; the oracle is not a matroid",
                w.set, w.size, w.bound
            )));
        }
        Ok(())
    }

    /// Checks `|A| <= Σ r_i(A)` for every `A ⊆ E` by enumeration.
    pub fn beta_bruteforce(&self) -> Result<BetaOutcome> {
        if self.domain.len() > BRUTE_FORCE_BOUND {
            return Err(Error::SizeBound {
                what: "brute-force subset enumeration",
                size: self.domain.len(),
                bound: BRUTE_FORCE_BOUND,
            });
        }
        let mut worst: Option<(usize, DeficiencyWitness)> = None;
        for a in self.domain.subsets() {
            let bound = self.rank_sum(a);
            let size = a.len();
            if size > bound {
                let deficiency = size - bound;
                if worst.as_ref().is_none_or(|(d, _)| deficiency > *d) {
                    worst = Some((deficiency, DeficiencyWitness { set: a, bound, size }));
                }
            }
        }
        Ok(match worst {
            None => BetaOutcome::Holds,
            Some((_, w)) => BetaOutcome::Violated(w),
        })
    }
}

/// A partition problem whose last matroid is the uniform matroid of rank `l`.
#[derive(Clone, Debug)]
pub struct UniformTailProblem {
    ground: usize,
    domain: ElementSet,
    others: Vec<Arc<dyn Matroid>>,
    l: usize,
}

impl UniformTailProblem {
    pub fn new(
        ground: usize,
        domain: ElementSet,
        others: Vec<Arc<dyn Matroid>>,
        l: usize,
    ) -> Result<Self> {
        // Validates ground sizes and the domain.
        PartitionProblem::on_domain(ground, domain, others.clone())?;
        if l > domain.len() {
            return Err(Error::Precondition(format!(
                "uniform rank l = {l} exceeds |E| = {}",
                domain.len()
            )));
        }
        Ok(UniformTailProblem {
            ground,
            domain,
            others,
            l,
        })
    }

    pub fn l(&self) -> usize {
        self.l
    }

    pub fn domain(&self) -> ElementSet {
        self.domain
    }

    fn with_tail(&self, domain: ElementSet, l: usize) -> Result<PartitionProblem> {
        let mut matroids = self.others.clone();
        matroids.push(Arc::new(UniformMatroid::new(l, self.ground)?));
        PartitionProblem::on_domain(self.ground, domain, matroids)
    }

    pub fn partition_problem(&self) -> Result<PartitionProblem> {
        self.with_tail(self.domain, self.l)
    }

    /// `l + Σ_{i<m} r_i(A)`.
    pub fn g_value(&self, set: ElementSet) -> usize {
        self.l
            + self
                .others
                .iter()
                .map(|m| m.rank_unchecked(set))
                .sum::<usize>()
    }

    pub fn in_g(&self, set: ElementSet) -> bool {
        set.len() == self.g_value(set)
    }

    fn check_g_hypotheses(&self) -> Result<()> {
        if self.domain.len() > BRUTE_FORCE_BOUND {
            return Err(Error::SizeBound {
                what: "G enumeration",
                size: self.domain.len(),
                bound: BRUTE_FORCE_BOUND,
            });
        }
        if !self.partition_problem()?.solve()?.is_certificate() {
            return Err(Error::Precondition("E admits no partition".into()));
        }
        if !self.in_g(self.domain) {
            return Err(Error::Precondition(format!(
                "E ∉ G: |E| = {} but l + Σ r_i(E) = {}",
                self.domain.len(),
                self.g_value(self.domain)
            )));
        }
        Ok(())
    }

    /// Every member of `G`, in increasing mask order.
    pub fn g_family(&self) -> Result<Vec<ElementSet>> {
        self.check_g_hypotheses()?;
        Ok(self.domain.subsets().filter(|&a| self.in_g(a)).collect())
    }

    /// Intersection of all members of `G`, checked to lie in `G` itself.
    pub fn a_min(&self) -> Result<ElementSet> {
        let family = self.g_family()?;
        let a_min = family
            .iter()
            .fold(self.domain, |acc, &a| acc.intersection(a));
        if !self.in_g(a_min) {
            return Err(Error::Internal(format!(
                "∩G = {a_min:?} is not in G; G is not closed under intersection"
            )));
        }
        Ok(a_min)
    }

    /// Elements that some partition of `E` places in the uniform part.
    pub fn a_par(&self, exec: Execution) -> Result<ElementSet> {
        let candidates: Vec<usize> = self.domain.iter().collect();
        self.a_par_among(&candidates, exec)
    }

    /// [`Self::a_par`] restricted to `candidates`. Element `b` qualifies iff `E - b` splits
    /// into the other matroids plus the uniform matroid of rank `l - 1`.
    pub fn a_par_among(&self, candidates: &[usize], exec: Execution) -> Result<ElementSet> {
        if self.l == 0 {
            return Err(Error::Precondition("A_par needs l >= 1".into()));
        }
        if !self.partition_problem()?.solve()?.is_certificate() {
            return Err(Error::Precondition("E admits no partition".into()));
        }
        let hits = try_par_map(exec, candidates, |&b| {
            if !self.domain.contains(b) {
                return Err(Error::Domain {
                    label: b + 1,
                    n: self.ground,
                });
            }
            let reduced = self.with_tail(self.domain.without(b), self.l - 1)?;
            Ok(reduced.solve()?.is_certificate())
        })?;
        Ok(candidates
            .iter()
            .zip(hits)
            .filter(|(_, hit)| *hit)
            .map(|(&b, _)| b)
            .collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matroid::LinearMatroid;

    fn uniform(l: usize, n: usize) -> Arc<dyn Matroid> {
        Arc::new(UniformMatroid::new(l, n).unwrap())
    }

    fn s(labels: &[usize]) -> ElementSet {
        ElementSet::from_labels(labels)
    }

    /// All assignments of the domain to the matroids, checked directly.
    fn brute_force_certificates(p: &PartitionProblem) -> Vec<Vec<ElementSet>> {
        let elems: Vec<usize> = p.domain().iter().collect();
        let m = p.matroids().len();
        let mut out = Vec::new();
        let total = m.pow(elems.len() as u32);
        for code in 0..total {
            let mut parts = vec![ElementSet::EMPTY; m];
            let mut c = code;
            for &e in &elems {
                parts[c % m].insert(e);
                c /= m;
            }
            if parts.iter().zip(p.matroids()).all(|(&a, m)| m.independent(a)) {
                out.push(parts);
            }
        }
        out
    }

    #[test]
    fn uniform_one_and_two_partition_three_elements() {
        let p = PartitionProblem::new(3, vec![uniform(1, 3), uniform(2, 3)]).unwrap();
        let all = brute_force_certificates(&p);
        assert_eq!(all.len(), 3);
        let PartitionOutcome::Certificate(c) = p.solve().unwrap() else {
            panic!("expected certificate")
        };
        assert!(all.contains(&c.parts));
        assert_eq!(p.beta_bruteforce().unwrap(), BetaOutcome::Holds);
    }

    #[test]
    fn single_rank_one_matroid_cannot_cover_two() {
        let p = PartitionProblem::new(2, vec![uniform(1, 2)]).unwrap();
        let expected = DeficiencyWitness {
            set: s(&[1, 2]),
            bound: 1,
            size: 2,
        };
        assert_eq!(
            p.solve().unwrap(),
            PartitionOutcome::Witness(expected.clone())
        );
        assert_eq!(p.beta_bruteforce().unwrap(), BetaOutcome::Violated(expected));
    }

    #[test]
    fn parallel_vectors_must_be_split() {
        let lin: Arc<dyn Matroid> =
            Arc::new(LinearMatroid::from_integers(&[vec![1, 0], vec![2, 0], vec![0, 1]]).unwrap());
        let p = PartitionProblem::new(3, vec![lin, uniform(1, 3)]).unwrap();
        let all = brute_force_certificates(&p);
        assert_eq!(
            all,
            vec![vec![s(&[2, 3]), s(&[1])], vec![s(&[1, 3]), s(&[2])]]
        );
        let c = p.solve().unwrap();
        assert!(all.contains(&c.certificate().unwrap().parts));
    }

    #[test]
    fn mismatched_ground_sizes_rejected() {
        assert!(PartitionProblem::new(3, vec![uniform(1, 3), uniform(1, 4)]).is_err());
    }

    #[test]
    fn domain_bound_enforced() {
        let p = PartitionProblem::new(5, vec![uniform(5, 5)]).unwrap();
        assert_eq!(p.solve_bounded(4).unwrap_err().code(), "size_bound");
        let big = PartitionProblem::new(21, vec![uniform(21, 21)]).unwrap();
        assert_eq!(big.beta_bruteforce().unwrap_err().code(), "size_bound");
    }

    /// Dependence of {2} but independence of {1,2} violates heredity.
    #[derive(Debug)]
    struct NotHereditary;

    impl Matroid for NotHereditary {
        fn ground_size(&self) -> usize {
            2
        }
        fn independent(&self, set: ElementSet) -> bool {
            set != ElementSet::from_labels(&[2])
        }
    }

    #[test]
    fn oracle_inconsistency_reported() {
        let p = PartitionProblem::new(2, vec![Arc::new(NotHereditary)]).unwrap();
        assert_eq!(p.solve().unwrap_err().code(), "invalid_matroid");
    }

    #[test]
    fn g_family_of_two_rank_one_and_tail_one() {
        let p = UniformTailProblem::new(
            3,
            ElementSet::full(3),
            vec![uniform(1, 3), uniform(1, 3)],
            1,
        )
        .unwrap();
        // By hand: |A| = 1 + 2·min(|A|,1) only for |A| = 3.
        assert_eq!(p.g_family().unwrap(), vec![ElementSet::full(3)]);
        assert_eq!(p.a_min().unwrap(), ElementSet::full(3));
        assert_eq!(p.a_par(Execution::Sequential).unwrap(), ElementSet::full(3));
    }

    #[test]
    fn tail_only_problem() {
        let p = UniformTailProblem::new(3, ElementSet::full(3), vec![], 3).unwrap();
        assert_eq!(p.g_family().unwrap(), vec![ElementSet::full(3)]);
        let zero = UniformTailProblem::new(2, ElementSet::EMPTY, vec![], 0).unwrap();
        assert_eq!(zero.a_min().unwrap(), ElementSet::EMPTY);
    }

    #[test]
    fn a_min_empty_iff_l_zero() {
        let p = UniformTailProblem::new(2, ElementSet::full(2), vec![uniform(2, 2)], 0).unwrap();
        assert_eq!(p.a_min().unwrap(), ElementSet::EMPTY);
        assert_eq!(p.a_par(Execution::Sequential).unwrap_err().code(), "precondition");
    }

    #[test]
    fn singleton_tail() {
        let p = UniformTailProblem::new(1, ElementSet::full(1), vec![], 1).unwrap();
        assert_eq!(p.a_par(Execution::Parallel).unwrap(), s(&[1]));
        assert_eq!(p.a_min().unwrap(), s(&[1]));
    }

    #[test]
    fn e_outside_g_is_precondition_error() {
        let p = UniformTailProblem::new(3, ElementSet::full(3), vec![uniform(3, 3)], 1).unwrap();
        assert_eq!(p.g_family().unwrap_err().code(), "precondition");
    }

    #[test]
    fn all_uniform_instance_has_full_a_par() {
        let p = UniformTailProblem::new(
            4,
            ElementSet::full(4),
            vec![uniform(1, 4), uniform(2, 4)],
            1,
        )
        .unwrap();
        let pp = p.partition_problem().unwrap();
        let from_certificates = brute_force_certificates(&pp)
            .iter()
            .fold(ElementSet::EMPTY, |acc, parts| acc.union(parts[2]));
        assert_eq!(from_certificates, ElementSet::full(4));
        assert_eq!(p.a_par(Execution::Sequential).unwrap(), from_certificates);
        assert_eq!(p.a_min().unwrap(), from_certificates);
    }
}
