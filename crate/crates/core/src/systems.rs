//! Systems of elements and their decompositions.
//!
//! A system is a multiplicity vector `T: J → Z_{>=0}` over the ground set of a matroid of
//! rank `k`. With `m >= 1` fixed, a strong decomposition of an `(mk+l)`-system splits it into
//! `m` bases plus an `l`-system, and a good decomposition `T = T1 + T2` has `T2` strong of
//! size `mk+1`. Two good decompositions are locally related when their second members admit
//! strong decompositions sharing all `m` bases; [`SystemContext::equivalence_report`] builds
//! the graph of that relation and counts its components.
//!
//! Strong decompositions are found through the lift of the matroid along a map
//! `f: {1,...,mk+l} → J` with fibres of size `T(j)`, which turns the question into a matroid
//! partition problem.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::{par_map, try_par_map, Execution};
use crate::matroid::{LiftedMatroid, Matroid, MatroidExt, UniformMatroid};
use crate::partition::{PartitionOutcome, PartitionProblem, UniformTailProblem};
use crate::set::{ElementSet, MAX_GROUND};

/// A multiplicity vector over `{1,...,n}`, stored densely (index `j-1` holds `T(j)`).
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct System(Vec<u32>);

impl System {
    pub fn zeros(n: usize) -> Self {
        System(vec![0; n])
    }

    pub fn from_vec(v: Vec<u32>) -> Self {
        System(v)
    }

    /// `[j]` for the 0-based index `j`.
    pub fn unit(n: usize, j: usize) -> Self {
        let mut s = System::zeros(n);
        s.0[j] = 1;
        s
    }

    /// The 0/1 system of a set.
    pub fn indicator(n: usize, set: ElementSet) -> Self {
        let mut s = System::zeros(n);
        for j in set.iter() {
            s.0[j] = 1;
        }
        s
    }

    pub fn as_slice(&self) -> &[u32] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<u32> {
        self.0
    }

    pub fn n(&self) -> usize {
        self.0.len()
    }

    pub fn get(&self, j: usize) -> u32 {
        self.0[j]
    }

    /// `|T| = Σ_j T(j)`.
    pub fn size(&self) -> usize {
        self.0.iter().map(|&c| c as usize).sum()
    }

    pub fn support(&self) -> ElementSet {
        self.0
            .iter()
            .enumerate()
            .filter(|(_, &c)| c != 0)
            .map(|(j, _)| j)
            .collect()
    }

    /// `Σ_{j ∈ B} T(j)`.
    pub fn weight_on(&self, set: ElementSet) -> usize {
        set.iter().map(|j| self.0[j] as usize).sum()
    }

    /// The componentwise order `S <= T`.
    pub fn le(&self, other: &System) -> bool {
        self.0.iter().zip(&other.0).all(|(a, b)| a <= b)
    }

    pub fn plus(&self, other: &System) -> System {
        System(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    /// `self - other` if it stays nonnegative.
    pub fn minus(&self, other: &System) -> Option<System> {
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| a.checked_sub(*b))
            .collect::<Option<Vec<_>>>()
            .map(System)
    }

    pub fn plus_unit(&self, j: usize) -> System {
        let mut s = self.clone();
        s.0[j] += 1;
        s
    }

    pub fn minus_unit(&self, j: usize) -> Option<System> {
        let mut s = self.clone();
        s.0[j] = s.0[j].checked_sub(1)?;
        Some(s)
    }

    /// `d_H(S, T) = Σ_j |S(j) - T(j)|`.
    pub fn d_h(&self, other: &System) -> u32 {
        self.0.iter().zip(&other.0).map(|(a, b)| a.abs_diff(*b)).sum()
    }

    /// `T! = Π_j T(j)!` as a float.
    pub fn factorial(&self) -> f64 {
        self.0
            .iter()
            .map(|&c| (1..=c).map(f64::from).product::<f64>())
            .product()
    }

    /// The unique `j` with `T = [j]`, if `T` is a unit system.
    pub fn as_unit(&self) -> Option<usize> {
        (self.size() == 1).then(|| self.support().iter().next()).flatten()
    }
}

impl fmt::Debug for System {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl fmt::Display for System {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for (i, c) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{c}")?;
        }
        write!(f, "]")
    }
}

/// All `t`-systems on `n` labels in increasing lexicographic order.
pub fn systems_of_size(n: usize, t: usize) -> Vec<System> {
    fn rec(n: usize, left: u32, prefix: &mut Vec<u32>, out: &mut Vec<System>) {
        if prefix.len() + 1 == n {
            prefix.push(left);
            out.push(System(prefix.clone()));
            prefix.pop();
            return;
        }
        for c in 0..=left {
            prefix.push(c);
            rec(n, left - c, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    if n == 0 {
        if t == 0 {
            out.push(System::zeros(0));
        }
        return out;
    }
    rec(n, t as u32, &mut Vec::with_capacity(n), &mut out);
    out
}

/// All subsystems `S <= T` with `|S| = s`, in increasing lexicographic order.
pub fn subsystems_of_size(t: &System, s: usize) -> Vec<System> {
    fn rec(t: &[u32], left: u32, prefix: &mut Vec<u32>, out: &mut Vec<System>) {
        let j = prefix.len();
        if j == t.len() {
            if left == 0 {
                out.push(System(prefix.clone()));
            }
            return;
        }
        let rest: u32 = t[j + 1..].iter().sum();
        let lo = left.saturating_sub(rest);
        for c in lo..=t[j].min(left) {
            prefix.push(c);
            rec(t, left - c, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    if s <= t.size() {
        rec(&t.0, s as u32, &mut Vec::with_capacity(t.n()), &mut out);
    }
    out
}

/// `T = bases[0] + ... + bases[m-1] + remainder` with every `bases[i]` a base.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct StrongDecomposition {
    pub bases: Vec<System>,
    pub remainder: System,
}

impl StrongDecomposition {
    pub fn total(&self) -> System {
        self.bases
            .iter()
            .fold(self.remainder.clone(), |acc, b| acc.plus(b))
    }

    /// Same decomposition with the bases sorted, which identifies decompositions that only
    /// differ in the order of their bases.
    pub fn canonical(mut self) -> Self {
        self.bases.sort();
        self
    }
}

/// `T = T1 + T2` with `T2` a strong `(mk+1)`-system. Equality ignores the witness.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GoodDecomposition {
    #[serde(rename = "T1")]
    pub t1: System,
    #[serde(rename = "T2")]
    pub t2: System,
    pub witness: StrongDecomposition,
}

impl PartialEq for GoodDecomposition {
    fn eq(&self, other: &Self) -> bool {
        self.t1 == other.t1 && self.t2 == other.t2
    }
}

impl Eq for GoodDecomposition {}

impl GoodDecomposition {
    pub fn total(&self) -> System {
        self.t1.plus(&self.t2)
    }
}

/// A set `B` with `Σ_{j∈B} T(j) > l + m·r(B)`, which rules out strong decompositions.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CapacityWitness {
    #[serde(rename = "B")]
    pub set: ElementSet,
    pub lhs: usize,
    pub rhs: usize,
}

/// How to match the `m` bases in the local relation.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum BaseMatching {
    /// Bases are compared as a multiset.
    #[default]
    Unordered,
    /// Bases are compared position by position over all orderings.
    Strict,
}

#[derive(Clone, Debug, Serialize)]
pub struct EquivalenceReport {
    #[serde(rename = "T")]
    pub system: System,
    pub nodes: Vec<GoodDecomposition>,
    /// Pairs `(i, j)`, `i < j`, of locally related distinct nodes.
    pub edges: Vec<(usize, usize)>,
    /// Component index of every node; components are numbered by their first node.
    pub component_of: Vec<usize>,
    pub components: usize,
}

/// Which alternative of the exchange lemma for two strong `(mk+1)`-systems `S`, `T` holds.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ExchangeAlternative {
    /// `T` has a strong decomposition with remainder `[i]` and `T(i) > S(i)`.
    Alpha {
        i: usize,
        decomposition: StrongDecomposition,
    },
    /// Every strong decomposition of `S` is paired with one of `T` with the same remainder.
    Beta {
        pairs: Vec<(StrongDecomposition, StrongDecomposition)>,
    },
}

/// One move of the distance-descent argument between two good decompositions.
#[derive(Clone, Debug)]
pub enum DescentStep {
    Equal,
    /// `R = (T1 - [j] + [i], T2 + [j] - [i])`, locally related to `T`.
    Exchange {
        i: usize,
        j: usize,
        r: GoodDecomposition,
        before: u32,
        after: u32,
    },
    /// `R = (T1 - [b] + [a], T2 + [b] - [a])` and `Q = (S1 - [c] + [a], S2 + [c] - [a])`,
    /// locally related to `T` and `S` respectively.
    SharedRemainder {
        a: usize,
        b: usize,
        c: usize,
        r: GoodDecomposition,
        q: GoodDecomposition,
        before: u32,
        after: u32,
    },
}

impl DescentStep {
    pub fn distances(&self) -> Option<(u32, u32)> {
        match self {
            DescentStep::Equal => None,
            DescentStep::Exchange { before, after, .. }
            | DescentStep::SharedRemainder { before, after, .. } => Some((*before, *after)),
        }
    }
}

pub const DEFAULT_GOOD_BOUND: usize = 20_000;
pub const DEFAULT_STRONG_BOUND: usize = 100_000;
/// Largest support for the `2^|supp T|` enumeration of `G(T)`.
pub const SUBSET_BOUND: usize = 20;

/// A matroid of rank `k` on `{1,...,n}` together with the number `m` of bases per strong
/// decomposition.
#[derive(Clone, Debug)]
pub struct SystemContext {
    matroid: Arc<dyn Matroid>,
    n: usize,
    k: usize,
    m: usize,
    bases: Vec<System>,
    good_bound: usize,
    strong_bound: usize,
}

impl SystemContext {
    pub fn new(matroid: Arc<dyn Matroid>, m: usize) -> Result<Self> {
        if m == 0 {
            return Err(Error::Precondition("m must be at least 1".into()));
        }
        let n = matroid.ground_size();
        if n == 0 || n > MAX_GROUND {
            return Err(Error::Precondition(format!("ground size {n} out of range")));
        }
        let k = matroid.full_rank();
        let mut bases: Vec<System> = matroid
            .bases()
            .into_iter()
            .map(|b| System::indicator(n, b))
            .collect();
        bases.sort();
        Ok(SystemContext {
            matroid,
            n,
            k,
            m,
            bases,
            good_bound: DEFAULT_GOOD_BOUND,
            strong_bound: DEFAULT_STRONG_BOUND,
        })
    }

    pub fn with_bounds(mut self, good: usize, strong: usize) -> Self {
        self.good_bound = good;
        self.strong_bound = strong;
        self
    }

    pub fn matroid(&self) -> &Arc<dyn Matroid> {
        &self.matroid
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn mk(&self) -> usize {
        self.m * self.k
    }

    /// Bases of the matroid as 0/1 systems, in increasing order.
    pub fn bases(&self) -> &[System] {
        &self.bases
    }

    fn check_system(&self, t: &System) -> Result<()> {
        if t.n() != self.n {
            return Err(Error::Schema(format!(
                "system {t} has {} entries, the ground set has {}",
                t.n(),
                self.n
            )));
        }
        Ok(())
    }

    /// `l = |T| - mk`, or an arity error when `|T| < mk`.
    pub fn remainder_size(&self, t: &System) -> Result<usize> {
        t.size().checked_sub(self.mk()).ok_or(Error::Arity {
            expected: self.mk(),
            actual: t.size(),
        })
    }

    /// `supp T` independent of size `k` with all multiplicities in `{0, 1}`.
    pub fn is_base(&self, t: &System) -> bool {
        t.n() == self.n
            && t.size() == self.k
            && t.as_slice().iter().all(|&c| c <= 1)
            && self.matroid.independent(t.support())
    }

    fn lift(&self, t: &System) -> Result<Arc<LiftedMatroid>> {
        Ok(Arc::new(LiftedMatroid::from_multiplicities(
            self.matroid.clone(),
            t.as_slice(),
        )?))
    }

    fn lifted_problem(&self, t: &System, l: usize) -> Result<(Arc<LiftedMatroid>, UniformTailProblem)> {
        let lift = self.lift(t)?;
        let size = t.size();
        let others: Vec<Arc<dyn Matroid>> =
            (0..self.m).map(|_| lift.clone() as Arc<dyn Matroid>).collect();
        let problem = UniformTailProblem::new(size, ElementSet::full(size), others, l)?;
        Ok((lift, problem))
    }

    /// A strong decomposition of `T` with an `l`-system remainder, or the set `B` violating
    /// `Σ_{j∈B} T(j) <= l + m·r(B)`.
    pub fn strong_decomposition_or_witness(
        &self,
        t: &System,
        l: usize,
    ) -> Result<std::result::Result<StrongDecomposition, CapacityWitness>> {
        self.check_system(t)?;
        if t.size() != self.mk() + l {
            return Err(Error::Arity {
                expected: self.mk() + l,
                actual: t.size(),
            });
        }
        if t.size() > MAX_GROUND {
            return Err(Error::SizeBound {
                what: "lifted ground set",
                size: t.size(),
                bound: MAX_GROUND,
            });
        }
        let lift = self.lift(t)?;
        let size = t.size();
        let mut matroids: Vec<Arc<dyn Matroid>> =
            (0..self.m).map(|_| lift.clone() as Arc<dyn Matroid>).collect();
        matroids.push(Arc::new(UniformMatroid::new(l, size)?));
        let problem = PartitionProblem::new(size, matroids)?;
        match problem.solve()? {
            PartitionOutcome::Certificate(c) => {
                let to_system = |part: ElementSet| {
                    let mut s = System::zeros(self.n);
                    for e in part.iter() {
                        s.0[lift.map()[e]] += 1;
                    }
                    s
                };
                let bases: Vec<System> = c.parts[..self.m].iter().map(|&p| to_system(p)).collect();
                let decomposition = StrongDecomposition {
                    bases,
                    remainder: to_system(c.parts[self.m]),
                }
                .canonical();
                if !self.is_strong_decomposition_of(&decomposition, t, l) {
                    return Err(Error::Internal(format!(
                        "lifted partition gave an invalid decomposition {decomposition:?} of {t}"
                    )));
                }
                Ok(Ok(decomposition))
            }
            PartitionOutcome::Witness(w) => {
                let set = lift.image_set(w.set);
                let lhs = t.weight_on(set);
                let rhs = l + self.m * self.matroid.rank_unchecked(set);
                if lhs <= rhs {
                    return Err(Error::Internal(format!(
                        "lifted deficiency {w:?} maps to {set:?} with {lhs} <= {rhs}"
                    )));
                }
                Ok(Err(CapacityWitness { set, lhs, rhs }))
            }
        }
    }

    pub fn strong_decomposition(&self, t: &System, l: usize) -> Result<Option<StrongDecomposition>> {
        Ok(self.strong_decomposition_or_witness(t, l)?.ok())
    }

    /// Whether `T` is strong for `l = |T| - mk`.
    pub fn is_strong(&self, t: &System) -> Result<bool> {
        let l = self.remainder_size(t)?;
        Ok(self.strong_decomposition(t, l)?.is_some())
    }

    pub fn is_strong_decomposition_of(&self, d: &StrongDecomposition, t: &System, l: usize) -> bool {
        d.bases.len() == self.m
            && d.bases.iter().all(|b| self.is_base(b))
            && d.remainder.size() == l
            && d.total() == *t
    }

    /// Every strong decomposition of `T` up to the order of the bases, sorted.
    pub fn strong_decompositions(&self, t: &System, l: usize) -> Result<Vec<StrongDecomposition>> {
        self.check_system(t)?;
        if t.size() != self.mk() + l {
            return Err(Error::Arity {
                expected: self.mk() + l,
                actual: t.size(),
            });
        }
        let mut out = Vec::new();
        let mut chosen = Vec::with_capacity(self.m);
        self.enumerate_bases(t.clone(), 0, &mut chosen, &mut out)?;
        out.sort();
        Ok(out)
    }

    fn enumerate_bases(
        &self,
        rest: System,
        start: usize,
        chosen: &mut Vec<System>,
        out: &mut Vec<StrongDecomposition>,
    ) -> Result<()> {
        if chosen.len() == self.m {
            if out.len() >= self.strong_bound {
                return Err(Error::SizeBound {
                    what: "strong decomposition enumeration",
                    size: out.len() + 1,
                    bound: self.strong_bound,
                });
            }
            out.push(StrongDecomposition {
                bases: chosen.clone(),
                remainder: rest,
            });
            return Ok(());
        }
        for (idx, base) in self.bases.iter().enumerate().skip(start) {
            if let Some(next) = rest.minus(base) {
                chosen.push(base.clone());
                self.enumerate_bases(next, idx, chosen, out)?;
                chosen.pop();
            }
        }
        Ok(())
    }

    /// Strong decompositions with the bases in every distinct order.
    pub fn ordered_strong_decompositions(
        &self,
        t: &System,
        l: usize,
    ) -> Result<Vec<StrongDecomposition>> {
        let mut out = Vec::new();
        for d in self.strong_decompositions(t, l)? {
            let mut bases = d.bases.clone();
            // Bases come sorted, so walking the lexicographic permutations from the first
            // one visits every distinct order once.
            loop {
                out.push(StrongDecomposition {
                    bases: bases.clone(),
                    remainder: d.remainder.clone(),
                });
                if !next_permutation(&mut bases) {
                    break;
                }
            }
        }
        Ok(out)
    }

    /// All good decompositions of `T`, sorted by `T2`.
    pub fn good_decompositions(&self, t: &System) -> Result<Vec<GoodDecomposition>> {
        self.good_decompositions_with(t, Execution::Sequential)
    }

    pub fn good_decompositions_with(
        &self,
        t: &System,
        exec: Execution,
    ) -> Result<Vec<GoodDecomposition>> {
        self.check_system(t)?;
        let size = self.mk() + 1;
        if t.size() < size {
            return Err(Error::Arity {
                expected: size,
                actual: t.size(),
            });
        }
        let candidates = subsystems_of_size(t, size);
        if candidates.len() > self.good_bound {
            return Err(Error::SizeBound {
                what: "good decomposition candidates",
                size: candidates.len(),
                bound: self.good_bound,
            });
        }
        let found = try_par_map(exec, &candidates, |t2| self.strong_decomposition(t2, 1))?;
        Ok(candidates
            .into_iter()
            .zip(found)
            .filter_map(|(t2, witness)| {
                witness.map(|witness| GoodDecomposition {
                    t1: t.minus(&t2).expect("subsystem"),
                    t2,
                    witness,
                })
            })
            .collect())
    }

    fn check_same_total(&self, d1: &GoodDecomposition, d2: &GoodDecomposition) -> Result<()> {
        if d1.total() != d2.total() {
            return Err(Error::Mismatch(format!(
                "{} and {} decompose different systems",
                d1.total(),
                d2.total()
            )));
        }
        Ok(())
    }

    /// Whether `d1.T2` and `d2.T2` have strong decompositions sharing their `m` bases.
    pub fn locally_related(
        &self,
        d1: &GoodDecomposition,
        d2: &GoodDecomposition,
        matching: BaseMatching,
    ) -> Result<bool> {
        self.check_same_total(d1, d2)?;
        match matching {
            BaseMatching::Unordered => {
                let decompositions = self.strong_decompositions(&d1.t2, 1)?;
                Ok(shares_bases(&decompositions, &d2.t2))
            }
            BaseMatching::Strict => {
                let left = self.ordered_strong_decompositions(&d1.t2, 1)?;
                let right = self.ordered_strong_decompositions(&d2.t2, 1)?;
                Ok(left
                    .iter()
                    .any(|p| right.iter().any(|q| p.bases == q.bases)))
            }
        }
    }

    pub fn equivalence_report(&self, t: &System, exec: Execution) -> Result<EquivalenceReport> {
        self.equivalence_report_with(t, exec, BaseMatching::Unordered)
    }

    /// The graph of the local relation on the good decompositions of `T`.
    pub fn equivalence_report_with(
        &self,
        t: &System,
        exec: Execution,
        matching: BaseMatching,
    ) -> Result<EquivalenceReport> {
        let nodes = self.good_decompositions_with(t, exec)?;
        let pairs: Vec<(usize, usize)> = (0..nodes.len())
            .flat_map(|i| (i + 1..nodes.len()).map(move |j| (i, j)))
            .filter(|&(i, j)| nodes[i].t2.d_h(&nodes[j].t2) <= 2)
            .collect();
        let edges: Vec<(usize, usize)> = match matching {
            BaseMatching::Unordered => {
                let decompositions = try_par_map(exec, &nodes, |d| self.strong_decompositions(&d.t2, 1))?;
                let related = par_map(exec, &pairs, |&(i, j)| {
                    shares_bases(&decompositions[i], &nodes[j].t2)
                });
                pairs
                    .into_iter()
                    .zip(related)
                    .filter(|(_, r)| *r)
                    .map(|(p, _)| p)
                    .collect()
            }
            BaseMatching::Strict => {
                let related = try_par_map(exec, &pairs, |&(i, j)| {
                    self.locally_related(&nodes[i], &nodes[j], BaseMatching::Strict)
                })?;
                pairs
                    .into_iter()
                    .zip(related)
                    .filter(|(_, r)| *r)
                    .map(|(p, _)| p)
                    .collect()
            }
        };
        let component_of = components(nodes.len(), &edges);
        let components = component_of.iter().max().map_or(0, |&c| c + 1);
        Ok(EquivalenceReport {
            system: t.clone(),
            nodes,
            edges,
            component_of,
            components,
        })
    }

    /// Checks `Σ_{j∈B} T(j) <= l + m·r(B)` for every `B ⊆ J`; returns the first violation.
    pub fn capacity_violation(&self, t: &System, l: usize) -> Result<Option<CapacityWitness>> {
        self.check_system(t)?;
        if self.n > SUBSET_BOUND {
            return Err(Error::SizeBound {
                what: "subset enumeration",
                size: self.n,
                bound: SUBSET_BOUND,
            });
        }
        Ok(ElementSet::full(self.n).subsets().find_map(|b| {
            let lhs = t.weight_on(b);
            let rhs = l + self.m * self.matroid.rank_unchecked(b);
            (lhs > rhs).then_some(CapacityWitness { set: b, lhs, rhs })
        }))
    }

    fn require_strong(&self, t: &System) -> Result<usize> {
        self.check_system(t)?;
        let l = self.remainder_size(t)?;
        if self.strong_decomposition(t, l)?.is_none() {
            return Err(Error::Precondition(format!("{t} is not a strong system")));
        }
        Ok(l)
    }

    /// `G(T) = {B ⊆ supp T : Σ_{j∈B} T(j) = l + m·r(B)}`, in increasing mask order.
    pub fn g_family(&self, t: &System) -> Result<Vec<ElementSet>> {
        let l = self.require_strong(t)?;
        let support = t.support();
        if support.len() > SUBSET_BOUND {
            return Err(Error::SizeBound {
                what: "G(T) enumeration",
                size: support.len(),
                bound: SUBSET_BOUND,
            });
        }
        Ok(support
            .subsets()
            .filter(|&b| t.weight_on(b) == l + self.m * self.matroid.rank_unchecked(b))
            .collect())
    }

    /// The minimal member of `G(T)`, computed as the intersection of the whole family.
    pub fn a_min(&self, t: &System) -> Result<ElementSet> {
        let family = self.g_family(t)?;
        let a_min = family
            .iter()
            .fold(t.support(), |acc, &b| acc.intersection(b));
        if !family.contains(&a_min) {
            return Err(Error::Internal(format!(
                "∩G(T) = {a_min:?} is not in G(T) for T = {t}"
            )));
        }
        Ok(a_min)
    }

    /// Labels that occur in the remainder of some strong decomposition of `T` (`l >= 1`).
    pub fn a_dec(&self, t: &System, exec: Execution) -> Result<ElementSet> {
        self.check_system(t)?;
        let l = self.remainder_size(t)?;
        if l == 0 {
            return Err(Error::Precondition("A_dec needs l >= 1".into()));
        }
        let (lift, problem) = self.lifted_problem(t, l)?;
        // Lifted elements over the same label are interchangeable; probe the first of each.
        let representatives: Vec<usize> = t
            .support()
            .iter()
            .map(|j| lift.map().iter().position(|&x| x == j).expect("fibre"))
            .collect();
        let hits = problem.a_par_among(&representatives, exec)?;
        Ok(lift.image_set(hits))
    }

    /// A strong decomposition of `T` whose remainder is exactly `r`, if any.
    pub fn decomposition_with_remainder(
        &self,
        t: &System,
        remainder: &System,
    ) -> Result<Option<StrongDecomposition>> {
        let Some(rest) = t.minus(remainder) else {
            return Ok(None);
        };
        if rest.size() != self.mk() {
            return Ok(None);
        }
        Ok(self.strong_decomposition(&rest, 0)?.map(|d| StrongDecomposition {
            bases: d.bases,
            remainder: remainder.clone(),
        }))
    }

    fn require_strong_mk1(&self, t: &System) -> Result<()> {
        if t.size() != self.mk() + 1 {
            return Err(Error::Arity {
                expected: self.mk() + 1,
                actual: t.size(),
            });
        }
        self.require_strong(t).map(|_| ())
    }

    /// Certifies one of the two alternatives for strong `(mk+1)`-systems `S` and `T`.
    pub fn exchange_alternative(&self, s: &System, t: &System) -> Result<ExchangeAlternative> {
        self.require_strong_mk1(s)?;
        self.require_strong_mk1(t)?;
        let a_dec = self.a_dec(t, Execution::Sequential)?;
        if let Some(i) = a_dec.iter().find(|&i| t.get(i) > s.get(i)) {
            let decomposition = self
                .decomposition_with_remainder(t, &System::unit(self.n, i))?
                .ok_or_else(|| Error::Internal(format!("{} ∈ A_dec({t}) without witness", i + 1)))?;
            return Ok(ExchangeAlternative::Alpha { i, decomposition });
        }
        let mut pairs = Vec::new();
        for ds in self.strong_decompositions(s, 1)? {
            let dt = self
                .decomposition_with_remainder(t, &ds.remainder)?
                .ok_or_else(|| {
                    Error::Internal(format!(
                        "neither alternative holds for S = {s}, T = {t} (remainder {})",
                        ds.remainder
                    ))
                })?;
            pairs.push((ds, dt));
        }
        Ok(ExchangeAlternative::Beta { pairs })
    }

    /// One step of the descent from `(T1, T2)` towards `(S1, S2)`: a locally related good
    /// decomposition (or pair of them) whose second members are closer in `d_H` by 2.
    pub fn descent_step(&self, s: &GoodDecomposition, t: &GoodDecomposition) -> Result<DescentStep> {
        self.check_same_total(s, t)?;
        if s.t2 == t.t2 {
            return Ok(DescentStep::Equal);
        }
        let before = t.t2.d_h(&s.t2);
        let first = |pred: &dyn Fn(usize) -> bool, what: &str| {
            (0..self.n)
                .find(|&j| pred(j))
                .ok_or_else(|| Error::Internal(format!("no {what} for {t:?} vs {s:?}")))
        };
        match self.exchange_alternative(&s.t2, &t.t2)? {
            ExchangeAlternative::Alpha { i, decomposition } => {
                let j = first(
                    &|j| t.t1.get(j) > s.t1.get(j) && t.t2.get(j) < s.t2.get(j),
                    "exchange partner j",
                )?;
                let r = GoodDecomposition {
                    t1: t.t1.minus_unit(j).expect("T1(j) > 0").plus_unit(i),
                    t2: t.t2.plus_unit(j).minus_unit(i).expect("T2(i) > 0"),
                    witness: StrongDecomposition {
                        bases: decomposition.bases,
                        remainder: System::unit(self.n, j),
                    },
                };
                self.check_move(&r, t)?;
                let after = r.t2.d_h(&s.t2);
                Ok(DescentStep::Exchange {
                    i,
                    j,
                    r,
                    before,
                    after,
                })
            }
            ExchangeAlternative::Beta { pairs } => {
                let (ds, dt) = pairs
                    .into_iter()
                    .next()
                    .ok_or_else(|| Error::Internal("strong S2 without decompositions".into()))?;
                let a = ds
                    .remainder
                    .as_unit()
                    .ok_or_else(|| Error::Internal("remainder is not a unit".into()))?;
                let b = first(
                    &|j| t.t1.get(j) > s.t1.get(j) && t.t2.get(j) < s.t2.get(j),
                    "element b",
                )?;
                let c = first(
                    &|j| t.t1.get(j) < s.t1.get(j) && t.t2.get(j) > s.t2.get(j),
                    "element c",
                )?;
                let r = GoodDecomposition {
                    t1: t.t1.minus_unit(b).expect("T1(b) > 0").plus_unit(a),
                    t2: t.t2.plus_unit(b).minus_unit(a).expect("T2(a) > 0"),
                    witness: StrongDecomposition {
                        bases: dt.bases,
                        remainder: System::unit(self.n, b),
                    },
                };
                let q = GoodDecomposition {
                    t1: s.t1.minus_unit(c).expect("S1(c) > 0").plus_unit(a),
                    t2: s.t2.plus_unit(c).minus_unit(a).expect("S2(a) > 0"),
                    witness: StrongDecomposition {
                        bases: ds.bases,
                        remainder: System::unit(self.n, c),
                    },
                };
                self.check_move(&r, t)?;
                self.check_move(&q, s)?;
                let after = r.t2.d_h(&q.t2);
                Ok(DescentStep::SharedRemainder {
                    a,
                    b,
                    c,
                    r,
                    q,
                    before,
                    after,
                })
            }
        }
    }

    fn check_move(&self, moved: &GoodDecomposition, from: &GoodDecomposition) -> Result<()> {
        let ok = self.is_strong_decomposition_of(&moved.witness, &moved.t2, 1)
            && moved.total() == from.total()
            && self.locally_related(moved, from, BaseMatching::Unordered)?;
        if !ok {
            return Err(Error::Internal(format!(
                "constructed move {moved:?} is not a locally related good decomposition of {}",
                from.total()
            )));
        }
        Ok(())
    }
}

fn shares_bases(decompositions: &[StrongDecomposition], other: &System) -> bool {
    decompositions.iter().any(|d| {
        let shared = d
            .bases
            .iter()
            .fold(System::zeros(other.n()), |acc, b| acc.plus(b));
        other.minus(&shared).is_some()
    })
}

fn next_permutation<T: Ord>(v: &mut [T]) -> bool {
    if v.len() < 2 {
        return false;
    }
    let mut i = v.len() - 1;
    while i > 0 && v[i - 1] >= v[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = v.len() - 1;
    while v[j] <= v[i - 1] {
        j -= 1;
    }
    v.swap(i - 1, j);
    v[i..].reverse();
    true
}

/// Connected components by union-find, numbered in order of first appearance.
fn components(n: usize, edges: &[(usize, usize)]) -> Vec<usize> {
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut [usize], x: usize) -> usize {
        let mut root = x;
        while parent[root] != root {
            root = parent[root];
        }
        let mut y = x;
        while parent[y] != root {
            let next = parent[y];
            parent[y] = root;
            y = next;
        }
        root
    }
    for &(a, b) in edges {
        let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
        if ra != rb {
            parent[ra.max(rb)] = ra.min(rb);
        }
    }
    let mut label = vec![usize::MAX; n];
    let mut next = 0;
    (0..n)
        .map(|x| {
            let root = find(&mut parent, x);
            if label[root] == usize::MAX {
                label[root] = next;
                next += 1;
            }
            label[root]
        })
        .collect()
}
