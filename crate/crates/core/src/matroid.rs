//! Matroids given by independence oracles over `{1,...,n}`.
//!
//! The [`Matroid`] trait is the whole interface: a ground set size and an independence
//! oracle. Rank, greedy maximal independent subsets, bases and circuits are derived in
//! [`MatroidExt`]. Linear matroids decide independence by exact rational elimination.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;
use std::sync::{Arc, RwLock};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::set::{ElementSet, MAX_GROUND};

/// Default cap on `|A|` for [`MatroidExt::circuits_within`].
pub const DEFAULT_CIRCUIT_BOUND: usize = 20;

/// An independence oracle on the ground set `{1,...,n}`.
///
/// Implementations must satisfy the matroid axioms: the empty set is independent, subsets of
/// independent sets are independent, and all maximal independent subsets of any set have the
/// same size.
pub trait Matroid: Send + Sync + fmt::Debug {
    fn ground_size(&self) -> usize;

    /// Independence of `set`; callers guarantee `set ⊆ ground`.
    fn independent(&self, set: ElementSet) -> bool;
}

impl<M: Matroid + ?Sized> Matroid for Arc<M> {
    fn ground_size(&self) -> usize {
        (**self).ground_size()
    }

    fn independent(&self, set: ElementSet) -> bool {
        (**self).independent(set)
    }
}

impl<M: Matroid + ?Sized> Matroid for &M {
    fn ground_size(&self) -> usize {
        (**self).ground_size()
    }

    fn independent(&self, set: ElementSet) -> bool {
        (**self).independent(set)
    }
}

pub trait MatroidExt: Matroid {
    fn ground(&self) -> ElementSet {
        ElementSet::full(self.ground_size())
    }

    fn check_subset(&self, set: ElementSet) -> Result<()> {
        let n = self.ground_size();
        match set.difference(self.ground()).iter().next() {
            Some(i) => Err(Error::Domain { label: i + 1, n }),
            None => Ok(()),
        }
    }

    fn is_independent(&self, set: ElementSet) -> Result<bool> {
        self.check_subset(set)?;
        Ok(self.independent(set))
    }

    /// Greedy maximal independent subset, scanning elements by increasing label.
    fn max_independent_subset(&self, set: ElementSet) -> Result<ElementSet> {
        self.check_subset(set)?;
        Ok(self.greedy_basis(set))
    }

    fn rank(&self, set: ElementSet) -> Result<usize> {
        self.max_independent_subset(set).map(ElementSet::len)
    }

    /// Unchecked greedy; `set` must lie in the ground set.
    fn greedy_basis(&self, set: ElementSet) -> ElementSet {
        let mut basis = ElementSet::EMPTY;
        for e in set.iter() {
            let grown = basis.with(e);
            if self.independent(grown) {
                basis = grown;
            }
        }
        basis
    }

    fn rank_unchecked(&self, set: ElementSet) -> usize {
        self.greedy_basis(set).len()
    }

    fn full_rank(&self) -> usize {
        self.rank_unchecked(self.ground())
    }

    /// All inclusion-minimal dependent subsets of `set`, by exhaustive enumeration.
    fn circuits_within(&self, set: ElementSet, bound: usize) -> Result<Vec<ElementSet>> {
        self.check_subset(set)?;
        if set.len() > bound {
            return Err(Error::SizeBound {
                what: "circuit enumeration",
                size: set.len(),
                bound,
            });
        }
        let mut circuits: Vec<ElementSet> = Vec::new();
        let mut candidates: Vec<ElementSet> = set.subsets().collect();
        candidates.sort_by_key(|s| (s.len(), s.bits()));
        for c in candidates {
            if circuits.iter().any(|k| k.is_subset(c)) {
                continue;
            }
            if !self.independent(c) {
                circuits.push(c);
            }
        }
        Ok(circuits)
    }

    /// Maximal independent subsets of the ground set, in increasing mask order.
    fn bases(&self) -> Vec<ElementSet> {
        let k = self.full_rank();
        k_subsets(self.ground(), k)
            .into_iter()
            .filter(|&b| self.independent(b))
            .collect()
    }
}

impl<M: Matroid + ?Sized> MatroidExt for M {}

/// All subsets of `set` with exactly `k` elements, in increasing mask order.
pub fn k_subsets(set: ElementSet, k: usize) -> Vec<ElementSet> {
    let elems: Vec<usize> = set.iter().collect();
    let mut out = Vec::new();
    let mut chosen = Vec::with_capacity(k);
    fn rec(
        elems: &[usize],
        start: usize,
        k: usize,
        chosen: &mut Vec<usize>,
        out: &mut Vec<ElementSet>,
    ) {
        if chosen.len() == k {
            out.push(ElementSet::from_indices(chosen.iter().copied()));
            return;
        }
        for i in start..elems.len() {
            if elems.len() - i < k - chosen.len() {
                break;
            }
            chosen.push(elems[i]);
            rec(elems, i + 1, k, chosen, out);
            chosen.pop();
        }
    }
    rec(&elems, 0, k, &mut chosen, &mut out);
    out.sort();
    out
}

/// `{A ⊆ ground : |A| <= l}`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct UniformMatroid {
    l: usize,
    n: usize,
}

impl UniformMatroid {
    pub fn new(l: usize, n: usize) -> Result<Self> {
        if n > MAX_GROUND {
            return Err(Error::SizeBound {
                what: "ground set",
                size: n,
                bound: MAX_GROUND,
            });
        }
        if l > n {
            return Err(Error::Precondition(format!(
                "uniform matroid rank {l} exceeds ground size {n}"
            )));
        }
        Ok(UniformMatroid { l, n })
    }

    pub fn rank_bound(&self) -> usize {
        self.l
    }
}

impl Matroid for UniformMatroid {
    fn ground_size(&self) -> usize {
        self.n
    }

    fn independent(&self, set: ElementSet) -> bool {
        set.len() <= self.l
    }
}

/// Rank of a rational matrix by Gaussian elimination over `Q`.
pub fn rational_rank(rows: &[Vec<BigRational>]) -> usize {
    let mut m: Vec<Vec<BigRational>> = rows.to_vec();
    let ncols = m.first().map_or(0, Vec::len);
    let mut rank = 0;
    for col in 0..ncols {
        let Some(pivot) = (rank..m.len()).find(|&r| !m[r][col].is_zero()) else {
            continue;
        };
        m.swap(rank, pivot);
        let inv = m[rank][col].recip();
        for r in rank + 1..m.len() {
            if m[r][col].is_zero() {
                continue;
            }
            let factor = &m[r][col] * &inv;
            for c in col..ncols {
                let delta = &factor * &m[rank][c];
                m[r][c] -= delta;
            }
        }
        rank += 1;
        if rank == m.len() {
            break;
        }
    }
    rank
}

/// Parses `"7"`, `"-3/4"` or `"2.5"`-free rational literals.
pub fn parse_rational(text: &str) -> Result<BigRational> {
    let text = text.trim();
    let parsed = match text.split_once('/') {
        Some((p, q)) => {
            let p = BigInt::from_str(p.trim()).ok();
            let q = BigInt::from_str(q.trim()).ok();
            match (p, q) {
                (Some(p), Some(q)) if !q.is_zero() => Some(BigRational::new(p, q)),
                _ => None,
            }
        }
        None => BigInt::from_str(text).ok().map(BigRational::from_integer),
    };
    parsed.ok_or_else(|| Error::Schema(format!("not a rational number: {text:?}")))
}

pub fn rational_to_f64(q: &BigRational) -> f64 {
    q.to_f64().unwrap_or(f64::NAN)
}

/// Vector matroid of the rows of an exact rational `n × k` matrix.
///
/// Independence decisions are memoized per subset behind a lock, so a shared instance can
/// be queried from many threads.
pub struct LinearMatroid {
    rows: Vec<Vec<BigRational>>,
    cols: usize,
    cache: RwLock<HashMap<ElementSet, bool>>,
}

impl LinearMatroid {
    pub fn new(rows: Vec<Vec<BigRational>>) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::Precondition("matrix has no rows".into()));
        }
        if rows.len() > MAX_GROUND {
            return Err(Error::SizeBound {
                what: "ground set",
                size: rows.len(),
                bound: MAX_GROUND,
            });
        }
        let cols = rows[0].len();
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::Schema("matrix rows have unequal lengths".into()));
        }
        Ok(LinearMatroid {
            rows,
            cols,
            cache: RwLock::new(HashMap::new()),
        })
    }

    pub fn from_integers(rows: &[Vec<i64>]) -> Result<Self> {
        Self::new(
            rows.iter()
                .map(|r| r.iter().map(|&x| BigRational::from_integer(x.into())).collect())
                .collect(),
        )
    }

    pub fn rows(&self) -> &[Vec<BigRational>] {
        &self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn matrix_rank(&self) -> usize {
        rational_rank(&self.rows)
    }

    fn decide(&self, set: ElementSet) -> bool {
        if set.len() > self.cols {
            return false;
        }
        let sub: Vec<Vec<BigRational>> = set.iter().map(|i| self.rows[i].clone()).collect();
        rational_rank(&sub) == set.len()
    }
}

impl Clone for LinearMatroid {
    fn clone(&self) -> Self {
        LinearMatroid {
            rows: self.rows.clone(),
            cols: self.cols,
            cache: RwLock::new(self.cache.read().map(|c| c.clone()).unwrap_or_default()),
        }
    }
}

impl fmt::Debug for LinearMatroid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let rows: Vec<Vec<String>> = self
            .rows
            .iter()
            .map(|r| r.iter().map(ToString::to_string).collect())
            .collect();
        f.debug_struct("LinearMatroid").field("rows", &rows).finish()
    }
}

impl Matroid for LinearMatroid {
    fn ground_size(&self) -> usize {
        self.rows.len()
    }

    fn independent(&self, set: ElementSet) -> bool {
        if set.is_empty() {
            return true;
        }
        if let Some(&hit) = self.cache.read().ok().and_then(|c| c.get(&set).copied()).as_ref() {
            return hit;
        }
        let answer = self.decide(set);
        if let Ok(mut cache) = self.cache.write() {
            cache.insert(set, answer);
        }
        answer
    }
}

/// Lift of a matroid along `f: E → J`: `A ⊆ E` is independent iff `f` is injective on `A`
/// and `f(A)` is independent in the base matroid.
#[derive(Clone, Debug)]
pub struct LiftedMatroid {
    base: Arc<dyn Matroid>,
    map: Vec<usize>,
}

impl LiftedMatroid {
    /// `map[e]` is the 0-based base element that lifted element `e` maps to.
    pub fn new(base: Arc<dyn Matroid>, map: Vec<usize>) -> Result<Self> {
        if map.len() > MAX_GROUND {
            return Err(Error::SizeBound {
                what: "lifted ground set",
                size: map.len(),
                bound: MAX_GROUND,
            });
        }
        let n = base.ground_size();
        if let Some(&bad) = map.iter().find(|&&j| j >= n) {
            return Err(Error::Domain { label: bad + 1, n });
        }
        Ok(LiftedMatroid { base, map })
    }

    /// The lift with `|f⁻¹(j)| = multiplicity[j]`, elements of `E` grouped by image in
    /// increasing order.
    pub fn from_multiplicities(base: Arc<dyn Matroid>, multiplicity: &[u32]) -> Result<Self> {
        let map = multiplicity
            .iter()
            .enumerate()
            .flat_map(|(j, &c)| std::iter::repeat_n(j, c as usize))
            .collect();
        Self::new(base, map)
    }

    pub fn map(&self) -> &[usize] {
        &self.map
    }

    pub fn base(&self) -> &Arc<dyn Matroid> {
        &self.base
    }

    /// `f(A)`, or `None` if `f` is not injective on `A`.
    pub fn image(&self, set: ElementSet) -> Option<ElementSet> {
        let mut image = ElementSet::EMPTY;
        for e in set.iter() {
            let j = self.map[e];
            if image.contains(j) {
                return None;
            }
            image.insert(j);
        }
        Some(image)
    }

    /// `f(A)` as a set, ignoring repetitions.
    pub fn image_set(&self, set: ElementSet) -> ElementSet {
        set.iter().map(|e| self.map[e]).collect()
    }
}

impl Matroid for LiftedMatroid {
    fn ground_size(&self) -> usize {
        self.map.len()
    }

    fn independent(&self, set: ElementSet) -> bool {
        self.image(set).is_some_and(|img| self.base.independent(img))
    }
}

/// A rational matrix entry in JSON: an integer or a `"p/q"` string.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum RationalEntry {
    Int(i64),
    Text(String),
}

impl RationalEntry {
    pub fn to_rational(&self) -> Result<BigRational> {
        match self {
            RationalEntry::Int(v) => Ok(BigRational::from_integer((*v).into())),
            RationalEntry::Text(s) => parse_rational(s),
        }
    }

    pub fn from_rational(q: &BigRational) -> Self {
        if q.denom().is_one() {
            if let Some(v) = q.numer().to_i64() {
                return RationalEntry::Int(v);
            }
        }
        let q = if q.denom().is_negative() { -q.clone() } else { q.clone() };
        RationalEntry::Text(q.to_string())
    }
}

/// JSON description of a matroid:
/// `{"type":"linear","matrix":[[...],...]}` or `{"type":"uniform","l":2,"n":5}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase", deny_unknown_fields)]
pub enum MatroidSpec {
    Linear { matrix: Vec<Vec<RationalEntry>> },
    Uniform { l: usize, n: usize },
}

impl MatroidSpec {
    pub fn build(&self) -> Result<Arc<dyn Matroid>> {
        Ok(match self {
            MatroidSpec::Linear { matrix } => {
                let rows = matrix
                    .iter()
                    .map(|r| r.iter().map(RationalEntry::to_rational).collect())
                    .collect::<Result<Vec<_>>>()?;
                Arc::new(LinearMatroid::new(rows)?)
            }
            MatroidSpec::Uniform { l, n } => Arc::new(UniformMatroid::new(*l, *n)?),
        })
    }

    pub fn linear(m: &LinearMatroid) -> Self {
        MatroidSpec::Linear {
            matrix: m
                .rows()
                .iter()
                .map(|r| r.iter().map(RationalEntry::from_rational).collect())
                .collect(),
        }
    }
}

/// Independence of every subset of a small ground set, tabulated once.
pub struct IndependenceTable {
    n: usize,
    independent: Vec<bool>,
}

/// Largest ground set the exhaustive axiom checks accept.
pub const TABLE_BOUND: usize = 20;

impl IndependenceTable {
    pub fn build<M: Matroid + ?Sized>(m: &M) -> Result<Self> {
        let n = m.ground_size();
        if n > TABLE_BOUND {
            return Err(Error::SizeBound {
                what: "independence table",
                size: n,
                bound: TABLE_BOUND,
            });
        }
        let independent = (0..1u64 << n)
            .map(|bits| m.independent(ElementSet::from_bits(bits)))
            .collect();
        Ok(IndependenceTable { n, independent })
    }

    pub fn ground_size(&self) -> usize {
        self.n
    }

    pub fn get(&self, set: ElementSet) -> bool {
        self.independent[set.bits() as usize]
    }

    /// All maximal independent subsets of `set`.
    pub fn maximal_independent_subsets(&self, set: ElementSet) -> Vec<ElementSet> {
        set.subsets()
            .filter(|&i| {
                self.get(i)
                    && set
                        .difference(i)
                        .iter()
                        .all(|e| !self.get(i.with(e)))
            })
            .collect()
    }
}

/// Counts of axiom and lemma violations found by exhaustive checking.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct AxiomViolations {
    pub empty_dependent: usize,
    pub hereditary: usize,
    pub unequal_maximal: usize,
    /// Independent `I` and element `e` with more than one circuit in `I ∪ {e}`.
    pub multiple_circuits: usize,
    /// Pairs of maximal independent `I1 ⊆ A1`, `I2 ⊆ A2` with `I1 ∪ I2` independent where
    /// the union or intersection fails to be maximal.
    pub union_intersection: usize,
    pub checked_pairs: usize,
}

impl AxiomViolations {
    pub fn total(&self) -> usize {
        self.empty_dependent
            + self.hereditary
            + self.unequal_maximal
            + self.multiple_circuits
            + self.union_intersection
    }
}

/// Exhaustively checks the matroid axioms, the single-circuit property of `I ∪ {e}` and the
/// union/intersection property of compatible maximal independent subsets.
pub fn check_axioms(table: &IndependenceTable) -> AxiomViolations {
    let n = table.ground_size();
    let ground = ElementSet::full(n);
    let mut v = AxiomViolations::default();
    if !table.get(ElementSet::EMPTY) {
        v.empty_dependent += 1;
    }
    for a in ground.subsets() {
        if table.get(a) && a.iter().any(|e| !table.get(a.without(e))) {
            v.hereditary += 1;
        }
    }
    let maximal: Vec<Vec<ElementSet>> = ground
        .subsets()
        .map(|a| table.maximal_independent_subsets(a))
        .collect();
    for sets in &maximal {
        if sets.iter().any(|s| s.len() != sets[0].len()) {
            v.unequal_maximal += 1;
        }
    }
    for i in ground.subsets().filter(|&i| table.get(i)) {
        for e in ground.difference(i).iter() {
            let u = i.with(e);
            let circuits = u
                .subsets()
                .filter(|&c| !table.get(c) && c.iter().all(|x| table.get(c.without(x))))
                .count();
            if circuits > 1 {
                v.multiple_circuits += 1;
            }
        }
    }
    let is_maximal_in = |i: ElementSet, a: ElementSet| {
        table.get(i) && a.difference(i).iter().all(|e| !table.get(i.with(e)))
    };
    for a1 in ground.subsets() {
        for a2 in ground.subsets() {
            for &i1 in &maximal[a1.bits() as usize] {
                for &i2 in &maximal[a2.bits() as usize] {
                    if !table.get(i1.union(i2)) {
                        continue;
                    }
                    v.checked_pairs += 1;
                    if !is_maximal_in(i1.union(i2), a1.union(a2))
                        || !is_maximal_in(i1.intersection(i2), a1.intersection(a2))
                    {
                        v.union_intersection += 1;
                    }
                }
            }
        }
    }
    v
}
