use std::collections::BTreeSet;
use std::sync::Arc;

use frobenius_like::matroid::{LinearMatroid, Matroid, MatroidExt, UniformMatroid};
use frobenius_like::systems::{
    subsystems_of_size, systems_of_size, BaseMatching, ExchangeAlternative, StrongDecomposition, System,
    SystemContext,
};
use frobenius_like::{ElementSet, Execution};
use proptest::prelude::*;

fn sys(v: &[u32]) -> System {
    System::from_vec(v.to_vec())
}

fn uniform(l: usize, n: usize) -> Arc<dyn Matroid> {
    Arc::new(UniformMatroid::new(l, n).unwrap())
}

fn linear(rows: &[Vec<i64>]) -> Arc<dyn Matroid> {
    Arc::new(LinearMatroid::from_integers(rows).unwrap())
}

fn triangle() -> Arc<dyn Matroid> {
    linear(&[vec![1, 0], vec![0, 1], vec![1, 1]])
}

/// Every way to write `t` as `m` bases plus a remainder, with bases in nondecreasing order,
/// found by recursion over the base list of the matroid (computed here from scratch).
fn brute_force_decompositions(matroid: &dyn Matroid, m: usize, t: &System) -> BTreeSet<StrongDecomposition> {
    let n = t.n();
    let bases: Vec<System> = matroid
        .bases()
        .into_iter()
        .map(|b| System::indicator(n, b))
        .collect();
    fn rec(
        bases: &[System],
        from: usize,
        left: usize,
        rest: &System,
        chosen: &mut Vec<System>,
        out: &mut BTreeSet<StrongDecomposition>,
    ) {
        if left == 0 {
            out.insert(StrongDecomposition { bases: chosen.clone(), remainder: rest.clone() });
            return;
        }
        for (i, b) in bases.iter().enumerate().skip(from) {
            if let Some(r) = rest.minus(b) {
                chosen.push(b.clone());
                rec(bases, i, left - 1, &r, chosen, out);
                chosen.pop();
            }
        }
    }
    let mut out = BTreeSet::new();
    let mut sorted = bases;
    sorted.sort();
    rec(&sorted, 0, m, t, &mut Vec::new(), &mut out);
    out
}

#[test]
fn is_base_examples() {
    let u = SystemContext::new(uniform(1, 3), 1).unwrap();
    assert!(u.is_base(&sys(&[0, 1, 0])));
    let tri = SystemContext::new(triangle(), 1).unwrap();
    assert!(tri.is_base(&sys(&[1, 0, 1])));
    assert!(!tri.is_base(&sys(&[2, 0, 0])));
    assert!(!tri.is_base(&sys(&[1, 1, 1])));
}

#[test]
fn strong_decompositions_match_exhaustive_search() {
    for matroid in [uniform(1, 3), uniform(2, 4), triangle(), linear(&[vec![1, 0], vec![2, 0], vec![0, 1]])] {
        for m in 1..=3 {
            let ctx = SystemContext::new(matroid.clone(), m).unwrap();
            for size in ctx.mk()..=ctx.mk() + 2 {
                for t in systems_of_size(ctx.n(), size) {
                    let l = size - ctx.mk();
                    let oracle = brute_force_decompositions(matroid.as_ref(), m, &t);
                    let found: BTreeSet<_> = ctx.strong_decompositions(&t, l).unwrap().into_iter().collect();
                    assert_eq!(found, oracle, "T = {t}, m = {m}");
                    assert_eq!(ctx.strong_decomposition(&t, l).unwrap().is_some(), !oracle.is_empty());
                    if let Some(d) = ctx.strong_decomposition(&t, l).unwrap() {
                        assert!(ctx.is_strong_decomposition_of(&d, &t, l));
                        assert!(oracle.contains(&d.clone().canonical()));
                    }
                }
            }
        }
    }
}

#[test]
fn one_singleton_matroid_two_parts() {
    let ctx = SystemContext::new(uniform(1, 3), 2).unwrap();
    let t = sys(&[2, 1, 0]);
    let all = ctx.strong_decompositions(&t, 1).unwrap();
    let expected = StrongDecomposition { bases: vec![sys(&[0, 1, 0]), sys(&[1, 0, 0])], remainder: sys(&[1, 0, 0]) };
    assert!(all.contains(&expected));
    assert_eq!(all.len(), 2);
    // With no remainder the only option for (1,1,0) is the two singletons.
    let d = ctx.strong_decomposition(&sys(&[1, 1, 0]), 0).unwrap().unwrap();
    assert_eq!(d.remainder, System::zeros(3));
}

#[test]
fn dependent_pair_has_no_two_disjoint_bases() {
    let ctx = SystemContext::new(linear(&[vec![1, 0], vec![2, 0], vec![0, 1]]), 2).unwrap();
    let t = sys(&[2, 2, 0]);
    assert!(ctx.strong_decomposition(&t, 0).unwrap().is_none());
    let w = ctx.capacity_violation(&t, 0).unwrap().unwrap();
    assert!(w.lhs > w.rhs);
    let b12 = ElementSet::from_labels(&[1, 2]);
    assert_eq!(t.weight_on(b12), 4);
    assert!(ctx.capacity_violation(&sys(&[1, 1, 2]), 0).unwrap().is_none());
}

#[test]
fn arity_errors() {
    let ctx = SystemContext::new(uniform(1, 3), 2).unwrap();
    assert_eq!(ctx.strong_decomposition(&sys(&[1, 1, 0]), 1).unwrap_err().code(), "arity");
    assert_eq!(ctx.good_decompositions(&sys(&[1, 1, 0])).unwrap_err().code(), "arity");
    assert_eq!(ctx.a_dec(&sys(&[2, 0, 0]), Execution::Sequential).unwrap_err().code(), "precondition");
}

#[test]
fn good_decompositions_of_two_two() {
    let ctx = SystemContext::new(uniform(1, 2), 2).unwrap();
    let goods = ctx.good_decompositions(&sys(&[2, 2])).unwrap();
    // The 3-subsystems of (2,2) are (2,1) and (1,2); both are strong.
    let oracle: Vec<System> = subsystems_of_size(&sys(&[2, 2]), 3)
        .into_iter()
        .filter(|t2| !brute_force_decompositions(uniform(1, 2).as_ref(), 2, t2).is_empty())
        .collect();
    assert_eq!(goods.iter().map(|d| d.t2.clone()).collect::<Vec<_>>(), oracle);
    assert_eq!(oracle, vec![sys(&[1, 2]), sys(&[2, 1])]);
    assert!(SystemContext::new(linear(&[vec![1, 0], vec![2, 0], vec![0, 1]]), 2)
        .unwrap()
        .good_decompositions(&sys(&[3, 2, 0]))
        .unwrap()
        .is_empty());
}

#[test]
fn relabeling_by_automorphisms_preserves_counts() {
    let cases: Vec<(Arc<dyn Matroid>, Vec<usize>)> = vec![
        (uniform(2, 4), vec![2, 0, 3, 1]),
        (triangle(), vec![1, 2, 0]),
        (linear(&[vec![1, 0], vec![2, 0], vec![0, 1]]), vec![1, 0, 2]),
    ];
    for (matroid, perm) in cases {
        let full = ElementSet::full(perm.len());
        for a in full.subsets() {
            let image: ElementSet = a.iter().map(|e| perm[e]).collect();
            assert_eq!(matroid.rank(a).unwrap(), matroid.rank(image).unwrap(), "not an automorphism");
        }
        let ctx = SystemContext::new(matroid, 2).unwrap();
        for t in systems_of_size(perm.len(), ctx.mk() + 2) {
            let mut permuted = vec![0; perm.len()];
            for (j, &c) in t.as_slice().iter().enumerate() {
                permuted[perm[j]] = c;
            }
            assert_eq!(
                ctx.good_decompositions(&t).unwrap().len(),
                ctx.good_decompositions(&System::from_vec(permuted)).unwrap().len()
            );
        }
    }
}

#[test]
fn small_equivalence_example() {
    let ctx = SystemContext::new(uniform(1, 3), 2).unwrap();
    let report = ctx.equivalence_report(&sys(&[2, 1, 1]), Execution::Parallel).unwrap();
    assert_eq!(report.components, 1);
    assert!(!report.nodes.is_empty());
    assert!(report.component_of.iter().all(|&c| c == 0));
}

#[test]
fn edges_match_the_unfiltered_relation() {
    for matroid in [uniform(1, 3), uniform(2, 4), triangle()] {
        for m in 1..=2 {
            let ctx = SystemContext::new(matroid.clone(), m).unwrap();
            for t in systems_of_size(ctx.n(), ctx.mk() + 2) {
                let report = ctx.equivalence_report(&t, Execution::Sequential).unwrap();
                let mut edges = Vec::new();
                for i in 0..report.nodes.len() {
                    for j in 0..report.nodes.len() {
                        let (a, b) = (&report.nodes[i], &report.nodes[j]);
                        let rel = ctx.locally_related(a, b, BaseMatching::Unordered).unwrap();
                        assert_eq!(rel, ctx.locally_related(b, a, BaseMatching::Unordered).unwrap());
                        assert_eq!(rel, ctx.locally_related(a, b, BaseMatching::Strict).unwrap());
                        if i == j {
                            assert!(rel, "reflexive");
                        } else if i < j && rel {
                            edges.push((i, j));
                        }
                    }
                }
                assert_eq!(report.edges, edges, "T = {t}");
                let parallel = ctx.equivalence_report(&t, Execution::Parallel).unwrap();
                assert_eq!(parallel.edges, report.edges);
                assert_eq!(parallel.component_of, report.component_of);
            }
        }
    }
}

#[test]
fn mismatched_totals_are_rejected() {
    let ctx = SystemContext::new(uniform(1, 3), 2).unwrap();
    let a = ctx.good_decompositions(&sys(&[2, 1, 1])).unwrap();
    let b = ctx.good_decompositions(&sys(&[1, 1, 2])).unwrap();
    let e = ctx.locally_related(&a[0], &b[0], BaseMatching::Unordered).unwrap_err();
    assert_eq!(e.code(), "domain");
}

#[test]
fn a_dec_examples() {
    let ctx = SystemContext::new(uniform(1, 3), 2).unwrap();
    let t = sys(&[3, 0, 0]);
    assert_eq!(ctx.a_dec(&t, Execution::Sequential).unwrap(), ElementSet::from_labels(&[1]));
    assert_eq!(ctx.g_family(&t).unwrap(), vec![ElementSet::from_labels(&[1])]);
    let t = sys(&[1, 1, 1]);
    assert_eq!(ctx.a_dec(&t, Execution::Sequential).unwrap(), ElementSet::full(3));
    assert_eq!(ctx.a_min(&t).unwrap(), ElementSet::full(3));
    let weak = SystemContext::new(linear(&[vec![1, 0], vec![2, 0], vec![0, 1]]), 2).unwrap();
    assert_eq!(weak.a_dec(&sys(&[3, 2, 0]), Execution::Sequential).unwrap_err().code(), "precondition");
}

#[test]
fn exchange_alternatives_are_certified() {
    for matroid in [uniform(1, 3), uniform(2, 4), triangle()] {
        for m in 1..=2 {
            let ctx = SystemContext::new(matroid.clone(), m).unwrap();
            let strong: Vec<System> = systems_of_size(ctx.n(), ctx.mk() + 1)
                .into_iter()
                .filter(|t| ctx.is_strong(t).unwrap())
                .collect();
            for s in &strong {
                for t in &strong {
                    match ctx.exchange_alternative(s, t).unwrap() {
                        ExchangeAlternative::Alpha { i, decomposition } => {
                            assert!(t.get(i) > s.get(i));
                            assert_eq!(decomposition.remainder, System::unit(ctx.n(), i));
                            assert!(ctx.is_strong_decomposition_of(&decomposition, t, 1));
                        }
                        ExchangeAlternative::Beta { pairs } => {
                            assert_eq!(pairs.len(), ctx.strong_decompositions(s, 1).unwrap().len());
                            for (ds, dt) in pairs {
                                assert_eq!(ds.remainder, dt.remainder);
                                assert!(ctx.is_strong_decomposition_of(&dt, t, 1));
                            }
                        }
                    }
                }
                assert!(matches!(ctx.exchange_alternative(s, s).unwrap(), ExchangeAlternative::Beta { .. }));
            }
        }
    }
}

fn system_triple() -> impl Strategy<Value = (System, System, System)> {
    (1usize..=5).prop_flat_map(|n| {
        let v = || prop::collection::vec(0u32..=4, n).prop_map(System::from_vec);
        (v(), v(), v())
    })
}

proptest! {
    #[test]
    fn d_h_is_a_metric((a, b, c) in system_triple()) {
        prop_assert_eq!(a.d_h(&a), 0);
        prop_assert_eq!(a.d_h(&b), b.d_h(&a));
        prop_assert!(a.d_h(&c) <= a.d_h(&b) + b.d_h(&c));
        prop_assert_eq!(a.d_h(&b) == 0, a == b);
        // Translation invariance.
        prop_assert_eq!(a.plus(&c).d_h(&b.plus(&c)), a.d_h(&b));
    }

    #[test]
    fn plus_minus_round_trip((a, b, _c) in system_triple()) {
        let s = a.plus(&b);
        prop_assert_eq!(s.minus(&b), Some(a.clone()));
        prop_assert_eq!(s.size(), a.size() + b.size());
        prop_assert!(b.le(&s));
        prop_assert_eq!(s.support(), a.support().union(b.support()));
    }

    #[test]
    fn capacity_inequality_iff_strong(counts in prop::collection::vec(0u32..=3, 4), m in 1usize..=2) {
        let ctx = SystemContext::new(uniform(2, 4), m).unwrap();
        let t = System::from_vec(counts);
        prop_assume!(t.size() >= ctx.mk());
        let l = t.size() - ctx.mk();
        prop_assert_eq!(
            ctx.strong_decomposition(&t, l).unwrap().is_some(),
            ctx.capacity_violation(&t, l).unwrap().is_none()
        );
    }
}
