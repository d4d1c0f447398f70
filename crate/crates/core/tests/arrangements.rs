use frobenius_like::arrangements::{verify_arrangement, ArrangementData, ArrangementOptions, ArrangementStructure};
use frobenius_like::fd::C64;
use frobenius_like::frobenius::{
    axiom_report, build_q, generation_rank, sample_points, FlatFrameStructure, FormTensor, FrobeniusOptions,
};
use frobenius_like::systems::System;
use nalgebra::DVector;

fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

fn structure(b: &[i64], a: &[f64], x: &[f64], m: usize) -> ArrangementStructure {
    let rows: Vec<Vec<i64>> = b.iter().map(|&v| vec![v]).collect();
    let d = ArrangementData::from_integers(&rows, a, x).unwrap();
    ArrangementStructure::new(d, m, ArrangementOptions::default()).unwrap()
}

fn pair() -> ArrangementStructure {
    structure(&[1, 1], &[1.0, 1.0], &[1.0, -1.0], 2)
}

#[test]
fn pair_fixture_closed_forms() {
    let s = pair();
    for z in [[c(1.0), c(-1.0)], [c(0.3), c(2.0)], [C64::new(1.0, 0.5), c(-0.25)]] {
        let d = z[0] - z[1];
        let fiber = s.fiber(&z).unwrap();
        assert_eq!(fiber.mu(), 1);
        // The single critical point is t = -(z1+z2)/2, where p_1 = 2/(z1-z2) = -p_2.
        let p1 = fiber.higgs[0][(0, 0)];
        assert!((p1 - 2.0 / d).norm() < 1e-12);
        assert!((fiber.higgs[1][(0, 0)] + p1).norm() < 1e-12);
        assert!((fiber.form_on_sections(&[], 2) + d * d / 8.0).norm() < 1e-12);
        let t = System::from_vec(vec![2, 0]);
        assert!((fiber.form_on_sections(&[t], 2) - c(-0.5)).norm() < 1e-12);
    }
    let frame = s.critical_points_at_basepoint();
    assert!(frame.points[0][0].norm() < 1e-14);
    assert!((frame.hessian_determinants()[0] - c(-2.0)).norm() < 1e-12);
}

#[test]
fn point_count_is_n_minus_one() {
    for (b, x) in [
        (vec![1, 2, -1], vec![0.5, -3.0, 2.0]),
        (vec![1, 1, 1, 3], vec![0.0, 1.0, -2.0, 1.5]),
        (vec![2, -1, 1, 1, 1], vec![1.0, 0.0, 3.0, -1.0, 2.5]),
    ] {
        let a = vec![1.0; b.len()];
        let s = structure(&b, &a, &x, 2);
        assert_eq!(s.mu(), b.len() - 1);
        let (rank, residual) = s.period_map_kernel().unwrap();
        assert_eq!(rank, b.len() - 1);
        assert!(residual < 1e-12);
        assert_eq!(generation_rank(&s).unwrap(), s.mu());
        assert!(s.pairing_condition().is_finite());
    }
}

#[test]
fn discriminant_probe_thresholds() {
    let d = ArrangementData::from_integers(&[vec![1], vec![1]], &[1.0, 1.0], &[1.0, -1.0]).unwrap();
    let opts = ArrangementOptions::default();
    assert!(!d.discriminant_probe(&[c(0.0), c(0.0)], &opts));
    assert!(!d.discriminant_probe(&[c(1e-14), c(0.0)], &opts));
    assert!(d.discriminant_probe(&[c(1.0), c(-1.0)], &opts));
    assert!(d.discriminant_probe(&[C64::new(0.2, 0.7), c(-1.3)], &opts));
    assert_eq!(d.critical_points(&[c(0.0), c(0.0)], &opts).unwrap_err().code(), "near_discriminant");
}

#[test]
fn form_is_symmetric_and_multiplication_invariant() {
    let s = structure(&[1, 2, -1, 1], &[1.0, 0.5, 2.0, 1.5], &[0.0, 1.0, 1.5, -2.0], 2);
    let fiber = s.fiber(&[c(0.1), c(1.0), c(1.5), c(-2.1)]).unwrap();
    assert!(matches!(fiber.form, FormTensor::Diagonal(_)));
    let mu = fiber.mu();
    let h1 = DVector::from_fn(mu, |i, _| C64::new(1.0 + i as f64, 0.5));
    let h2 = DVector::from_fn(mu, |i, _| C64::new(-0.5, 2.0 - i as f64));
    let s12 = fiber.form.eval(&[h1.clone(), h2.clone()]);
    assert!((s12 - fiber.form.eval(&[h2.clone(), h1.clone()])).norm() <= 1e-12 * s12.norm().max(1.0));
    for p in &fiber.higgs {
        let left = fiber.form.eval(&[p * &h1, h2.clone()]);
        let right = fiber.form.eval(&[h1.clone(), p * &h2]);
        assert!((left - right).norm() <= 1e-12 * left.norm().max(1.0));
    }
}

#[test]
fn continuation_keeps_the_labeling() {
    let s = structure(&[1, -2, 1, 3], &[1.0, 1.0, 2.0, 0.5], &[0.0, 2.0, 2.0, -6.0], 2);
    let x = s.basepoint().to_vec();
    let z: Vec<C64> = x.iter().enumerate().map(|(i, v)| v + C64::new(0.05 * i as f64, -0.03)).collect();
    let tracked = s.frame_at(&z).unwrap();
    let direct = s.data().critical_points(&z, &ArrangementOptions::default()).unwrap();
    assert_eq!(tracked.mu(), direct.mu());
    // Tracked points are a permutation of the directly computed ones.
    for p in &tracked.points {
        let nearest = direct
            .points
            .iter()
            .map(|q| (p[0] - q[0]).norm())
            .fold(f64::INFINITY, f64::min);
        assert!(nearest < 1e-9);
    }
    // Small moves keep each point close to where it started.
    for (p, q) in tracked.points.iter().zip(&s.critical_points_at_basepoint().points) {
        assert!((p[0] - q[0]).norm() < 0.5);
    }
}

#[test]
fn verification_report() {
    let report = verify_arrangement(&pair(), &FrobeniusOptions::default()).unwrap();
    assert!(report.valid);
    assert_eq!((report.n, report.k, report.m, report.mu), (2, 1, 2, 1));
    assert!((report.form_unit - c(-0.5)).norm() < 1e-12);
    assert!(report.vanishing < 1e-12);
    assert_eq!(report.generation_rank, 1);
}

#[test]
fn other_orders_are_not_flat() {
    // With m = 3 the form on flat sections varies with z.
    let s = structure(&[1, 1, 2], &[1.0, 1.0, 1.0], &[1.0, -1.0, 0.5], 3);
    let opts = FrobeniusOptions::default();
    let report = axiom_report(&s, &sample_points(s.basepoint(), &opts), &opts).unwrap();
    assert!(report.commutativity < 1e-9 && report.integrability < 1e-7);
    assert!(report.form_flatness > 1e-3);
    assert_eq!(build_q(&s, &opts).unwrap_err().code(), "flatness");
}

#[test]
fn higher_rank_is_gated() {
    let rows = vec![vec![1, 0], vec![0, 1], vec![1, 1], vec![1, -1]];
    let d = ArrangementData::from_integers(&rows, &[1.0; 4], &[0.0, 0.3, 2.0, -1.7]).unwrap();
    let z = d.basepoint().to_vec();
    assert_eq!(d.critical_points(&z, &ArrangementOptions::default()).unwrap_err().code(), "unsupported");
    let opts = ArrangementOptions { allow_k_ge_2: true, ..Default::default() };
    // Four generic lines in the plane: μ = 3 bounded chambers.
    assert_eq!(d.critical_points(&z, &opts).unwrap().mu(), 3);
}

#[test]
fn input_validation() {
    assert_eq!(ArrangementData::from_integers(&[vec![1], vec![1]], &[1.0], &[0.0, 1.0]).unwrap_err().code(), "schema");
    assert_eq!(ArrangementData::from_integers(&[vec![0], vec![0]], &[1.0, 1.0], &[0.0, 1.0]).unwrap_err().code(), "rank");
    assert_eq!(
        ArrangementData::from_integers(&[vec![1], vec![1]], &[1.0, 0.0], &[0.0, 1.0]).unwrap_err().code(),
        "precondition"
    );
}
