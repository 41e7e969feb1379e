mod common;

use common::{model, rel, spec, spec_with};
use jointva_core::error::Error;
use jointva_core::integrands::{BenefitKind, IntegrandFactory};
use jointva_core::integration::{quad_nd, Integrand};
use jointva_core::pricing::{required_kinds, Evaluator};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn factory(t: f64) -> IntegrandFactory {
    IntegrandFactory::new(&model(), &spec(t)).unwrap()
}

fn random_point(rng: &mut ChaCha8Rng, d: usize) -> Vec<f64> {
    (0..d).map(|_| rng.random_range(-1.0..1.0f64) * 10f64.powf(rng.random_range(-3.0..2.0))).collect()
}

#[test]
fn dimensions_follow_the_surrender_grid() {
    let f3 = factory(3.0);
    let dims: Vec<(String, usize)> = required_kinds(f3.contract()).into_iter().map(|k| (k.label(), f3.build_kind(k).unwrap().dim())).collect();
    let get = |l: &str| dims.iter().find(|(x, _)| x == l).unwrap().1;
    assert_eq!((get("A1"), get("A2"), get("B2_1"), get("A0_1"), get("A1_1,3"), get("A2_1,3")), (1, 2, 1, 1, 1, 2));
    let f4 = factory(4.0);
    assert_eq!(f4.gmab_n().unwrap().dim(), 3);
    assert_eq!(f4.sb_m(2).unwrap().dim(), 1);
    assert_eq!(f4.sb_n(2).unwrap().dim(), 2);
    // No surrender intensity: only the damping coordinate is left.
    let f0 = IntegrandFactory::new(&model(), &spec_with(3.0, |p| p.surrender_beta = 0.0)).unwrap();
    assert_eq!(f0.gmab_m().unwrap().dim(), 0);
    assert_eq!(f0.gmab_n().unwrap().dim(), 1);
}

#[test]
fn conjugate_symmetry_of_every_family() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for t in [3.0, 4.0] {
        let f = factory(t);
        for kind in required_kinds(f.contract()) {
            let it = f.build_kind(kind).unwrap();
            for _ in 0..20 {
                let x = random_point(&mut rng, it.dim());
                let neg: Vec<f64> = x.iter().map(|v| -v).collect();
                let a = it.residual(&x).unwrap();
                let b = it.residual(&neg).unwrap();
                assert!((a.conj() - b).norm() <= 1e-10 * a.norm().max(1e-300), "{} at {x:?}", kind.label());
            }
        }
    }
}

#[test]
fn residuals_are_bounded_after_removing_cauchy_factors() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for t in [3.0, 4.0] {
        let f = factory(t);
        for kind in required_kinds(f.contract()) {
            let it = f.build_kind(kind).unwrap();
            let mut worst: f64 = 0.0;
            for _ in 0..200 {
                let x: Vec<f64> = (0..it.dim()).map(|_| rng.random_range(-1.0..1.0f64) * 10f64.powf(rng.random_range(-4.0..4.0))).collect();
                let v = it.residual(&x).unwrap().norm();
                assert!(v.is_finite());
                worst = worst.max(v);
            }
            assert!(worst < 10.0, "{}: max |residual| {worst}", kind.label());
        }
    }
}

#[test]
fn breakpoint_splitting_is_consistent() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let f = factory(4.0);
    for kind in [BenefitKind::GmabA1, BenefitKind::GmabA2, BenefitKind::SbB2(2), BenefitKind::DbA2 { j: 2, i: 8 }] {
        let it = f.build_kind(kind).unwrap();
        for _ in 0..10 {
            let x: Vec<f64> = (0..it.dim()).map(|_| rng.random_range(-5.0..5.0)).collect();
            let a = it.exponent(&x).unwrap();
            let b = it.exponent_unsplit(&x).unwrap();
            assert!((a - b).norm() < 1e-8 * a.norm().max(1.0), "{}: {a} vs {b}", kind.label());
        }
    }
}

#[test]
fn damped_integrals_do_not_depend_on_damping() {
    let kinds = [BenefitKind::GmabA2, BenefitKind::DbA0(1), BenefitKind::DbA2 { j: 1, i: 3 }, BenefitKind::DbA2 { j: 1, i: 6 }];
    let ev = Evaluator::quadrature(1e-8);
    for kind in kinds {
        let vals: Vec<f64> = [1.2, 1.5, 1.8]
            .iter()
            .map(|&r| {
                let f = IntegrandFactory::new(&model(), &spec_with(3.0, |p| p.damping = r)).unwrap();
                ev.evaluate(&f.build_kind(kind).unwrap()).unwrap().value
            })
            .collect();
        assert!(rel(vals[0], vals[1]) < 1e-4 && rel(vals[2], vals[1]) < 1e-4, "{}: {vals:?}", kind.label());
    }
}

#[test]
fn constant_survivor_integrals_without_intensity() {
    // β = 0 collapses the surrender coordinates; the M families then equal their baseline factors.
    let s = spec_with(3.0, |p| p.surrender_beta = 0.0);
    let f = IntegrandFactory::new(&model(), &s).unwrap();
    let it = f.gmab_m().unwrap();
    let v = quad_nd(&it, 1e-10).map(|r| it.assemble(r)).unwrap();
    assert!(rel(v.value, s.baseline_factor(s.k())) < 1e-12, "{}", v.value);
}

#[test]
fn index_and_admissibility_errors() {
    let f = factory(3.0);
    assert!(matches!(f.sb_n(0), Err(Error::IndexOutOfRange { .. })));
    assert!(matches!(f.sb_n(2), Err(Error::IndexOutOfRange { .. })));
    assert!(matches!(f.db_m(2, 3), Err(Error::Inadmissible { j: 2, i: 3 })));
    assert!(matches!(f.db_n0(3), Err(Error::Inadmissible { .. })));
    assert!(f.db_n0(2).is_ok());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn conjugate_symmetry_random_points(x in proptest::collection::vec(-50.0f64..50.0, 3)) {
        let f = factory(4.0);
        let it = f.gmab_n().unwrap();
        let neg: Vec<f64> = x.iter().map(|v| -v).collect();
        let a = it.residual(&x).unwrap();
        let b = it.residual(&neg).unwrap();
        prop_assert!((a.conj() - b).norm() <= 1e-10 * a.norm().max(1e-300));
    }
}
