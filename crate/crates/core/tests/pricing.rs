mod common;

use common::{couple, model, params, rel, spec, spec_with};
use jointva_core::contract::ContractSpec;
use jointva_core::error::Error;
use jointva_core::integrands::BenefitKind;
use jointva_core::pricing::{
    price_db, price_gmab, price_sb, price_total, required_kinds, sensitivity_grid, Evaluator, GridAxis, SensitivityParam,
};

fn quad() -> Evaluator {
    Evaluator::quadrature(1e-7)
}

#[test]
fn required_kinds_cover_both_branches() {
    let k = required_kinds(&spec(3.0));
    let labels: Vec<String> = k.iter().map(|x| x.label()).collect();
    assert_eq!(labels[..3], ["A1", "A2", "B2_1"]);
    assert!(k.contains(&BenefitKind::DbA0(1)) && k.contains(&BenefitKind::DbA0(2)));
    assert!(k.contains(&BenefitKind::DbA1 { j: 1, i: 6 }) && !k.contains(&BenefitKind::DbA0(3)));
    let k = required_kinds(&spec(4.0));
    assert!(k.contains(&BenefitKind::SbB1(2)) && k.contains(&BenefitKind::SbB2(2)) && !k.contains(&BenefitKind::SbB1(1)));
}

#[test]
fn breakdown_is_consistent() {
    let (m, c, q) = (model(), spec(3.0), couple());
    let b = price_total(&m, &c, &q, &quad()).unwrap();
    assert_eq!(b.total.value, b.gmab.value + b.sb.value + b.db.value);
    assert!(b.gmab.value > 0.0 && b.sb.value > 0.0 && b.db.value > 0.0);
    assert!(b.warnings.is_empty(), "{:?}", b.warnings);
    for (kind, e) in &b.integrals {
        assert!(e.imag_residual < 1e-8_f64.max(10.0 * e.std_error), "{}: {}", kind.label(), e.imag_residual);
    }
    let term_sum: f64 = b.terms.iter().map(|t| t.value).sum();
    assert!((term_sum - b.total.value).abs() < 1e-9);

    // GMAB weight recomputed from the survival probability and the flat curve.
    let p_t = q.prob_union_alive(3.0).unwrap();
    let a = b.integral(BenefitKind::GmabA1).unwrap().value + b.integral(BenefitKind::GmabA2).unwrap().value;
    let gmab = p_t * (-0.06f64).exp() * 100.0 * (0.06f64).exp() * a;
    assert!(rel(b.gmab.value, gmab) < 1e-12);
    // One surrender term at T = 3.
    let b2 = b.integral(BenefitKind::SbB2(1)).unwrap().value;
    let sb = 100.0 * (0.95 + 0.05 / 3.0) * q.prob_union_alive(1.0).unwrap() * (1.0 - b2);
    assert!(rel(b.sb.value, sb) < 1e-12);

    let g = price_gmab(&m, &c, &q, &quad()).unwrap();
    let s = price_sb(&m, &c, &q, &quad()).unwrap();
    let d = price_db(&m, &c, &q, &quad()).unwrap();
    assert!(rel(g.price.value, b.gmab.value) < 1e-12);
    assert!(rel(s.price.value, b.sb.value) < 1e-12);
    assert!(rel(d.price.value, b.db.value) < 1e-12);
}

#[test]
fn homogeneous_in_notional() {
    let (m, q) = (model(), couple());
    let base = price_total(&m, &spec(3.0), &q, &quad()).unwrap();
    let big = price_total(&m, &spec_with(3.0, |p| p.notional = 250.0), &q, &quad()).unwrap();
    for (a, b) in [(base.gmab, big.gmab), (base.sb, big.sb), (base.db, big.db), (base.total, big.total)] {
        assert!(rel(b.value, 2.5 * a.value) < 1e-12);
    }
}

#[test]
fn no_surrender_means_no_surrender_benefit() {
    let c = spec_with(3.0, |p| {
        p.surrender_beta = 0.0;
        p.surrender_baseline = 0.0;
    });
    let b = price_total(&model(), &c, &couple(), &quad()).unwrap();
    assert_eq!(b.sb.value, 0.0);
    let c = spec_with(4.0, |p| {
        p.surrender_beta = 0.0;
        p.surrender_baseline = 0.0;
    });
    let s = price_sb(&model(), &c, &couple(), &quad()).unwrap();
    assert_eq!(s.price.value, 0.0);
}

#[test]
fn damping_does_not_move_prices() {
    let (m, q) = (model(), couple());
    let base = price_total(&m, &spec(3.0), &q, &quad()).unwrap();
    for r in [1.2, 1.8] {
        let b = price_total(&m, &spec_with(3.0, |p| p.damping = r), &q, &quad()).unwrap();
        assert!(rel(b.gmab.value, base.gmab.value) < 1e-4, "r = {r}");
        assert!(rel(b.sb.value, base.sb.value) < 1e-4, "r = {r}");
        assert!(rel(b.db.value, base.db.value) < 1e-4, "r = {r}");
    }
}

#[test]
fn monte_carlo_is_seeded_and_unbiased() {
    let (m, c, q) = (model(), spec(3.0), couple());
    let mc = Evaluator::monte_carlo(40_000, 11);
    let a = price_total(&m, &c, &q, &mc).unwrap();
    let b = price_total(&m, &c, &q, &mc).unwrap();
    assert_eq!(a.total.value.to_bits(), b.total.value.to_bits());
    assert_eq!(a.total.std_error.to_bits(), b.total.std_error.to_bits());
    let other = price_total(&m, &c, &q, &Evaluator::monte_carlo(40_000, 12)).unwrap();
    assert_ne!(a.total.value, other.total.value);

    let exact = price_total(&m, &c, &q, &quad()).unwrap();
    for (x, e) in [(a.gmab, exact.gmab), (a.sb, exact.sb), (a.db, exact.db)] {
        assert!(x.std_error > 0.0);
        assert!((x.value - e.value).abs() < 4.0 * x.std_error, "{} vs {} ± {}", x.value, e.value, x.std_error);
    }
}

#[test]
fn sub_seeds_are_distinct() {
    let e = Evaluator::monte_carlo(10, 1);
    let kinds = required_kinds(&spec(5.0));
    let mut seeds: Vec<u64> = kinds.iter().map(|&k| e.sub_seed(k)).collect();
    seeds.sort();
    seeds.dedup();
    assert_eq!(seeds.len(), kinds.len());
}

#[test]
fn grid_shares_market_integrals_and_reports_failing_cell() {
    let (m, q) = (model(), couple());
    let x = GridAxis::new(SensitivityParam::Eps1, vec![0.0, 1.0]).unwrap();
    let y = GridAxis::new(SensitivityParam::Kappa2, vec![0.25, 0.75]).unwrap();
    let cells = sensitivity_grid(&m, &params(3.0), &q, &quad(), &x, &y).unwrap();
    assert_eq!(cells.len(), 4);
    assert_eq!((cells[1].x, cells[1].y), (0.0, 0.75));
    let a1 = |i: usize| cells[i].breakdown.integral(BenefitKind::GmabA1).unwrap().value;
    assert!((1..4).all(|i| a1(i).to_bits() == a1(0).to_bits()));
    assert_ne!(cells[0].breakdown.total.value, cells[3].breakdown.total.value);

    let x = GridAxis::new(SensitivityParam::SurrenderBeta, vec![0.02, 1.5]).unwrap();
    let y = GridAxis::new(SensitivityParam::Eps2, vec![1.0]).unwrap();
    let err = sensitivity_grid(&m, &params(3.0), &q, &quad(), &x, &y).unwrap_err();
    match err {
        Error::Cell { axis1, x, axis2, y, source } => {
            assert_eq!((axis1.as_str(), x, axis2.as_str(), y), ("beta", 1.5, "eps2", 1.0));
            assert!(matches!(*source, Error::InvalidParameter { .. }));
        }
        other => panic!("unexpected {other}"),
    }
}

#[test]
fn axis_parsing() {
    assert_eq!(SensitivityParam::parse("c").unwrap(), SensitivityParam::SurrenderBaseline);
    assert!(SensitivityParam::parse("gamma").is_err());
    let g = GridAxis::linspace(SensitivityParam::GuaranteeRate, 0.0, 0.03, 4).unwrap();
    assert_eq!(g.values.len(), 4);
    assert!((g.values[3] - 0.03).abs() < 1e-15);
    assert!(GridAxis::linspace(SensitivityParam::GuaranteeRate, 0.0, 0.03, 1).is_err());
    assert!(GridAxis::new(SensitivityParam::Eps1, vec![f64::NAN]).is_err());
}

#[test]
fn contract_spec_is_required_for_every_family() {
    let c: ContractSpec = spec(4.0);
    let b = price_total(&model(), &c, &couple(), &Evaluator::monte_carlo(20_000, 3)).unwrap();
    assert_eq!(b.integrals.len(), required_kinds(&c).len());
    assert!(b.total.value.is_finite() && b.total.std_error > 0.0);
}

#[test]
fn baseline_surrender_moves_value_into_the_surrender_benefit() {
    let (m, q) = (model(), couple());
    let x = GridAxis::new(SensitivityParam::SurrenderBaseline, vec![0.0, 0.02]).unwrap();
    let y = GridAxis::new(SensitivityParam::SurrenderBeta, vec![0.02]).unwrap();
    let cells = sensitivity_grid(&m, &params(3.0), &q, &quad(), &x, &y).unwrap();
    let (lo, hi) = (&cells[0].breakdown, &cells[1].breakdown);
    assert!(hi.sb.value > lo.sb.value);
    assert!(hi.gmab.value < lo.gmab.value);
    assert!(hi.db.value < lo.db.value);
}
