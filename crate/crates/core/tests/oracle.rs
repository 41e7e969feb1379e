mod common;

use common::{couple, couple_with, model, spec, spec_with};
use jointva_core::error::Error;
use jointva_core::mortality::Spouse;
use jointva_core::oracle::{oracle_price, CoupleSimulator, MarketSimulator, OracleOptions};
use jointva_core::pricing::{price_total, Evaluator, PriceEstimate};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn opts(paths: u64, seed: u64, step: f64) -> OracleOptions {
    OracleOptions { paths, seed, step }
}

// Mean and standard error of a Bernoulli or bounded sample.
fn mean_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    let v = xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1.0);
    (m, (v / n).sqrt())
}

fn within(sim: PriceEstimate, exact: f64, k: f64) -> bool {
    (sim.value - exact).abs() <= k * sim.std_error
}

#[test]
fn seeded_and_reproducible() {
    let (m, c, q) = (model(), spec(3.0), couple());
    let a = oracle_price(&m, &c, &q, &opts(10_000, 4, 1.0 / 32.0)).unwrap();
    let b = oracle_price(&m, &c, &q, &opts(10_000, 4, 1.0 / 32.0)).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.paths, 10_000);
    let other = oracle_price(&m, &c, &q, &opts(10_000, 5, 1.0 / 32.0)).unwrap();
    assert_ne!(a.total.value, other.total.value);
    // The total is accumulated as its own running mean.
    assert!((a.total.value - (a.gmab.value + a.sb.value + a.db.value)).abs() < 1e-9 * a.total.value);
}

#[test]
fn rejects_bad_options() {
    let (m, c, q) = (model(), spec(3.0), couple());
    assert!(matches!(oracle_price(&m, &c, &q, &opts(500, 1, 1.0 / 64.0)), Err(Error::InvalidParameter { .. })));
    assert!(MarketSimulator::new(&m, &c, 0.3).is_err());
    assert!(MarketSimulator::new(&m, &c, 0.0).is_err());
    assert!(CoupleSimulator::new(&q, 70.0, 0.1).is_err());
}

#[test]
fn market_paths_are_arbitrage_free() {
    let (m, c) = (model(), spec(3.0));
    let sim = MarketSimulator::new(&m, &c, 1.0 / 64.0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let n = 40_000;
    let paths: Vec<_> = (0..n).map(|_| sim.simulate(&mut rng)).collect();
    let dates = paths[0].dates.clone();
    assert_eq!(dates, vec![0.5, 1.0, 1.5, 2.0, 2.5, 3.0]);
    for (k, &t) in dates.iter().enumerate() {
        let disc: Vec<f64> = paths.iter().map(|p| p.discount[k]).collect();
        let (d, se) = mean_se(&disc);
        let bond = (-0.02 * t as f64).exp();
        assert!((d - bond).abs() < 4.0 * se + 1e-12, "discount at {t}: {d} vs {bond} ± {se}");
        let deflated: Vec<f64> = paths.iter().map(|p| p.discount[k] * p.equity[k]).collect();
        let (e, se) = mean_se(&deflated);
        assert!((e - 1.0).abs() < 4.0 * se, "deflated equity at {t}: {e} ± {se}");
    }
    for p in paths.iter().take(100) {
        assert_eq!(p.spread.len(), 1);
        assert!((p.surrender_intensity[0] - (0.02 * p.spread[0].abs() + 0.005)).abs() < 1e-15);
    }
}

#[test]
fn couple_survival_matches_closed_forms() {
    let n = 100_000;
    let horizon = 10.0;
    for eps in [0.0, 1.0] {
        let q = couple_with(|a, b| {
            a.eps = eps;
            b.eps = eps;
        });
        let sim = CoupleSimulator::new(&q, horizon, 1.0 / 64.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let draws: Vec<_> = (0..n).map(|_| sim.simulate(&mut rng)).collect();
        for t in [1.0, 3.0, 5.0, 10.0] {
            let both: Vec<f64> = draws.iter().map(|d| f64::from(u8::from(d.tau1 > t && d.tau2 > t))).collect();
            let (p, se) = mean_se(&both);
            let exact = q.joint_survival(t);
            assert!((p - exact).abs() < 3.0 * se.max(1e-4), "eps {eps} t {t}: {p} vs {exact}");
            for s in [Spouse::First, Spouse::Second] {
                let alive: Vec<f64> = draws.iter().map(|d| f64::from(u8::from(d.tau(s) > t))).collect();
                let (p, se) = mean_se(&alive);
                let exact = if eps == 0.0 { q.single_life_survival(s, t) } else { q.marginal_survival(s, t).unwrap() };
                assert!((p - exact).abs() < 3.0 * se.max(1e-4), "eps {eps} {s:?} t {t}: {p} vs {exact}");
            }
        }
    }
}

#[test]
fn finer_steps_agree() {
    let (m, c, q) = (model(), spec(3.0), couple());
    let coarse = oracle_price(&m, &c, &q, &opts(40_000, 2, 1.0 / 64.0)).unwrap();
    let fine = oracle_price(&m, &c, &q, &opts(40_000, 3, 1.0 / 128.0)).unwrap();
    for (a, b) in [(coarse.gmab, fine.gmab), (coarse.sb, fine.sb), (coarse.db, fine.db)] {
        let sigma = (a.std_error.powi(2) + b.std_error.powi(2)).sqrt();
        assert!((a.value - b.value).abs() < 3.0 * sigma, "{} vs {} ({sigma})", a.value, b.value);
    }
}

#[test]
fn agrees_with_transform_prices_under_heavy_surrender() {
    let m = model();
    let q = couple();
    let c = spec_with(3.0, |p| {
        p.surrender_beta = 0.2;
        p.surrender_baseline = 0.05;
    });
    let exact = price_total(&m, &c, &q, &Evaluator::quadrature(1e-7)).unwrap();
    let sim = oracle_price(&m, &c, &q, &opts(50_000, 9, 1.0 / 64.0)).unwrap();
    assert!(within(sim.gmab, exact.gmab.value, 3.0), "GMAB {:?} vs {}", sim.gmab, exact.gmab.value);
    assert!(within(sim.sb, exact.sb.value, 3.0), "SB {:?} vs {}", sim.sb, exact.sb.value);
    assert!(within(sim.db, exact.db.value, 3.0), "DB {:?} vs {}", sim.db, exact.db.value);
}

#[test]
fn bereavement_clusters_deaths() {
    let n = 200_000;
    let close = |eps: f64| {
        let q = couple_with(|a, b| {
            a.eps = eps;
            b.eps = eps;
        });
        let sim = CoupleSimulator::new(&q, 30.0, 1.0 / 64.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let hits: Vec<f64> = (0..n)
            .map(|_| {
                let d = sim.simulate(&mut rng);
                f64::from(u8::from((d.tau1 - d.tau2).abs() < 1.0))
            })
            .collect();
        mean_se(&hits)
    };
    let (p0, s0) = close(0.0);
    let (p1, s1) = close(1.0);
    assert!(p1 - p0 > 3.0 * (s0 * s0 + s1 * s1).sqrt(), "{p1} vs {p0}");
}

#[test]
fn constant_surrender_intensity() {
    let m = model();
    let c = spec_with(5.0, |p| {
        p.surrender_beta = 0.0;
        p.surrender_baseline = 0.1;
    });
    let sim = MarketSimulator::new(&m, &c, 1.0 / 16.0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let kept: Vec<f64> = (0..40_000).map(|_| f64::from(u8::from(sim.simulate(&mut rng).surrender_index.is_none()))).collect();
    let (p, se) = mean_se(&kept);
    let exact = (-0.1f64 * 3.0).exp();
    assert!((p - exact).abs() < 3.0 * se, "{p} vs {exact} ± {se}");
}
