use jointva_core::config::{RunConfig, RunMethod};
use jointva_core::error::Error;
use jointva_core::term_structure::ForwardCurve;
use proptest::prelude::*;

const MINIMAL: &str = "[market]\n[mortality]\n[contract]\n[surrender]\n";

#[test]
fn defaults_are_the_reference_set() {
    let c = RunConfig::default();
    let m = &c.market;
    assert_eq!((m.a, m.b, m.sigma2, m.forward_rate), (0.00258, 0.00143, 0.1559, 0.02));
    assert_eq!((m.nig1_alpha, m.nig1_beta, m.nig1_delta), (3.12, 1.87, 9.24));
    assert_eq!((m.nig2_alpha, m.nig2_beta, m.nig2_delta), (3.31, -1.43, 6.21));
    assert!(m.forward_curve.is_empty());
    let q = &c.mortality;
    assert_eq!((q.lambda0_1, q.lambda0_2), (0.3, 0.3));
    assert_eq!((q.mu_1, q.mu_2), (0.07, 0.05));
    assert_eq!((q.sigma_1, q.sigma_2), (0.005, 0.002));
    assert_eq!((q.eps_1, q.eps_2, q.kappa_1, q.kappa_2), (1.0, 1.0, 0.5, 0.5));
    assert_eq!(q.t_star, 60.0);
    let k = &c.contract;
    assert_eq!((k.notional, k.maturity, k.guarantee_rate, k.penalty_floor), (100.0, 3.0, 0.02, 0.95));
    assert_eq!((k.surrender_step, k.death_step, k.death_multiplier, k.damping), (1.0, 0.5, 1.5, 1.5));
    assert_eq!((c.surrender.beta, c.surrender.baseline), (0.02, 0.005));
    assert_eq!(c.numerics.method, RunMethod::Auto);
    assert_eq!(c.numerics.oracle_step, 1.0 / 64.0);
    c.validate().unwrap();
}

#[test]
fn minimal_file_equals_defaults() {
    assert_eq!(RunConfig::from_toml_str(MINIMAL).unwrap(), RunConfig::default());
}

#[test]
fn partial_sections_keep_other_defaults() {
    let cfg = RunConfig::from_toml_str("[market]\nforward_rate = 0.03\n[mortality]\neps_2 = 0.0\n[contract]\nmaturity = 4\n[surrender]\n[numerics]\nmethod = \"mc\"\nseed = 5\n").unwrap();
    assert_eq!(cfg.market.forward_rate, 0.03);
    assert_eq!(cfg.market.a, 0.00258);
    assert_eq!(cfg.mortality.eps_2, 0.0);
    assert_eq!(cfg.contract.maturity, 4.0);
    assert_eq!(cfg.numerics.method, RunMethod::Mc);
    assert_eq!(cfg.evaluator().seed, 5);
    assert_eq!(cfg.contract_spec().unwrap().k(), 3);
}

#[test]
fn each_required_section_is_named() {
    for section in ["market", "mortality", "contract", "surrender"] {
        let text: String = MINIMAL.lines().filter(|l| *l != format!("[{section}]")).map(|l| format!("{l}\n")).collect();
        let err = RunConfig::from_toml_str(&text).unwrap_err();
        assert!(err.to_string().contains(&format!("[{section}]")), "{err}");
    }
}

#[test]
fn bad_values() {
    let err = RunConfig::from_toml_str("[market]\na = \"x\"\n[mortality]\n[contract]\n[surrender]\n").unwrap_err();
    assert!(matches!(err, Error::Config(_)));
    let err = RunConfig::from_toml_str("[market]\n[mortality]\n[contract]\n[surrender]\n[extra]\n").unwrap_err();
    assert!(err.to_string().contains("extra"), "{err}");

    let mut c = RunConfig::default();
    c.contract.surrender_step = 0.0;
    assert!(c.validate().is_err());
    let mut c = RunConfig::default();
    c.numerics.quad_tol = 0.0;
    assert!(c.validate().is_err());
    let mut c = RunConfig::default();
    c.mortality.sigma_1 = -1.0;
    assert!(c.validate().is_err());
    let mut c = RunConfig::default();
    c.market.nig1_beta = 4.0;
    assert!(c.validate().is_err());
}

#[test]
fn forward_curve_knots() {
    let mut c = RunConfig::default();
    assert_eq!(c.forward_curve().unwrap(), ForwardCurve::Flat(0.02));
    c.market.forward_curve = vec![[0.0, 0.01], [2.0, 0.03], [10.0, 0.03]];
    let f = c.forward_curve().unwrap();
    assert!((f.rate(1.0) - 0.02).abs() < 1e-15);
    assert!((f.integral(0.0, 2.0).unwrap() - 0.04).abs() < 1e-14);
    let m = c.market_model().unwrap();
    assert!((m.bond_price0(3.0).unwrap() - (-0.07f64).exp()).abs() < 1e-14);
    let text = c.to_toml_string().unwrap();
    assert_eq!(RunConfig::from_toml_str(&text).unwrap(), c);
}

#[test]
fn load_from_file() {
    let dir = std::env::temp_dir().join(format!("jointva-config-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("run.toml");
    std::fs::write(&path, RunConfig::default().to_toml_string().unwrap()).unwrap();
    assert_eq!(RunConfig::load(&path).unwrap(), RunConfig::default());
    assert!(RunConfig::load(&dir.join("absent.toml")).is_err());
    std::fs::remove_dir_all(&dir).unwrap();
}

proptest! {
    #[test]
    fn toml_round_trip(
        rate in -0.01f64..0.08,
        mu in 0.0f64..0.2,
        eps in 0.0f64..3.0,
        mat in 1.5f64..10.0,
        beta in 0.0f64..1.0,
        seed in any::<u64>(),
        samples in 2u64..10_000_000,
    ) {
        let mut c = RunConfig::default();
        c.market.forward_rate = rate;
        c.mortality.mu_1 = mu;
        c.mortality.eps_2 = eps;
        c.contract.maturity = mat;
        c.surrender.beta = beta;
        c.numerics.seed = seed;
        c.numerics.samples = samples;
        let back = RunConfig::from_toml_str(&c.to_toml_string().unwrap()).unwrap();
        prop_assert_eq!(back, c);
    }
}
