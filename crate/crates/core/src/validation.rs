//! Invariant battery behind the `validate` command.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::integrands::{BenefitKind, IntegrandFactory};
use crate::integration::{bias_report, Integrand};
use crate::mortality::{CoupleMortality, SpouseParams};
use crate::oracle::MarketSimulator;
use crate::pricing::{required_kinds, Evaluator, MethodChoice};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Pass,
    Fail,
    Skipped,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckResult {
    pub name: String,
    pub outcome: Outcome,
    pub detail: String,
}

impl CheckResult {
    fn new(name: &str, pass: bool, detail: String) -> Self {
        CheckResult { name: name.to_string(), outcome: if pass { Outcome::Pass } else { Outcome::Fail }, detail }
    }

    fn error(name: &str, e: &Error) -> Self {
        CheckResult { name: name.to_string(), outcome: Outcome::Fail, detail: e.to_string() }
    }
}

fn run(name: &str, f: impl FnOnce() -> Result<(bool, String)>) -> CheckResult {
    match f() {
        Ok((pass, detail)) => CheckResult::new(name, pass, detail),
        Err(e) => CheckResult::error(name, &e),
    }
}

/// Runs every check; never stops at the first failure. `paths` bounds the simulation checks.
pub fn run_checks(cfg: &RunConfig, paths: u64) -> Vec<CheckResult> {
    let mut out = Vec::new();
    let model = match cfg.market_model() {
        Ok(m) => {
            out.push(CheckResult::new("strip: market model", true, "Σ1, Σ2 and σ2 inside the NIG strips".into()));
            m
        }
        Err(e) => {
            out.push(CheckResult::error("strip: market model", &e));
            return out;
        }
    };
    let couple = match cfg.couple() {
        Ok(c) => c,
        Err(e) => {
            out.push(CheckResult::error("mortality parameters", &e));
            return out;
        }
    };
    let contract = match cfg.contract_spec() {
        Ok(c) => c,
        Err(e) => {
            out.push(CheckResult::error("contract parameters", &e));
            return out;
        }
    };

    out.push(run("strip: integrands", || {
        let f = IntegrandFactory::new(&model, &contract)?;
        let kinds = required_kinds(&contract);
        for &k in &kinds {
            f.build_kind(k)?;
        }
        Ok((true, format!("{} integrands built", kinds.len())))
    }));

    out.push(run("density normalization", || {
        let v = couple.normalization()?;
        Ok(((v - 1.0).abs() < 1e-3, format!("∬ρ over [0,{}]² = {v:.8}", couple.t_star())))
    }));

    out.push(run("joint survival vs density tails", || {
        let mut worst: f64 = 0.0;
        for t in [1.0, 3.0, 5.0, 10.0].into_iter().filter(|&t| t < couple.t_star()) {
            let ts = couple.t_star();
            let tail = couple.box_probability(t, ts, t, ts)?;
            worst = worst.max((tail / couple.joint_survival(t) - 1.0).abs());
        }
        Ok((worst < 1e-3, format!("max relative gap {worst:.2e}")))
    }));

    if cfg.mortality.eps_1 == 0.0 && cfg.mortality.eps_2 == 0.0 {
        out.push(CheckResult {
            name: "broken-heart clustering".into(),
            outcome: Outcome::Skipped,
            detail: "eps_1 = eps_2 = 0: no bereavement jump to check".into(),
        });
    } else {
        out.push(run("broken-heart clustering", || {
            let (s1, s2) = (couple.spouse1(), couple.spouse2());
            let none = CoupleMortality::new(SpouseParams { eps: 0.0, ..*s1 }, SpouseParams { eps: 0.0, ..*s2 }, couple.t_star())?;
            let mut ok = true;
            for t1 in [1.0, 5.0, 10.0] {
                let with = couple.joint_density(t1, t1 + 0.25)? + couple.joint_density(t1 + 0.25, t1)?;
                let without = none.joint_density(t1, t1 + 0.25)? + none.joint_density(t1 + 0.25, t1)?;
                ok &= with > without;
            }
            Ok((ok, "ρ(t, t+0.25) raised by the bereavement jump at t = 1, 5, 10".into()))
        }));
    }

    let sim = MarketSimulator::new(&model, &contract, cfg.numerics.oracle_step);
    out.push(run("martingale: discounted equity", || {
        let sim = sim.clone()?;
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.numerics.seed);
        let (mut s, mut s2, mut b, mut b2) = (0.0, 0.0, 0.0, 0.0);
        let k = sim.simulate(&mut rng).dates.len() - 1;
        for _ in 0..paths {
            let m = sim.simulate(&mut rng);
            let x = m.discount[k] * m.equity[k];
            s += x;
            s2 += x * x;
            b += m.discount[k];
            b2 += m.discount[k] * m.discount[k];
        }
        let n = paths as f64;
        let (ms, mb) = (s / n, b / n);
        let (es, eb) = (((s2 / n - ms * ms) / n).sqrt(), ((b2 / n - mb * mb) / n).sqrt());
        let bond = model.bond_price0(contract.maturity())?;
        let ok = (ms - 1.0).abs() < 4.0 * es && (mb - bond).abs() < 4.0 * eb;
        Ok((ok, format!("E[S_T/B_T] = {ms:.5} ± {es:.5}; E[1/B_T] = {mb:.6} ± {eb:.6} vs B(0,T) = {bond:.6}")))
    }));

    out.push(run("method agreement (d ≤ 2)", || {
        let f = IntegrandFactory::new(&model, &contract)?;
        let quad = Evaluator { method: MethodChoice::Quadrature, ..cfg.evaluator() };
        let mc = Evaluator { method: MethodChoice::MonteCarlo, ..cfg.evaluator() };
        let mut worst: f64 = 0.0;
        let mut worst_z: f64 = 0.0;
        let mut count = 0;
        for kind in [BenefitKind::GmabA1, BenefitKind::GmabA2, BenefitKind::SbB2(1)] {
            let Ok(it) = f.build_kind(kind) else { continue };
            if it.dim() == 0 || it.dim() > 2 {
                continue;
            }
            let q = quad.evaluate(&it)?;
            let m = mc.evaluate(&it)?;
            worst = worst.max(bias_report(&m, &q)?);
            worst_z = worst_z.max((m.value - q.value).abs() / m.std_error.max(1e-300));
            count += 1;
        }
        Ok((worst < 0.5, format!("{count} integrals, max bias {worst:.4}% ({worst_z:.2}σ)")))
    }));
    out
}

/// Overall verdict: every non-skipped check passed.
pub fn all_passed(results: &[CheckResult]) -> bool {
    results.iter().all(|r| r.outcome != Outcome::Fail)
}
