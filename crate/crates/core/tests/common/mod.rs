#![allow(dead_code)]

use jointva_core::config::RunConfig;
use jointva_core::contract::{ContractParams, ContractSpec};
use jointva_core::mortality::{CoupleMortality, SpouseParams};
use jointva_core::term_structure::MarketModel;

pub fn model() -> MarketModel {
    RunConfig::default().market_model().unwrap()
}

pub fn couple() -> CoupleMortality {
    RunConfig::default().couple().unwrap()
}

pub fn couple_with(f: impl Fn(&mut SpouseParams, &mut SpouseParams)) -> CoupleMortality {
    let c = couple();
    let (mut s1, mut s2) = (*c.spouse1(), *c.spouse2());
    f(&mut s1, &mut s2);
    CoupleMortality::new(s1, s2, c.t_star()).unwrap()
}

pub fn params(maturity: f64) -> ContractParams {
    let mut cfg = RunConfig::default();
    cfg.contract.maturity = maturity;
    cfg.contract_params().unwrap()
}

pub fn spec(maturity: f64) -> ContractSpec {
    ContractSpec::new(params(maturity)).unwrap()
}

pub fn spec_with(maturity: f64, f: impl Fn(&mut ContractParams)) -> ContractSpec {
    let mut p = params(maturity);
    f(&mut p);
    ContractSpec::new(p).unwrap()
}

pub fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}
