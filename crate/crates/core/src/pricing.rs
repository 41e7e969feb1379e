//! Benefit prices assembled from the transform integrals, the couple's survival weights and the
//! deterministic discount factors.

use std::collections::HashMap;
use std::fmt;

use rayon::prelude::*;

use crate::contract::{ContractParams, ContractSpec, DeathBranch};
use crate::error::{Error, Result};
use crate::integrands::{BenefitKind, IntegrandFactory, TransformIntegrand};
use crate::integration::{mc_is, quad_nd, IntegralEstimate, Integrand, Method, SamplerPlan, MAX_QUAD_DIM};
use crate::mortality::{CoupleMortality, SpouseParams};
use crate::term_structure::MarketModel;

pub const DEFAULT_QUAD_TOL: f64 = 1e-7;
pub const DEFAULT_SAMPLES: u64 = 100_000;
pub const DEFAULT_SEED: u64 = 20_240_601;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MethodChoice {
    /// Quadrature up to three dimensions, Monte Carlo above.
    Auto,
    Quadrature,
    MonteCarlo,
}

impl fmt::Display for MethodChoice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MethodChoice::Auto => "auto",
            MethodChoice::Quadrature => "quad",
            MethodChoice::MonteCarlo => "mc",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Evaluator {
    pub method: MethodChoice,
    pub quad_tol: f64,
    pub samples: u64,
    pub seed: u64,
}

impl Default for Evaluator {
    fn default() -> Self {
        Evaluator { method: MethodChoice::Auto, quad_tol: DEFAULT_QUAD_TOL, samples: DEFAULT_SAMPLES, seed: DEFAULT_SEED }
    }
}

fn kind_id(kind: BenefitKind) -> u64 {
    match kind {
        BenefitKind::GmabA1 => 1,
        BenefitKind::GmabA2 => 2,
        BenefitKind::SbB1(i) => 1_000 + i as u64,
        BenefitKind::SbB2(i) => 2_000 + i as u64,
        BenefitKind::DbA1 { j, i } => 100_000 + 1_000 * j as u64 + i as u64,
        BenefitKind::DbA2 { j, i } => 200_000 + 1_000 * j as u64 + i as u64,
        BenefitKind::DbA0(i) => 3_000 + i as u64,
    }
}

impl Evaluator {
    pub fn quadrature(tol: f64) -> Self {
        Evaluator { method: MethodChoice::Quadrature, quad_tol: tol, ..Default::default() }
    }

    pub fn monte_carlo(samples: u64, seed: u64) -> Self {
        Evaluator { method: MethodChoice::MonteCarlo, samples, seed, ..Default::default() }
    }

    /// Seed used for one integral; distinct integrals get distinct streams, and the same integral gets
    /// the same stream in every run (common random numbers across sensitivity cells).
    pub fn sub_seed(&self, kind: BenefitKind) -> u64 {
        self.seed ^ kind_id(kind).wrapping_mul(0x9E37_79B9_7F4A_7C15)
    }

    pub fn method_for(&self, dim: usize) -> Method {
        match self.method {
            MethodChoice::Quadrature => Method::Quadrature,
            MethodChoice::MonteCarlo => Method::MonteCarlo,
            MethodChoice::Auto if dim <= MAX_QUAD_DIM => Method::Quadrature,
            MethodChoice::Auto => Method::MonteCarlo,
        }
    }

    /// Raw integral times the integrand's prefactor.
    pub fn evaluate(&self, it: &TransformIntegrand) -> Result<IntegralEstimate> {
        let raw = match self.method_for(it.dim()) {
            Method::Quadrature => quad_nd(it, self.quad_tol)?,
            _ => mc_is(it, &SamplerPlan::for_integrand(it, self.samples, self.sub_seed(it.kind())))?,
        };
        Ok(it.assemble(raw))
    }
}

/// A price with its Monte Carlo standard error (zero for deterministic methods).
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PriceEstimate {
    pub value: f64,
    pub std_error: f64,
}

/// Survival weights of the couple: P_T, P_{t_i} for i = 1..K−1 and P(i) for i = 1..N.
#[derive(Debug, Clone, PartialEq)]
pub struct MortalityWeights {
    pub p_maturity: f64,
    pub p_surrender: Vec<f64>,
    pub p_death: Vec<f64>,
}

impl MortalityWeights {
    pub fn compute(mortality: &CoupleMortality, contract: &ContractSpec) -> Result<Self> {
        let p_maturity = mortality.prob_union_alive(contract.maturity())?;
        let t = contract.surrender_dates();
        let p_surrender = (1..contract.k()).map(|i| mortality.prob_union_alive(t[i])).collect::<Result<_>>()?;
        let alpha = contract.death_multiplier();
        let p_death = (1..=contract.n())
            .map(|i| mortality.prob_death_interval(i, contract.death_dates(), alpha))
            .collect::<Result<_>>()?;
        Ok(MortalityWeights { p_maturity, p_surrender, p_death })
    }
}

/// Every transform integral a contract needs, already multiplied by its prefactor.
#[derive(Debug, Clone, PartialEq)]
pub struct MarketIntegrals {
    values: Vec<(BenefitKind, IntegralEstimate)>,
}

impl MarketIntegrals {
    pub fn get(&self, kind: BenefitKind) -> Option<&IntegralEstimate> {
        self.values.iter().find(|(k, _)| *k == kind).map(|(_, v)| v)
    }

    pub fn iter(&self) -> impl Iterator<Item = &(BenefitKind, IntegralEstimate)> {
        self.values.iter()
    }

    fn value(&self, kind: BenefitKind) -> Result<IntegralEstimate> {
        self.get(kind).copied().ok_or_else(|| Error::Config(format!("integral {} was not computed", kind.label())))
    }
}

/// Integrals needed for the price of `contract`, in a fixed order.
pub fn required_kinds(contract: &ContractSpec) -> Vec<BenefitKind> {
    let mut kinds = vec![BenefitKind::GmabA1, BenefitKind::GmabA2];
    for i in 1..contract.k() {
        if i > 1 {
            kinds.push(BenefitKind::SbB1(i));
        }
        kinds.push(BenefitKind::SbB2(i));
    }
    for i in 1..=contract.n() {
        match contract.death_branch(i) {
            Ok(DeathBranch::BeforeFirstSurrender) => kinds.push(BenefitKind::DbA0(i)),
            Ok(DeathBranch::Interval { j }) => {
                kinds.push(BenefitKind::DbA1 { j, i });
                kinds.push(BenefitKind::DbA2 { j, i });
            }
            Err(_) => {}
        }
    }
    kinds
}

// Without surrender coordinates the no-surrender expectation of every M family is its baseline factor.
fn degenerate_value(contract: &ContractSpec, kind: BenefitKind) -> Option<f64> {
    if !contract.surrender_degenerate() {
        return None;
    }
    match kind {
        BenefitKind::GmabA1 => Some(contract.baseline_factor(contract.k())),
        BenefitKind::SbB1(i) => Some(contract.baseline_factor(i)),
        BenefitKind::SbB2(i) => Some(contract.baseline_factor(i + 1)),
        BenefitKind::DbA1 { j, .. } => Some(contract.baseline_factor(j + 1)),
        _ => None,
    }
}

/// Evaluates every integral of the contract; independent integrals run concurrently.
pub fn market_integrals(model: &MarketModel, contract: &ContractSpec, evaluator: &Evaluator) -> Result<MarketIntegrals> {
    let factory = IntegrandFactory::new(model, contract)?;
    let kinds = required_kinds(contract);
    let values = kinds
        .par_iter()
        .map(|&kind| {
            if let Some(v) = degenerate_value(contract, kind) {
                return Ok((kind, IntegralEstimate::exact(v)));
            }
            let it = factory.build_kind(kind)?;
            let est = evaluator.evaluate(&it)?;
            log::debug!("{} = {:.10} ({}, {} samples)", kind.label(), est.value, est.method, est.n_samples);
            Ok((kind, est))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(MarketIntegrals { values })
}

/// One benefit's price with the integrals and weights that went into it.
#[derive(Debug, Clone, PartialEq)]
pub struct BenefitPrice {
    pub price: PriceEstimate,
    pub terms: Vec<PriceTerm>,
}

/// price contribution = weight × Σ sign·integral.
#[derive(Debug, Clone, PartialEq)]
pub struct PriceTerm {
    pub label: String,
    pub weight: f64,
    pub value: f64,
    pub std_error: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PriceBreakdown {
    pub gmab: PriceEstimate,
    pub sb: PriceEstimate,
    pub db: PriceEstimate,
    pub total: PriceEstimate,
    pub integrals: Vec<(BenefitKind, IntegralEstimate)>,
    pub weights: MortalityWeights,
    pub terms: Vec<PriceTerm>,
    pub warnings: Vec<String>,
}

impl PriceBreakdown {
    pub fn integral(&self, kind: BenefitKind) -> Option<&IntegralEstimate> {
        self.integrals.iter().find(|(k, _)| *k == kind).map(|(_, v)| v)
    }
}

fn term(label: String, weight: f64, parts: &[(f64, IntegralEstimate)], constant: f64) -> PriceTerm {
    let sum: f64 = constant + parts.iter().map(|(s, e)| s * e.value).sum::<f64>();
    let var: f64 = parts.iter().map(|(_, e)| e.std_error * e.std_error).sum();
    PriceTerm { label, weight, value: weight * sum, std_error: weight.abs() * var.sqrt() }
}

fn collect(terms: &[PriceTerm]) -> PriceEstimate {
    let value = terms.iter().map(|t| t.value).sum();
    let var: f64 = terms.iter().map(|t| t.std_error * t.std_error).sum();
    PriceEstimate { value, std_error: var.sqrt() }
}

/// P_T·B(0,T)·I·e^{δT}(A1 + A2).
pub fn gmab_from(model: &MarketModel, contract: &ContractSpec, w: &MortalityWeights, ints: &MarketIntegrals) -> Result<BenefitPrice> {
    let t = contract.maturity();
    let weight = w.p_maturity * model.bond_price0(t)? * contract.notional() * (contract.guarantee_rate() * t).exp();
    let a1 = ints.value(BenefitKind::GmabA1)?;
    let a2 = ints.value(BenefitKind::GmabA2)?;
    let terms = vec![term("GMAB".into(), weight, &[(1.0, a1), (1.0, a2)], 0.0)];
    Ok(BenefitPrice { price: collect(&terms), terms })
}

/// I·Σ_i P̃(t_i)(B_i^1 − B_i^2)P_{t_i}, with B_1^1 = 1.
pub fn sb_from(contract: &ContractSpec, w: &MortalityWeights, ints: &MarketIntegrals) -> Result<BenefitPrice> {
    let t = contract.surrender_dates();
    let mut terms = Vec::new();
    for i in 1..contract.k() {
        let weight = contract.notional() * contract.penalty_factor(t[i])? * w.p_surrender[i - 1];
        let b2 = ints.value(BenefitKind::SbB2(i))?;
        let term_i = if i == 1 {
            term(format!("SB_{i}"), weight, &[(-1.0, b2)], 1.0)
        } else {
            term(format!("SB_{i}"), weight, &[(1.0, ints.value(BenefitKind::SbB1(i))?), (-1.0, b2)], 0.0)
        };
        terms.push(term_i);
    }
    Ok(BenefitPrice { price: collect(&terms), terms })
}

/// Σ_i P(i)·I·e^{δt̄_i}B(0,t̄_i)·(1 + A_{0,i}) or (A¹_{j,i} + A²_{j,i}).
pub fn db_from(model: &MarketModel, contract: &ContractSpec, w: &MortalityWeights, ints: &MarketIntegrals) -> Result<BenefitPrice> {
    let tbar = contract.death_dates();
    let mut terms = Vec::new();
    for i in 1..=contract.n() {
        let weight = w.p_death[i - 1] * contract.notional() * (contract.guarantee_rate() * tbar[i]).exp() * model.bond_price0(tbar[i])?;
        let t = match contract.death_branch(i)? {
            DeathBranch::BeforeFirstSurrender => term(format!("DB_{i}"), weight, &[(1.0, ints.value(BenefitKind::DbA0(i))?)], 1.0),
            DeathBranch::Interval { j } => term(
                format!("DB_{i}"),
                weight,
                &[(1.0, ints.value(BenefitKind::DbA1 { j, i })?), (1.0, ints.value(BenefitKind::DbA2 { j, i })?)],
                0.0,
            ),
        };
        terms.push(t);
    }
    Ok(BenefitPrice { price: collect(&terms), terms })
}

fn diagnostics(contract: &ContractSpec, ints: &MarketIntegrals, gmab: &BenefitPrice, sb: &BenefitPrice, db: &BenefitPrice) -> Vec<String> {
    let mut warnings = Vec::new();
    for (kind, e) in ints.iter() {
        let limit = 1e-8_f64.max(10.0 * e.std_error);
        if e.imag_residual > limit.max(1e-6 * e.value.abs()) {
            warnings.push(format!("{}: imaginary residual {:.3e} above {:.3e}", kind.label(), e.imag_residual, limit));
        }
    }
    for i in 1..contract.k() {
        let b2 = ints.get(BenefitKind::SbB2(i));
        let b1 = if i == 1 { Some(IntegralEstimate::exact(1.0)) } else { ints.get(BenefitKind::SbB1(i)).copied() };
        if let (Some(b1), Some(b2)) = (b1, b2) {
            let sigma = (b1.std_error.powi(2) + b2.std_error.powi(2)).sqrt();
            if b2.value < -3.0 * b2.std_error {
                warnings.push(format!("B2_{i} = {:.6} is negative", b2.value));
            }
            if b2.value - b1.value > 3.0 * sigma + 1e-12 {
                warnings.push(format!("B2_{i} = {:.6} exceeds B1_{i} = {:.6}", b2.value, b1.value));
            }
        }
    }
    for (name, p) in [("GMAB", gmab), ("SB", sb), ("DB", db)] {
        if p.price.value < -3.0 * p.price.std_error - 1e-12 {
            warnings.push(format!("{name} price {:.6} is negative", p.price.value));
        }
    }
    warnings
}

/// Total price from already evaluated integrals and weights.
pub fn assemble(model: &MarketModel, contract: &ContractSpec, w: MortalityWeights, ints: &MarketIntegrals) -> Result<PriceBreakdown> {
    let gmab = gmab_from(model, contract, &w, ints)?;
    let sb = sb_from(contract, &w, ints)?;
    let db = db_from(model, contract, &w, ints)?;
    let warnings = diagnostics(contract, ints, &gmab, &sb, &db);
    for msg in &warnings {
        log::warn!("{msg}");
    }
    let total = PriceEstimate {
        value: gmab.price.value + sb.price.value + db.price.value,
        std_error: (gmab.price.std_error.powi(2) + sb.price.std_error.powi(2) + db.price.std_error.powi(2)).sqrt(),
    };
    let mut terms = gmab.terms;
    terms.extend(sb.terms);
    terms.extend(db.terms);
    Ok(PriceBreakdown {
        gmab: gmab.price,
        sb: sb.price,
        db: db.price,
        total,
        integrals: ints.values.clone(),
        weights: w,
        terms,
        warnings,
    })
}

fn kinds_subset(model: &MarketModel, contract: &ContractSpec, evaluator: &Evaluator, keep: impl Fn(&BenefitKind) -> bool) -> Result<MarketIntegrals> {
    let factory = IntegrandFactory::new(model, contract)?;
    let values = required_kinds(contract)
        .into_iter()
        .filter(keep)
        .map(|kind| {
            if let Some(v) = degenerate_value(contract, kind) {
                return Ok((kind, IntegralEstimate::exact(v)));
            }
            Ok((kind, evaluator.evaluate(&factory.build_kind(kind)?)?))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(MarketIntegrals { values })
}

pub fn price_gmab(model: &MarketModel, contract: &ContractSpec, mortality: &CoupleMortality, evaluator: &Evaluator) -> Result<BenefitPrice> {
    let ints = kinds_subset(model, contract, evaluator, |k| matches!(k, BenefitKind::GmabA1 | BenefitKind::GmabA2))?;
    gmab_from(model, contract, &MortalityWeights::compute(mortality, contract)?, &ints)
}

pub fn price_sb(model: &MarketModel, contract: &ContractSpec, mortality: &CoupleMortality, evaluator: &Evaluator) -> Result<BenefitPrice> {
    let ints = kinds_subset(model, contract, evaluator, |k| matches!(k, BenefitKind::SbB1(_) | BenefitKind::SbB2(_)))?;
    sb_from(contract, &MortalityWeights::compute(mortality, contract)?, &ints)
}

pub fn price_db(model: &MarketModel, contract: &ContractSpec, mortality: &CoupleMortality, evaluator: &Evaluator) -> Result<BenefitPrice> {
    let ints = kinds_subset(model, contract, evaluator, |k| {
        matches!(k, BenefitKind::DbA0(_) | BenefitKind::DbA1 { .. } | BenefitKind::DbA2 { .. })
    })?;
    db_from(model, contract, &MortalityWeights::compute(mortality, contract)?, &ints)
}

pub fn price_total(model: &MarketModel, contract: &ContractSpec, mortality: &CoupleMortality, evaluator: &Evaluator) -> Result<PriceBreakdown> {
    let ints = market_integrals(model, contract, evaluator)?;
    assemble(model, contract, MortalityWeights::compute(mortality, contract)?, &ints)
}

/// Parameters a sensitivity grid may vary.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SensitivityParam {
    SurrenderBeta,
    SurrenderBaseline,
    GuaranteeRate,
    Eps1,
    Eps2,
    Kappa1,
    Kappa2,
}

impl SensitivityParam {
    pub const ALL: [SensitivityParam; 7] = [
        SensitivityParam::SurrenderBeta,
        SensitivityParam::SurrenderBaseline,
        SensitivityParam::GuaranteeRate,
        SensitivityParam::Eps1,
        SensitivityParam::Eps2,
        SensitivityParam::Kappa1,
        SensitivityParam::Kappa2,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            SensitivityParam::SurrenderBeta => "beta",
            SensitivityParam::SurrenderBaseline => "C",
            SensitivityParam::GuaranteeRate => "delta",
            SensitivityParam::Eps1 => "eps1",
            SensitivityParam::Eps2 => "eps2",
            SensitivityParam::Kappa1 => "kappa1",
            SensitivityParam::Kappa2 => "kappa2",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|p| p.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::Config(format!("unknown sensitivity parameter `{s}` (expected one of beta, C, delta, eps1, eps2, kappa1, kappa2)")))
    }

    /// True for parameters that only move the survival weights.
    pub fn mortality_only(&self) -> bool {
        matches!(self, SensitivityParam::Eps1 | SensitivityParam::Eps2 | SensitivityParam::Kappa1 | SensitivityParam::Kappa2)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridAxis {
    pub param: SensitivityParam,
    pub values: Vec<f64>,
}

impl GridAxis {
    pub fn new(param: SensitivityParam, values: Vec<f64>) -> Result<Self> {
        if values.is_empty() || values.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid(param.name(), "grid values must be finite and nonempty"));
        }
        Ok(GridAxis { param, values })
    }

    /// `resolution` equally spaced points on [lo, hi].
    pub fn linspace(param: SensitivityParam, lo: f64, hi: f64, resolution: usize) -> Result<Self> {
        if resolution < 2 {
            return Err(Error::invalid("resolution", "need at least two points per axis"));
        }
        let step = (hi - lo) / (resolution - 1) as f64;
        Self::new(param, (0..resolution).map(|k| lo + step * k as f64).collect())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SensitivityCell {
    pub x: f64,
    pub y: f64,
    pub breakdown: PriceBreakdown,
}

#[derive(Debug, Clone, PartialEq)]
struct Scenario {
    contract: ContractParams,
    spouse1: SpouseParams,
    spouse2: SpouseParams,
}

fn apply(s: &mut Scenario, p: SensitivityParam, v: f64) {
    match p {
        SensitivityParam::SurrenderBeta => s.contract.surrender_beta = v,
        SensitivityParam::SurrenderBaseline => s.contract.surrender_baseline = v,
        SensitivityParam::GuaranteeRate => s.contract.guarantee_rate = v,
        SensitivityParam::Eps1 => s.spouse1.eps = v,
        SensitivityParam::Eps2 => s.spouse2.eps = v,
        SensitivityParam::Kappa1 => s.spouse1.kappa = v,
        SensitivityParam::Kappa2 => s.spouse2.kappa = v,
    }
}

fn market_key(c: &ContractParams) -> [u64; 3] {
    [c.surrender_beta.to_bits(), c.surrender_baseline.to_bits(), c.guarantee_rate.to_bits()]
}

/// Full breakdowns over axis1 × axis2, row-major in axis1. Cells that differ only in mortality
/// parameters share their transform integrals; a failing cell aborts with its coordinates.
pub fn sensitivity_grid(
    model: &MarketModel,
    contract: &ContractParams,
    mortality: &CoupleMortality,
    evaluator: &Evaluator,
    axis1: &GridAxis,
    axis2: &GridAxis,
) -> Result<Vec<SensitivityCell>> {
    let mut cache: HashMap<[u64; 3], MarketIntegrals> = HashMap::new();
    let mut cells = Vec::with_capacity(axis1.values.len() * axis2.values.len());
    for &x in &axis1.values {
        for &y in &axis2.values {
            let mut cell = || -> Result<PriceBreakdown> {
                let mut s = Scenario { contract: contract.clone(), spouse1: *mortality.spouse1(), spouse2: *mortality.spouse2() };
                apply(&mut s, axis1.param, x);
                apply(&mut s, axis2.param, y);
                let spec = ContractSpec::new(s.contract.clone())?;
                let s1 = SpouseParams::new(s.spouse1.lambda0, s.spouse1.mu, s.spouse1.sigma, s.spouse1.eps, s.spouse1.kappa)?;
                let s2 = SpouseParams::new(s.spouse2.lambda0, s.spouse2.mu, s.spouse2.sigma, s.spouse2.eps, s.spouse2.kappa)?;
                let couple = CoupleMortality::new(s1, s2, mortality.t_star())?;
                let key = market_key(&s.contract);
                if !cache.contains_key(&key) {
                    cache.insert(key, market_integrals(model, &spec, evaluator)?);
                }
                assemble(model, &spec, MortalityWeights::compute(&couple, &spec)?, &cache[&key])
            };
            let breakdown = cell().map_err(|e| Error::Cell {
                axis1: axis1.param.name().to_string(),
                x,
                axis2: axis2.param.name().to_string(),
                y,
                source: Box::new(e),
            })?;
            cells.push(SensitivityCell { x, y, breakdown });
        }
    }
    Ok(cells)
}
