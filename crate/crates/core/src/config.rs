//! Run configuration: a sectioned TOML file whose defaults are the reference parameter set.

use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::contract::{death_grid, surrender_grid, ContractParams, ContractSpec, PenaltySchedule};
use crate::error::{Error, Result};
use crate::levy::NigParams;
use crate::mortality::{CoupleMortality, SpouseParams, DEFAULT_T_STAR};
use crate::oracle::{OracleOptions, DEFAULT_STEP};
use crate::pricing::{Evaluator, MethodChoice, DEFAULT_QUAD_TOL, DEFAULT_SAMPLES, DEFAULT_SEED};
use crate::term_structure::{ForwardCurve, MarketModel, DEFAULT_MARKET_HORIZON};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MarketSection {
    pub a: f64,
    pub b: f64,
    pub sigma2: f64,
    /// Flat level of f(0, ·), used when `forward_curve` is empty.
    pub forward_rate: f64,
    /// (maturity, rate) knots of a piecewise-linear f(0, ·).
    pub forward_curve: Vec<[f64; 2]>,
    pub nig1_alpha: f64,
    pub nig1_beta: f64,
    pub nig1_delta: f64,
    pub nig2_alpha: f64,
    pub nig2_beta: f64,
    pub nig2_delta: f64,
    pub horizon: f64,
}

impl Default for MarketSection {
    fn default() -> Self {
        MarketSection {
            a: 0.00258,
            b: 0.00143,
            sigma2: 0.1559,
            forward_rate: 0.02,
            forward_curve: Vec::new(),
            nig1_alpha: 3.12,
            nig1_beta: 1.87,
            nig1_delta: 9.24,
            nig2_alpha: 3.31,
            nig2_beta: -1.43,
            nig2_delta: 6.21,
            horizon: DEFAULT_MARKET_HORIZON,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MortalitySection {
    pub lambda0_1: f64,
    pub lambda0_2: f64,
    pub mu_1: f64,
    pub mu_2: f64,
    pub sigma_1: f64,
    pub sigma_2: f64,
    pub eps_1: f64,
    pub eps_2: f64,
    pub kappa_1: f64,
    pub kappa_2: f64,
    pub t_star: f64,
}

impl Default for MortalitySection {
    fn default() -> Self {
        MortalitySection {
            lambda0_1: 0.3,
            lambda0_2: 0.3,
            mu_1: 0.07,
            mu_2: 0.05,
            sigma_1: 0.005,
            sigma_2: 0.002,
            eps_1: 1.0,
            eps_2: 1.0,
            kappa_1: 0.5,
            kappa_2: 0.5,
            t_star: DEFAULT_T_STAR,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ContractSection {
    pub notional: f64,
    pub maturity: f64,
    pub guarantee_rate: f64,
    /// P̃(t) = floor + (1 − floor)·t/T.
    pub penalty_floor: f64,
    pub surrender_step: f64,
    pub death_step: f64,
    pub death_multiplier: f64,
    pub damping: f64,
}

impl Default for ContractSection {
    fn default() -> Self {
        ContractSection {
            notional: 100.0,
            maturity: 3.0,
            guarantee_rate: 0.02,
            penalty_floor: 0.95,
            surrender_step: 1.0,
            death_step: 0.5,
            death_multiplier: 1.5,
            damping: 1.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SurrenderSection {
    pub beta: f64,
    pub baseline: f64,
}

impl Default for SurrenderSection {
    fn default() -> Self {
        SurrenderSection { beta: 0.02, baseline: 0.005 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RunMethod {
    /// Quadrature for d ≤ 3, Monte Carlo above.
    Auto,
    Quad,
    Mc,
    Oracle,
    /// Semi-analytic price plus the oracle, with agreement flags.
    All,
}

impl fmt::Display for RunMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RunMethod::Auto => "auto",
            RunMethod::Quad => "quad",
            RunMethod::Mc => "mc",
            RunMethod::Oracle => "oracle",
            RunMethod::All => "all",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NumericsSection {
    pub method: RunMethod,
    pub samples: u64,
    pub seed: u64,
    pub quad_tol: f64,
    pub oracle_paths: u64,
    pub oracle_step: f64,
}

impl Default for NumericsSection {
    fn default() -> Self {
        NumericsSection {
            method: RunMethod::Auto,
            samples: DEFAULT_SAMPLES,
            seed: DEFAULT_SEED,
            quad_tol: DEFAULT_QUAD_TOL,
            oracle_paths: 200_000,
            oracle_step: DEFAULT_STEP,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSection {
    pub dir: PathBuf,
}

impl Default for OutputSection {
    fn default() -> Self {
        OutputSection { dir: PathBuf::from("out") }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub market: MarketSection,
    pub mortality: MortalitySection,
    pub contract: ContractSection,
    pub surrender: SurrenderSection,
    pub numerics: NumericsSection,
    pub output: OutputSection,
}

// Sections may omit keys (they take their defaults) but every section must be present.
#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    market: Option<MarketSection>,
    mortality: Option<MortalitySection>,
    contract: Option<ContractSection>,
    surrender: Option<SurrenderSection>,
    numerics: Option<NumericsSection>,
    output: Option<OutputSection>,
}

fn section_keys<T: Serialize + Default>() -> String {
    match toml::Value::try_from(T::default()) {
        Ok(toml::Value::Table(t)) => t.keys().cloned().collect::<Vec<_>>().join(", "),
        _ => String::new(),
    }
}

fn missing<T: Serialize + Default>(name: &str) -> Error {
    Error::Config(format!("missing [{name}] section (keys: {})", section_keys::<T>()))
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let raw: RawConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        let cfg = RunConfig {
            market: raw.market.ok_or_else(|| missing::<MarketSection>("market"))?,
            mortality: raw.mortality.ok_or_else(|| missing::<MortalitySection>("mortality"))?,
            contract: raw.contract.ok_or_else(|| missing::<ContractSection>("contract"))?,
            surrender: raw.surrender.ok_or_else(|| missing::<SurrenderSection>("surrender"))?,
            numerics: raw.numerics.unwrap_or_default(),
            output: raw.output.unwrap_or_default(),
        };
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    /// Canonical TOML with every key written out.
    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn forward_curve(&self) -> Result<ForwardCurve> {
        if self.market.forward_curve.is_empty() {
            Ok(ForwardCurve::Flat(self.market.forward_rate))
        } else {
            ForwardCurve::piecewise_linear(self.market.forward_curve.iter().map(|k| (k[0], k[1])).collect())
        }
    }

    pub fn market_model(&self) -> Result<MarketModel> {
        let m = &self.market;
        MarketModel::new(
            m.a,
            m.b,
            m.sigma2,
            self.forward_curve()?,
            NigParams::new(m.nig1_alpha, m.nig1_beta, m.nig1_delta)?,
            NigParams::new(m.nig2_alpha, m.nig2_beta, m.nig2_delta)?,
            m.horizon,
        )
    }

    pub fn spouses(&self) -> Result<(SpouseParams, SpouseParams)> {
        let m = &self.mortality;
        Ok((
            SpouseParams::new(m.lambda0_1, m.mu_1, m.sigma_1, m.eps_1, m.kappa_1)?,
            SpouseParams::new(m.lambda0_2, m.mu_2, m.sigma_2, m.eps_2, m.kappa_2)?,
        ))
    }

    pub fn couple(&self) -> Result<CoupleMortality> {
        let (s1, s2) = self.spouses()?;
        CoupleMortality::new(s1, s2, self.mortality.t_star)
    }

    pub fn contract_params(&self) -> Result<ContractParams> {
        let c = &self.contract;
        for (name, step) in [("surrender_step", c.surrender_step), ("death_step", c.death_step)] {
            if !(step > 0.0 && step.is_finite()) {
                return Err(Error::invalid(name, format!("must be positive, got {step}")));
            }
        }
        if !(c.maturity > 0.0 && c.maturity.is_finite()) {
            return Err(Error::invalid("maturity", format!("must be positive, got {}", c.maturity)));
        }
        Ok(ContractParams {
            notional: c.notional,
            maturity: c.maturity,
            guarantee_rate: c.guarantee_rate,
            surrender_dates: surrender_grid(c.maturity, c.surrender_step),
            death_dates: death_grid(c.maturity, c.death_step),
            penalty: PenaltySchedule::Linear { floor: c.penalty_floor },
            death_multiplier: c.death_multiplier,
            damping: c.damping,
            surrender_beta: self.surrender.beta,
            surrender_baseline: self.surrender.baseline,
        })
    }

    pub fn contract_spec(&self) -> Result<ContractSpec> {
        ContractSpec::new(self.contract_params()?)
    }

    pub fn evaluator(&self) -> Evaluator {
        let n = &self.numerics;
        let method = match n.method {
            RunMethod::Quad => MethodChoice::Quadrature,
            RunMethod::Mc => MethodChoice::MonteCarlo,
            RunMethod::Auto | RunMethod::Oracle | RunMethod::All => MethodChoice::Auto,
        };
        Evaluator { method, quad_tol: n.quad_tol, samples: n.samples, seed: n.seed }
    }

    pub fn oracle_options(&self) -> OracleOptions {
        OracleOptions { paths: self.numerics.oracle_paths, seed: self.numerics.seed, step: self.numerics.oracle_step }
    }

    /// Builds every domain object once so that parameter errors surface before any work starts.
    pub fn validate(&self) -> Result<()> {
        self.market_model()?;
        self.couple()?;
        self.contract_spec()?;
        let n = &self.numerics;
        if !(n.quad_tol > 0.0 && n.quad_tol < 1.0) {
            return Err(Error::invalid("quad_tol", format!("must lie in (0, 1), got {}", n.quad_tol)));
        }
        if n.samples < 2 {
            return Err(Error::invalid("samples", "need at least two samples"));
        }
        if !(n.oracle_step > 0.0) {
            return Err(Error::invalid("oracle_step", "must be positive"));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_sections_take_defaults() {
        let cfg = RunConfig::from_toml_str("[market]\n[mortality]\n[contract]\n[surrender]\n").unwrap();
        assert_eq!(cfg, RunConfig::default());
    }

    #[test]
    fn missing_section_names_its_keys() {
        let err = RunConfig::from_toml_str("[market]\n[contract]\n[surrender]\n").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("[mortality]") && msg.contains("lambda0_1") && msg.contains("kappa_2"), "{msg}");
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let err = RunConfig::from_toml_str("[market]\nsigma_2 = 0.1\n[mortality]\n[contract]\n[surrender]\n").unwrap_err();
        assert!(err.to_string().contains("sigma_2"), "{err}");
    }
}
