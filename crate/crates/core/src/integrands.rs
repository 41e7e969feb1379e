//! Fourier integrands M and N for the GMAB, surrender and death benefits.
//!
//! Every family shares one shape. Over [0, H] the two drivers see the exponents
//!
//!   E(s) = E_tilt(s) − i Σ1(s,T) Σ_{l: s ≤ t_l} u_l − i Σ1(s,H') z
//!   F(s) = F_tilt(s) + i (σ2 + Σ2(s,T)) Σ_{l: s ≤ t_l} u_l + i (σ2 + Σ2(s,H')) z
//!
//! where the u_l are surrender coordinates carrying the Cauchy factors 2βΔt_{l+1}/(u_l² + (βΔt_{l+1})²)
//! and z = v − ir is the optional damped terminal coordinate with payoff transform 1/((iv+r−1)(iv+r)).
//! The tilt is the forward-measure change (Σ1(s,H), −Σ2(s,H)) or the spot-measure change (0, σ2).

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::contract::{ContractSpec, DeathBranch, WConstants};
use crate::error::{Error, Result};
use crate::integration::{Axis, IntegralEstimate, Integrand};
use crate::levy::cumulant_integral;
use crate::term_structure::MarketModel;

pub const DEFAULT_CUMULANT_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BenefitKind {
    GmabA1,
    GmabA2,
    SbB1(usize),
    SbB2(usize),
    DbA1 { j: usize, i: usize },
    DbA2 { j: usize, i: usize },
    DbA0(usize),
}

impl BenefitKind {
    pub fn label(&self) -> String {
        match *self {
            BenefitKind::GmabA1 => "A1".into(),
            BenefitKind::GmabA2 => "A2".into(),
            BenefitKind::SbB1(i) => format!("B1_{i}"),
            BenefitKind::SbB2(i) => format!("B2_{i}"),
            BenefitKind::DbA1 { j, i } => format!("A1_{j},{i}"),
            BenefitKind::DbA2 { j, i } => format!("A2_{j},{i}"),
            BenefitKind::DbA0(i) => format!("A0_{i}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Tilt {
    Forward(f64),
    Spot,
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Coordinate {
    cut: f64,
    w: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Terminal {
    kernel_horizon: f64,
    w: f64,
    damping: f64,
    strike_shift: f64,
}

#[derive(Debug, Clone)]
pub struct TransformIntegrand {
    kind: BenefitKind,
    model: MarketModel,
    axes: Vec<Axis>,
    horizon: f64,
    maturity: f64,
    tilt: Tilt,
    coords: Vec<Coordinate>,
    terminal: Option<Terminal>,
    phase_const: f64,
    breakpoints: Vec<f64>,
    prefactor: f64,
    cumulant_tol: f64,
}

impl TransformIntegrand {
    pub fn kind(&self) -> BenefitKind {
        self.kind
    }

    /// Deterministic factor turning ∫ f into the benefit quantity: baseline survival, measure change and (2π)^{−d}.
    pub fn prefactor(&self) -> f64 {
        self.prefactor
    }

    pub fn is_damped(&self) -> bool {
        self.terminal.is_some()
    }

    pub fn assemble(&self, raw: IntegralEstimate) -> IntegralEstimate {
        raw.scaled(self.prefactor)
    }

    /// ∫_0^H θ¹(E(s)) + θ²(F(s)) ds for the given coordinates.
    pub fn exponent(&self, x: &[f64]) -> Result<Complex64> {
        let m = &self.model;
        let n_coords = self.coords.len();
        let zt = match self.terminal {
            Some(t) => Complex64::new(x[n_coords], -t.damping),
            None => Complex64::new(0.0, 0.0),
        };
        let kernel_h = self.terminal.map_or(self.horizon, |t| t.kernel_horizon);
        let maturity = self.maturity;
        let coords = &self.coords;
        let active = |s: f64| -> f64 {
            coords.iter().zip(x).filter(|(c, _)| s <= c.cut).map(|(_, u)| *u).sum()
        };
        let tilt = self.tilt;
        let sigma2 = m.sigma2();
        let e = |s: f64| {
            let base = match tilt {
                Tilt::Forward(h) => m.s1(s, h),
                Tilt::Spot => 0.0,
            };
            let lin = zt * m.s1(s, kernel_h) + m.s1(s, maturity) * active(s);
            Complex64::new(base, 0.0) - Complex64::i() * lin
        };
        let f = |s: f64| {
            let base = match tilt {
                Tilt::Forward(h) => -m.s2(s, h),
                Tilt::Spot => sigma2,
            };
            let lin = zt * (sigma2 + m.s2(s, kernel_h)) + (sigma2 + m.s2(s, maturity)) * active(s);
            Complex64::new(base, 0.0) + Complex64::i() * lin
        };
        let i1 = cumulant_integral(m.nig1(), e, 0.0, self.horizon, &self.breakpoints, self.cumulant_tol)?;
        let i2 = cumulant_integral(m.nig2(), f, 0.0, self.horizon, &self.breakpoints, self.cumulant_tol)?;
        Ok(i1 + i2)
    }

    /// Same exponent without splitting at the grid dates; a reference for the breakpoint handling.
    pub fn exponent_unsplit(&self, x: &[f64]) -> Result<Complex64> {
        let mut c = self.clone();
        c.breakpoints.clear();
        c.exponent(x)
    }
}

impl Integrand for TransformIntegrand {
    fn axes(&self) -> &[Axis] {
        &self.axes
    }

    fn residual(&self, x: &[f64]) -> Result<Complex64> {
        if x.len() != self.axes.len() {
            return Err(Error::invalid("x", format!("expected {} coordinates, got {}", self.axes.len(), x.len())));
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite);
        }
        let mut phase = Complex64::new(self.phase_const, 0.0);
        for (c, &u) in self.coords.iter().zip(x) {
            phase += Complex64::new(0.0, u * c.w);
        }
        let mut payoff = Complex64::new(1.0, 0.0);
        if let Some(t) = self.terminal {
            let v = x[self.coords.len()];
            let izr = Complex64::new(t.damping, v); // i z = r + iv
            phase += izr * t.w;
            payoff = (-izr * t.strike_shift).exp() / ((izr - 1.0) * izr);
        }
        Ok((self.exponent(x)? + phase).exp() * payoff)
    }
}

/// Builds integrands for one (market, contract) pair, sharing the w-constants and drift integrals.
#[derive(Debug, Clone)]
pub struct IntegrandFactory {
    model: MarketModel,
    contract: ContractSpec,
    w: WConstants,
    drift_maturity: f64,
    cumulant_tol: f64,
}

impl IntegrandFactory {
    pub fn new(model: &MarketModel, contract: &ContractSpec) -> Result<Self> {
        Self::with_tolerance(model, contract, DEFAULT_CUMULANT_TOL)
    }

    pub fn with_tolerance(model: &MarketModel, contract: &ContractSpec, cumulant_tol: f64) -> Result<Self> {
        let w = contract.w_constants(model)?;
        let t = contract.maturity();
        let drift_maturity = model.drift_integral(t, t)?;
        Ok(IntegrandFactory { model: model.clone(), contract: contract.clone(), w, drift_maturity, cumulant_tol })
    }

    pub fn w_constants(&self) -> &WConstants {
        &self.w
    }

    pub fn contract(&self) -> &ContractSpec {
        &self.contract
    }

    pub fn model(&self) -> &MarketModel {
        &self.model
    }

    /// e^{−∫_0^T A(s,T) ds}.
    pub fn measure_factor_maturity(&self) -> f64 {
        (-self.drift_maturity).exp()
    }

    fn damping_scale(&self) -> f64 {
        let r = self.contract.damping();
        (r * (r - 1.0)).sqrt()
    }

    /// Surrender coordinates l = 1..m with cuts t_l and kernels at T; empty when β·Δt is degenerate.
    fn surrender_coords(&self, m: usize) -> (Vec<Coordinate>, Vec<Axis>) {
        if self.contract.surrender_degenerate() {
            return (Vec::new(), Vec::new());
        }
        let t = self.contract.surrender_dates();
        let weights = self.contract.surrender_intensity_weights();
        let coords = (1..=m).map(|l| Coordinate { cut: t[l], w: self.surrender_w(l) }).collect();
        let axes = (1..=m).map(|l| Axis::Cauchy { gamma: weights[l - 1].gamma }).collect();
        (coords, axes)
    }

    // w_l for 1 ≤ l ≤ K−1, with w_K at l = K (used only by the surrender-benefit families).
    fn surrender_w(&self, l: usize) -> f64 {
        if l < self.contract.k() {
            self.w.w(l)
        } else {
            self.w.w_k()
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn build(
        &self,
        kind: BenefitKind,
        horizon: f64,
        tilt: Tilt,
        n_coords: usize,
        terminal: Option<Terminal>,
        phase_const: f64,
        scale: f64,
    ) -> Result<TransformIntegrand> {
        let (coords, mut axes) = self.surrender_coords(n_coords);
        if terminal.is_some() {
            axes.push(Axis::Plain { scale: self.damping_scale() });
        }
        let breakpoints = coords.iter().map(|c| c.cut).filter(|&c| c > 0.0 && c < horizon).collect();
        let d = axes.len() as i32;
        let it = TransformIntegrand {
            kind,
            model: self.model.clone(),
            axes,
            horizon,
            maturity: self.contract.maturity(),
            tilt,
            coords,
            terminal,
            phase_const,
            breakpoints,
            prefactor: scale * (2.0 * PI).powi(-d),
            cumulant_tol: self.cumulant_tol,
        };
        self.check_strip(&it)?;
        Ok(it)
    }

    // Real parts of E and F do not depend on the coordinates; check them at both ends of [0, H].
    fn check_strip(&self, it: &TransformIntegrand) -> Result<()> {
        let m = &self.model;
        let r = it.terminal.map_or(0.0, |t| t.damping);
        let kh = it.terminal.map_or(it.horizon, |t| t.kernel_horizon);
        let sigma2 = m.sigma2();
        let mut e_range = (f64::INFINITY, f64::NEG_INFINITY);
        let mut f_range = (f64::INFINITY, f64::NEG_INFINITY);
        for s in [0.0, it.horizon] {
            let (e, f) = match it.tilt {
                Tilt::Forward(h) => (m.s1(s, h) - r * m.s1(s, kh), -m.s2(s, h) + r * (sigma2 + m.s2(s, kh))),
                Tilt::Spot => (-r * m.s1(s, kh), sigma2 + r * (sigma2 + m.s2(s, kh))),
            };
            e_range = (e_range.0.min(e), e_range.1.max(e));
            f_range = (f_range.0.min(f), f_range.1.max(f));
        }
        for (p, (lo, hi)) in [(m.nig1(), e_range), (m.nig2(), f_range)] {
            if !p.validate_strip(lo, hi).is_ok() {
                let (slo, shi) = p.strip();
                let re = if lo <= slo { lo } else { hi };
                return Err(Error::StripViolation { re, lo: slo, hi: shi });
            }
        }
        Ok(())
    }

    fn drift(&self, horizon: f64) -> Result<f64> {
        self.model.drift_integral(horizon, horizon)
    }

    /// M(u, T) for A1, d = K−1.
    pub fn gmab_m(&self) -> Result<TransformIntegrand> {
        let c = &self.contract;
        let t = c.maturity();
        let scale = c.baseline_factor(c.k()) * self.measure_factor_maturity();
        self.build(BenefitKind::GmabA1, t, Tilt::Forward(t), c.k() - 1, None, 0.0, scale)
    }

    /// N(v, T) for A2, d = K.
    pub fn gmab_n(&self) -> Result<TransformIntegrand> {
        let c = &self.contract;
        let t = c.maturity();
        let scale = c.baseline_factor(c.k()) * self.measure_factor_maturity();
        let term = Terminal { kernel_horizon: t, w: self.w.w_k(), damping: c.damping(), strike_shift: 0.0 };
        self.build(BenefitKind::GmabA2, t, Tilt::Forward(t), c.k() - 1, Some(term), 0.0, scale)
    }

    fn check_sb_index(&self, i: usize, lo: usize) -> Result<()> {
        let hi = self.contract.k() - 1;
        if i < lo || i > hi {
            return Err(Error::IndexOutOfRange { index: i, lo, hi });
        }
        Ok(())
    }

    /// M^i for B_i^1 under the spot measure, d = i−1. B_1^1 reduces to the constant 1.
    pub fn sb_m(&self, i: usize) -> Result<TransformIntegrand> {
        self.check_sb_index(i, 1)?;
        let c = &self.contract;
        let ti = c.surrender_dates()[i];
        let phase = -self.model.omega(ti)?;
        self.build(BenefitKind::SbB1(i), ti, Tilt::Spot, i - 1, None, phase, c.baseline_factor(i))
    }

    /// N^i for B_i^2 under the spot measure, d = i.
    pub fn sb_n(&self, i: usize) -> Result<TransformIntegrand> {
        self.check_sb_index(i, 1)?;
        let c = &self.contract;
        let ti = c.surrender_dates()[i];
        let phase = -self.model.omega(ti)?;
        self.build(BenefitKind::SbB2(i), ti, Tilt::Spot, i, None, phase, c.baseline_factor(i + 1))
    }

    fn check_pair(&self, j: usize, i: usize) -> Result<()> {
        match self.contract.death_branch(i)? {
            DeathBranch::Interval { j: jj } if jj == j => Ok(()),
            _ => Err(Error::Inadmissible { j, i }),
        }
    }

    /// M^{j,i} for A¹_{j,i} under the t̄_i-forward measure, d = j.
    pub fn db_m(&self, j: usize, i: usize) -> Result<TransformIntegrand> {
        self.check_pair(j, i)?;
        let c = &self.contract;
        let tb = c.death_dates()[i];
        let scale = c.baseline_factor(j + 1) * (-self.drift(tb)?).exp();
        self.build(BenefitKind::DbA1 { j, i }, tb, Tilt::Forward(tb), j, None, 0.0, scale)
    }

    /// N^{j,i} for A²_{j,i}, d = j+1.
    pub fn db_n(&self, j: usize, i: usize) -> Result<TransformIntegrand> {
        self.check_pair(j, i)?;
        let c = &self.contract;
        let tb = c.death_dates()[i];
        let scale = c.baseline_factor(j + 1) * (-self.drift(tb)?).exp();
        let term = Terminal { kernel_horizon: tb, w: self.w.w_tbar(i), damping: c.damping(), strike_shift: c.guarantee_rate() * tb };
        self.build(BenefitKind::DbA2 { j, i }, tb, Tilt::Forward(tb), j, Some(term), 0.0, scale)
    }

    /// N^i for A_{0,i} when t̄_i ≤ t_1, d = 1.
    pub fn db_n0(&self, i: usize) -> Result<TransformIntegrand> {
        if self.contract.death_branch(i)? != DeathBranch::BeforeFirstSurrender {
            return Err(Error::Inadmissible { j: 0, i });
        }
        let c = &self.contract;
        let tb = c.death_dates()[i];
        let scale = (-self.drift(tb)?).exp();
        let term = Terminal { kernel_horizon: tb, w: self.w.w_tbar(i), damping: c.damping(), strike_shift: c.guarantee_rate() * tb };
        self.build(BenefitKind::DbA0(i), tb, Tilt::Forward(tb), 0, Some(term), 0.0, scale)
    }

    pub fn build_kind(&self, kind: BenefitKind) -> Result<TransformIntegrand> {
        match kind {
            BenefitKind::GmabA1 => self.gmab_m(),
            BenefitKind::GmabA2 => self.gmab_n(),
            BenefitKind::SbB1(i) => self.sb_m(i),
            BenefitKind::SbB2(i) => self.sb_n(i),
            BenefitKind::DbA1 { j, i } => self.db_m(j, i),
            BenefitKind::DbA2 { j, i } => self.db_n(j, i),
            BenefitKind::DbA0(i) => self.db_n0(i),
        }
    }
}
