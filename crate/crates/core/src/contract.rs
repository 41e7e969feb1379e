//! Contract schedule, penalty, surrender-intensity ingredients and the w-constants.

use crate::error::{Error, Result};
use crate::term_structure::MarketModel;

/// P̃(t): fraction of the account refunded on surrender at t.
#[derive(Debug, Clone, PartialEq)]
pub enum PenaltySchedule {
    /// P̃(t) = floor + (1 − floor)·t/T.
    Linear { floor: f64 },
    /// Linear interpolation of (time, factor) knots; must reach 1 at maturity.
    Table(Vec<(f64, f64)>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ContractParams {
    pub notional: f64,
    pub maturity: f64,
    pub guarantee_rate: f64,
    /// t_0 = 0 < t_1 < … < t_K < T.
    pub surrender_dates: Vec<f64>,
    /// t̄_0 = 0 < … < t̄_N = T.
    pub death_dates: Vec<f64>,
    pub penalty: PenaltySchedule,
    pub death_multiplier: f64,
    pub damping: f64,
    pub surrender_beta: f64,
    pub surrender_baseline: f64,
}

/// Surrender dates 0, step, 2·step, … strictly before `maturity`.
pub fn surrender_grid(maturity: f64, step: f64) -> Vec<f64> {
    let mut g = vec![0.0];
    let mut k = 1;
    while (k as f64) * step < maturity - 1e-12 {
        g.push(k as f64 * step);
        k += 1;
    }
    g
}

/// Death-monitoring dates 0, step, … ending exactly at `maturity`.
pub fn death_grid(maturity: f64, step: f64) -> Vec<f64> {
    let mut g = surrender_grid(maturity, step);
    g.push(maturity);
    g
}

pub fn annual_grid(maturity: f64) -> Vec<f64> {
    surrender_grid(maturity, 1.0)
}

pub fn semiannual_grid(maturity: f64) -> Vec<f64> {
    death_grid(maturity, 0.5)
}

impl ContractParams {
    /// Default contract terms for the given maturity: annual surrender dates, semiannual death monitoring.
    pub fn standard(maturity: f64) -> Self {
        ContractParams {
            notional: 100.0,
            maturity,
            guarantee_rate: 0.02,
            surrender_dates: annual_grid(maturity),
            death_dates: semiannual_grid(maturity),
            penalty: PenaltySchedule::Linear { floor: 0.95 },
            death_multiplier: 1.5,
            damping: 1.5,
            surrender_beta: 0.02,
            surrender_baseline: 0.005,
        }
    }

    /// Same terms with the grids regenerated for a new maturity.
    pub fn with_maturity(&self, maturity: f64) -> Self {
        ContractParams {
            maturity,
            surrender_dates: annual_grid(maturity),
            death_dates: semiannual_grid(maturity),
            ..self.clone()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SurrenderWeight {
    pub dt: f64,
    pub gamma: f64,
}

/// Which branch of the death-benefit formula a monitoring date falls into.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DeathBranch {
    /// t̄_i ≤ t_1: no surrender opportunity has passed.
    BeforeFirstSurrender,
    /// t_j < t̄_i ≤ t_{j+1}, or j = K−1 for t̄_i ∈ (t_{K−1}, T].
    Interval { j: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct WConstants {
    surrender: Vec<f64>,
    terminal: f64,
    death: Vec<f64>,
}

impl WConstants {
    /// w_l for l = 1..K−1.
    pub fn w(&self, l: usize) -> f64 {
        self.surrender[l - 1]
    }
    pub fn surrender(&self) -> &[f64] {
        &self.surrender
    }
    pub fn w_k(&self) -> f64 {
        self.terminal
    }
    /// w_{t̄_i} for i = 1..N.
    pub fn w_tbar(&self, i: usize) -> f64 {
        self.death[i - 1]
    }
    pub fn death(&self) -> &[f64] {
        &self.death
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ContractSpec {
    p: ContractParams,
}

fn strictly_increasing_from_zero(name: &str, g: &[f64]) -> Result<()> {
    if g.first() != Some(&0.0) {
        return Err(Error::invalid(name, "grid must start at 0"));
    }
    if g.windows(2).any(|w| !(w[1] > w[0])) || g.iter().any(|x| !x.is_finite()) {
        return Err(Error::invalid(name, "grid must be strictly increasing and finite"));
    }
    Ok(())
}

impl ContractSpec {
    pub fn new(p: ContractParams) -> Result<Self> {
        if !(p.notional > 0.0 && p.notional.is_finite()) {
            return Err(Error::invalid("notional", format!("must be positive, got {}", p.notional)));
        }
        if !(p.maturity > 0.0 && p.maturity.is_finite()) {
            return Err(Error::invalid("maturity", format!("must be positive, got {}", p.maturity)));
        }
        if !p.guarantee_rate.is_finite() {
            return Err(Error::invalid("guarantee_rate", "must be finite"));
        }
        strictly_increasing_from_zero("surrender_dates", &p.surrender_dates)?;
        strictly_increasing_from_zero("death_dates", &p.death_dates)?;
        if p.surrender_dates.len() < 2 {
            return Err(Error::invalid("surrender_dates", "need at least t_1 (K >= 1)"));
        }
        if *p.surrender_dates.last().unwrap() >= p.maturity {
            return Err(Error::invalid("surrender_dates", "t_K must lie before maturity"));
        }
        if (p.death_dates.last().unwrap() - p.maturity).abs() > 1e-12 {
            return Err(Error::invalid("death_dates", "last date must equal maturity"));
        }
        for t in &p.surrender_dates {
            if !p.death_dates.iter().any(|d| (d - t).abs() < 1e-12) {
                return Err(Error::invalid("surrender_dates", format!("date {t} is not a death-monitoring date")));
            }
        }
        if !(p.death_multiplier > 1.0 && p.death_multiplier <= 2.0) {
            return Err(Error::invalid("death_multiplier", format!("must lie in (1, 2], got {}", p.death_multiplier)));
        }
        if !(p.damping > 1.0 && p.damping < 2.0) {
            return Err(Error::invalid("damping", format!("must lie in (1, 2), got {}", p.damping)));
        }
        if !(0.0..=1.0).contains(&p.surrender_beta) {
            return Err(Error::invalid("surrender_beta", format!("must lie in [0, 1], got {}", p.surrender_beta)));
        }
        if !(p.surrender_baseline >= 0.0 && p.surrender_baseline.is_finite()) {
            return Err(Error::invalid("surrender_baseline", format!("must be nonnegative, got {}", p.surrender_baseline)));
        }
        let spec = ContractSpec { p };
        spec.check_penalty()?;
        Ok(spec)
    }

    fn check_penalty(&self) -> Result<()> {
        let t = self.p.maturity;
        match &self.p.penalty {
            PenaltySchedule::Linear { floor } => {
                if !(*floor > 0.0 && *floor <= 1.0) {
                    return Err(Error::invalid("penalty_floor", format!("must lie in (0, 1], got {floor}")));
                }
            }
            PenaltySchedule::Table(k) => {
                if k.is_empty() || k.windows(2).any(|w| !(w[1].0 > w[0].0) || w[1].1 < w[0].1) {
                    return Err(Error::invalid("penalty", "table must have increasing times and nondecreasing factors"));
                }
                if k.iter().any(|(_, v)| !(*v > 0.0 && *v <= 1.0)) {
                    return Err(Error::invalid("penalty", "factors must lie in (0, 1]"));
                }
                if (self.penalty_factor(t)? - 1.0).abs() > 1e-12 {
                    return Err(Error::invalid("penalty", "factor at maturity must be 1"));
                }
            }
        }
        Ok(())
    }

    pub fn params(&self) -> &ContractParams {
        &self.p
    }
    pub fn notional(&self) -> f64 {
        self.p.notional
    }
    pub fn maturity(&self) -> f64 {
        self.p.maturity
    }
    pub fn guarantee_rate(&self) -> f64 {
        self.p.guarantee_rate
    }
    pub fn damping(&self) -> f64 {
        self.p.damping
    }
    pub fn death_multiplier(&self) -> f64 {
        self.p.death_multiplier
    }
    pub fn surrender_beta(&self) -> f64 {
        self.p.surrender_beta
    }
    pub fn surrender_baseline(&self) -> f64 {
        self.p.surrender_baseline
    }
    /// t_0..t_K.
    pub fn surrender_dates(&self) -> &[f64] {
        &self.p.surrender_dates
    }
    /// t̄_0..t̄_N.
    pub fn death_dates(&self) -> &[f64] {
        &self.p.death_dates
    }
    pub fn k(&self) -> usize {
        self.p.surrender_dates.len() - 1
    }
    pub fn n(&self) -> usize {
        self.p.death_dates.len() - 1
    }

    /// P̃(t).
    pub fn penalty_factor(&self, t: f64) -> Result<f64> {
        let mat = self.p.maturity;
        if !(0.0..=mat).contains(&t) {
            return Err(Error::OutOfRange { t, lo: 0.0, hi: mat });
        }
        Ok(match &self.p.penalty {
            PenaltySchedule::Linear { floor } => floor + (1.0 - floor) * t / mat,
            PenaltySchedule::Table(k) => {
                if t <= k[0].0 {
                    k[0].1
                } else if t >= k[k.len() - 1].0 {
                    k[k.len() - 1].1
                } else {
                    let idx = k.partition_point(|(x, _)| *x <= t);
                    let (x0, y0) = k[idx - 1];
                    let (x1, y1) = k[idx];
                    y0 + (y1 - y0) * (t - x0) / (x1 - x0)
                }
            }
        })
    }

    /// p(t) = −log P̃(t).
    pub fn penalty_p(&self, t: f64) -> Result<f64> {
        Ok(-self.penalty_factor(t)?.ln())
    }

    /// (Δt_l, βΔt_l) for l = 2..K.
    pub fn surrender_intensity_weights(&self) -> Vec<SurrenderWeight> {
        let beta = self.p.surrender_beta;
        self.p.surrender_dates[1..]
            .windows(2)
            .map(|w| {
                let dt = w[1] - w[0];
                SurrenderWeight { dt, gamma: beta * dt }
            })
            .collect()
    }

    /// True when every Cauchy scale βΔt_l is below 1e-12.
    pub fn surrender_degenerate(&self) -> bool {
        self.surrender_intensity_weights().iter().all(|w| w.gamma < 1e-12)
    }

    /// e^{−C(t_m − t_1)} for 1 ≤ m ≤ K.
    pub fn baseline_factor(&self, m: usize) -> f64 {
        let t = &self.p.surrender_dates;
        (-self.p.surrender_baseline * (t[m] - t[1])).exp()
    }

    pub fn death_branch(&self, i: usize) -> Result<DeathBranch> {
        let n = self.n();
        if i == 0 || i > n {
            return Err(Error::IndexOutOfRange { index: i, lo: 1, hi: n });
        }
        let tb = self.p.death_dates[i];
        let t = &self.p.surrender_dates;
        if tb <= t[1] {
            return Ok(DeathBranch::BeforeFirstSurrender);
        }
        let below = t.iter().filter(|&&x| x < tb).count() - 1;
        Ok(DeathBranch::Interval { j: below.min(self.k() - 1) })
    }

    /// Every admissible (j, i) with t̄_i past the first surrender date.
    pub fn admissible_pairs(&self) -> Vec<(usize, usize)> {
        (1..=self.n())
            .filter_map(|i| match self.death_branch(i) {
                Ok(DeathBranch::Interval { j }) => Some((j, i)),
                _ => None,
            })
            .collect()
    }

    pub fn w_constants(&self, m: &MarketModel) -> Result<WConstants> {
        let t_mat = self.p.maturity;
        let delta = self.p.guarantee_rate;
        let fwd = m.forward_integral(0.0, t_mat)?;
        let k = self.k();
        let mut surrender = Vec::with_capacity(k.saturating_sub(1));
        for l in 1..k {
            let tl = self.p.surrender_dates[l];
            surrender.push(m.drift_integral(tl, t_mat)? + fwd - delta * t_mat - m.omega(tl)? - self.penalty_p(tl)?);
        }
        let terminal = m.drift_integral(t_mat, t_mat)? + fwd - delta * t_mat - m.omega(t_mat)?;
        let mut death = Vec::with_capacity(self.n());
        for &tb in &self.p.death_dates[1..] {
            death.push(m.drift_integral(tb, tb)? + m.forward_integral(0.0, tb)? - m.omega(tb)?);
        }
        Ok(WConstants { surrender, terminal, death })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn standard_grids() {
        let c = ContractSpec::new(ContractParams::standard(3.0)).unwrap();
        assert_eq!(c.k(), 2);
        assert_eq!(c.n(), 6);
        let c = ContractSpec::new(ContractParams::standard(10.0)).unwrap();
        assert_eq!((c.k(), c.n()), (9, 20));
    }

    #[test]
    fn branches_for_three_years() {
        let c = ContractSpec::new(ContractParams::standard(3.0)).unwrap();
        assert_eq!(c.death_branch(1).unwrap(), DeathBranch::BeforeFirstSurrender);
        assert_eq!(c.death_branch(2).unwrap(), DeathBranch::BeforeFirstSurrender);
        assert_eq!(c.admissible_pairs(), vec![(1, 3), (1, 4), (1, 5), (1, 6)]);
    }

    #[test]
    fn branches_for_four_years() {
        let c = ContractSpec::new(ContractParams::standard(4.0)).unwrap();
        // t = (0,1,2,3); t̄_3 = 1.5 ∈ (1,2] → j = 1; t̄_5 = 2.5 ∈ (2,3] → j = 2; t̄_8 = 4 → j = K−1 = 2
        assert_eq!(c.death_branch(3).unwrap(), DeathBranch::Interval { j: 1 });
        assert_eq!(c.death_branch(4).unwrap(), DeathBranch::Interval { j: 1 });
        assert_eq!(c.death_branch(5).unwrap(), DeathBranch::Interval { j: 2 });
        assert_eq!(c.death_branch(8).unwrap(), DeathBranch::Interval { j: 2 });
    }

    #[test]
    fn rejects_grid_not_contained() {
        let mut p = ContractParams::standard(3.0);
        p.surrender_dates = vec![0.0, 1.25];
        assert!(ContractSpec::new(p).is_err());
    }
}
