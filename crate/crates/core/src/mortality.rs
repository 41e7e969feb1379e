//! Joint lifetime law of a couple with OU mortality intensities and a broken-heart jump.

use std::collections::HashMap;
use std::fmt;
use std::sync::RwLock;

use crate::error::{Error, Result};
use crate::integration::gauss_kronrod::{integrate_pieces, QuadOptions};

pub const DEFAULT_T_STAR: f64 = 60.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Spouse {
    First,
    Second,
}

impl Spouse {
    pub fn other(self) -> Spouse {
        match self {
            Spouse::First => Spouse::Second,
            Spouse::Second => Spouse::First,
        }
    }
}

/// φ = (λ(0), μ, σ, ε, κ) for one spouse; intensity dλ = μλ dt + σ dW.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpouseParams {
    pub lambda0: f64,
    pub mu: f64,
    pub sigma: f64,
    pub eps: f64,
    pub kappa: f64,
}

impl SpouseParams {
    pub fn new(lambda0: f64, mu: f64, sigma: f64, eps: f64, kappa: f64) -> Result<Self> {
        for (name, v) in [("lambda0", lambda0), ("mu", mu), ("sigma", sigma), ("kappa", kappa)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::invalid(name, format!("must be positive, got {v}")));
            }
        }
        if !(eps >= 0.0 && eps.is_finite()) {
            return Err(Error::invalid("eps", format!("must be nonnegative, got {eps}")));
        }
        Ok(SpouseParams { lambda0, mu, sigma, eps, kappa })
    }

    /// E[∫_0^t λ].
    pub fn mean_integrated(&self, t: f64) -> f64 {
        self.lambda0 / self.mu * (self.mu * t).exp_m1()
    }

    /// Var[∫_0^t λ].
    pub fn var_integrated(&self, t: f64) -> f64 {
        let m = self.mu;
        let e1 = (m * t).exp_m1();
        let e2 = (2.0 * m * t).exp_m1();
        (self.sigma / m).powi(2) * (t - 2.0 / m * e1 + e2 / (2.0 * m))
    }
}

pub struct CoupleMortality {
    spouse1: SpouseParams,
    spouse2: SpouseParams,
    t_star: f64,
    tails: RwLock<HashMap<u64, (f64, f64)>>,
}

impl Clone for CoupleMortality {
    fn clone(&self) -> Self {
        CoupleMortality::new(self.spouse1, self.spouse2, self.t_star).expect("validated on construction")
    }
}

impl fmt::Debug for CoupleMortality {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CoupleMortality")
            .field("spouse1", &self.spouse1)
            .field("spouse2", &self.spouse2)
            .field("t_star", &self.t_star)
            .finish()
    }
}

impl PartialEq for CoupleMortality {
    fn eq(&self, other: &Self) -> bool {
        self.spouse1 == other.spouse1 && self.spouse2 == other.spouse2 && self.t_star == other.t_star
    }
}

fn inner_opts() -> QuadOptions {
    QuadOptions { abs_tol: 1e-14, rel_tol: 1e-11, max_intervals: 400 }
}

fn outer_opts() -> QuadOptions {
    QuadOptions { abs_tol: 1e-12, rel_tol: 1e-9, max_intervals: 400 }
}

/// Closed-form density for t1 < t2 where spouse `p` dies first at t1 and spouse `q` at t2.
fn density_ordered(t1: f64, t2: f64, p: &SpouseParams, q: &SpouseParams) -> f64 {
    let c1 = p.sigma * p.sigma / (2.0 * p.mu * p.mu);
    let em1 = (p.mu * t1).exp_m1();
    let e2m1 = (2.0 * p.mu * t1).exp_m1();
    let first = (-c1 * em1 * em1 + (p.mu * t1).exp() * p.lambda0)
        * (-c1 * (-t1 + 2.0 / p.mu * em1 - e2m1 / (2.0 * p.mu)) - em1 * p.lambda0 / p.mu).exp();

    let c2 = q.sigma * q.sigma / (2.0 * q.mu * q.mu);
    let tau = t2 - t1;
    let etau = (q.mu * tau).exp();
    let g = etau + q.mu * q.eps / q.kappa * (-(-q.kappa * tau).exp_m1());
    let fm1 = (q.mu * t1).exp_m1();
    let f2m1 = (2.0 * q.mu * t1).exp_m1();
    let pre = -c2 * (etau - 1.0).powi(2)
        + (etau + q.eps * (-q.kappa * tau).exp()) * (c2 * (2.0 * fm1 - g * f2m1) + (q.mu * t1).exp() * q.lambda0);
    let tau_e2m1 = (2.0 * q.mu * tau).exp_m1();
    let expo = -c2 * (-tau + 2.0 / q.mu * (etau - 1.0) - tau_e2m1 / (2.0 * q.mu))
        - c2 * (-t1 + 2.0 / q.mu * g * fm1 - g * g * f2m1 / (2.0 * q.mu))
        - (g * (q.mu * t1).exp() - 1.0) * q.lambda0 / q.mu;
    first * pre * expo.exp()
}

impl CoupleMortality {
    pub fn new(spouse1: SpouseParams, spouse2: SpouseParams, t_star: f64) -> Result<Self> {
        if !(t_star > 0.0 && t_star.is_finite()) {
            return Err(Error::invalid("t_star", format!("must be positive, got {t_star}")));
        }
        Ok(CoupleMortality { spouse1, spouse2, t_star, tails: RwLock::new(HashMap::new()) })
    }

    pub fn spouse(&self, s: Spouse) -> &SpouseParams {
        match s {
            Spouse::First => &self.spouse1,
            Spouse::Second => &self.spouse2,
        }
    }
    pub fn spouse1(&self) -> &SpouseParams {
        &self.spouse1
    }
    pub fn spouse2(&self) -> &SpouseParams {
        &self.spouse2
    }
    pub fn t_star(&self) -> f64 {
        self.t_star
    }

    pub fn with_t_star(&self, t_star: f64) -> Result<Self> {
        CoupleMortality::new(self.spouse1, self.spouse2, t_star)
    }

    /// m(t) = Σ (λ_i(0)/μ_i)(e^{μ_i t} − 1).
    pub fn mean_m(&self, t: f64) -> f64 {
        self.spouse1.mean_integrated(t) + self.spouse2.mean_integrated(t)
    }

    /// σ²(t) of ∫_0^t (λ1 + λ2).
    pub fn variance_sigma2(&self, t: f64) -> f64 {
        self.spouse1.var_integrated(t) + self.spouse2.var_integrated(t)
    }

    /// P(τ1 > t, τ2 > t) = e^{σ²(t)/2 − m(t)}, unclipped.
    pub fn joint_survival(&self, t: f64) -> f64 {
        let v = (0.5 * self.variance_sigma2(t) - self.mean_m(t)).exp();
        if v > 1.0 + 1e-12 {
            log::warn!("joint survival {v} exceeds 1 at t = {t}");
        }
        v
    }

    /// ρ(t1, t2) for t1 ≠ t2.
    pub fn joint_density(&self, t1: f64, t2: f64) -> Result<f64> {
        if !(t1.is_finite() && t2.is_finite()) || t1 < 0.0 || t2 < 0.0 {
            return Err(Error::OutOfRange { t: t1.min(t2), lo: 0.0, hi: f64::INFINITY });
        }
        if t1 == t2 {
            return Err(Error::Diagonal(t1));
        }
        Ok(self.density(t1, t2))
    }

    fn density(&self, t1: f64, t2: f64) -> f64 {
        if t1 < t2 {
            density_ordered(t1, t2, &self.spouse1, &self.spouse2)
        } else {
            density_ordered(t2, t1, &self.spouse2, &self.spouse1)
        }
    }

    /// ∫_{x0}^{x1} ∫_{y0}^{y1} ρ(t1, t2) dt2 dt1, split along the diagonal.
    pub fn box_probability(&self, x0: f64, x1: f64, y0: f64, y1: f64) -> Result<f64> {
        for t in [x0, x1, y0, y1] {
            if !(0.0..=self.t_star).contains(&t) {
                return Err(Error::OutOfRange { t, lo: 0.0, hi: self.t_star });
            }
        }
        if x1 <= x0 || y1 <= y0 {
            return Ok(0.0);
        }
        let mut outer_points = vec![x0];
        for d in [y0, y1] {
            if d > x0 && d < x1 {
                outer_points.push(d);
            }
        }
        outer_points.push(x1);
        outer_points.sort_by(f64::total_cmp);
        let inner = |t1: f64| -> Result<f64> {
            let pts: Vec<f64> = if t1 > y0 && t1 < y1 { vec![y0, t1, y1] } else { vec![y0, y1] };
            Ok(integrate_pieces(|t2| Ok(self.density(t1, t2)), &pts, &inner_opts())?.value)
        };
        Ok(integrate_pieces(inner, &outer_points, &outer_opts())?.value)
    }

    /// ∬ρ over [0, T*]².
    pub fn normalization(&self) -> Result<f64> {
        self.box_probability(0.0, self.t_star, 0.0, self.t_star)
    }

    fn tails(&self, t: f64) -> Result<(f64, f64)> {
        let key = t.to_bits();
        if let Some(v) = self.tails.read().expect("tail cache poisoned").get(&key) {
            return Ok(*v);
        }
        let ts = self.t_star;
        let p1 = self.box_probability(t, ts, 0.0, ts)?;
        let p2 = self.box_probability(0.0, ts, t, ts)?;
        self.tails.write().expect("tail cache poisoned").insert(key, (p1, p2));
        Ok((p1, p2))
    }

    /// P(τ_s > t) by quadrature of ρ.
    pub fn marginal_survival(&self, spouse: Spouse, t: f64) -> Result<f64> {
        let (p1, p2) = self.tails(t)?;
        Ok(match spouse {
            Spouse::First => p1,
            Spouse::Second => p2,
        })
    }

    /// P(τ1 > t ∪ τ2 > t).
    pub fn prob_union_alive(&self, t: f64) -> Result<f64> {
        if !(0.0..=self.t_star).contains(&t) {
            return Err(Error::OutOfRange { t, lo: 0.0, hi: self.t_star });
        }
        let (p1, p2) = self.tails(t)?;
        Ok(p1 + p2 - self.joint_survival(t))
    }

    /// Death-benefit weight for interval [t̄_{i−1}, t̄_i): two marginal terms plus (α−2)·P(both in it).
    pub fn prob_death_interval(&self, i: usize, tbar: &[f64], alpha: f64) -> Result<f64> {
        if i == 0 || i >= tbar.len() {
            return Err(Error::IndexOutOfRange { index: i, lo: 1, hi: tbar.len().saturating_sub(1) });
        }
        if !(alpha > 1.0 && alpha < 2.0) && alpha != 2.0 {
            return Err(Error::invalid("alpha", format!("death multiplier must lie in (1, 2], got {alpha}")));
        }
        let (a, b) = (tbar[i - 1], tbar[i]);
        let ts = self.t_star;
        let first = self.box_probability(a, b, 0.0, ts)?;
        let second = self.box_probability(0.0, ts, a, b)?;
        let both = self.box_probability(a, b, a, b)?;
        Ok(first + second + (alpha - 2.0) * both)
    }

    /// P(both spouses die in [a, b)).
    pub fn prob_both_in(&self, a: f64, b: f64) -> Result<f64> {
        self.box_probability(a, b, a, b)
    }

    /// Survival of a single OU-intensity life, E[exp(−∫λ)], used as the no-contagion reference.
    pub fn single_life_survival(&self, spouse: Spouse, t: f64) -> f64 {
        let p = self.spouse(spouse);
        (0.5 * p.var_integrated(t) - p.mean_integrated(t)).exp()
    }

    /// ∫_{x0}^{x1} of the marginal density of `spouse`, a 1-D reference for tests.
    pub fn marginal_interval(&self, spouse: Spouse, a: f64, b: f64) -> Result<f64> {
        let ts = self.t_star;
        match spouse {
            Spouse::First => self.box_probability(a, b, 0.0, ts),
            Spouse::Second => self.box_probability(0.0, ts, a, b),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn couple() -> CoupleMortality {
        CoupleMortality::new(
            SpouseParams::new(0.3, 0.07, 0.005, 1.0, 0.5).unwrap(),
            SpouseParams::new(0.3, 0.05, 0.002, 1.0, 0.5).unwrap(),
            DEFAULT_T_STAR,
        )
        .unwrap()
    }

    #[test]
    fn diagonal_is_rejected() {
        assert_eq!(couple().joint_density(2.0, 2.0), Err(Error::Diagonal(2.0)));
    }

    #[test]
    fn tail_cache_is_stable() {
        let c = couple();
        let a = c.prob_union_alive(1.0).unwrap();
        let b = c.prob_union_alive(1.0).unwrap();
        assert_eq!(a.to_bits(), b.to_bits());
    }
}
