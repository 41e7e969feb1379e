//! Cumulant functions of the NIG drivers L¹ and L².

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::integration::gauss_kronrod::{integrate_pieces, QuadOptions};

pub const DEFAULT_STRIP_MARGIN: f64 = 1e-6;
const BRANCH_CUT_GUARD: f64 = 1e-8;

/// Cumulant function of a Lévy driver, possibly time-dependent.
pub trait LevyCumulant: Sync {
    /// θ_s(z).
    fn theta_at(&self, s: f64, z: Complex64) -> Result<Complex64>;
    /// Admissible real strip at time s.
    fn strip_at(&self, s: f64) -> (f64, f64);
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NigParams {
    alpha: f64,
    beta: f64,
    delta: f64,
    gamma: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StripVerdict {
    Ok,
    Violation { re_lo: f64, re_hi: f64, strip_lo: f64, strip_hi: f64 },
}

impl StripVerdict {
    pub fn is_ok(&self) -> bool {
        matches!(self, StripVerdict::Ok)
    }
}

impl NigParams {
    pub fn new(alpha: f64, beta: f64, delta: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(Error::invalid("alpha", format!("must be positive, got {alpha}")));
        }
        if !(delta > 0.0 && delta.is_finite()) {
            return Err(Error::invalid("delta", format!("must be positive, got {delta}")));
        }
        if !(beta.abs() < alpha) {
            return Err(Error::invalid("beta", format!("|beta| must be below alpha = {alpha}, got {beta}")));
        }
        let gamma = (alpha * alpha - beta * beta).sqrt();
        Ok(NigParams { alpha, beta, delta, gamma })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }
    pub fn beta(&self) -> f64 {
        self.beta
    }
    pub fn delta(&self) -> f64 {
        self.delta
    }

    /// Open strip (−α−β, α−β).
    pub fn strip(&self) -> (f64, f64) {
        (-self.alpha - self.beta, self.alpha - self.beta)
    }

    /// Largest M with [−M, M] inside the strip.
    pub fn symmetric_bound(&self) -> f64 {
        let (lo, hi) = self.strip();
        (-lo).min(hi)
    }

    /// θ(z) = δ(√(α²−β²) − √(α²−(β+z)²)), principal branch.
    pub fn theta(&self, z: Complex64) -> Result<Complex64> {
        let (lo, hi) = self.strip();
        if !(z.re > lo && z.re < hi) {
            return Err(Error::StripViolation { re: z.re, lo, hi });
        }
        let bz = z + self.beta;
        let arg = Complex64::new(self.alpha * self.alpha, 0.0) - bz * bz;
        if arg.re <= 0.0 && arg.im.abs() < BRANCH_CUT_GUARD {
            return Err(Error::BranchCut { re: arg.re, im: arg.im });
        }
        Ok((Complex64::new(self.gamma, 0.0) - arg.sqrt()) * self.delta)
    }

    /// θ'(0): mean of L per unit time.
    pub fn mean_rate(&self) -> f64 {
        self.delta * self.beta / self.gamma
    }

    /// θ''(0): variance of L per unit time.
    pub fn variance_rate(&self) -> f64 {
        self.delta * self.alpha * self.alpha / self.gamma.powi(3)
    }

    pub fn validate_strip(&self, re_lo: f64, re_hi: f64) -> StripVerdict {
        self.validate_strip_with_margin(re_lo, re_hi, DEFAULT_STRIP_MARGIN)
    }

    pub fn validate_strip_with_margin(&self, re_lo: f64, re_hi: f64, margin: f64) -> StripVerdict {
        let (strip_lo, strip_hi) = self.strip();
        if re_lo >= strip_lo + margin && re_hi <= strip_hi - margin && re_lo <= re_hi {
            StripVerdict::Ok
        } else {
            StripVerdict::Violation { re_lo, re_hi, strip_lo, strip_hi }
        }
    }
}

impl LevyCumulant for NigParams {
    fn theta_at(&self, _s: f64, z: Complex64) -> Result<Complex64> {
        self.theta(z)
    }
    fn strip_at(&self, _s: f64) -> (f64, f64) {
        self.strip()
    }
}

pub fn nig_cumulant(p: &NigParams, z: Complex64) -> Result<Complex64> {
    p.theta(z)
}

/// ∫_{t0}^{t1} θ_s(g(s)) ds, split at every breakpoint inside (t0, t1).
pub fn cumulant_integral<L, G>(p: &L, g: G, t0: f64, t1: f64, breakpoints: &[f64], rel_tol: f64) -> Result<Complex64>
where
    L: LevyCumulant + ?Sized,
    G: Fn(f64) -> Complex64,
{
    if t1 < t0 {
        return Err(Error::ArgumentOrder { u: t0, t: t1 });
    }
    if t1 == t0 {
        return Ok(Complex64::new(0.0, 0.0));
    }
    let mut points = Vec::with_capacity(breakpoints.len() + 2);
    points.push(t0);
    points.extend(breakpoints.iter().copied().filter(|&b| b > t0 && b < t1));
    points.push(t1);
    let opts = QuadOptions { abs_tol: 1e-15 * (t1 - t0), rel_tol, max_intervals: 500 };
    Ok(integrate_pieces(|s| p.theta_at(s, g(s)), &points, &opts)?.value)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn l1() -> NigParams {
        NigParams::new(3.12, 1.87, 9.24).unwrap()
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(NigParams::new(1.0, 1.0, 1.0).is_err());
        assert!(NigParams::new(-1.0, 0.0, 1.0).is_err());
        assert!(NigParams::new(1.0, 0.0, 0.0).is_err());
    }

    #[test]
    fn strip_violation_names_bounds() {
        let err = l1().theta(Complex64::new(1.3, 0.0)).unwrap_err();
        match err {
            Error::StripViolation { re, lo, hi } => {
                assert_eq!(re, 1.3);
                assert!((lo + 4.99).abs() < 1e-12 && (hi - 1.25).abs() < 1e-12);
            }
            e => panic!("unexpected {e:?}"),
        }
    }

    #[test]
    fn moments_match_finite_differences() {
        let p = l1();
        let h = 1e-4;
        let f = |x: f64| p.theta(Complex64::new(x, 0.0)).unwrap().re;
        let d1 = (f(h) - f(-h)) / (2.0 * h);
        let d2 = (f(h) - 2.0 * f(0.0) + f(-h)) / (h * h);
        assert!((d1 - p.mean_rate()).abs() < 1e-6);
        assert!((d2 - p.variance_rate()).abs() < 1e-4);
    }
}
