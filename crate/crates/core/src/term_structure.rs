//! HJM term structure with exponential volatilities and an exponential-Lévy equity.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::levy::{cumulant_integral, NigParams};

/// Initial forward curve f(0, ·).
#[derive(Debug, Clone, PartialEq)]
pub enum ForwardCurve {
    Flat(f64),
    /// Linear interpolation between (maturity, rate) knots, flat beyond both ends.
    PiecewiseLinear(Vec<(f64, f64)>),
}

impl ForwardCurve {
    pub fn piecewise_linear(mut knots: Vec<(f64, f64)>) -> Result<Self> {
        if knots.is_empty() {
            return Err(Error::invalid("curve", "no knots"));
        }
        if knots.iter().any(|(t, r)| !t.is_finite() || !r.is_finite() || *t < 0.0) {
            return Err(Error::invalid("curve", "knots must be finite with nonnegative maturities"));
        }
        knots.sort_by(|a, b| a.0.total_cmp(&b.0));
        if knots.windows(2).any(|w| w[0].0 == w[1].0) {
            return Err(Error::invalid("curve", "duplicate maturity"));
        }
        Ok(ForwardCurve::PiecewiseLinear(knots))
    }

    /// Parses two whitespace- or comma-separated columns (maturity_years, forward_rate); `#` starts a comment.
    pub fn parse_table(text: &str) -> Result<Self> {
        let mut knots = Vec::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let cols: Vec<&str> = line.split(|c: char| c == ',' || c.is_whitespace()).filter(|s| !s.is_empty()).collect();
            if cols.len() != 2 {
                return Err(Error::Config(format!("curve table line {}: expected two columns", n + 1)));
            }
            let parse = |s: &str| {
                s.parse::<f64>().map_err(|e| Error::Config(format!("curve table line {}: {e}", n + 1)))
            };
            knots.push((parse(cols[0])?, parse(cols[1])?));
        }
        Self::piecewise_linear(knots)
    }

    pub fn rate(&self, t: f64) -> f64 {
        match self {
            ForwardCurve::Flat(r) => *r,
            ForwardCurve::PiecewiseLinear(k) => {
                if t <= k[0].0 {
                    return k[0].1;
                }
                let last = k[k.len() - 1];
                if t >= last.0 {
                    return last.1;
                }
                let idx = k.partition_point(|(x, _)| *x <= t);
                let (x0, y0) = k[idx - 1];
                let (x1, y1) = k[idx];
                y0 + (y1 - y0) * (t - x0) / (x1 - x0)
            }
        }
    }

    /// Exact ∫_{t0}^{t1} f(0, s) ds.
    pub fn integral(&self, t0: f64, t1: f64) -> Result<f64> {
        if t1 < t0 {
            return Err(Error::ArgumentOrder { u: t0, t: t1 });
        }
        match self {
            ForwardCurve::Flat(r) => Ok(r * (t1 - t0)),
            ForwardCurve::PiecewiseLinear(k) => {
                let mut points = vec![t0];
                points.extend(k.iter().map(|(x, _)| *x).filter(|&x| x > t0 && x < t1));
                points.push(t1);
                // Linear on each piece, so the trapezoid rule is exact.
                Ok(points.windows(2).map(|w| 0.5 * (w[1] - w[0]) * (self.rate(w[0]) + self.rate(w[1]))).sum())
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MarketModel {
    a: f64,
    b: f64,
    sigma2: f64,
    curve: ForwardCurve,
    nig1: NigParams,
    nig2: NigParams,
    horizon: f64,
}

pub const DEFAULT_MARKET_HORIZON: f64 = 100.0;

impl MarketModel {
    /// Builds the model and checks the strip bounds on Σ1, Σ2 and σ2 for maturities up to `horizon`.
    pub fn new(a: f64, b: f64, sigma2: f64, curve: ForwardCurve, nig1: NigParams, nig2: NigParams, horizon: f64) -> Result<Self> {
        if !(a > 0.0 && a.is_finite()) {
            return Err(Error::invalid("a", format!("must be positive, got {a}")));
        }
        if !(b != 0.0 && b.is_finite()) {
            return Err(Error::invalid("b", format!("must be nonzero, got {b}")));
        }
        if !(sigma2 >= 0.0 && sigma2.is_finite()) {
            return Err(Error::invalid("sigma2", format!("must be nonnegative, got {sigma2}")));
        }
        if !(horizon > 0.0 && horizon.is_finite()) {
            return Err(Error::invalid("horizon", format!("must be positive, got {horizon}")));
        }
        let m = MarketModel { a, b, sigma2, curve, nig1, nig2, horizon };
        m.check_strips()?;
        Ok(m)
    }

    fn check_strips(&self) -> Result<()> {
        let s1_max = 1.0 - (-self.a * self.horizon).exp();
        let m1 = self.nig1.symmetric_bound();
        if !self.nig1.validate_strip(0.0, s1_max).is_ok() || s1_max > m1 {
            let (lo, hi) = self.nig1.strip();
            return Err(Error::StripViolation { re: s1_max, lo, hi });
        }
        let s2_max = (1.0 - (-self.b * self.horizon).exp()).abs();
        let m2 = self.nig2.symmetric_bound() / 3.0;
        let (lo, hi) = self.nig2.strip();
        if s2_max > m2 || !self.nig2.validate_strip(-s2_max, s2_max).is_ok() {
            return Err(Error::StripViolation { re: s2_max, lo, hi });
        }
        if self.sigma2 > m2 {
            return Err(Error::StripViolation { re: self.sigma2, lo: -m2, hi: m2 });
        }
        Ok(())
    }

    pub fn a(&self) -> f64 {
        self.a
    }
    pub fn b(&self) -> f64 {
        self.b
    }
    pub fn sigma2(&self) -> f64 {
        self.sigma2
    }
    pub fn curve(&self) -> &ForwardCurve {
        &self.curve
    }
    pub fn nig1(&self) -> &NigParams {
        &self.nig1
    }
    pub fn nig2(&self) -> &NigParams {
        &self.nig2
    }
    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    /// Σ1(u, T) = 1 − e^{−a(T−u)}.
    pub fn big_sigma1(&self, u: f64, t: f64) -> Result<f64> {
        if u > t {
            return Err(Error::ArgumentOrder { u, t });
        }
        Ok(-(-self.a * (t - u)).exp_m1())
    }

    /// Σ2(u, T) = 1 − e^{−b(T−u)}.
    pub fn big_sigma2(&self, u: f64, t: f64) -> Result<f64> {
        if u > t {
            return Err(Error::ArgumentOrder { u, t });
        }
        Ok(-(-self.b * (t - u)).exp_m1())
    }

    // Unchecked kernels for the hot loops; callers guarantee u <= t.
    pub(crate) fn s1(&self, u: f64, t: f64) -> f64 {
        -(-self.a * (t - u)).exp_m1()
    }
    pub(crate) fn s2(&self, u: f64, t: f64) -> f64 {
        -(-self.b * (t - u)).exp_m1()
    }

    /// A(u, T) = θ¹(Σ1(u,T)) + θ²(−Σ2(u,T)).
    pub fn drift_a(&self, u: f64, t: f64) -> Result<f64> {
        let s1 = self.big_sigma1(u, t)?;
        let s2 = self.big_sigma2(u, t)?;
        Ok((self.nig1.theta(Complex64::new(s1, 0.0))? + self.nig2.theta(Complex64::new(-s2, 0.0))?).re)
    }

    /// ∫_0^{t} A(s, T) ds.
    pub fn drift_integral(&self, t: f64, maturity: f64) -> Result<f64> {
        if t > maturity {
            return Err(Error::ArgumentOrder { u: t, t: maturity });
        }
        let i1 = cumulant_integral(&self.nig1, |s| Complex64::new(self.s1(s, maturity), 0.0), 0.0, t, &[], 1e-12)?;
        let i2 = cumulant_integral(&self.nig2, |s| Complex64::new(-self.s2(s, maturity), 0.0), 0.0, t, &[], 1e-12)?;
        Ok((i1 + i2).re)
    }

    /// ω(t) = t·θ²(σ2).
    pub fn omega(&self, t: f64) -> Result<f64> {
        Ok(t * self.nig2.theta(Complex64::new(self.sigma2, 0.0))?.re)
    }

    pub fn forward_integral(&self, t0: f64, t1: f64) -> Result<f64> {
        self.curve.integral(t0, t1)
    }

    /// B(0, T).
    pub fn bond_price0(&self, t: f64) -> Result<f64> {
        if t < 0.0 {
            return Err(Error::OutOfRange { t, lo: 0.0, hi: f64::INFINITY });
        }
        Ok((-self.forward_integral(0.0, t)?).exp())
    }

    pub fn with_curve(&self, curve: ForwardCurve) -> Self {
        MarketModel { curve, ..self.clone() }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn piecewise_linear_rate_and_integral() {
        let c = ForwardCurve::piecewise_linear(vec![(1.0, 0.01), (3.0, 0.03)]).unwrap();
        assert_eq!(c.rate(0.0), 0.01);
        assert!((c.rate(2.0) - 0.02).abs() < 1e-15);
        assert_eq!(c.rate(9.0), 0.03);
        // 0.01 on [0,1], mean 0.02 on [1,3], 0.03 on [3,4]
        assert!((c.integral(0.0, 4.0).unwrap() - (0.01 + 0.04 + 0.03)).abs() < 1e-15);
    }

    #[test]
    fn parse_table_accepts_comments_and_commas() {
        let c = ForwardCurve::parse_table("# maturity rate\n0 0.01\n5, 0.03\n").unwrap();
        assert!((c.rate(2.5) - 0.02).abs() < 1e-15);
        assert!(ForwardCurve::parse_table("1 2 3").is_err());
    }
}
