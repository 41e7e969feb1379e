//! Integral evaluators over ℝ^d: nested adaptive quadrature and Monte Carlo with importance sampling.

pub mod gauss_kronrod;
mod mc;
mod quad;

use std::fmt;

use num_complex::Complex64;

use crate::error::{Error, Result};

pub use mc::{mc_is, SamplerPlan, BATCH_SIZE, MAX_REJECTION_RATE};
pub use quad::{quad_nd, MAX_QUAD_DIM};

/// How one coordinate of an integrand is treated by the evaluators.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Axis {
    /// The integrand carries an explicit factor 2γ/(x²+γ²) in this coordinate.
    Cauchy { gamma: f64 },
    /// No such factor; `scale` sets the substitution and proposal width.
    Plain { scale: f64 },
}

impl Axis {
    pub fn scale(&self) -> f64 {
        match *self {
            Axis::Cauchy { gamma } => gamma,
            Axis::Plain { scale } => scale,
        }
    }

    /// 2γ/(x²+γ²) for Cauchy axes, 1 otherwise.
    pub fn factor(&self, x: f64) -> f64 {
        match *self {
            Axis::Cauchy { gamma } => 2.0 * gamma / (x * x + gamma * gamma),
            Axis::Plain { .. } => 1.0,
        }
    }
}

pub trait Integrand: Sync {
    fn axes(&self) -> &[Axis];

    /// Integrand value with every Cauchy factor divided out.
    fn residual(&self, x: &[f64]) -> Result<Complex64>;

    fn dim(&self) -> usize {
        self.axes().len()
    }

    fn value(&self, x: &[f64]) -> Result<Complex64> {
        let c: f64 = self.axes().iter().zip(x).map(|(a, &xi)| a.factor(xi)).product();
        Ok(self.residual(x)? * c)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    Quadrature,
    MonteCarlo,
    /// Closed form, no integration performed.
    Exact,
    Oracle,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Quadrature => "quad",
            Method::MonteCarlo => "mc-is",
            Method::Exact => "exact",
            Method::Oracle => "oracle",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegralEstimate {
    pub value: f64,
    pub std_error: f64,
    pub n_samples: u64,
    pub method: Method,
    pub imag_residual: f64,
}

impl IntegralEstimate {
    pub fn exact(value: f64) -> Self {
        IntegralEstimate { value, std_error: 0.0, n_samples: 0, method: Method::Exact, imag_residual: 0.0 }
    }

    /// Multiplies value, error and residual by a deterministic factor.
    pub fn scaled(self, factor: f64) -> Self {
        IntegralEstimate {
            value: self.value * factor,
            std_error: self.std_error * factor.abs(),
            imag_residual: self.imag_residual * factor.abs(),
            ..self
        }
    }

    /// 100·σ/|I|.
    pub fn std_error_percent(&self) -> f64 {
        100.0 * self.std_error / self.value.abs()
    }
}

/// 100·|I_MC − I_Q| / I_MC.
pub fn bias_report(mc: &IntegralEstimate, quad: &IntegralEstimate) -> Result<f64> {
    if !(mc.value.is_finite() && quad.value.is_finite()) {
        return Err(Error::NonFinite);
    }
    if mc.value == 0.0 {
        return Err(Error::ZeroDivision);
    }
    Ok(100.0 * (mc.value - quad.value).abs() / mc.value.abs())
}
