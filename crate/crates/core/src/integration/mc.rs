use std::f64::consts::PI;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Cauchy, Distribution};
use rayon::prelude::*;

use super::{Axis, IntegralEstimate, Integrand, Method};
use crate::error::{Error, Result};

pub const BATCH_SIZE: u64 = 4096;
pub const MAX_REJECTION_RATE: f64 = 1e-6;

/// Cauchy(0, γ_k) proposal per coordinate, seed and sample count.
#[derive(Debug, Clone, PartialEq)]
pub struct SamplerPlan {
    pub scales: Vec<f64>,
    pub seed: u64,
    pub n: u64,
}

impl SamplerPlan {
    /// Proposal scales taken from the integrand's axes.
    pub fn for_integrand<F: Integrand + ?Sized>(f: &F, n: u64, seed: u64) -> Self {
        SamplerPlan { scales: f.axes().iter().map(Axis::scale).collect(), seed, n }
    }
}

#[derive(Debug, Clone, Copy, Default)]
struct Moments {
    count: u64,
    mean: f64,
    m2: f64,
    imag_sum: f64,
    rejected: u64,
}

impl Moments {
    fn push(&mut self, v: f64, im: f64) {
        self.count += 1;
        let d = v - self.mean;
        self.mean += d / self.count as f64;
        self.m2 += d * (v - self.mean);
        self.imag_sum += im;
    }

    fn merge(a: Moments, b: Moments) -> Moments {
        let count = a.count + b.count;
        if count == 0 {
            return Moments { rejected: a.rejected + b.rejected, ..Default::default() };
        }
        let d = b.mean - a.mean;
        let (na, nb, n) = (a.count as f64, b.count as f64, count as f64);
        Moments {
            count,
            mean: a.mean + d * nb / n,
            m2: a.m2 + b.m2 + d * d * na * nb / n,
            imag_sum: a.imag_sum + b.imag_sum,
            rejected: a.rejected + b.rejected,
        }
    }
}

fn reduce_pairwise(parts: &[Moments]) -> Moments {
    match parts.len() {
        0 => Moments::default(),
        1 => parts[0],
        n => Moments::merge(reduce_pairwise(&parts[..n / 2]), reduce_pairwise(&parts[n / 2..])),
    }
}

/// Monte Carlo with Cauchy proposals; Cauchy factors cancel to 2π, plain axes use the explicit weight.
pub fn mc_is<F: Integrand + ?Sized>(f: &F, plan: &SamplerPlan) -> Result<IntegralEstimate> {
    let axes = f.axes();
    if plan.scales.len() != axes.len() {
        return Err(Error::invalid("plan", format!("{} proposal scales for a {}-dimensional integrand", plan.scales.len(), axes.len())));
    }
    if plan.scales.iter().any(|g| !(*g > 0.0 && g.is_finite())) {
        return Err(Error::invalid("plan", "proposal scales must be positive and finite"));
    }
    if axes.is_empty() {
        let v = f.residual(&[])?;
        return Ok(IntegralEstimate { value: v.re, std_error: 0.0, n_samples: 1, method: Method::MonteCarlo, imag_residual: v.im.abs() });
    }
    if plan.n < 2 {
        return Err(Error::invalid("samples", "need at least two samples"));
    }
    let proposals: Vec<Cauchy<f64>> = plan.scales.iter().map(|&g| Cauchy::new(0.0, g).expect("positive scale")).collect();
    let n_batches = plan.n.div_ceil(BATCH_SIZE);
    let parts: Vec<Moments> = (0..n_batches)
        .into_par_iter()
        .map(|b| {
            let mut rng = ChaCha8Rng::seed_from_u64(plan.seed);
            rng.set_stream(b);
            let size = BATCH_SIZE.min(plan.n - b * BATCH_SIZE);
            let mut x = vec![0.0; axes.len()];
            let mut m = Moments::default();
            for _ in 0..size {
                let mut w = 1.0;
                for (k, axis) in axes.iter().enumerate() {
                    let xi = proposals[k].sample(&mut rng);
                    x[k] = xi;
                    w *= match *axis {
                        Axis::Cauchy { gamma } if gamma == plan.scales[k] => 2.0 * PI,
                        _ => axis.factor(xi) * PI * (xi * xi + plan.scales[k] * plan.scales[k]) / plan.scales[k],
                    };
                }
                match f.residual(&x) {
                    Ok(r) if r.re.is_finite() && r.im.is_finite() && (r.re * w).is_finite() => m.push(r.re * w, r.im * w),
                    _ => m.rejected += 1,
                }
            }
            m
        })
        .collect();
    let total = reduce_pairwise(&parts);
    let drawn = total.count + total.rejected;
    let rate = total.rejected as f64 / drawn as f64;
    if rate > MAX_REJECTION_RATE {
        return Err(Error::RejectionRate { rate, rejected: total.rejected, drawn });
    }
    if total.rejected > 0 {
        log::warn!("mc_is rejected {} of {} samples", total.rejected, drawn);
    }
    let n = total.count as f64;
    let std_error = (total.m2 / (n * (n - 1.0))).sqrt();
    Ok(IntegralEstimate {
        value: total.mean,
        std_error,
        n_samples: total.count,
        method: Method::MonteCarlo,
        imag_residual: (total.imag_sum / n).abs(),
    })
}
