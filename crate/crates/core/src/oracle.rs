//! Path simulation of the whole model: NIG drivers on a fine grid, OU mortality intensities with the
//! broken-heart jump, Cox death times and the surrender time. Prices are plain discounted-payoff averages.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, InverseGaussian, StandardNormal};
use rayon::prelude::*;

use crate::contract::ContractSpec;
use crate::error::{Error, Result};
use crate::levy::NigParams;
use crate::mortality::{CoupleMortality, Spouse, SpouseParams};
use crate::pricing::PriceEstimate;
use crate::term_structure::MarketModel;

pub const DEFAULT_STEP: f64 = 1.0 / 64.0;
pub const PATH_BATCH: u64 = 4096;
pub const MIN_ORACLE_PATHS: u64 = 10_000;

/// One increment over `dt` of a NIG Lévy process with cumulant dt·θ(z): an inverse-Gaussian
/// subordinator draw V followed by βV + √V·Z.
pub fn simulate_nig_increment<R: Rng + ?Sized>(p: &NigParams, dt: f64, rng: &mut R) -> f64 {
    let gamma = (p.alpha() * p.alpha() - p.beta() * p.beta()).sqrt();
    let scale = p.delta() * dt;
    let v = InverseGaussian::new(scale / gamma, scale * scale).expect("positive parameters").sample(rng);
    let z: f64 = StandardNormal.sample(rng);
    p.beta() * v + v.sqrt() * z
}

struct NigSampler {
    ig: InverseGaussian<f64>,
    beta: f64,
}

impl NigSampler {
    fn new(p: &NigParams, dt: f64) -> Self {
        let gamma = (p.alpha() * p.alpha() - p.beta() * p.beta()).sqrt();
        let scale = p.delta() * dt;
        NigSampler { ig: InverseGaussian::new(scale / gamma, scale * scale).expect("positive parameters"), beta: p.beta() }
    }

    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let v = self.ig.sample(rng);
        let z: f64 = StandardNormal.sample(rng);
        self.beta * v + v.sqrt() * z
    }
}

// Σ_{n ≥ lo} c_n xⁿ/(n+1)! with c_n = 2ⁿ − k; the closed forms cancel badly for small μh.
fn series(x: f64, lo: i32, k: f64) -> f64 {
    let mut term = 1.0;
    let mut sum = 0.0;
    for n in 0..40 {
        term *= if n == 0 { 1.0 } else { x / (n as f64 + 1.0) };
        if n >= lo {
            let add = (2f64.powi(n) - k) * term;
            sum += add;
            if sum != 0.0 && add.abs() < 1e-17 * sum.abs() {
                break;
            }
        }
    }
    sum
}

/// Exact Gaussian step of (λ, ∫λ) for dλ = μλ dt + σ dW over a step h.
#[derive(Debug, Clone, Copy)]
struct OuStep {
    growth: f64,
    integral_mean: f64,
    sd_x: f64,
    chol_yx: f64,
    chol_yy: f64,
}

impl OuStep {
    fn new(p: &SpouseParams, h: f64) -> Self {
        let x = p.mu * h;
        let s2 = p.sigma * p.sigma;
        let var_x = s2 * h * series(x, 0, 0.0);
        let cov = s2 * h * h * series(x, 1, 1.0) / x;
        let var_y = s2 * h * h * h * series(x, 2, 2.0) / (x * x);
        let sd_x = var_x.sqrt();
        let chol_yx = cov / sd_x;
        let chol_yy = (var_y - chol_yx * chol_yx).max(0.0).sqrt();
        OuStep { growth: x.exp(), integral_mean: h * x.exp_m1() / x, sd_x, chol_yx, chol_yy }
    }

    /// (λ(t+h), ∫_t^{t+h} λ) given λ(t).
    fn sample<R: Rng + ?Sized>(&self, lambda: f64, rng: &mut R) -> (f64, f64) {
        let z1: f64 = StandardNormal.sample(rng);
        let z2: f64 = StandardNormal.sample(rng);
        (lambda * self.growth + self.sd_x * z1, lambda * self.integral_mean + self.chol_yx * z1 + self.chol_yy * z2)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulatedCouple {
    /// Death times; `f64::INFINITY` when beyond the simulated horizon.
    pub tau1: f64,
    pub tau2: f64,
    pub first_death: Option<Spouse>,
    /// λ1, λ2 on the grid (before the first death), only when recording was requested.
    pub lambda1: Vec<f64>,
    pub lambda2: Vec<f64>,
    /// Steps whose hazard increment was negative and floored at zero.
    pub floored_steps: u64,
    pub steps: u64,
}

impl SimulatedCouple {
    pub fn tau(&self, s: Spouse) -> f64 {
        match s {
            Spouse::First => self.tau1,
            Spouse::Second => self.tau2,
        }
    }

    pub fn alive_at(&self, t: f64) -> bool {
        self.tau1 > t || self.tau2 > t
    }
}

/// Reusable simulator for one couple law on a fixed grid.
#[derive(Debug, Clone)]
pub struct CoupleSimulator {
    p1: SpouseParams,
    p2: SpouseParams,
    step1: OuStep,
    step2: OuStep,
    h: f64,
    n_steps: usize,
    record: bool,
}

impl CoupleSimulator {
    pub fn new(m: &CoupleMortality, horizon: f64, step: f64) -> Result<Self> {
        if !(horizon > 0.0 && horizon <= m.t_star()) {
            return Err(Error::OutOfRange { t: horizon, lo: 0.0, hi: m.t_star() });
        }
        if !(step > 0.0 && step <= horizon) {
            return Err(Error::invalid("step", format!("must lie in (0, {horizon}], got {step}")));
        }
        let n_steps = (horizon / step).round().max(1.0) as usize;
        let h = horizon / n_steps as f64;
        let (p1, p2) = (*m.spouse1(), *m.spouse2());
        Ok(CoupleSimulator { p1, p2, step1: OuStep::new(&p1, h), step2: OuStep::new(&p2, h), h, n_steps, record: false })
    }

    pub fn recording(mut self, on: bool) -> Self {
        self.record = on;
        self
    }

    pub fn horizon(&self) -> f64 {
        self.h * self.n_steps as f64
    }

    pub fn simulate<R: Rng + ?Sized>(&self, rng: &mut R) -> SimulatedCouple {
        let h = self.h;
        let e1: f64 = Exp1.sample(rng);
        let u: f64 = rng.random();
        let (mut l1, mut l2) = (self.p1.lambda0, self.p2.lambda0);
        let mut hazard = 0.0;
        let mut out = SimulatedCouple {
            tau1: f64::INFINITY,
            tau2: f64::INFINITY,
            first_death: None,
            lambda1: Vec::new(),
            lambda2: Vec::new(),
            floored_steps: 0,
            steps: 0,
        };
        if self.record {
            out.lambda1.push(l1);
            out.lambda2.push(l2);
        }
        // First death: Cox time of λ1 + λ2.
        let mut k = 0;
        let mut hit = None;
        while k < self.n_steps {
            let (n1, i1) = self.step1.sample(l1, rng);
            let (n2, i2) = self.step2.sample(l2, rng);
            out.steps += 1;
            let mut dh = i1 + i2;
            if dh < 0.0 {
                out.floored_steps += 1;
                dh = 0.0;
            }
            if hazard + dh >= e1 {
                let frac = (e1 - hazard) / dh;
                hit = Some((frac, l1, l2, n1, n2));
                break;
            }
            hazard += dh;
            l1 = n1;
            l2 = n2;
            if self.record {
                out.lambda1.push(l1);
                out.lambda2.push(l2);
            }
            k += 1;
        }
        let Some((frac, a1, a2, b1, b2)) = hit else {
            return out;
        };
        let tau_p = (k as f64 + frac) * h;
        let lp1 = a1 + frac * (b1 - a1);
        let lp2 = a2 + frac * (b2 - a2);
        let share = (lp1 / (lp1 + lp2)).clamp(0.0, 1.0);
        let (first, q, lq_tau, lq_end, step_q) = if u <= share {
            (Spouse::First, &self.p2, lp2, b2, &self.step2)
        } else {
            (Spouse::Second, &self.p1, lp1, b1, &self.step1)
        };
        out.first_death = Some(first);
        match first {
            Spouse::First => out.tau1 = tau_p,
            Spouse::Second => out.tau2 = tau_p,
        }

        // Survivor: λ_q plus the decaying jump ε λ_q(τ_p⁻) e^{−κ(t−τ_p)}.
        let jump = q.eps * lq_tau;
        let bump = |t0: f64, t1: f64| jump * ((-q.kappa * (t0 - tau_p)).exp() - (-q.kappa * (t1 - tau_p)).exp()) / q.kappa;
        let e2: f64 = Exp1.sample(rng);
        let mut hz = 0.0;
        let seg = |t0: f64, t1: f64, base: f64, hz: &mut f64, out: &mut SimulatedCouple| -> Option<f64> {
            let mut d = base + bump(t0, t1);
            out.steps += 1;
            if d < 0.0 {
                out.floored_steps += 1;
                d = 0.0;
            }
            if *hz + d >= e2 {
                return Some(t0 + (e2 - *hz) / d * (t1 - t0));
            }
            *hz += d;
            None
        };
        let t_end = (k + 1) as f64 * h;
        let mut lq = lq_end;
        let mut tau_q = seg(tau_p, t_end, 0.5 * (lq_tau + lq_end) * (t_end - tau_p), &mut hz, &mut out);
        let mut j = k + 1;
        while tau_q.is_none() && j < self.n_steps {
            let (nq, iq) = step_q.sample(lq, rng);
            tau_q = seg(j as f64 * h, (j + 1) as f64 * h, iq, &mut hz, &mut out);
            lq = nq;
            j += 1;
        }
        if let Some(t) = tau_q {
            match first {
                Spouse::First => out.tau2 = t,
                Spouse::Second => out.tau1 = t,
            }
        }
        out
    }
}

pub fn simulate_couple<R: Rng + ?Sized>(m: &CoupleMortality, horizon: f64, rng: &mut R) -> Result<SimulatedCouple> {
    Ok(CoupleSimulator::new(m, horizon, DEFAULT_STEP)?.simulate(rng))
}

/// Market quantities of one path at the contract dates.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulatedMarket {
    /// Sorted union of surrender and death-monitoring dates.
    pub dates: Vec<f64>,
    /// exp(−∫_0^t r) at each date.
    pub discount: Vec<f64>,
    pub equity: Vec<f64>,
    /// D(t_l) for l = 1..K−1.
    pub spread: Vec<f64>,
    /// λ^s on [t_l, t_{l+1}) for l = 1..K−1.
    pub surrender_intensity: Vec<f64>,
    /// Index l of the surrender date, or None when the contract is never surrendered.
    pub surrender_index: Option<usize>,
}

impl SimulatedMarket {
    pub fn date_index(&self, t: f64) -> Option<usize> {
        self.dates.iter().position(|&d| (d - t).abs() < 1e-9)
    }
}

#[derive(Debug, Clone)]
struct DateInfo {
    step: usize,
    t: f64,
    // ∫_0^t f0 + ∫_0^t A(s,t) ds − ω(t)
    drift: f64,
    omega: f64,
    exp_at: f64,
    exp_bt: f64,
}

/// Reusable market simulator for one (model, contract) pair.
#[derive(Debug, Clone)]
pub struct MarketSimulator {
    nig1: NigSampler,
    nig2: NigSampler,
    a: f64,
    b: f64,
    sigma2: f64,
    h: f64,
    n_steps: usize,
    dates: Vec<DateInfo>,
    // per surrender date l = 1..K−1: (index into dates, deterministic part of D(t_l))
    surrender: Vec<(usize, f64)>,
    dt_next: Vec<f64>,
    exp_a_mat: f64,
    exp_b_mat: f64,
    beta: f64,
    baseline: f64,
}

impl std::fmt::Debug for NigSampler {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("NigSampler").field("beta", &self.beta).finish()
    }
}

impl Clone for NigSampler {
    fn clone(&self) -> Self {
        NigSampler { ig: self.ig, beta: self.beta }
    }
}

impl MarketSimulator {
    pub fn new(model: &MarketModel, contract: &ContractSpec, step: f64) -> Result<Self> {
        let mat = contract.maturity();
        if !(step > 0.0 && step <= mat) {
            return Err(Error::invalid("step", format!("must lie in (0, {mat}], got {step}")));
        }
        let n_steps = (mat / step).round() as usize;
        let h = mat / n_steps as f64;
        let mut all: Vec<f64> = contract.surrender_dates()[1..].iter().chain(&contract.death_dates()[1..]).copied().collect();
        all.sort_by(f64::total_cmp);
        all.dedup_by(|x, y| (*x - *y).abs() < 1e-12);
        let mut dates = Vec::with_capacity(all.len());
        for &t in &all {
            let pos = t / h;
            if (pos - pos.round()).abs() > 1e-9 {
                return Err(Error::invalid("step", format!("grid step {h} does not hit contract date {t}")));
            }
            dates.push(DateInfo {
                step: pos.round() as usize,
                t,
                drift: model.forward_integral(0.0, t)? + model.drift_integral(t, t)?,
                omega: model.omega(t)?,
                exp_at: (-model.a() * t).exp(),
                exp_bt: (-model.b() * t).exp(),
            });
        }
        let fwd = model.forward_integral(0.0, mat)?;
        let delta = contract.guarantee_rate();
        let mut surrender = Vec::new();
        for l in 1..contract.k() {
            let tl = contract.surrender_dates()[l];
            let idx = dates.iter().position(|d| (d.t - tl).abs() < 1e-12).expect("surrender date on grid");
            let det = -contract.penalty_p(tl)? - delta * mat - model.omega(tl)? + fwd + model.drift_integral(tl, mat)?;
            surrender.push((idx, det));
        }
        let dt_next = contract.surrender_intensity_weights().iter().map(|w| w.dt).collect();
        Ok(MarketSimulator {
            nig1: NigSampler::new(model.nig1(), h),
            nig2: NigSampler::new(model.nig2(), h),
            a: model.a(),
            b: model.b(),
            sigma2: model.sigma2(),
            h,
            n_steps,
            dates,
            surrender,
            dt_next,
            exp_a_mat: (-model.a() * mat).exp(),
            exp_b_mat: (-model.b() * mat).exp(),
            beta: contract.surrender_beta(),
            baseline: contract.surrender_baseline(),
        })
    }

    pub fn step(&self) -> f64 {
        self.h
    }

    pub fn simulate<R: Rng + ?Sized>(&self, rng: &mut R) -> SimulatedMarket {
        let n_dates = self.dates.len();
        let mut discount = Vec::with_capacity(n_dates);
        let mut equity = Vec::with_capacity(n_dates);
        let mut ls = Vec::with_capacity(n_dates);
        // Running L¹, L², Σ e^{a s_mid} ΔL¹ and Σ e^{b s_mid} ΔL².
        let (mut l1, mut l2, mut j1, mut j2) = (0.0, 0.0, 0.0, 0.0);
        let mut next = 0;
        for k in 0..self.n_steps {
            let d1 = self.nig1.sample(rng);
            let d2 = self.nig2.sample(rng);
            let mid = (k as f64 + 0.5) * self.h;
            l1 += d1;
            l2 += d2;
            j1 += (self.a * mid).exp() * d1;
            j2 += (self.b * mid).exp() * d2;
            while next < n_dates && self.dates[next].step == k + 1 {
                let d = &self.dates[next];
                // ∫Σ1(s,t)dL¹ = L¹_t − e^{−at}Σ e^{as}dL¹, likewise for Σ2.
                let int_r = d.drift - (l1 - d.exp_at * j1) + (l2 - d.exp_bt * j2);
                discount.push((-int_r).exp());
                equity.push((int_r + self.sigma2 * l2 - d.omega).exp());
                ls.push((l1, l2, j1, j2));
                next += 1;
            }
        }
        let mut spread = Vec::with_capacity(self.surrender.len());
        let mut intensity = Vec::with_capacity(self.surrender.len());
        for &(idx, det) in &self.surrender {
            let (l1, l2, j1, j2) = ls[idx];
            let d = det + self.sigma2 * l2 - (l1 - self.exp_a_mat * j1) + (l2 - self.exp_b_mat * j2);
            spread.push(d);
            intensity.push(self.beta * d.abs() + self.baseline);
        }
        // Surrender at t_l when the no-surrender probability drops below U within [t_l, t_{l+1}).
        let u: f64 = rng.random();
        let mut survival = 1.0;
        let mut surrender_index = None;
        for (l, lam) in intensity.iter().enumerate() {
            survival *= (-lam * self.dt_next[l]).exp();
            if u > survival {
                surrender_index = Some(l + 1);
                break;
            }
        }
        SimulatedMarket {
            dates: self.dates.iter().map(|d| d.t).collect(),
            discount,
            equity,
            spread,
            surrender_intensity: intensity,
            surrender_index,
        }
    }
}

pub fn simulate_market<R: Rng + ?Sized>(model: &MarketModel, contract: &ContractSpec, rng: &mut R) -> Result<SimulatedMarket> {
    Ok(MarketSimulator::new(model, contract, DEFAULT_STEP)?.simulate(rng))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleOptions {
    pub paths: u64,
    pub seed: u64,
    pub step: f64,
}

impl Default for OracleOptions {
    fn default() -> Self {
        OracleOptions { paths: 200_000, seed: crate::pricing::DEFAULT_SEED, step: DEFAULT_STEP }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleEstimate {
    pub gmab: PriceEstimate,
    pub sb: PriceEstimate,
    pub db: PriceEstimate,
    pub total: PriceEstimate,
    pub paths: u64,
    pub seed: u64,
    pub step: f64,
    /// Fraction of hazard steps floored because the simulated intensity went negative.
    pub negative_intensity_rate: f64,
}

#[derive(Debug, Clone, Copy, Default)]
struct Acc {
    n: u64,
    mean: [f64; 4],
    m2: [f64; 4],
    floored: u64,
    steps: u64,
}

impl Acc {
    fn push(&mut self, x: [f64; 4]) {
        self.n += 1;
        let n = self.n as f64;
        for k in 0..4 {
            let d = x[k] - self.mean[k];
            self.mean[k] += d / n;
            self.m2[k] += d * (x[k] - self.mean[k]);
        }
    }

    fn merge(a: Acc, b: Acc) -> Acc {
        let n = a.n + b.n;
        let mut out = Acc { n, floored: a.floored + b.floored, steps: a.steps + b.steps, ..Default::default() };
        if n == 0 {
            return out;
        }
        let (na, nb, nn) = (a.n as f64, b.n as f64, n as f64);
        for k in 0..4 {
            let d = b.mean[k] - a.mean[k];
            out.mean[k] = a.mean[k] + d * nb / nn;
            out.m2[k] = a.m2[k] + b.m2[k] + d * d * na * nb / nn;
        }
        out
    }
}

fn reduce(parts: &[Acc]) -> Acc {
    match parts.len() {
        0 => Acc::default(),
        1 => parts[0],
        n => Acc::merge(reduce(&parts[..n / 2]), reduce(&parts[n / 2..])),
    }
}

/// Discounted GMAB, SB and DB payoffs of one paired (market, couple) draw.
fn payoffs(contract: &ContractSpec, mk: &SimulatedMarket, cp: &SimulatedCouple) -> [f64; 3] {
    let notional = contract.notional();
    let delta = contract.guarantee_rate();
    let mat = contract.maturity();
    let alpha = contract.death_multiplier();
    let t = contract.surrender_dates();
    let tbar = contract.death_dates();
    let surrender_time = mk.surrender_index.map(|l| t[l]);

    let mut gmab = 0.0;
    if surrender_time.is_none() && cp.alive_at(mat) {
        let k = mk.date_index(mat).expect("maturity on grid");
        gmab = mk.discount[k] * notional * mk.equity[k].max((delta * mat).exp());
    }
    let mut sb = 0.0;
    if let Some(l) = mk.surrender_index {
        if cp.alive_at(t[l]) {
            let k = mk.date_index(t[l]).expect("surrender date on grid");
            sb = mk.discount[k] * notional * mk.equity[k] * contract.penalty_factor(t[l]).expect("date inside contract");
        }
    }
    let mut db = 0.0;
    for i in 1..tbar.len() {
        let (lo, hi) = (tbar[i - 1], tbar[i]);
        let in1 = cp.tau1 >= lo && cp.tau1 < hi;
        let in2 = cp.tau2 >= lo && cp.tau2 < hi;
        let weight = match (in1, in2) {
            (true, true) => alpha,
            (true, false) | (false, true) => 1.0,
            _ => continue,
        };
        if surrender_time.is_some_and(|ts| ts < hi - 1e-12) {
            continue;
        }
        let k = mk.date_index(hi).expect("death date on grid");
        db += weight * mk.discount[k] * notional * mk.equity[k].max((delta * hi).exp());
    }
    [gmab, sb, db]
}

/// Full Monte Carlo price. Market and mortality draws for batch b use ChaCha streams 2b and 2b+1 of
/// the same seed, so the two are independent and the result does not depend on the worker count.
pub fn oracle_price(model: &MarketModel, contract: &ContractSpec, mortality: &CoupleMortality, opts: &OracleOptions) -> Result<OracleEstimate> {
    if opts.paths < MIN_ORACLE_PATHS {
        return Err(Error::invalid("paths", format!("oracle needs at least {MIN_ORACLE_PATHS} paths, got {}", opts.paths)));
    }
    let market = MarketSimulator::new(model, contract, opts.step)?;
    let couples = CoupleSimulator::new(mortality, contract.maturity(), market.step())?;
    let n_batches = opts.paths.div_ceil(PATH_BATCH);
    let parts: Vec<Acc> = (0..n_batches)
        .into_par_iter()
        .map(|b| {
            let mut rng_m = ChaCha8Rng::seed_from_u64(opts.seed);
            rng_m.set_stream(2 * b);
            let mut rng_c = ChaCha8Rng::seed_from_u64(opts.seed);
            rng_c.set_stream(2 * b + 1);
            let size = PATH_BATCH.min(opts.paths - b * PATH_BATCH);
            let mut acc = Acc::default();
            for _ in 0..size {
                let mk = market.simulate(&mut rng_m);
                let cp = couples.simulate(&mut rng_c);
                acc.floored += cp.floored_steps;
                acc.steps += cp.steps;
                let [g, s, d] = payoffs(contract, &mk, &cp);
                acc.push([g, s, d, g + s + d]);
            }
            acc
        })
        .collect();
    let acc = reduce(&parts);
    let n = acc.n as f64;
    let est = |k: usize| PriceEstimate { value: acc.mean[k], std_error: (acc.m2[k] / (n * (n - 1.0))).sqrt() };
    let rate = if acc.steps == 0 { 0.0 } else { acc.floored as f64 / acc.steps as f64 };
    if acc.floored > 0 {
        log::info!("oracle: {} of {} hazard steps floored at zero ({rate:.2e})", acc.floored, acc.steps);
    }
    Ok(OracleEstimate {
        gmab: est(0),
        sb: est(1),
        db: est(2),
        total: est(3),
        paths: acc.n,
        seed: opts.seed,
        step: market.step(),
        negative_intensity_rate: rate,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn series_match_closed_forms() {
        let x: f64 = 0.3;
        assert!((series(x, 0, 0.0) - (2.0 * x).exp_m1() / (2.0 * x)).abs() < 1e-14);
        let cov = series(x, 1, 1.0);
        let closed = (2.0 * x).exp_m1() / (2.0 * x) - x.exp_m1() / x;
        assert!((cov - closed).abs() < 1e-14);
        let var = series(x, 2, 2.0);
        let closed = (2.0 * x).exp_m1() / (2.0 * x) - 2.0 * x.exp_m1() / x + 1.0;
        assert!((var - closed).abs() < 1e-14);
    }
}
