//! Globally adaptive Gauss-Kronrod (7, 15) quadrature over real or complex integrands.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::ops::{Add, Mul, Sub};

use num_complex::Complex64;

use crate::error::{Error, Result};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];

// Gauss weights for the odd-indexed Kronrod nodes 1, 3, 5 and the centre.
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

/// Values the integrator can accumulate.
pub trait QuadValue:
    Copy + Default + Add<Output = Self> + Sub<Output = Self> + Mul<f64, Output = Self>
{
    fn magnitude(self) -> f64;
    fn is_finite_value(self) -> bool;
}

impl QuadValue for f64 {
    fn magnitude(self) -> f64 {
        self.abs()
    }
    fn is_finite_value(self) -> bool {
        self.is_finite()
    }
}

impl QuadValue for Complex64 {
    fn magnitude(self) -> f64 {
        self.norm()
    }
    fn is_finite_value(self) -> bool {
        self.re.is_finite() && self.im.is_finite()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadOptions {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_intervals: usize,
}

impl Default for QuadOptions {
    fn default() -> Self {
        QuadOptions { abs_tol: 1e-14, rel_tol: 1e-10, max_intervals: 2000 }
    }
}

impl QuadOptions {
    pub fn relative(rel_tol: f64) -> Self {
        QuadOptions { rel_tol, ..Default::default() }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct QuadResult<T> {
    pub value: T,
    pub error: f64,
    pub evaluations: usize,
    pub intervals: usize,
}

struct Segment<T> {
    a: f64,
    b: f64,
    value: T,
    error: f64,
}

impl<T> PartialEq for Segment<T> {
    fn eq(&self, other: &Self) -> bool {
        self.error.total_cmp(&other.error) == Ordering::Equal
    }
}
impl<T> Eq for Segment<T> {}
impl<T> PartialOrd for Segment<T> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl<T> Ord for Segment<T> {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

/// Single G7-K15 panel on [a, b]: Kronrod value and |K − G| as the error estimate.
pub fn gk15<T, F>(f: &mut F, a: f64, b: f64) -> Result<(T, f64)>
where
    T: QuadValue,
    F: FnMut(f64) -> Result<T>,
{
    let centre = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let mut fv = [T::default(); 15];
    fv[7] = f(centre)?;
    for (k, &x) in XGK[..7].iter().enumerate() {
        let dx = half * x;
        fv[k] = f(centre - dx)?;
        fv[14 - k] = f(centre + dx)?;
    }
    let mut kronrod = fv[7] * WGK[7];
    let mut gauss = fv[7] * WG[3];
    for k in 0..7 {
        let pair = fv[k] + fv[14 - k];
        kronrod = kronrod + pair * WGK[k];
        if k % 2 == 1 {
            gauss = gauss + pair * WG[k / 2];
        }
    }
    if !kronrod.is_finite_value() {
        return Err(Error::NonFinite);
    }
    Ok((kronrod * half, ((kronrod - gauss) * half).magnitude()))
}

/// Integrates `f` over [a, b].
pub fn integrate<T, F>(f: F, a: f64, b: f64, opts: &QuadOptions) -> Result<QuadResult<T>>
where
    T: QuadValue,
    F: FnMut(f64) -> Result<T>,
{
    integrate_pieces(f, &[a, b], opts)
}

/// Integrates `f` over [points[0], points[last]], never placing a panel across an interior point.
pub fn integrate_pieces<T, F>(mut f: F, points: &[f64], opts: &QuadOptions) -> Result<QuadResult<T>>
where
    T: QuadValue,
    F: FnMut(f64) -> Result<T>,
{
    let mut heap = BinaryHeap::new();
    let mut total = T::default();
    let mut total_error = 0.0;
    let mut evaluations = 0;
    for w in points.windows(2) {
        let (a, b) = (w[0], w[1]);
        if b <= a {
            continue;
        }
        let (value, error) = gk15(&mut f, a, b)?;
        evaluations += 15;
        total = total + value;
        total_error += error;
        heap.push(Segment { a, b, value, error });
    }

    loop {
        let tolerance = opts.abs_tol.max(opts.rel_tol * total.magnitude());
        if total_error <= tolerance {
            break;
        }
        if heap.len() >= opts.max_intervals {
            return Err(Error::Quadrature { error: total_error, tolerance, intervals: heap.len() });
        }
        let worst = match heap.pop() {
            Some(s) => s,
            None => break,
        };
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            // Panel is at machine resolution; further bisection is meaningless.
            return Err(Error::Quadrature { error: total_error, tolerance, intervals: heap.len() + 1 });
        }
        let (left, el) = gk15(&mut f, worst.a, mid)?;
        let (right, er) = gk15(&mut f, mid, worst.b)?;
        evaluations += 30;
        total = total - worst.value + left + right;
        total_error += el + er - worst.error;
        heap.push(Segment { a: worst.a, b: mid, value: left, error: el });
        heap.push(Segment { a: mid, b: worst.b, value: right, error: er });
    }

    // Re-sum from the panels to shed incremental cancellation error.
    let mut segments: Vec<Segment<T>> = heap.into_vec();
    segments.sort_by(|x, y| x.a.total_cmp(&y.a));
    let value = segments.iter().fold(T::default(), |acc, s| acc + s.value);
    let error = segments.iter().map(|s| s.error).sum();
    Ok(QuadResult { value, error, evaluations, intervals: segments.len() })
}
