//! Batch and streaming discrete Haar wavelet transform. The streaming
//! analyzer emits each detail coefficient at the earliest sample index at
//! which it is determined; the resulting emission order is the postorder of
//! the detail tree.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::dyadic::{Depth, DyadicInterval};
use crate::error::{Error, Result};
use crate::rational::DyadicRational;

/// Value carried through the exact pyramid: `value * sqrt(2)^half` with
/// `half` in `{0, 1}`, so that the `1/sqrt(2)` per stage is bookkeeping on
/// a half-integer exponent rather than a rounding step.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ExactValue {
    value: DyadicRational,
    half: u8,
}

impl ExactValue {
    /// `rational * 2^{half_exponent / 2}`, normalized.
    pub fn new(rational: DyadicRational, half_exponent: i64) -> Self {
        if rational.is_zero() {
            return ExactValue {
                value: DyadicRational::zero(),
                half: 0,
            };
        }
        let half = half_exponent.rem_euclid(2);
        ExactValue {
            value: rational.scale_pow2((half_exponent - half) / 2),
            half: half as u8,
        }
    }

    pub fn from_rational(rational: DyadicRational) -> Self {
        Self::new(rational, 0)
    }

    pub fn rational_part(&self) -> &DyadicRational {
        &self.value
    }

    pub fn half_exponent(&self) -> u8 {
        self.half
    }

    pub fn is_zero(&self) -> bool {
        self.value.is_zero()
    }

    /// Exact square: `value^2 * 2^half` is plainly rational.
    pub fn square(&self) -> DyadicRational {
        self.value.square().scale_pow2(self.half as i64)
    }

    pub fn to_f64(&self) -> f64 {
        self.value.to_f64() * 2f64.sqrt().powi(self.half as i32)
    }
}

/// The two butterfly operations of the Haar pyramid, shared by analysis and
/// synthesis: `(a + b)/sqrt(2)` and `(a - b)/sqrt(2)`.
pub trait DwtValue: Clone + PartialEq + std::fmt::Debug {
    fn avg(a: &Self, b: &Self) -> Self;
    fn diff(a: &Self, b: &Self) -> Self;
    fn zero() -> Self;
}

impl DwtValue for f64 {
    fn avg(a: &Self, b: &Self) -> Self {
        (a + b) / std::f64::consts::SQRT_2
    }
    fn diff(a: &Self, b: &Self) -> Self {
        (a - b) / std::f64::consts::SQRT_2
    }
    fn zero() -> Self {
        0.0
    }
}

impl DwtValue for ExactValue {
    fn avg(a: &Self, b: &Self) -> Self {
        combine(a, b, false)
    }
    fn diff(a: &Self, b: &Self) -> Self {
        combine(a, b, true)
    }
    fn zero() -> Self {
        ExactValue::from_rational(DyadicRational::zero())
    }
}

fn combine(a: &ExactValue, b: &ExactValue, subtract: bool) -> ExactValue {
    // align the two operands on a common half exponent; pyramid operands
    // always agree up to zeros, and a mixed {0,1} pair only differs by a
    // whole power of two after alignment when one side is zero
    let (ra, rb, half) = if a.is_zero() {
        (DyadicRational::zero(), b.value.clone(), b.half)
    } else if b.is_zero() {
        (a.value.clone(), DyadicRational::zero(), a.half)
    } else {
        assert_eq!(a.half, b.half, "pyramid operands must share a stage");
        (a.value.clone(), b.value.clone(), a.half)
    };
    let r = if subtract { &ra - &rb } else { &ra + &rb };
    ExactValue::new(r, half as i64 - 1)
}

/// A sampled signal of length `2^M`.
#[derive(Clone, Debug, PartialEq)]
pub struct Signal<T> {
    samples: Vec<T>,
}

impl<T: DwtValue> Signal<T> {
    pub fn new(samples: Vec<T>) -> Result<Self> {
        if samples.is_empty() || !samples.len().is_power_of_two() {
            return Err(Error::NonPowerOfTwoLength(samples.len()));
        }
        Ok(Signal { samples })
    }

    /// The number of pyramid stages `M`, with `len = 2^M`.
    pub fn levels(&self) -> u32 {
        self.samples.len().trailing_zeros()
    }

    pub fn samples(&self) -> &[T] {
        &self.samples
    }
}

impl Signal<ExactValue> {
    pub fn from_rationals(samples: Vec<DyadicRational>) -> Result<Self> {
        Signal::new(samples.into_iter().map(ExactValue::from_rational).collect())
    }
}

/// The decomposed signal: one trend `c^0_0` plus `2^M - 1` detail
/// coefficients keyed by intervals of the depth-`M-1` tree.
#[derive(Clone, Debug, PartialEq)]
pub struct HaarCoefficients<T> {
    levels: u32,
    trend: T,
    details: BTreeMap<DyadicInterval, T>,
}

impl<T: DwtValue> HaarCoefficients<T> {
    pub fn new(levels: u32, trend: T, details: BTreeMap<DyadicInterval, T>) -> Result<Self> {
        let expected = (1u64 << levels) - 1;
        if details.len() as u64 != expected {
            return Err(Error::MalformedCoefficients(format!(
                "expected {expected} details for {} samples, got {}",
                1u64 << levels,
                details.len()
            )));
        }
        if levels > 0 {
            let depth = Depth::new(levels - 1)?;
            for interval in details.keys() {
                if interval.level() > depth.get() {
                    return Err(Error::MalformedCoefficients(format!(
                        "detail interval at level {} outside the depth-{} tree",
                        interval.level(),
                        depth.get()
                    )));
                }
            }
        }
        Ok(HaarCoefficients {
            levels,
            trend,
            details,
        })
    }

    pub fn levels(&self) -> u32 {
        self.levels
    }

    /// The detail tree `D_{M-1}`; `None` for the one-sample signal.
    pub fn detail_depth(&self) -> Option<Depth> {
        if self.levels == 0 {
            None
        } else {
            Some(Depth::new(self.levels - 1).unwrap())
        }
    }

    pub fn trend(&self) -> &T {
        &self.trend
    }

    pub fn detail(&self, interval: DyadicInterval) -> Option<&T> {
        self.details.get(&interval)
    }

    pub fn details(&self) -> impl Iterator<Item = (DyadicInterval, &T)> {
        self.details.iter().map(|(&i, v)| (i, v))
    }
}

/// The ordered output of the streaming analyzer: detail emissions in
/// determination order, then the trend, plus the high-water mark of the
/// pending stack.
#[derive(Clone, Debug, PartialEq)]
pub struct CoefficientStream<T> {
    pub emissions: Vec<(DyadicInterval, T)>,
    pub trend: T,
    pub max_pending: usize,
}

impl<T: DwtValue> CoefficientStream<T> {
    pub fn into_coefficients(self, levels: u32) -> Result<HaarCoefficients<T>> {
        HaarCoefficients::new(levels, self.trend, self.emissions.into_iter().collect())
    }
}

/// Classic level-by-level pyramid: `M` full passes, each halving the trend
/// vector. `c^{j-1}_k = (c^j_{2k} + c^j_{2k+1})/sqrt(2)`,
/// `d^{j-1}_k = (c^j_{2k} - c^j_{2k+1})/sqrt(2)`.
pub fn analyze_levelwise<T: DwtValue>(signal: &Signal<T>) -> HaarCoefficients<T> {
    let m = signal.levels();
    let mut trend: Vec<T> = signal.samples.clone();
    let mut details = BTreeMap::new();
    for stage in 0..m {
        // producing level m - 1 - stage of the detail tree
        let level = m - 1 - stage;
        let depth = Depth::new(m - 1).unwrap();
        let mut next = Vec::with_capacity(trend.len() / 2);
        for k in 0..trend.len() / 2 {
            let a = &trend[2 * k];
            let b = &trend[2 * k + 1];
            next.push(T::avg(a, b));
            let interval = DyadicInterval::new(level, k as u64, depth).unwrap();
            details.insert(interval, T::diff(a, b));
        }
        trend = next;
    }
    HaarCoefficients {
        levels: m,
        trend: trend.pop().unwrap(),
        details,
    }
}

/// Single left-to-right pass holding at most `M + 1` pending trends. Each
/// incoming sample is pushed at scale 0; whenever the two newest pending
/// trends share a scale they merge, emitting the detail of their block.
pub fn analyze_streaming<T: DwtValue>(signal: &Signal<T>) -> CoefficientStream<T> {
    let m = signal.levels();
    let depth = if m > 0 { Some(Depth::new(m - 1).unwrap()) } else { None };
    // (scale, block index, trend value); scale s covers 2^s samples
    let mut stack: Vec<(u32, u64, T)> = Vec::new();
    let mut emissions = Vec::new();
    let mut max_pending = 0usize;
    for (index, sample) in signal.samples.iter().enumerate() {
        stack.push((0, index as u64, sample.clone()));
        max_pending = max_pending.max(stack.len());
        while stack.len() >= 2 && stack[stack.len() - 2].0 == stack[stack.len() - 1].0 {
            let (s, kb, b) = stack.pop().unwrap();
            let (_, ka, a) = stack.pop().unwrap();
            debug_assert_eq!(kb, ka + 1);
            let interval = DyadicInterval::new(m - 1 - s, ka / 2, depth.unwrap()).unwrap();
            emissions.push((interval, T::diff(&a, &b)));
            stack.push((s + 1, ka / 2, T::avg(&a, &b)));
            max_pending = max_pending.max(stack.len());
        }
    }
    debug_assert_eq!(stack.len(), 1);
    CoefficientStream {
        emissions,
        trend: stack.pop().unwrap().2,
        max_pending,
    }
}

/// Inverse pyramid: `c^j_{2k} = (c^{j-1}_k + d^{j-1}_k)/sqrt(2)`,
/// `c^j_{2k+1} = (c^{j-1}_k - d^{j-1}_k)/sqrt(2)`.
pub fn synthesize<T: DwtValue>(coefficients: &HaarCoefficients<T>) -> Result<Signal<T>> {
    let m = coefficients.levels;
    let mut trend = vec![coefficients.trend.clone()];
    for stage in 0..m {
        let level = stage;
        let depth = Depth::new(m - 1).unwrap();
        let mut next = Vec::with_capacity(trend.len() * 2);
        for (k, c) in trend.iter().enumerate() {
            let interval = DyadicInterval::new(level, k as u64, depth).unwrap();
            let d = coefficients.details.get(&interval).ok_or_else(|| {
                Error::MalformedCoefficients(format!(
                    "missing detail at level {level}, position {k}"
                ))
            })?;
            next.push(T::avg(c, d));
            next.push(T::diff(c, d));
        }
        trend = next;
    }
    Signal::new(trend)
}
