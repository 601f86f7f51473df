//! Adaptive Gauss-Kronrod (10/21) quadrature on finite and half-infinite
//! intervals.

#![allow(clippy::excessive_precision)]

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};

const XGK: [f64; 11] = [
    0.995_657_163_025_808_080_735_527_280_689_003,
    0.973_906_528_517_171_720_077_964_012_084_452,
    0.930_157_491_355_708_226_001_207_180_059_508,
    0.865_063_366_688_984_510_732_096_688_423_493,
    0.780_817_726_586_416_897_063_717_578_345_042,
    0.679_409_568_299_024_406_234_327_365_114_874,
    0.562_757_134_668_604_683_339_000_099_272_694,
    0.433_395_394_129_247_190_799_265_943_165_784,
    0.294_392_862_701_460_198_131_126_603_103_866,
    0.148_874_338_981_631_210_884_826_001_129_720,
    0.0,
];

const WGK: [f64; 11] = [
    0.011_694_638_867_371_874_278_064_396_062_192,
    0.032_558_162_307_964_727_478_818_972_459_390,
    0.054_755_896_574_351_996_031_381_300_244_580,
    0.075_039_674_810_919_952_767_043_140_916_190,
    0.093_125_454_583_697_605_535_065_465_083_366,
    0.109_387_158_802_297_641_899_210_590_325_805,
    0.123_491_976_262_065_851_077_888_894_082_195,
    0.134_709_217_311_473_325_928_054_001_771_707,
    0.142_775_938_577_060_080_797_094_273_138_717,
    0.147_739_104_901_338_491_374_841_515_972_068,
    0.149_445_554_002_916_905_664_936_468_389_821,
];

// Gauss weights for the odd-indexed Kronrod nodes.
const WG: [f64; 5] = [
    0.066_671_344_308_688_137_593_568_809_893_332,
    0.149_451_349_150_580_593_145_776_339_657_697,
    0.219_086_362_515_982_043_995_534_934_228_163,
    0.269_266_719_309_996_355_091_226_921_569_469,
    0.295_524_224_714_752_870_173_892_994_651_338,
];

/// Tolerances and work limit for [`integrate`].
#[derive(Debug, Clone, Copy)]
pub struct QuadOptions {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_intervals: usize,
}

impl Default for QuadOptions {
    fn default() -> Self {
        Self {
            rel_tol: 1e-10,
            abs_tol: 0.0,
            max_intervals: 4000,
        }
    }
}

impl QuadOptions {
    pub fn rel(rel_tol: f64) -> Self {
        Self {
            rel_tol,
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadResult {
    pub value: f64,
    pub error_estimate: f64,
    pub evaluations: usize,
}

#[derive(Debug, Clone, Copy)]
struct Segment {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Segment {}
impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Segment {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn gk21<F>(f: &mut F, a: f64, b: f64) -> Result<Segment>
where
    F: FnMut(f64) -> Result<f64>,
{
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center)?;
    let mut kronrod = fc * WGK[10];
    let mut gauss = 0.0;
    for i in 0..10 {
        let dx = half * XGK[i];
        let (f1, f2) = (f(center - dx)?, f(center + dx)?);
        kronrod += WGK[i] * (f1 + f2);
        if i % 2 == 1 {
            gauss += WG[i / 2] * (f1 + f2);
        }
    }
    let value = kronrod * half;
    let diff = ((kronrod - gauss) * half).abs();
    // QUADPACK-style sharpening of the raw Gauss/Kronrod difference.
    let error = if diff == 0.0 {
        50.0 * f64::EPSILON * value.abs()
    } else {
        let scaled = diff
            * (200.0 * diff / value.abs().max(f64::MIN_POSITIVE))
                .powf(1.5)
                .min(1.0);
        scaled
            .max(diff * 1e-3)
            .max(50.0 * f64::EPSILON * value.abs())
    };
    if !value.is_finite() {
        return Err(Error::Convergence {
            what: "quadrature (non-finite integrand)",
            partial: value,
            terms: 0,
        });
    }
    Ok(Segment { a, b, value, error })
}

/// Integrates `f` over `[a, b]` by bisecting the segment with the largest
/// error estimate until the total error meets `opts`.
pub fn integrate<F>(mut f: F, a: f64, b: f64, opts: QuadOptions) -> Result<QuadResult>
where
    F: FnMut(f64) -> Result<f64>,
{
    if !(a.is_finite() && b.is_finite()) {
        return Err(Error::InvalidInput(
            "integration limits must be finite".into(),
        ));
    }
    if a == b {
        return Ok(QuadResult {
            value: 0.0,
            error_estimate: 0.0,
            evaluations: 0,
        });
    }
    let mut heap = BinaryHeap::new();
    let first = gk21(&mut f, a, b)?;
    let mut total = first.value;
    let mut error = first.error;
    let mut evaluations = 21;
    heap.push(first);

    while error > opts.abs_tol.max(opts.rel_tol * total.abs()) {
        if heap.len() >= opts.max_intervals {
            return Err(Error::Convergence {
                what: "adaptive quadrature",
                partial: total,
                terms: evaluations,
            });
        }
        let worst = heap.pop().expect("heap is never empty");
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            // Segment cannot be split further in f64; accept what we have.
            heap.push(worst);
            break;
        }
        let left = gk21(&mut f, worst.a, mid)?;
        let right = gk21(&mut f, mid, worst.b)?;
        evaluations += 42;
        total += left.value + right.value - worst.value;
        error += left.error + right.error - worst.error;
        heap.push(left);
        heap.push(right);
    }

    // Re-sum to shed the drift of the incremental updates.
    let mut value = crate::sum::CompensatedSum::new();
    let mut err = 0.0;
    for s in heap.iter() {
        value.add(s.value);
        err += s.error;
    }
    Ok(QuadResult {
        value: value.value(),
        error_estimate: err,
        evaluations,
    })
}

/// Integrates `f` over `[0, inf)` through `x = scale * t / (1 - t)`.
///
/// `scale` should be of the order of the integrand's decay length so the
/// mass sits in the middle of the unit interval.
pub fn integrate_half_line<F>(mut f: F, scale: f64, opts: QuadOptions) -> Result<QuadResult>
where
    F: FnMut(f64) -> Result<f64>,
{
    if !(scale > 0.0 && scale.is_finite()) {
        return Err(Error::InvalidInput(
            "half-line scale must be positive".into(),
        ));
    }
    integrate(
        |t| {
            if t >= 1.0 {
                return Ok(0.0);
            }
            let one_minus = 1.0 - t;
            let x = scale * t / one_minus;
            let jac = scale / (one_minus * one_minus);
            let v = f(x)?;
            Ok(if v == 0.0 { 0.0 } else { v * jac })
        },
        0.0,
        1.0,
        opts,
    )
}
