//! Adaptive Gauss-Kronrod quadrature.
//!
//! [`integrate`] is a global adaptive (21-point Kronrod, 10-point Gauss)
//! scheme in the spirit of QUADPACK's `qag`. [`integrate_radial`] handles the
//! radial integrals of Levy densities: it works in the variable `u = ln r`, so
//! power-law singularities at the origin and heavy tails become smooth
//! exponentials, and it sums unit-width shells in `u` towards `0` or `+inf`,
//! extrapolating the remainder geometrically once the shell ratios settle.

use alloc::collections::BinaryHeap;
use core::cmp::Ordering;

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
    0.123_491_976_262_065_851_077_600_525_161_775,
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

/// Stopping rule for the adaptive schemes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerance {
    pub rel: f64,
    pub abs: f64,
    pub max_intervals: usize,
}

impl Default for Tolerance {
    fn default() -> Self {
        Tolerance {
            rel: 1e-10,
            abs: 1e-14,
            max_intervals: 4000,
        }
    }
}

impl Tolerance {
    pub fn with_rel(rel: f64) -> Self {
        Tolerance {
            rel,
            ..Tolerance::default()
        }
    }

    fn target(&self, value: f64) -> f64 {
        self.abs.max(self.rel * value.abs())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub error: f64,
}

/// One application of the 21-point Kronrod rule on `[a, b]`.
///
/// Also returns `int |f|`, which sets the roundoff floor of the error.
fn gk21<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (Estimate, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut res_k = WGK[10] * fc;
    let mut res_g = 0.0;
    let mut res_abs = res_k.abs();
    let mut fv1 = [0.0; 10];
    let mut fv2 = [0.0; 10];
    for j in 0..10 {
        let dx = half * XGK[j];
        let f1 = f(center - dx);
        let f2 = f(center + dx);
        fv1[j] = f1;
        fv2[j] = f2;
        res_k += WGK[j] * (f1 + f2);
        res_abs += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            res_g += WG[j / 2] * (f1 + f2);
        }
    }
    let mean = 0.5 * res_k;
    let mut res_asc = WGK[10] * (fc - mean).abs();
    for j in 0..10 {
        res_asc += WGK[j] * ((fv1[j] - mean).abs() + (fv2[j] - mean).abs());
    }
    let value = res_k * half;
    res_abs *= half.abs();
    res_asc *= half.abs();
    let mut error = ((res_k - res_g) * half).abs();
    if res_asc != 0.0 && error != 0.0 {
        error = res_asc * libm::pow(200.0 * error / res_asc, 1.5).min(1.0);
    }
    if res_abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        error = error.max(50.0 * f64::EPSILON * res_abs);
    }
    (Estimate { value, error }, res_abs)
}

struct Piece {
    a: f64,
    b: f64,
    est: Estimate,
    mass: f64,
}

impl PartialEq for Piece {
    fn eq(&self, other: &Self) -> bool {
        self.est.error == other.est.error
    }
}
impl Eq for Piece {}
impl PartialOrd for Piece {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Piece {
    fn cmp(&self, other: &Self) -> Ordering {
        self.est
            .error
            .partial_cmp(&other.est.error)
            .unwrap_or(Ordering::Equal)
    }
}

/// Integrates `f` over the finite interval `[a, b]`.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: Tolerance) -> Result<Estimate> {
    integrate_split(&f, a, b, 1, tol)
}

/// Same as [`integrate`], starting from `pieces` equal subintervals.
pub fn integrate_split<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    pieces: usize,
    tol: Tolerance,
) -> Result<Estimate> {
    if a == b {
        return Ok(Estimate {
            value: 0.0,
            error: 0.0,
        });
    }
    if !(a.is_finite() && b.is_finite()) {
        return Err(Error::Domain {
            what: "finite integration limits",
            value: if a.is_finite() { b } else { a },
        });
    }
    let pieces = pieces.max(1);
    let width = (b - a) / pieces as f64;
    let mut heap = BinaryHeap::with_capacity(pieces + 64);
    let mut total = 0.0;
    let mut err = 0.0;
    let mut mass = 0.0;
    for i in 0..pieces {
        let lo = a + width * i as f64;
        let hi = if i + 1 == pieces { b } else { lo + width };
        let (est, m) = gk21(f, lo, hi);
        total += est.value;
        err += est.error;
        mass += m;
        heap.push(Piece { a: lo, b: hi, est, mass: m });
    }
    // Cancellation leaves an error floor proportional to int |f|.
    while err > tol.target(total).max(200.0 * f64::EPSILON * mass) {
        if heap.len() >= tol.max_intervals {
            return Err(Error::Quadrature {
                estimate: total,
                error: err,
            });
        }
        let worst = match heap.pop() {
            Some(p) => p,
            None => break,
        };
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            // Interval cannot be split further in floating point.
            return Err(Error::Quadrature {
                estimate: total,
                error: err,
            });
        }
        let (left, ml) = gk21(f, worst.a, mid);
        let (right, mr) = gk21(f, mid, worst.b);
        total += left.value + right.value - worst.est.value;
        err += left.error + right.error - worst.est.error;
        mass += ml + mr - worst.mass;
        heap.push(Piece {
            a: worst.a,
            b: mid,
            est: left,
            mass: ml,
        });
        heap.push(Piece {
            a: mid,
            b: worst.b,
            est: right,
            mass: mr,
        });
    }
    // Re-sum to shed the drift of the running updates.
    let (value, error) = heap
        .iter()
        .fold((0.0, 0.0), |(v, e), p| (v + p.est.value, e + p.est.error));
    Ok(Estimate { value, error })
}

const SHELL_WIDTH: f64 = 1.0;
const MAX_SHELLS: usize = 3000;
const ZERO_SHELLS_TO_STOP: usize = 48;
const RATIO_SETTLED: f64 = 1e-9;

/// Integrates a radial function `g` over `(a, b]` with `0 <= a < b <= +inf`.
///
/// Returns `+inf` when the integral towards an open end does not converge
/// (the shell contributions stop shrinking).
pub fn integrate_radial<G: Fn(f64) -> f64>(g: G, a: f64, b: f64, tol: Tolerance) -> Result<f64> {
    if !(a >= 0.0) || !(b > a) {
        if a == b {
            return Ok(0.0);
        }
        return Err(Error::Domain {
            what: "radial integration range",
            value: a,
        });
    }
    let h = |u: f64| {
        let r = libm::exp(u);
        let v = g(r) * r;
        if v.is_finite() {
            v
        } else {
            0.0
        }
    };
    match (a > 0.0, b.is_finite()) {
        (true, true) => {
            let (lo, hi) = (libm::log(a), libm::log(b));
            let pieces = libm::ceil((hi - lo) / SHELL_WIDTH).max(1.0) as usize;
            Ok(integrate_split(&h, lo, hi, pieces, tol)?.value)
        }
        (false, true) => shells(&h, libm::log(b), -1.0, tol),
        (true, false) => shells(&h, libm::log(a), 1.0, tol),
        (false, false) => {
            let inner = shells(&h, 0.0, -1.0, tol)?;
            let outer = shells(&h, 0.0, 1.0, tol)?;
            Ok(inner + outer)
        }
    }
}

/// Sums unit shells starting at `start` and moving in direction `dir` (+1 or -1).
fn shells<H: Fn(f64) -> f64>(h: &H, start: f64, dir: f64, tol: Tolerance) -> Result<f64> {
    let mut total = 0.0;
    let mut prev: Option<f64> = None;
    let mut prev_ratio = f64::NAN;
    let mut settled = 0;
    let mut zeros = 0;
    let mut small = 0;
    let mut growing = 0;
    // Each shell is integrated to a fraction of the global budget.
    let shell_tol = Tolerance {
        rel: tol.rel * 0.1,
        abs: tol.abs * 1e-3,
        ..tol
    };
    for k in 0..MAX_SHELLS {
        let u0 = start + dir * SHELL_WIDTH * k as f64;
        let u1 = u0 + dir * SHELL_WIDTH;
        let (lo, hi) = if dir > 0.0 { (u0, u1) } else { (u1, u0) };
        let shell = integrate_split(h, lo, hi, 1, shell_tol)?.value;
        total += shell;

        if shell == 0.0 {
            zeros += 1;
            if zeros >= ZERO_SHELLS_TO_STOP {
                return Ok(total);
            }
            prev = None;
            settled = 0;
            continue;
        }
        zeros = 0;

        if let Some(p) = prev {
            let ratio = shell / p;
            if ratio >= 1.0 {
                growing += 1;
                if growing >= 64 {
                    return Ok(f64::INFINITY);
                }
            } else {
                growing = 0;
            }
            if ratio > 0.0 && ratio < 1.0 && (ratio - prev_ratio).abs() <= RATIO_SETTLED * ratio {
                settled += 1;
            } else {
                settled = 0;
            }
            if settled >= 3 {
                if ratio > 1.0 - 1e-7 {
                    return Ok(f64::INFINITY);
                }
                return Ok(total + shell * ratio / (1.0 - ratio));
            }
            prev_ratio = ratio;
        }
        prev = Some(shell);

        if shell.abs() <= tol.target(total) * 1e-3 {
            small += 1;
            if small >= 3 {
                return Ok(total);
            }
        } else {
            small = 0;
        }
    }
    // Shells never settled nor shrank: treat as non-convergent towards the end.
    if growing > 0 || total.abs() > 0.0 {
        return Ok(f64::INFINITY);
    }
    Err(Error::Quadrature {
        estimate: total,
        error: f64::INFINITY,
    })
}
