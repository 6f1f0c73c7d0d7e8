//! Bracketing root finders.
//!
//! Everything here is bisection-based: the functions we solve have kinks at
//! truncation radii and jumps at atoms, where Newton steps are unreliable.

use crate::error::{Error, Result};

pub const MAX_BISECTIONS: usize = 200;

/// Bisection on `[lo, hi]` where `f(lo)` and `f(hi)` have opposite signs.
///
/// Stops when the bracket is narrower than `abs_tol + rel_tol * |x|`.
/// Returns the final bracket so callers can inspect both sides.
pub fn bisect<F: Fn(f64) -> f64>(
    f: F,
    mut lo: f64,
    mut hi: f64,
    abs_tol: f64,
    rel_tol: f64,
) -> Result<(f64, f64)> {
    let mut f_lo = f(lo);
    let f_hi = f(hi);
    if f_lo == 0.0 {
        return Ok((lo, lo));
    }
    if f_hi == 0.0 {
        return Ok((hi, hi));
    }
    if f_lo.signum() == f_hi.signum() {
        return Err(Error::InvalidParameter(alloc::format!(
            "bisection needs a sign change on [{lo}, {hi}]"
        )));
    }
    for _ in 0..MAX_BISECTIONS {
        let mid = 0.5 * (lo + hi);
        if hi - lo <= abs_tol + rel_tol * mid.abs() || mid <= lo || mid >= hi {
            return Ok((lo, hi));
        }
        let f_mid = f(mid);
        if f_mid == 0.0 {
            return Ok((mid, mid));
        }
        if f_mid.signum() == f_lo.signum() {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
    }
    Err(Error::NonConvergence {
        iterations: MAX_BISECTIONS,
        last: 0.5 * (lo + hi),
    })
}

/// Bisection in `ln x` for a positive bracket `[lo, hi]`.
pub fn bisect_log<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, rel_tol: f64) -> Result<(f64, f64)> {
    let (a, b) = bisect(
        |u| f(libm::exp(u)),
        libm::log(lo),
        libm::log(hi),
        rel_tol,
        0.0,
    )?;
    Ok((libm::exp(a), libm::exp(b)))
}

/// Scan configuration for [`leftmost_level_crossing`].
#[derive(Debug, Clone, Copy)]
pub struct Scan {
    /// A point near where the crossing is expected.
    pub start: f64,
    /// Decades searched below `start` before the scan begins.
    pub decades_below: i32,
    /// Additional decades probed when the function is still below the level there.
    pub extra_decades_below: i32,
    /// Decades searched above `start`.
    pub decades_above: i32,
    /// Grid points per decade.
    pub per_decade: usize,
    /// Relative bracket width at which bisection stops.
    pub rel_tol: f64,
    /// Relative residual accepted as an equality (otherwise a jump is assumed).
    pub residual_tol: f64,
}

impl Scan {
    pub fn around(start: f64) -> Self {
        Scan {
            start,
            decades_below: 12,
            extra_decades_below: 48,
            decades_above: 80,
            per_decade: 16,
            rel_tol: 1e-14,
            residual_tol: 1e-9,
        }
    }
}

/// Smallest `x > 0` with `phi(x) = level`, for a positive `level`.
///
/// Scans a log grid from left to right for the first sign change of
/// `phi - level`, bisects it, and accepts the root only if `phi` actually
/// reaches the level there; a sign change produced by a jump of `phi` is
/// skipped and the scan continues.
pub fn leftmost_level_crossing<F: Fn(f64) -> f64>(phi: F, level: f64, scan: Scan) -> Result<f64> {
    if !(level > 0.0) || !level.is_finite() {
        return Err(Error::Domain {
            what: "positive finite level",
            value: level,
        });
    }
    if !(scan.start > 0.0) || !scan.start.is_finite() {
        return Err(Error::Domain {
            what: "positive scan start",
            value: scan.start,
        });
    }
    let step = libm::pow(10.0, 1.0 / scan.per_decade as f64);
    let mut x = scan.start * libm::pow(10.0, -(scan.decades_below as f64));
    let mut d = phi(x) - level;
    let mut extra = 0;
    // Walk further down while below the level: the crossing may sit lower.
    while d < 0.0 && extra < scan.extra_decades_below {
        let lower = x / 10.0;
        if lower <= f64::MIN_POSITIVE {
            break;
        }
        let dl = phi(lower) - level;
        x = lower;
        d = dl;
        extra += 1;
        if dl > 0.0 {
            break;
        }
    }
    let x_max = scan.start * libm::pow(10.0, scan.decades_above as f64);
    let mut sup_seen = d + level;
    while x < x_max {
        let next = x * step;
        let dn = phi(next) - level;
        sup_seen = sup_seen.max(dn + level);
        if d == 0.0 {
            return Ok(x);
        }
        if dn == 0.0 || dn.signum() != d.signum() {
            let (a, b) = bisect_log(|y| phi(y) - level, x, next, scan.rel_tol)?;
            let root = if a == b { a } else { libm::sqrt(a * b) };
            let resid = (phi(root) - level).abs();
            if resid <= scan.residual_tol * level {
                return Ok(root);
            }
            // Either side within tolerance also counts (kinks at the bracket edge).
            for cand in [a, b] {
                if (phi(cand) - level).abs() <= scan.residual_tol * level {
                    return Ok(cand);
                }
            }
        }
        x = next;
        d = dn;
    }
    Err(Error::LevelNeverAttained { level, sup_seen })
}
