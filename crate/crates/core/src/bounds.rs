//! Scale functions and the concentration bounds built on them.

use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{Condition, Error, Result};
use crate::measure::ScaleFunctions;
use crate::roots::{bisect, leftmost_level_crossing, Scan};

/// Relative slack on hypothesis checks; pure power laws sit exactly on the boundary.
pub const CONDITION_SLACK: f64 = 1e-9;

fn check_positive(what: &'static str, value: f64) -> Result<()> {
    if value > 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain { what, value })
    }
}

/// `y - (y + c) ln(1 + y/c)`, the exponent shared by all the tail bounds.
pub fn bennett_exponent(c: f64, y: f64) -> f64 {
    if y == 0.0 {
        return 0.0;
    }
    y - (y + c) * libm::log1p(y / c)
}

/// `g_c(x)`: the nonnegative root of `y - (y + c) ln(1 + y/c) = ln x`.
pub fn g_c(c: f64, x: f64) -> Result<f64> {
    check_positive("c > 0", c)?;
    if !(x > 0.0 && x <= 1.0) {
        return Err(Error::Domain {
            what: "probability level x in (0, 1]",
            value: x,
        });
    }
    if x == 1.0 {
        return Ok(0.0);
    }
    let target = libm::log(x);
    let f = |y: f64| bennett_exponent(c, y) - target;
    let mut hi = c.max(1.0);
    while f(hi) > 0.0 {
        hi *= 2.0;
        if !hi.is_finite() {
            return Err(Error::NonConvergence {
                iterations: 0,
                last: hi,
            });
        }
    }
    let (a, b) = bisect(f, 0.0, hi, 1e-300, 4.0 * f64::EPSILON)?;
    // Pick the endpoint with the smaller residual.
    Ok(if f(a).abs() <= f(b).abs() { a } else { b })
}

/// `h_c(t) = inf{x > 0 : V(x)/x^2 = c/t}`.
pub fn h_c(sf: &ScaleFunctions, c: f64, t: f64) -> Result<f64> {
    check_positive("c > 0", c)?;
    check_positive("t > 0", t)?;
    level_crossing(sf, c / t, |x| Ok(sf.v(x)? / (x * x)))
}

fn level_crossing<F>(sf: &ScaleFunctions, level: f64, phi: F) -> Result<f64>
where
    F: Fn(f64) -> Result<f64>,
{
    let failure = core::cell::Cell::new(None);
    let wrapped = |x: f64| match phi(x) {
        Ok(v) => v,
        Err(e) => {
            failure.set(Some(e));
            f64::NAN
        }
    };
    let out = leftmost_level_crossing(wrapped, level, Scan::around(sf.scale()));
    if let Some(e) = failure.take() {
        return Err(e);
    }
    out
}

/// `E_c(t) = t |b - int_{h < |y| <= 1} y nu + int_{1 < |y| <= h} y nu|`, `h = h_c(t)`.
pub fn e_c(sf: &ScaleFunctions, c: f64, t: f64) -> Result<f64> {
    let h = h_c(sf, c, t)?;
    e_c_at(sf, h, t)
}

/// [`e_c`] for a precomputed radius `h`.
pub fn e_c_at(sf: &ScaleFunctions, h: f64, t: f64) -> Result<f64> {
    let b = sf.measure().drift();
    // Only one of the two shells is nonempty.
    let (shell, sign) = if h < 1.0 {
        (sf.shell_first_moment(h, 1.0)?, -1.0)
    } else {
        (sf.shell_first_moment(1.0, h)?, 1.0)
    };
    let norm2: f64 = b
        .iter()
        .zip(shell.iter())
        .map(|(bk, sk)| {
            let v = bk + sign * sk;
            v * v
        })
        .sum();
    Ok(t * libm::sqrt(norm2))
}

/// Theorem 1 output for one `(c, t)`.
#[derive(Debug, Clone, PartialEq)]
pub struct MedianBound {
    pub c: f64,
    pub t: f64,
    pub h: f64,
    /// `g_c(1/4)`.
    pub g_quarter: f64,
    /// `t nu_bar(h_c(t))`.
    pub tail_mass: f64,
    pub e_c: f64,
    /// `h (1 + 3 g_c(1/4)) + E_c`, when `t nu_bar(h) <= 1/4`.
    pub standard: Option<f64>,
    /// `h (1 + g_c(1/4) + 2 g_c(1/2 - t nu_bar(h))) + E_c`, when `t nu_bar(h) < 1/2`.
    pub refined: f64,
}

impl MedianBound {
    /// The tightest available bound.
    pub fn best(&self) -> f64 {
        self.standard.map_or(self.refined, |s| s.min(self.refined))
    }
}

/// Median bound of Theorem 1 in both its standard and refined form.
pub fn median_bound(sf: &ScaleFunctions, c: f64, t: f64) -> Result<MedianBound> {
    let h = h_c(sf, c, t)?;
    let tail_mass = t * sf.nu_bar(h)?;
    if tail_mass >= 0.5 * (1.0 - CONDITION_SLACK) {
        return Err(Error::ConditionViolated {
            condition: Condition::HalfTailMass,
            value: tail_mass,
        });
    }
    let g_quarter = g_c(c, 0.25)?;
    let e = e_c_at(sf, h, t)?;
    let standard = if tail_mass <= 0.25 * (1.0 + CONDITION_SLACK) {
        Some(h * (1.0 + 3.0 * g_quarter) + e)
    } else {
        None
    };
    let refined = h * (1.0 + g_quarter + 2.0 * g_c(c, 0.5 - tail_mass)?) + e;
    Ok(MedianBound {
        c,
        t,
        h,
        g_quarter,
        tail_mass,
        e_c: e,
        standard,
        refined,
    })
}

/// Whether `nu_bar(R) <= A V(R) / R^2` holds at `r`.
pub fn check_tail_mass_condition(sf: &ScaleFunctions, a: f64, r: f64) -> Result<()> {
    let nb = sf.nu_bar(r)?;
    let rhs = a * sf.v(r)? / (r * r);
    if nb <= rhs * (1.0 + CONDITION_SLACK) + 1e-12 {
        Ok(())
    } else {
        Err(Error::ConditionViolated {
            condition: Condition::TailMassVsVariance,
            value: r * r * nb / sf.v(r)?,
        })
    }
}

fn check_finite_constant(a: f64) -> Result<()> {
    if a > 0.0 && a.is_finite() {
        Ok(())
    } else {
        Err(Error::ConditionViolated {
            condition: Condition::TailMassVsVariance,
            value: a,
        })
    }
}

/// Right-hand side of the Theorem 2 tail inequality:
/// `A c nu_bar(x') / nu_bar(h) + exp(u - (u + c) ln(1 + u/c))`, `u = (x - x')/h`.
pub fn thm2_tail_bound(sf: &ScaleFunctions, c: f64, t: f64, x: f64, x_prime: f64, a: f64) -> Result<f64> {
    check_finite_constant(a)?;
    check_positive("x' > 0", x_prime)?;
    if !(x > x_prime) {
        return Err(Error::Domain {
            what: "x > x'",
            value: x,
        });
    }
    let h = h_c(sf, c, t)?;
    check_tail_mass_condition(sf, a, h)?;
    let nb_h = sf.nu_bar(h)?;
    if nb_h == 0.0 {
        return Err(Error::Domain {
            what: "nu_bar(h_c(t)) > 0",
            value: nb_h,
        });
    }
    let u = (x - x_prime) / h;
    Ok(a * c * sf.nu_bar(x_prime)? / nb_h + libm::exp(bennett_exponent(c, u)))
}

/// A deviation threshold together with the quantities it was built from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Threshold {
    /// `c = q / 2A`.
    pub c: f64,
    /// `h_c(t)`.
    pub h: f64,
    /// `g_c(q/2)`.
    pub g: f64,
    pub value: f64,
}

fn check_q(q: f64) -> Result<()> {
    if q > 0.0 && q <= 1.0 {
        Ok(())
    } else {
        Err(Error::Domain {
            what: "q in (0, 1]",
            value: q,
        })
    }
}

/// Theorem 2 threshold `[1 + g_{q/2A}(q/2)] h_{q/2A}(t)`.
pub fn thm2_threshold(sf: &ScaleFunctions, q: f64, t: f64, a: f64) -> Result<Threshold> {
    check_q(q)?;
    check_finite_constant(a)?;
    let c = q / (2.0 * a);
    let h = h_c(sf, c, t)?;
    check_tail_mass_condition(sf, a, h)?;
    let g = g_c(c, q / 2.0)?;
    Ok(Threshold {
        c,
        h,
        g,
        value: (1.0 + g) * h,
    })
}

/// Theorem 3 tail value `A c + exp(b - (b + c) ln(1 + b/c))`.
pub fn thm3_tail_bound(b: f64, c: f64, a: f64) -> Result<f64> {
    check_positive("b > 0", b)?;
    check_positive("c > 0", c)?;
    check_finite_constant(a)?;
    Ok(a * c + libm::exp(bennett_exponent(c, b)))
}

/// Theorem 3 threshold `[qK/2A + g_{q/2A}(q/2)] h_{q/2A}(t)`.
pub fn thm3_threshold(sf: &ScaleFunctions, q: f64, t: f64, a: f64, k: f64) -> Result<Threshold> {
    check_q(q)?;
    check_finite_constant(a)?;
    if k.is_infinite() {
        return Err(Error::InfiniteMean);
    }
    check_positive("K > 0", k)?;
    let c = q / (2.0 * a);
    let h = h_c(sf, c, t)?;
    check_tail_mass_condition(sf, a, h)?;
    let g = g_c(c, q / 2.0)?;
    Ok(Threshold {
        c,
        h,
        g,
        value: (c * k + g) * h,
    })
}

/// Solution `x0(t)` of `V(x)/x^2 + M(x)/x = 1/t`.
pub fn x0_mr(sf: &ScaleFunctions, t: f64) -> Result<f64> {
    check_positive("t > 0", t)?;
    if sf.m_tail(sf.scale())?.is_infinite() {
        return Err(Error::InfiniteMean);
    }
    level_crossing(sf, 1.0 / t, |x| Ok(sf.v(x)? / (x * x) + sf.m_tail(x)? / x))
}

/// The mean sandwich around `x0(t)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeanSandwich {
    pub x0: f64,
    /// `x0 / 4`.
    pub lower: f64,
    /// `5/4 x0` for symmetric laws, `17/8 x0` otherwise.
    pub upper: f64,
    /// `h_1(t)`.
    pub h_one: f64,
    /// `h_{1/(1+K)}(t)`.
    pub h_k: f64,
}

impl MeanSandwich {
    /// `h_1(t) <= x0(t) <= h_{1/(1+K)}(t)`.
    pub fn h_ordering_holds(&self) -> bool {
        let tol = 1e-9 * self.x0;
        self.h_one <= self.x0 + tol && self.x0 <= self.h_k + tol
    }
}

pub fn mean_sandwich(sf: &ScaleFunctions, t: f64, k: f64) -> Result<MeanSandwich> {
    if k.is_infinite() {
        return Err(Error::InfiniteMean);
    }
    let x0 = x0_mr(sf, t)?;
    let upper = if sf.measure().is_symmetric() { 1.25 } else { 17.0 / 8.0 };
    Ok(MeanSandwich {
        x0,
        lower: 0.25 * x0,
        upper: upper * x0,
        h_one: h_c(sf, 1.0, t)?,
        h_k: h_c(sf, 1.0 / (1.0 + k), t)?,
    })
}

/// Concentration profile `H^(R)(x)` of the truncated process `Y^(R)_t`.
pub fn truncated_profile_h(sf: &ScaleFunctions, r: f64, t: f64, x: f64) -> Result<f64> {
    let c_r = profile_c(sf, r, t)?;
    if !(x >= 0.0) {
        return Err(Error::Domain {
            what: "x >= 0",
            value: x,
        });
    }
    Ok(libm::exp(bennett_exponent(c_r, x / (2.0 * r))))
}

/// Inverse of [`truncated_profile_h`]: `I^(R)(y) = 2R g_{tV(R)/R^2}(y)`.
pub fn truncated_profile_inverse(sf: &ScaleFunctions, r: f64, t: f64, y: f64) -> Result<f64> {
    let c_r = profile_c(sf, r, t)?;
    Ok(2.0 * r * g_c(c_r, y)?)
}

fn profile_c(sf: &ScaleFunctions, r: f64, t: f64) -> Result<f64> {
    check_positive("R > 0", r)?;
    check_positive("t > 0", t)?;
    let v = sf.v(r)?;
    if v <= 0.0 {
        return Err(Error::Domain {
            what: "V(R) > 0",
            value: v,
        });
    }
    Ok(t * v / (r * r))
}

/// Smallest Theorem 1 bound over a list of `c` values. No optimality claim.
pub fn scan_median_c(sf: &ScaleFunctions, t: f64, cs: &[f64]) -> Option<MedianBound> {
    cs.iter()
        .filter_map(|&c| median_bound(sf, c, t).ok())
        .min_by(|a, b| a.best().total_cmp(&b.best()))
}

/// Every bound at one `t`, with validity notes instead of errors where a
/// hypothesis fails.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundReport {
    pub t: f64,
    pub c: f64,
    pub q: Option<f64>,
    pub a: f64,
    pub k: f64,
    pub h: f64,
    pub g_quarter: f64,
    /// `t nu_bar(h_c(t))`.
    pub tail_mass: f64,
    /// `t nu_bar(h_c(t)) <= 1/4`.
    pub condition_3: bool,
    pub e_c: f64,
    pub median_standard: Option<f64>,
    pub median_refined: Option<f64>,
    pub thm2: Option<Threshold>,
    pub thm3: Option<Threshold>,
    pub sandwich: Option<MeanSandwich>,
    pub notes: Vec<String>,
}

impl BoundReport {
    /// `true` when some hypothesis needed for a requested output failed.
    pub fn has_violation(&self) -> bool {
        self.median_refined.is_none()
            || (self.q.is_some() && self.a.is_finite() && self.thm2.is_none())
    }

    pub fn evaluate(sf: &ScaleFunctions, t: f64, c: f64, q: Option<f64>, a: f64, k: f64) -> Result<Self> {
        let h = h_c(sf, c, t)?;
        let tail_mass = t * sf.nu_bar(h)?;
        let g_quarter = g_c(c, 0.25)?;
        let e = e_c_at(sf, h, t)?;
        let mut notes = Vec::new();
        let (median_standard, median_refined) = match median_bound(sf, c, t) {
            Ok(m) => (m.standard, Some(m.refined)),
            Err(err) => {
                notes.push(alloc::format!("theorem 1: {err}"));
                (None, None)
            }
        };
        let mut thm2 = None;
        let mut thm3 = None;
        if let Some(q) = q {
            if a.is_finite() {
                match thm2_threshold(sf, q, t, a) {
                    Ok(th) => thm2 = Some(th),
                    Err(err) => notes.push(alloc::format!("theorem 2: {err}")),
                }
                if k.is_finite() {
                    match thm3_threshold(sf, q, t, a, k) {
                        Ok(th) => thm3 = Some(th),
                        Err(err) => notes.push(alloc::format!("theorem 3: {err}")),
                    }
                } else {
                    notes.push(String::from("theorem 3: K is infinite"));
                }
            } else {
                notes.push(String::from("theorems 2 and 3: A is infinite"));
            }
        }
        let sandwich = if k.is_finite() {
            match mean_sandwich(sf, t, k) {
                Ok(s) => Some(s),
                Err(err) => {
                    notes.push(alloc::format!("x0: {err}"));
                    None
                }
            }
        } else {
            None
        };
        Ok(BoundReport {
            t,
            c,
            q,
            a,
            k,
            h,
            g_quarter,
            tail_mass,
            condition_3: tail_mass <= 0.25 * (1.0 + CONDITION_SLACK),
            e_c: e,
            median_standard,
            median_refined,
            thm2,
            thm3,
            sandwich,
            notes,
        })
    }
}
