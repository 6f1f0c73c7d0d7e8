//! Monte Carlo verification of the bounds.
//!
//! Every check compares a theoretical bound with an empirical statistic and
//! its two-sided 99% confidence interval, after widening the interval by the
//! sampler's contamination budget and the error of any estimated center.
//!
//! Tail checks use the event `f(X_t) - m >= x` (upper) or `<= -x` (lower).
//! With `D` the center error plus contamination radius and `p` the sampler's
//! contamination probability, a check passes when the Clopper-Pearson upper
//! limit of the frequency at `x - D` is at most `bound + p`, and fails when the
//! lower limit at `x + D` exceeds `bound + p`. Anything else is inconclusive.

use std::fmt;

use levyconc_core::bounds::{
    median_bound, mean_sandwich, thm2_tail_bound, thm2_threshold, thm3_threshold, MedianBound, Threshold,
};
use levyconc_core::error::Error as CoreError;
use levyconc_core::families::k_alpha;
use levyconc_core::measure::ScaleFunctions;
use levyconc_core::rng::{Executor, RngStreamSpec};
use levyconc_core::roots::bisect_log;
use levyconc_core::simulate::{sample_process, sample_truncated_small, EpsilonPolicy, SampleBatch, DEFAULT_ETA};
use rand::Rng;
use serde::{Deserialize, Serialize};
use statrs::distribution::{Beta, Binomial, ContinuousCDF, DiscreteCDF};

use crate::measure_file::{Family, MeasureSpec};
use crate::Error;

/// Confidence level of every interval.
pub const LEVEL: f64 = 0.99;

/// Two-sided 99% standard normal quantile.
const Z99: f64 = 2.5758293035489004;

/// Default cap on the expected number of simulated jumps per sample.
pub const DEFAULT_JUMP_BUDGET: f64 = 1000.0;

/// Offsets, in units of `h`, of the points on the Theorem 2 tail curve past `x' = 2h`.
pub const CURVE_OFFSETS: [f64; 5] = [0.5, 1.0, 2.0, 3.0, 4.0];

/// A 1-Lipschitz function `R^d -> R`.
#[derive(Debug, Clone, PartialEq)]
pub enum LipschitzFunction {
    Norm,
    /// `x -> <u, x>` with `|u| = 1`.
    Linear(Vec<f64>),
    /// `x -> |x - p|`.
    DistanceTo(Vec<f64>),
}

impl LipschitzFunction {
    pub fn linear(u: Vec<f64>) -> Result<Self, Error> {
        let norm = u.iter().map(|x| x * x).sum::<f64>().sqrt();
        if (norm - 1.0).abs() > 1e-12 {
            return Err(Error::Config(format!("linear functional needs a unit vector, |u| = {norm}")));
        }
        Ok(LipschitzFunction::Linear(u))
    }

    pub fn distance_to(p: Vec<f64>) -> Self {
        LipschitzFunction::DistanceTo(p)
    }

    /// Parses `norm`, `linear:u1,u2,..` or `distance:p1,p2,..`.
    pub fn parse(s: &str) -> Result<Self, Error> {
        let (tag, rest) = s.split_once(':').unwrap_or((s, ""));
        let nums = || -> Result<Vec<f64>, Error> {
            rest.split(',')
                .map(|x| x.trim().parse::<f64>().map_err(|e| Error::Config(format!("`{s}`: {e}"))))
                .collect()
        };
        match tag {
            "norm" if rest.is_empty() => Ok(LipschitzFunction::Norm),
            "linear" => Self::linear(nums()?),
            "distance" => Ok(Self::distance_to(nums()?)),
            _ => Err(Error::Config(format!("unknown function `{s}`"))),
        }
    }

    /// Required dimension, if the function fixes one.
    pub fn dim(&self) -> Option<usize> {
        match self {
            LipschitzFunction::Norm => None,
            LipschitzFunction::Linear(u) => Some(u.len()),
            LipschitzFunction::DistanceTo(p) => Some(p.len()),
        }
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        match self {
            LipschitzFunction::Norm => x.iter().map(|v| v * v).sum::<f64>().sqrt(),
            LipschitzFunction::Linear(u) => u.iter().zip(x).map(|(a, b)| a * b).sum(),
            LipschitzFunction::DistanceTo(p) => p.iter().zip(x).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt(),
        }
    }

    /// Checks `|f(x) - f(y)| <= |x - y|` on random pairs.
    pub fn spot_check(&self, dim: usize, pairs: usize, seed: u64) -> bool {
        let mut rng = RngStreamSpec::new(seed, 0).chunk_rng(0);
        let mut x = vec![0.0; dim];
        let mut y = vec![0.0; dim];
        (0..pairs).all(|_| {
            let scale = 10f64.powf(rng.random_range(-3.0..3.0));
            for (a, b) in x.iter_mut().zip(y.iter_mut()) {
                *a = scale * rng.random_range(-1.0..1.0);
                *b = scale * rng.random_range(-1.0..1.0);
            }
            let d = x.iter().zip(&y).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
            (self.eval(&x) - self.eval(&y)).abs() <= d + 1e-12
        })
    }

    fn values(&self, batch: &SampleBatch) -> Vec<f64> {
        batch.rows().map(|r| self.eval(r)).collect()
    }
}

impl fmt::Display for LipschitzFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let list = |v: &[f64]| v.iter().map(|x| format!("{x:?}")).collect::<Vec<_>>().join(",");
        match self {
            LipschitzFunction::Norm => f.write_str("norm"),
            LipschitzFunction::Linear(u) => write!(f, "linear:{}", list(u)),
            LipschitzFunction::DistanceTo(p) => write!(f, "distance:{}", list(p)),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Verdict {
    Pass,
    Inconclusive,
    Fail,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Pass => "PASS",
            Verdict::Inconclusive => "INCONCLUSIVE",
            Verdict::Fail => "FAIL",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Theorem {
    /// Median bound.
    Thm1,
    /// Concentration around the truncated mean.
    Thm2,
    /// Concentration around the mean.
    Thm3,
    /// Mean sandwich around `x0(t)`.
    Mr,
}

impl fmt::Display for Theorem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Theorem::Thm1 => "thm1",
            Theorem::Thm2 => "thm2",
            Theorem::Thm3 => "thm3",
            Theorem::Mr => "mr",
        })
    }
}

/// Slack consumed by a check, by source.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Slack {
    /// Monte Carlo interval half-width, in the units of the statistic.
    pub mc: f64,
    /// Sampler contamination: a probability for tail checks, a distance otherwise.
    pub bias: f64,
    /// Shift applied to `x` for center error and contamination radius.
    pub center: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub bound: Option<f64>,
    pub empirical: Option<f64>,
    pub ci: Option<(f64, f64)>,
    pub slack: Slack,
    pub verdict: Verdict,
    pub note: String,
}

impl Check {
    fn inconclusive(name: &str, note: String) -> Self {
        Check {
            name: name.into(),
            bound: None,
            empirical: None,
            ci: None,
            slack: Slack::default(),
            verdict: Verdict::Inconclusive,
            note,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerificationReport {
    pub theorem: Theorem,
    pub family: String,
    pub f: String,
    pub t: f64,
    /// `("c", c)` or `("q", q)`.
    pub param: Option<(&'static str, f64)>,
    pub n: usize,
    pub seed: u64,
    pub stream: u64,
    pub checks: Vec<Check>,
}

impl VerificationReport {
    /// Worst verdict over the checks.
    pub fn verdict(&self) -> Verdict {
        self.checks.iter().map(|c| c.verdict).max().unwrap_or(Verdict::Inconclusive)
    }
}

/// Knobs shared by all checks.
pub struct Settings<'a> {
    pub exec: &'a dyn Executor,
    /// `eta` for the relative cutoff policy, applied at each check's own scale.
    pub eta: f64,
    /// Absolute small-jump cutoff; overrides `eta`.
    pub epsilon: Option<f64>,
    /// Multiplier on Theorem 1 bounds; below 1 only for sensitivity tests.
    pub bound_scale: f64,
    /// Cap on `t nu_bar(eps)`. A larger cutoff only widens the reported slack.
    pub jump_budget: f64,
}

impl<'a> Settings<'a> {
    pub fn new(exec: &'a dyn Executor) -> Self {
        Settings {
            exec,
            eta: DEFAULT_ETA,
            epsilon: None,
            bound_scale: 1.0,
            jump_budget: DEFAULT_JUMP_BUDGET,
        }
    }

    /// Cutoff for jumps up to radius `cap`, sized for a check at `scale`.
    fn cutoff(&self, sf: &ScaleFunctions, scale: f64, t: f64, cap: f64) -> Result<f64, Error> {
        let eps = match self.epsilon {
            Some(e) => e,
            None => EpsilonPolicy::Relative { eta: self.eta }
                .resolve(sf, scale, t)?
                .max(budget_cutoff(sf, t, self.jump_budget)?),
        };
        Ok(eps.min(cap))
    }

    /// Cutoff for a batch of `X_t`. The process samplers split at radius 1,
    /// so the cutoff is capped there.
    fn process_policy(&self, sf: &ScaleFunctions, scale: f64, t: f64) -> Result<EpsilonPolicy, Error> {
        Ok(EpsilonPolicy::Absolute(self.cutoff(sf, scale, t, 1.0)?))
    }

    fn truncated_policy(&self, sf: &ScaleFunctions, r: f64, t: f64) -> Result<EpsilonPolicy, Error> {
        Ok(EpsilonPolicy::Absolute(self.cutoff(sf, r, t, r)?))
    }
}

/// Smallest cutoff with `t nu_bar(eps) <= budget`; 0 when there is none to impose.
fn budget_cutoff(sf: &ScaleFunctions, t: f64, budget: f64) -> Result<f64, Error> {
    let excess = |e: f64| t * sf.nu_bar(e).unwrap_or(f64::INFINITY) - budget;
    let (lo, hi) = (1e-30, 1.0);
    if excess(lo) <= 0.0 {
        return Ok(0.0);
    }
    if excess(hi) > 0.0 {
        return Ok(hi);
    }
    let (_, b) = bisect_log(excess, lo, hi, 1e-6)?;
    Ok(b)
}

/// Two-sided Clopper-Pearson interval for `k` successes out of `n`.
pub fn clopper_pearson(k: usize, n: usize, level: f64) -> (f64, f64) {
    assert!(k <= n && n > 0);
    let a = (1.0 - level) / 2.0;
    let (kf, nf) = (k as f64, n as f64);
    let lo = if k == 0 {
        0.0
    } else {
        Beta::new(kf, nf - kf + 1.0).expect("valid beta").inverse_cdf(a)
    };
    let hi = if k == n {
        1.0
    } else {
        Beta::new(kf + 1.0, nf - kf).expect("valid beta").inverse_cdf(1.0 - a)
    };
    (lo, hi)
}

/// 1-based order statistic indices `(j, k)` with
/// `P(X_(j) <= xi_p_lo) >= 1 - a` and `P(X_(k) >= xi_p_hi) >= 1 - a`,
/// `a = (1 - level)/2`. `None` when the sample is too small for that side.
pub fn order_statistic_indices(n: usize, p_lo: f64, p_hi: f64, level: f64) -> (Option<usize>, Option<usize>) {
    let a = (1.0 - level) / 2.0;
    let n64 = n as u64;
    // P(X_(j) <= xi) = P(B >= j) with B ~ Bin(n, p): want F(j - 1) <= a.
    let lower = if p_lo <= 0.0 {
        None
    } else {
        let b = Binomial::new(p_lo.min(1.0), n64).expect("valid binomial");
        let ok = |j: u64| b.cdf(j - 1) <= a;
        if !ok(1) {
            None
        } else {
            let (mut lo, mut hi) = (1u64, n64);
            while lo < hi {
                let mid = lo + (hi - lo).div_ceil(2);
                if ok(mid) {
                    lo = mid;
                } else {
                    hi = mid - 1;
                }
            }
            Some(lo as usize)
        }
    };
    // P(X_(k) >= xi) >= P(B <= k - 1) with B ~ Bin(n, p): want F(k - 1) >= 1 - a.
    let upper = if p_hi >= 1.0 {
        None
    } else {
        let b = Binomial::new(p_hi.max(0.0), n64).expect("valid binomial");
        let ok = |k: u64| b.cdf(k - 1) >= 1.0 - a;
        if !ok(n64) {
            None
        } else {
            let (mut lo, mut hi) = (1u64, n64);
            while lo < hi {
                let mid = lo + (hi - lo) / 2;
                if ok(mid) {
                    hi = mid;
                } else {
                    lo = mid + 1;
                }
            }
            Some(lo as usize)
        }
    };
    (lower, upper)
}

/// Sample median with an order-statistic interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MedianCi {
    pub estimate: f64,
    pub lower: f64,
    pub upper: f64,
}

fn sorted(mut v: Vec<f64>) -> Vec<f64> {
    v.sort_by(f64::total_cmp);
    v
}

fn sample_median(s: &[f64]) -> f64 {
    let n = s.len();
    if n % 2 == 1 {
        s[n / 2]
    } else {
        0.5 * (s[n / 2 - 1] + s[n / 2])
    }
}

/// Interval covering every `p`-quantile with `p` in `[p_lo, p_hi]`.
fn quantile_band(s: &[f64], p_lo: f64, p_hi: f64, level: f64) -> (f64, f64) {
    let (j, k) = order_statistic_indices(s.len(), p_lo, p_hi, level);
    (
        j.map_or(f64::NEG_INFINITY, |j| s[j - 1]),
        k.map_or(f64::INFINITY, |k| s[k - 1]),
    )
}

/// Median of `f` over the batch with a distribution-free interval at `level`.
pub fn empirical_median_ci(batch: &SampleBatch, f: &LipschitzFunction, level: f64) -> Result<MedianCi, Error> {
    median_ci(f.values(batch), level)
}

pub fn median_ci(values: Vec<f64>, level: f64) -> Result<MedianCi, Error> {
    if values.len() < 100 {
        return Err(Error::Config(format!("median interval needs n >= 100, got {}", values.len())));
    }
    let s = sorted(values);
    let (lower, upper) = quantile_band(&s, 0.5, 0.5, level);
    Ok(MedianCi {
        estimate: sample_median(&s),
        lower,
        upper,
    })
}

fn mean_ci(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1.0).max(1.0);
    (m, Z99 * (var / n).sqrt())
}

fn check_f(family: &Family, f: &LipschitzFunction) -> Result<(), Error> {
    match f.dim() {
        Some(d) if d != family.dim() => Err(Error::Config(format!(
            "function `{f}` has dimension {d}, the process has {}",
            family.dim()
        ))),
        _ => Ok(()),
    }
}

fn skeleton(
    theorem: Theorem,
    family: &Family,
    f: &LipschitzFunction,
    t: f64,
    param: Option<(&'static str, f64)>,
    n: usize,
    spec: RngStreamSpec,
) -> VerificationReport {
    VerificationReport {
        theorem,
        family: family.label.clone(),
        f: f.to_string(),
        t,
        param,
        n,
        seed: spec.seed,
        stream: spec.stream,
        checks: Vec::new(),
    }
}

/// Turns a violated hypothesis into an inconclusive row; other errors propagate.
fn hypothesis<T>(r: levyconc_core::error::Result<T>) -> Result<Result<T, String>, Error> {
    match r {
        Ok(v) => Ok(Ok(v)),
        Err(e @ (CoreError::ConditionViolated { .. } | CoreError::InfiniteMean)) => Ok(Err(e.to_string())),
        Err(e) => Err(e.into()),
    }
}

fn interval_check(name: &str, bound: f64, estimate: f64, ci: (f64, f64), slack: Slack, note: String) -> Check {
    let verdict = if ci.1 <= bound {
        Verdict::Pass
    } else if ci.0 > bound {
        Verdict::Fail
    } else {
        Verdict::Inconclusive
    };
    Check {
        name: name.into(),
        bound: Some(bound),
        empirical: Some(estimate),
        ci: Some(ci),
        slack,
        verdict,
        note,
    }
}

/// Empirical `P(f - m >= x)` (upper) or `P(f - m <= -x)` against `bound`.
struct TailInput<'v> {
    values: &'v [f64],
    center: f64,
    shift: f64,
    contamination: f64,
}

impl TailInput<'_> {
    fn count(&self, x: f64, upper: bool) -> usize {
        if upper {
            self.values.iter().filter(|&&v| v - self.center >= x).count()
        } else {
            self.values.iter().filter(|&&v| v - self.center <= -x).count()
        }
    }

    fn check(&self, name: &str, x: f64, bound: f64, upper: bool, note: String) -> Check {
        let n = self.values.len();
        let loose = self.count(x - self.shift, upper);
        let tight = self.count(x + self.shift, upper);
        let at = self.count(x, upper);
        let ucl = clopper_pearson(loose, n, LEVEL).1;
        let lcl = clopper_pearson(tight, n, LEVEL).0;
        let limit = bound + self.contamination;
        let verdict = if ucl <= limit {
            Verdict::Pass
        } else if lcl > limit {
            Verdict::Fail
        } else {
            Verdict::Inconclusive
        };
        Check {
            name: name.into(),
            bound: Some(bound),
            empirical: Some(at as f64 / n as f64),
            ci: Some((lcl, ucl)),
            slack: Slack {
                mc: ucl - loose as f64 / n as f64,
                bias: self.contamination,
                center: self.shift,
            },
            verdict,
            note: format!("x={x:?}; {note}"),
        }
    }
}

fn bias_note(batch: &SampleBatch) -> String {
    match batch.bias.epsilon {
        None => format!("{:?}", batch.method),
        Some(eps) => format!(
            "{:?} eps={eps:?} delta={:?} p={:?}",
            batch.method, batch.bias.contamination_radius, batch.bias.bias_bound
        ),
    }
}

/// Median bound: `|m f(X_t) - f(0)|` against the standard, refined and (for the
/// truncated stable family) closed-form bounds.
pub fn verify_thm1(
    family: &Family,
    t: f64,
    c: f64,
    f: &LipschitzFunction,
    n: usize,
    spec: RngStreamSpec,
    settings: &Settings,
) -> Result<VerificationReport, Error> {
    check_f(family, f)?;
    let sf = family.scale_functions()?;
    let mut report = skeleton(Theorem::Thm1, family, f, t, Some(("c", c)), n, spec);
    let mb: MedianBound = match hypothesis(median_bound(&sf, c, t))? {
        Ok(m) => m,
        Err(note) => {
            report.checks.push(Check::inconclusive("median-refined", note));
            return Ok(report);
        }
    };
    let policy = settings.process_policy(&sf, mb.h, t)?;
    let batch = sample_process(&sf, t, n, spec, policy, settings.exec)?;
    let s = sorted(f.values(&batch));
    if s.len() < 100 {
        return Err(Error::Config(format!("median interval needs n >= 100, got {}", s.len())));
    }
    let (p, delta) = (batch.bias.bias_bound, batch.bias.contamination_radius);
    let (os_lo, os_hi) = quantile_band(&s, 0.5, 0.5, LEVEL);
    let (lo, hi) = quantile_band(&s, 0.5 - p, 0.5 + p, LEVEL);
    let (lo, hi) = (lo - delta, hi + delta);
    let f0 = f.eval(&vec![0.0; family.dim()]);
    let estimate = (sample_median(&s) - f0).abs();
    let ci = (
        if lo > f0 {
            lo - f0
        } else if hi < f0 {
            f0 - hi
        } else {
            0.0
        },
        (lo - f0).abs().max((hi - f0).abs()),
    );
    let slack = Slack {
        mc: 0.5 * (os_hi - os_lo),
        bias: (hi - lo) / 2.0 - 0.5 * (os_hi - os_lo),
        center: 0.0,
    };
    let note = format!("t*nu_bar(h)={:?}; {}", mb.tail_mass, bias_note(&batch));
    let scale = settings.bound_scale;
    match mb.standard {
        Some(b) => report
            .checks
            .push(interval_check("median-standard", scale * b, estimate, ci, slack, note.clone())),
        None => report.checks.push(Check::inconclusive(
            "median-standard",
            format!("hypothesis t*nu_bar(h) <= 1/4 fails: {:?}", mb.tail_mass),
        )),
    }
    report
        .checks
        .push(interval_check("median-refined", scale * mb.refined, estimate, ci, slack, note.clone()));
    if let Some(tr) = family.truncated() {
        let b = k_alpha(tr.alpha)? * tr.h_alpha(t);
        report
            .checks
            .push(interval_check("median-closed-form", scale * b, estimate, ci, slack, note));
    }
    Ok(report)
}

/// Concentration around `m(c, t) = E f(Y^(h)_t)`, `c = q/2A`.
pub fn verify_thm2(
    family: &Family,
    t: f64,
    q: f64,
    f: &LipschitzFunction,
    n: usize,
    spec: RngStreamSpec,
    settings: &Settings,
) -> Result<VerificationReport, Error> {
    check_f(family, f)?;
    let sf = family.scale_functions()?;
    let mut report = skeleton(Theorem::Thm2, family, f, t, Some(("q", q)), n, spec);
    let a = sf.a_constant(&sf.default_grid())?;
    if !a.is_finite() {
        report
            .checks
            .push(Check::inconclusive("upper-tail", "constant A is infinite".into()));
        return Ok(report);
    }
    let thr: Threshold = match hypothesis(thm2_threshold(&sf, q, t, a))? {
        Ok(th) => th,
        Err(note) => {
            report.checks.push(Check::inconclusive("upper-tail", note));
            return Ok(report);
        }
    };
    let center_batch = sample_truncated_small(
        &sf,
        thr.h,
        t,
        n,
        spec.child(1),
        settings.truncated_policy(&sf, thr.h, t)?,
        settings.exec,
    )?;
    let (m_hat, m_hw) = mean_ci(&f.values(&center_batch));
    let center_err = m_hw + center_batch.bias.discarded_sd;

    let policy = settings.process_policy(&sf, thr.h, t)?;
    let batch = sample_process(&sf, t, n, spec, policy, settings.exec)?;
    let values = f.values(&batch);
    let tails = TailInput {
        values: &values,
        center: m_hat,
        shift: center_err + batch.bias.contamination_radius,
        contamination: batch.bias.bias_bound,
    };
    let note = format!(
        "A={a:?} c={:?} h={:?} g={:?} m_hat={m_hat:?} m_err={center_err:?}; {}",
        thr.c,
        thr.h,
        thr.g,
        bias_note(&batch)
    );
    report.checks.push(tails.check("upper-tail", thr.value, q, true, note.clone()));
    report.checks.push(tails.check("lower-tail", thr.value, q, false, note.clone()));

    let x_prime = 2.0 * thr.h;
    for (i, off) in CURVE_OFFSETS.iter().enumerate() {
        let x = x_prime + off * thr.h;
        let name = format!("curve-{}", i + 1);
        match thm2_tail_bound(&sf, thr.c, t, x, x_prime, a) {
            Ok(b) => report
                .checks
                .push(tails.check(&name, x, b, true, format!("x'={x_prime:?}; {note}"))),
            Err(e) => report.checks.push(Check::inconclusive(&name, format!("x={x:?}; {e}"))),
        }
    }
    Ok(report)
}

/// Concentration around `E f(X_t)`, both tails.
pub fn verify_thm3(
    family: &Family,
    t: f64,
    q: f64,
    f: &LipschitzFunction,
    n: usize,
    spec: RngStreamSpec,
    settings: &Settings,
) -> Result<VerificationReport, Error> {
    check_f(family, f)?;
    let sf = family.scale_functions()?;
    let mut report = skeleton(Theorem::Thm3, family, f, t, Some(("q", q)), n, spec);
    if !family.is_centred() {
        report
            .checks
            .push(Check::inconclusive("upper-tail", "process is not centred".into()));
        return Ok(report);
    }
    let grid = sf.default_grid();
    let a = sf.a_constant(&grid)?;
    let k = sf.k_constant(&grid)?;
    if !a.is_finite() {
        report
            .checks
            .push(Check::inconclusive("upper-tail", "constant A is infinite".into()));
        return Ok(report);
    }
    let thr = match hypothesis(thm3_threshold(&sf, q, t, a, k))? {
        Ok(th) => th,
        Err(note) => {
            report.checks.push(Check::inconclusive("upper-tail", note));
            return Ok(report);
        }
    };
    let policy = settings.process_policy(&sf, thr.h, t)?;
    let center_batch = sample_process(&sf, t, n, spec.child(1), policy, settings.exec)?;
    let (m_hat, m_hw) = mean_ci(&f.values(&center_batch));
    let center_err = m_hw + center_batch.bias.discarded_sd;

    let batch = sample_process(&sf, t, n, spec, policy, settings.exec)?;
    let values = f.values(&batch);
    let tails = TailInput {
        values: &values,
        center: m_hat,
        shift: center_err + batch.bias.contamination_radius,
        contamination: batch.bias.bias_bound,
    };
    let note = format!(
        "A={a:?} K={k:?} c={:?} h={:?} g={:?} mean_hat={m_hat:?} mean_err={center_err:?}; {}",
        thr.c,
        thr.h,
        thr.g,
        bias_note(&batch)
    );
    report.checks.push(tails.check("upper-tail", thr.value, q, true, note.clone()));
    report.checks.push(tails.check("lower-tail", thr.value, q, false, note));
    if let LipschitzFunction::Linear(_) = f {
        // A linear functional of a centred process has mean zero.
        let ci = (m_hat - center_err, m_hat + center_err);
        report.checks.push(Check {
            name: "center-zero".into(),
            bound: Some(0.0),
            empirical: Some(m_hat),
            ci: Some(ci),
            slack: Slack {
                mc: m_hw,
                bias: center_batch.bias.discarded_sd,
                center: 0.0,
            },
            verdict: if ci.0 <= 0.0 && 0.0 <= ci.1 {
                Verdict::Pass
            } else {
                Verdict::Fail
            },
            note: String::new(),
        });
    }
    Ok(report)
}

/// `E|X_t|` against `[x0/4, 5/4 x0]` (symmetric) or `[x0/4, 17/8 x0]`, and the
/// ordering `h_1(t) <= x0(t) <= h_{1/(1+K)}(t)`.
pub fn verify_mr(
    family: &Family,
    t: f64,
    n: usize,
    spec: RngStreamSpec,
    settings: &Settings,
) -> Result<VerificationReport, Error> {
    let sf = family.scale_functions()?;
    let norm = LipschitzFunction::Norm;
    let mut report = skeleton(Theorem::Mr, family, &norm, t, None, n, spec);
    if !family.is_centred() {
        report
            .checks
            .push(Check::inconclusive("mean-lower", "process is not centred".into()));
        return Ok(report);
    }
    let k = sf.k_constant(&sf.default_grid())?;
    let sw = match hypothesis(mean_sandwich(&sf, t, k))? {
        Ok(s) => s,
        Err(note) => {
            report.checks.push(Check::inconclusive("mean-lower", note));
            return Ok(report);
        }
    };
    let policy = settings.process_policy(&sf, sw.x0, t)?;
    let batch = sample_process(&sf, t, n, spec, policy, settings.exec)?;
    let (mean, hw) = mean_ci(&batch.norms());
    // The discarded part D is centred and independent of the simulated part,
    // so E|X_sim| <= E|X_sim + D| <= E|X_sim| + sd(D).
    let ci = (mean - hw, mean + hw + batch.bias.discarded_sd);
    let slack = Slack {
        mc: hw,
        bias: batch.bias.discarded_sd,
        center: 0.0,
    };
    let note = format!("x0={:?} K={k:?}; {}", sw.x0, bias_note(&batch));
    let lower_verdict = if ci.0 >= sw.lower {
        Verdict::Pass
    } else if ci.1 < sw.lower {
        Verdict::Fail
    } else {
        Verdict::Inconclusive
    };
    report.checks.push(Check {
        name: "mean-lower".into(),
        bound: Some(sw.lower),
        empirical: Some(mean),
        ci: Some(ci),
        slack,
        verdict: lower_verdict,
        note: note.clone(),
    });
    report
        .checks
        .push(interval_check("mean-upper", sw.upper, mean, ci, slack, note));
    report.checks.push(Check {
        name: "h-ordering".into(),
        bound: Some(sw.h_k),
        empirical: Some(sw.x0),
        ci: None,
        slack: Slack::default(),
        verdict: if sw.h_ordering_holds() {
            Verdict::Pass
        } else {
            Verdict::Fail
        },
        note: format!("h_1={:?} x0={:?} h_1/(1+K)={:?}", sw.h_one, sw.x0, sw.h_k),
    });
    Ok(report)
}

/// One verification task.
#[derive(Debug, Clone, PartialEq)]
pub struct Job {
    pub theorem: Theorem,
    pub family: MeasureSpec,
    pub t: f64,
    /// `c` for Theorem 1, `q` for Theorems 2 and 3, unused for the sandwich.
    pub param: f64,
    pub f: LipschitzFunction,
}

impl Job {
    pub fn run(&self, n: usize, spec: RngStreamSpec, settings: &Settings) -> Result<VerificationReport, Error> {
        let family = self.family.build()?;
        match self.theorem {
            Theorem::Thm1 => verify_thm1(&family, self.t, self.param, &self.f, n, spec, settings),
            Theorem::Thm2 => verify_thm2(&family, self.t, self.param, &self.f, n, spec, settings),
            Theorem::Thm3 => verify_thm3(&family, self.t, self.param, &self.f, n, spec, settings),
            Theorem::Mr => verify_mr(&family, self.t, n, spec, settings),
        }
    }
}

/// The standard suite: Cauchy and truncated stable families at the
/// documented parameters.
pub fn default_suite() -> Vec<Job> {
    let cauchy = MeasureSpec::stable(1.0, 1.0);
    let trunc1 = MeasureSpec::truncated_stable(1.0, 1.0, 1.0);
    let trunc15 = MeasureSpec::truncated_stable(1.5, 1.0, 1.0);
    let stable15 = MeasureSpec::stable(1.5, 1.0);
    let job = |theorem, family: &MeasureSpec, t, param| Job {
        theorem,
        family: family.clone(),
        t,
        param,
        f: LipschitzFunction::Norm,
    };
    let mut jobs = vec![
        job(Theorem::Thm1, &cauchy, 1.0, 0.25),
        job(Theorem::Thm1, &trunc1, 0.05, 0.25),
        job(Theorem::Thm1, &trunc1, 0.5, 0.25),
    ];
    for q in [0.1, 0.2] {
        jobs.push(job(Theorem::Thm2, &cauchy, 1.0, q));
        jobs.push(job(Theorem::Thm2, &trunc1, 0.02, q));
    }
    for q in [0.1, 0.2] {
        jobs.push(job(Theorem::Thm3, &trunc15, 0.05, q));
    }
    jobs.push(job(Theorem::Mr, &stable15, 0.125, f64::NAN));
    jobs.push(job(Theorem::Mr, &trunc15, 0.05, f64::NAN));
    jobs
}

/// Runs jobs in order; job `i` uses stream `i` of `seed`.
pub fn run_jobs(jobs: &[Job], n: usize, seed: u64, settings: &Settings) -> Result<Vec<VerificationReport>, Error> {
    jobs.iter()
        .enumerate()
        .map(|(i, job)| job.run(n, RngStreamSpec::new(seed, i as u64), settings))
        .collect()
}
