//! Fixed-time samplers for `X_t` and its truncation pieces.
//!
//! With `R > 0`, `X_t = Y^(R)_t + Z^(R)_t` where `Z^(R)` collects the jumps
//! larger than `R` (a compound Poisson process) and `Y^(R)` the rest. The
//! small jumps of `Y^(R)` below a cutoff `eps` are discarded; the centred
//! discarded part `D` has variance `t V(eps)` and jumps bounded by `eps`,
//! and its Bennett tail bound gives the contamination budget recorded in
//! [`BiasInfo`].

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, Poisson, StandardNormal};

use crate::bounds::{bennett_exponent, g_c};
use crate::error::{invalid, Error, Result};
use crate::families::StableFamily;
use crate::measure::{ClosedForm, Directions, RadialPart, ScaleFunctions};
use crate::rng::{Executor, RngStreamSpec, ALGORITHM, CHUNK};
use crate::roots::bisect_log;

/// Default `eta` in `sqrt(t V(eps)) <= eta R`.
pub const DEFAULT_ETA: f64 = 0.1;

/// Probability assigned to the event `|D| > contamination_radius`.
pub const CONTAMINATION_LEVEL: f64 = 1e-3;

/// Choice of the small-jump cutoff `eps`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EpsilonPolicy {
    Absolute(f64),
    /// Largest `eps <= R` with `sqrt(t V(eps)) <= eta R`.
    Relative { eta: f64 },
}

impl Default for EpsilonPolicy {
    fn default() -> Self {
        EpsilonPolicy::Relative { eta: DEFAULT_ETA }
    }
}

impl EpsilonPolicy {
    /// Resolves the cutoff for truncation radius `r` at time `t`.
    pub fn resolve(&self, sf: &ScaleFunctions, r: f64, t: f64) -> Result<f64> {
        match *self {
            EpsilonPolicy::Absolute(eps) => {
                if eps > 0.0 && eps <= r {
                    Ok(eps)
                } else {
                    Err(invalid("absolute epsilon must lie in (0, R]"))
                }
            }
            EpsilonPolicy::Relative { eta } => {
                if !(eta > 0.0) {
                    return Err(invalid("eta must be positive"));
                }
                let target = (eta * r) * (eta * r) / t;
                if sf.v(r)? <= target {
                    return Ok(r);
                }
                let mut lo = r;
                let mut tries = 0;
                while sf.v(lo)? > target {
                    lo *= 1e-2;
                    tries += 1;
                    if tries > 150 || lo < 1e-300 {
                        return Err(Error::EpsilonPolicy { target });
                    }
                }
                let failure = core::cell::Cell::new(None);
                let f = |x: f64| match sf.v(x) {
                    Ok(v) => {
                        if v <= target {
                            -1.0
                        } else {
                            1.0
                        }
                    }
                    Err(e) => {
                        failure.set(Some(e));
                        -1.0
                    }
                };
                let (a, _) = bisect_log(f, lo, lo * 100.0, 1e-12)?;
                if let Some(e) = failure.take() {
                    return Err(e);
                }
                Ok(a)
            }
        }
    }
}

/// Contamination bookkeeping for approximate batches.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BiasInfo {
    /// Small-jump cutoff; `None` for exact samplers.
    pub epsilon: Option<f64>,
    /// `sqrt(t V(eps))`, the standard deviation of the discarded part.
    pub discarded_sd: f64,
    /// `delta` with `P(|D| > delta) <= bias_bound`.
    pub contamination_radius: f64,
    /// Probability that a sample is off by more than `contamination_radius`.
    pub bias_bound: f64,
}

impl BiasInfo {
    pub fn exact() -> Self {
        BiasInfo {
            epsilon: None,
            discarded_sd: 0.0,
            contamination_radius: 0.0,
            bias_bound: 0.0,
        }
    }

    /// Budget for a centred part with variance `sigma^2` and jumps bounded by
    /// `eps` in dimension `dim`: per coordinate Bennett bound plus a union bound.
    pub fn for_discarded(eps: f64, sigma: f64, dim: usize) -> Result<Self> {
        if sigma == 0.0 {
            return Ok(BiasInfo {
                epsilon: Some(eps),
                ..BiasInfo::exact()
            });
        }
        let d = dim as f64;
        let p = CONTAMINATION_LEVEL;
        // 2d exp(B(y)) = p with y = delta / (sqrt(d) eps), c = sigma^2 / eps^2.
        let c = sigma * sigma / (eps * eps);
        let y = g_c(c, p / (2.0 * d))?;
        let delta = libm::sqrt(d) * eps * y;
        let bound = (2.0 * d * libm::exp(bennett_exponent(c, y))).min(1.0);
        Ok(BiasInfo {
            epsilon: Some(eps),
            discarded_sd: sigma,
            contamination_radius: delta,
            bias_bound: bound,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SampleKind {
    /// `X_t`.
    Process,
    /// `Z^(R)_t`, jumps larger than `R`.
    CompoundTail { r: f64 },
    /// `Y^(R)_t`, jumps up to `R`.
    TruncatedSmall { r: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    ExactStable,
    CompoundPoisson,
    SmallJumpsDiscarded,
}

/// Independent draws at a fixed time, stored row-major (`n x dim`).
#[derive(Debug, Clone, PartialEq)]
pub struct SampleBatch {
    pub values: Vec<f64>,
    pub dim: usize,
    pub t: f64,
    pub kind: SampleKind,
    pub method: Method,
    pub bias: BiasInfo,
    pub rng: RngStreamSpec,
    pub algorithm: &'static str,
}

impl SampleBatch {
    pub fn len(&self) -> usize {
        self.values.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.dim..(i + 1) * self.dim]
    }

    pub fn rows(&self) -> core::slice::ChunksExact<'_, f64> {
        self.values.chunks_exact(self.dim)
    }

    /// Euclidean norms of the rows.
    pub fn norms(&self) -> Vec<f64> {
        self.rows()
            .map(|x| libm::sqrt(x.iter().map(|v| v * v).sum::<f64>()))
            .collect()
    }
}

fn run_chunks<F>(n: usize, dim: usize, spec: RngStreamSpec, exec: &dyn Executor, draw: F) -> Vec<f64>
where
    F: Fn(&mut ChaCha8Rng, &mut [f64]) + Sync,
{
    let chunks = n.div_ceil(CHUNK);
    let job = |k: usize| {
        let count = CHUNK.min(n - k * CHUNK);
        let mut rng = spec.chunk_rng(k as u64);
        let mut out = vec![0.0; count * dim];
        for row in out.chunks_exact_mut(dim) {
            draw(&mut rng, row);
        }
        out
    };
    let parts = exec.run(chunks, &job);
    let mut values = Vec::with_capacity(n * dim);
    for p in parts {
        values.extend_from_slice(&p);
    }
    values
}

fn check_n_t(n: usize, t: f64) -> Result<()> {
    if n == 0 {
        return Err(invalid("n must be at least 1"));
    }
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::Domain {
            what: "t > 0",
            value: t,
        });
    }
    Ok(())
}

/// Standard symmetric stable variable with `E exp(iuZ) = exp(-|u|^alpha)`.
fn symmetric_stable_standard(rng: &mut ChaCha8Rng, alpha: f64) -> f64 {
    let v = PI * (rng.random::<f64>() - 0.5);
    if alpha == 1.0 {
        return libm::tan(v);
    }
    let w: f64 = Exp1.sample(rng);
    libm::sin(alpha * v) / libm::pow(libm::cos(v), 1.0 / alpha)
        * libm::pow(libm::cos((1.0 - alpha) * v) / w, (1.0 - alpha) / alpha)
}

/// Positive `a`-stable variable with `E exp(-s A) = exp(-s^a)`, `0 < a < 1`.
pub(crate) fn positive_stable(rng: &mut ChaCha8Rng, a: f64) -> f64 {
    let u = PI * rng.random::<f64>();
    let e: f64 = Exp1.sample(rng);
    libm::sin(a * u) / libm::pow(libm::sin(u), 1.0 / a)
        * libm::pow(libm::sin((1.0 - a) * u) / e, (1.0 - a) / a)
}

/// Exact draws of `X_t` for a symmetric stable family.
pub fn sample_stable(
    fam: &StableFamily,
    t: f64,
    n: usize,
    spec: RngStreamSpec,
    exec: &dyn Executor,
) -> Result<SampleBatch> {
    check_n_t(n, t)?;
    if !fam.is_symmetric() {
        return Err(invalid("exact stable sampling needs a symmetric measure"));
    }
    let alpha = fam.alpha;
    let dim = fam.dim();
    let scale = fam.scale_at(t)?;
    let values = if dim == 1 {
        run_chunks(n, 1, spec, exec, |rng, row| {
            row[0] = scale * symmetric_stable_standard(rng, alpha);
        })
    } else {
        // Sub-Gaussian representation sqrt(A) G with G ~ N(0, 2 I).
        run_chunks(n, dim, spec, exec, |rng, row| {
            let a = positive_stable(rng, 0.5 * alpha);
            let s = scale * libm::sqrt(2.0 * a);
            for x in row.iter_mut() {
                let g: f64 = StandardNormal.sample(rng);
                *x = s * g;
            }
        })
    };
    Ok(SampleBatch {
        values,
        dim,
        t,
        kind: SampleKind::Process,
        method: Method::ExactStable,
        bias: BiasInfo::exact(),
        rng: spec,
        algorithm: ALGORITHM,
    })
}

/// Draws radii from `mu` restricted to `(lo, hi]`.
enum RadiusSampler<'a> {
    Power { alpha: f64, lo_pow: f64, hi_pow: f64 },
    Atoms { radii: Vec<f64>, cumulative: Vec<f64> },
    Numeric { sf: &'a ScaleFunctions, lo: f64, hi: f64, tail_lo: f64, tail_hi: f64 },
}

impl<'a> RadiusSampler<'a> {
    /// The sampler and the total mass `nu(lo < |y| <= hi)`.
    fn new(sf: &'a ScaleFunctions, lo: f64, hi: f64) -> Result<(Self, f64)> {
        let total = sf.measure().directions().total();
        let tail = |x: f64| -> Result<f64> {
            if x.is_infinite() {
                Ok(0.0)
            } else if x <= 0.0 {
                if sf.measure().is_finite_activity() {
                    sf.nu_bar(f64::MIN_POSITIVE)
                } else {
                    Ok(f64::INFINITY)
                }
            } else {
                sf.nu_bar(x)
            }
        };
        let mass = tail(lo)? - tail(hi)?;
        let sampler = match sf.measure().radial() {
            RadialPart::ClosedForm(ClosedForm::PowerLaw { alpha, cutoff }) => {
                let hi = cutoff.map_or(hi, |m| hi.min(m));
                RadiusSampler::Power {
                    alpha: *alpha,
                    lo_pow: libm::pow(lo, -alpha),
                    hi_pow: if hi.is_finite() { libm::pow(hi, -alpha) } else { 0.0 },
                }
            }
            RadialPart::ClosedForm(ClosedForm::Atoms(atoms)) => {
                let mut radii = Vec::new();
                let mut cumulative = Vec::new();
                let mut acc = 0.0;
                for a in atoms.iter().filter(|a| a.radius > lo && a.radius <= hi) {
                    acc += a.weight;
                    radii.push(a.radius);
                    cumulative.push(acc);
                }
                RadiusSampler::Atoms { radii, cumulative }
            }
            RadialPart::Numeric(d) => RadiusSampler::Numeric {
                sf,
                lo,
                hi: hi.min(d.r_max()),
                tail_lo: tail(lo)? / total,
                tail_hi: tail(hi)? / total,
            },
        };
        Ok((sampler, mass))
    }

    fn draw(&self, rng: &mut ChaCha8Rng) -> f64 {
        match self {
            RadiusSampler::Power { alpha, lo_pow, hi_pow } => {
                let u: f64 = rng.random();
                libm::pow(hi_pow + (1.0 - u) * (lo_pow - hi_pow), -1.0 / alpha)
            }
            RadiusSampler::Atoms { radii, cumulative } => {
                let u = rng.random::<f64>() * cumulative[cumulative.len() - 1];
                let i = cumulative.partition_point(|&c| c <= u);
                radii[i.min(radii.len() - 1)]
            }
            RadiusSampler::Numeric {
                sf,
                lo,
                hi,
                tail_lo,
                tail_hi,
            } => {
                let u: f64 = rng.random();
                let target = tail_hi + u * (tail_lo - tail_hi);
                let total = sf.measure().directions().total();
                let f = |x: f64| sf.nu_bar(x).map_or(f64::NAN, |v| v / total) - target;
                let mut top = if hi.is_finite() { *hi } else { lo * 2.0 };
                while f(top) > 0.0 && top.is_finite() {
                    top *= 2.0;
                }
                match bisect_log(f, *lo, top, 1e-12) {
                    Ok((a, b)) => libm::sqrt(a * b),
                    Err(_) => *lo,
                }
            }
        }
    }
}

fn draw_direction(rng: &mut ChaCha8Rng, dirs: Directions, radius: f64, row: &mut [f64]) {
    match dirs {
        Directions::Line { neg, pos } => {
            let up = rng.random::<f64>() * (neg + pos) < pos;
            row[0] += if up { radius } else { -radius };
        }
        Directions::Sphere { dim, .. } => {
            let mut g = [0.0f64; 16];
            let mut heap;
            let buf: &mut [f64] = if dim <= 16 {
                &mut g[..dim]
            } else {
                heap = vec![0.0; dim];
                &mut heap
            };
            let mut norm2 = 0.0;
            while norm2 == 0.0 {
                norm2 = 0.0;
                for x in buf.iter_mut() {
                    *x = StandardNormal.sample(rng);
                    norm2 += *x * *x;
                }
            }
            let s = radius / libm::sqrt(norm2);
            for (r, x) in row.iter_mut().zip(buf.iter()) {
                *r += s * x;
            }
        }
    }
}

/// Compound Poisson of the jumps with radius in `(lo, hi]`, plus a drift.
struct JumpLaw<'a> {
    radius: RadiusSampler<'a>,
    poisson: Option<Poisson<f64>>,
    directions: Directions,
    drift: Vec<f64>,
}

impl<'a> JumpLaw<'a> {
    fn new(sf: &'a ScaleFunctions, lo: f64, hi: f64, t: f64, drift: Vec<f64>) -> Result<Self> {
        let (radius, mass) = RadiusSampler::new(sf, lo, hi)?;
        let mean = t * mass;
        if !mean.is_finite() {
            return Err(invalid("infinite jump intensity on the sampled range"));
        }
        let poisson = if mean > 0.0 {
            Some(Poisson::new(mean).map_err(|_| invalid("bad Poisson mean"))?)
        } else {
            None
        };
        Ok(JumpLaw {
            radius,
            poisson,
            directions: sf.measure().directions(),
            drift,
        })
    }

    fn draw(&self, rng: &mut ChaCha8Rng, row: &mut [f64]) {
        row.copy_from_slice(&self.drift);
        if let Some(p) = &self.poisson {
            let count = p.sample(rng) as u64;
            for _ in 0..count {
                let r = self.radius.draw(rng);
                draw_direction(rng, self.directions, r, row);
            }
        }
    }
}

/// Radii drawn from `mu` restricted to `(lo, hi]`, normalised.
pub fn sample_jump_radii(
    sf: &ScaleFunctions,
    lo: f64,
    hi: f64,
    n: usize,
    spec: RngStreamSpec,
    exec: &dyn Executor,
) -> Result<Vec<f64>> {
    let (radius, mass) = RadiusSampler::new(sf, lo, hi)?;
    if !(mass > 0.0 && mass.is_finite()) {
        return Err(invalid("radius range must carry finite positive mass"));
    }
    Ok(run_chunks(n, 1, spec, exec, |rng, row| row[0] = radius.draw(rng)))
}

/// Signed `int_{a < |y| <= b} y nu(dy)`, negated when `a > b`.
fn signed_shell(sf: &ScaleFunctions, a: f64, b: f64) -> Result<Vec<f64>> {
    if a <= b {
        sf.shell_first_moment(a, b)
    } else {
        Ok(sf.shell_first_moment(b, a)?.into_iter().map(|v| -v).collect())
    }
}

fn sample_law(
    law: &JumpLaw<'_>,
    dim: usize,
    t: f64,
    n: usize,
    spec: RngStreamSpec,
    exec: &dyn Executor,
    kind: SampleKind,
    method: Method,
    bias: BiasInfo,
) -> SampleBatch {
    let values = run_chunks(n, dim, spec, exec, |rng, row| law.draw(rng, row));
    SampleBatch {
        values,
        dim,
        t,
        kind,
        method,
        bias,
        rng: spec,
        algorithm: ALGORITHM,
    }
}

/// Exact draws of `Z^(R)_t`; all zeros when `nu_bar(R) = 0`.
pub fn sample_compound_tail(
    sf: &ScaleFunctions,
    r: f64,
    t: f64,
    n: usize,
    spec: RngStreamSpec,
    exec: &dyn Executor,
) -> Result<SampleBatch> {
    check_n_t(n, t)?;
    let dim = sf.measure().dim();
    let law = JumpLaw::new(sf, r, f64::INFINITY, t, vec![0.0; dim])?;
    Ok(sample_law(
        &law,
        dim,
        t,
        n,
        spec,
        exec,
        SampleKind::CompoundTail { r },
        Method::CompoundPoisson,
        BiasInfo::exact(),
    ))
}

/// Approximate draws of `Y^(R)_t` with the jumps below `eps` discarded.
pub fn sample_truncated_small(
    sf: &ScaleFunctions,
    r: f64,
    t: f64,
    n: usize,
    spec: RngStreamSpec,
    policy: EpsilonPolicy,
    exec: &dyn Executor,
) -> Result<SampleBatch> {
    check_n_t(n, t)?;
    if !(r > 0.0) {
        return Err(Error::Domain {
            what: "R > 0",
            value: r,
        });
    }
    let eps = policy.resolve(sf, r, t)?;
    let (law, bias) = small_jump_law(sf, eps, r, t)?;
    Ok(sample_law(
        &law,
        sf.measure().dim(),
        t,
        n,
        spec,
        exec,
        SampleKind::TruncatedSmall { r },
        Method::SmallJumpsDiscarded,
        bias,
    ))
}

/// Jumps in `(eps, hi]` with the drift that keeps the discarded part centred.
fn small_jump_law(sf: &ScaleFunctions, eps: f64, hi: f64, t: f64) -> Result<(JumpLaw<'_>, BiasInfo)> {
    let b = sf.measure().drift();
    let comp = signed_shell(sf, eps, 1.0)?;
    let drift: Vec<f64> = b.iter().zip(comp.iter()).map(|(bk, ck)| t * (bk - ck)).collect();
    let law = JumpLaw::new(sf, eps, hi, t, drift)?;
    let sigma = libm::sqrt(t * sf.v(eps)?);
    let bias = BiasInfo::for_discarded(eps, sigma, sf.measure().dim())?;
    Ok((law, bias))
}

/// Draws of `X_t`.
///
/// Symmetric stable measures use the exact sampler, atomic ones the exact
/// compound Poisson sampler; everything else is `Y^(1)_t + Z^(1)_t` with the
/// small jumps discarded according to `policy` (taken relative to `R = 1`).
pub fn sample_process(
    sf: &ScaleFunctions,
    t: f64,
    n: usize,
    spec: RngStreamSpec,
    policy: EpsilonPolicy,
    exec: &dyn Executor,
) -> Result<SampleBatch> {
    check_n_t(n, t)?;
    let measure = sf.measure();
    let dim = measure.dim();
    match measure.radial() {
        RadialPart::ClosedForm(ClosedForm::PowerLaw { alpha, cutoff: None })
            if measure.directions().is_symmetric() =>
        {
            let fam = StableFamily::new(*alpha, measure.directions())?;
            let mut batch = sample_stable(&fam, t, n, spec, exec)?;
            for row in batch.values.chunks_exact_mut(dim) {
                for (x, b) in row.iter_mut().zip(measure.drift()) {
                    *x += b * t;
                }
            }
            Ok(batch)
        }
        RadialPart::ClosedForm(ClosedForm::Atoms(_)) => {
            let comp = sf.shell_first_moment(0.0, 1.0)?;
            let drift = measure
                .drift()
                .iter()
                .zip(comp.iter())
                .map(|(b, c)| t * (b - c))
                .collect();
            let law = JumpLaw::new(sf, 0.0, f64::INFINITY, t, drift)?;
            Ok(sample_law(
                &law,
                dim,
                t,
                n,
                spec,
                exec,
                SampleKind::Process,
                Method::CompoundPoisson,
                BiasInfo::exact(),
            ))
        }
        _ => {
            let eps = policy.resolve(sf, 1.0, t)?;
            let (small, bias) = small_jump_law(sf, eps, f64::INFINITY, t)?;
            Ok(sample_law(
                &small,
                dim,
                t,
                n,
                spec,
                exec,
                SampleKind::Process,
                Method::SmallJumpsDiscarded,
                bias,
            ))
        }
    }
}
