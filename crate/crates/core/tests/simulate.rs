use std::f64::consts::PI;

use levyconc_core::families::{CompoundPoissonFamily, StableFamily, TruncatedStableFamily};
use levyconc_core::measure::{ClosedForm, Directions, LevyMeasure, RadialPart, ScaleFunctions};
use levyconc_core::rng::{Executor, RngStreamSpec, Serial};
use levyconc_core::simulate::*;

/// Executor that runs chunks on scoped threads, round robin.
struct Threads(usize);

impl Executor for Threads {
    fn run(&self, chunks: usize, job: &(dyn Fn(usize) -> Vec<f64> + Sync)) -> Vec<Vec<f64>> {
        let mut out: Vec<Option<Vec<f64>>> = vec![None; chunks];
        std::thread::scope(|s| {
            let handles: Vec<_> = (0..self.0)
                .map(|w| {
                    s.spawn(move || {
                        (w..chunks)
                            .step_by(self.0)
                            .map(|k| (k, job(k)))
                            .collect::<Vec<_>>()
                    })
                })
                .collect();
            for h in handles {
                for (k, v) in h.join().unwrap() {
                    out[k] = Some(v);
                }
            }
        });
        out.into_iter().map(Option::unwrap).collect()
    }
}

fn sorted(mut v: Vec<f64>) -> Vec<f64> {
    v.sort_by(f64::total_cmp);
    v
}

/// Two-sample Kolmogorov-Smirnov statistic.
fn ks_two_sample(a: &[f64], b: &[f64]) -> f64 {
    let (a, b) = (sorted(a.to_vec()), sorted(b.to_vec()));
    let (mut i, mut j, mut d) = (0usize, 0usize, 0.0f64);
    while i < a.len() && j < b.len() {
        if a[i] <= b[j] {
            i += 1;
        } else {
            j += 1;
        }
        d = d.max((i as f64 / a.len() as f64 - j as f64 / b.len() as f64).abs());
    }
    d
}

fn mean_and_se(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1.0);
    (m, (var / n).sqrt())
}

#[test]
fn cauchy_median_of_abs_is_pi() {
    let fam = StableFamily::symmetric(1.0, 1.0).unwrap();
    let b = sample_stable(&fam, 1.0, 100_000, RngStreamSpec::new(1, 0), &Serial).unwrap();
    assert_eq!(b.bias.bias_bound, 0.0);
    let s = sorted(b.norms());
    let n = s.len() as f64;
    // 99% order statistic interval for the median.
    let half = 2.576 * n.sqrt() / 2.0;
    let lo = s[(n / 2.0 - half).floor() as usize];
    let hi = s[(n / 2.0 + half).ceil() as usize];
    assert!(lo <= PI && PI <= hi, "[{lo}, {hi}]");
}

#[test]
fn cauchy_self_similarity() {
    let fam = StableFamily::symmetric(1.0, 1.0).unwrap();
    let n = 10_000;
    let a = sample_stable(&fam, 4.0, n, RngStreamSpec::new(2, 0), &Serial).unwrap();
    let b = sample_stable(&fam, 1.0, n, RngStreamSpec::new(2, 1), &Serial).unwrap();
    let scaled: Vec<f64> = b.values.iter().map(|x| 4.0 * x).collect();
    let d = ks_two_sample(&a.values, &scaled);
    let crit = 1.628 * (2.0 / n as f64).sqrt();
    assert!(d < crit, "{d} >= {crit}");
}

#[test]
fn stable_characteristic_function() {
    // E cos(u X_t) = exp(-lambda t |u|^alpha) for symmetric laws.
    for (alpha, dim) in [(0.7, 1usize), (1.5, 1), (1.2, 3)] {
        let fam = if dim == 1 {
            StableFamily::symmetric(alpha, 0.5).unwrap()
        } else {
            StableFamily::spherical(alpha, dim, 2.0).unwrap()
        };
        let t = 0.8;
        let b = sample_stable(&fam, t, 100_000, RngStreamSpec::new(3, dim as u64), &Serial).unwrap();
        let lambda = fam.exponent_rate().unwrap();
        let u = 0.6;
        let vals: Vec<f64> = b.rows().map(|x| (u * x[0]).cos()).collect();
        let (m, se) = mean_and_se(&vals);
        let expect = (-lambda * t * u.powf(alpha)).exp();
        assert!((m - expect).abs() < 4.0 * se, "alpha={alpha} d={dim}: {m} vs {expect}");
    }
}

#[test]
fn compound_tail_nonzero_fraction() {
    let fam = TruncatedStableFamily::new(1.0, 1.0, 1.0).unwrap();
    let sf = ScaleFunctions::new(fam.measure().unwrap()).unwrap();
    let (r, t, n) = (0.5, 0.1, 100_000);
    let b = sample_compound_tail(&sf, r, t, n, RngStreamSpec::new(4, 0), &Serial).unwrap();
    let nonzero = b.values.iter().filter(|&&x| x != 0.0).count() as f64 / n as f64;
    let p = t * fam.nu_bar(r);
    let sigma = (p * (1.0 - p) / n as f64).sqrt();
    assert!(nonzero <= p + 3.0 * sigma);
    let exact = 1.0 - (-p).exp();
    assert!((nonzero - exact).abs() < 4.0 * sigma);
    // A single jump must itself exceed x; two or more jumps occur with
    // probability at most p^2 / 2.
    let norms = b.norms();
    for x in [0.5, 0.6, 0.75, 0.9] {
        let frac = norms.iter().filter(|&&z| z >= x).count() as f64 / n as f64;
        let bound = t * fam.nu_bar(x) + p * p / 2.0;
        let s = (bound.max(1e-6) * (1.0 - bound) / n as f64).sqrt();
        assert!(frac <= bound + 3.0 * s, "x={x}: {frac} > {bound}");
    }
}

#[test]
fn jump_radius_distribution() {
    for (alpha, cutoff) in [(1.0, Some(1.0)), (1.5, None)] {
        let m = LevyMeasure::new(
            vec![0.0],
            Directions::symmetric_line(1.0),
            RadialPart::ClosedForm(ClosedForm::PowerLaw { alpha, cutoff }),
        )
        .unwrap();
        let sf = ScaleFunctions::new(m).unwrap();
        let r = 0.3;
        let n = 50_000;
        let radii = sorted(sample_jump_radii(&sf, r, f64::INFINITY, n, RngStreamSpec::new(5, 0), &Serial).unwrap());
        let nb_r = sf.nu_bar(r).unwrap();
        let mut gap = 0.0f64;
        for (i, &x) in radii.iter().enumerate() {
            let cdf = 1.0 - sf.nu_bar(x).unwrap() / nb_r;
            gap = gap.max((cdf - i as f64 / n as f64).abs()).max((cdf - (i + 1) as f64 / n as f64).abs());
        }
        assert!(gap < 1.628 / (n as f64).sqrt(), "alpha={alpha}: {gap}");
    }
}

#[test]
fn truncated_small_moments() {
    let fam = TruncatedStableFamily::new(1.0, 1.0, 1.0).unwrap();
    let sf = ScaleFunctions::new(fam.measure().unwrap()).unwrap();
    let (r, t) = (0.5, 0.5);
    let b = sample_truncated_small(&sf, r, t, 100_000, RngStreamSpec::new(6, 0), EpsilonPolicy::default(), &Serial)
        .unwrap();
    let eps = b.bias.epsilon.unwrap();
    assert!((b.bias.discarded_sd - (t * fam.v(eps)).sqrt()).abs() < 1e-10);
    assert!(b.bias.bias_bound > 0.0 && b.bias.bias_bound <= CONTAMINATION_LEVEL * (1.0 + 1e-9));
    let (m, se) = mean_and_se(&b.values);
    assert!(m.abs() < 4.0 * se);
    let sq: Vec<f64> = b.values.iter().map(|x| x * x).collect();
    let (m2, se2) = mean_and_se(&sq);
    // E Y^2 = t V(R); the simulated part misses t V(eps).
    let target = t * fam.v(r);
    assert!((m2 - target).abs() <= 4.0 * se2 + t * fam.v(eps), "{m2} vs {target}");
}

#[test]
fn process_second_moment_matches_t_v_m() {
    let fam = TruncatedStableFamily::new(1.0, 1.0, 1.0).unwrap();
    let sf = ScaleFunctions::new(fam.measure().unwrap()).unwrap();
    let t = 0.1;
    let b = sample_process(&sf, t, 100_000, RngStreamSpec::new(7, 0), EpsilonPolicy::default(), &Serial).unwrap();
    assert_eq!(b.method, Method::SmallJumpsDiscarded);
    let sq: Vec<f64> = b.values.iter().map(|x| x * x).collect();
    let (m2, se2) = mean_and_se(&sq);
    let eps = b.bias.epsilon.unwrap();
    let target = t * fam.v(1.0);
    assert!((m2 - target).abs() <= 4.0 * se2 + t * fam.v(eps), "{m2} vs {target}");
}

#[test]
fn pure_stable_dispatches_to_exact() {
    let fam = StableFamily::symmetric(1.5, 1.0).unwrap();
    let sf = ScaleFunctions::new(fam.measure().unwrap()).unwrap();
    let b = sample_process(&sf, 1.0, 10, RngStreamSpec::new(8, 0), EpsilonPolicy::default(), &Serial).unwrap();
    assert_eq!(b.method, Method::ExactStable);
    assert_eq!(b.bias, BiasInfo::exact());
}

#[test]
fn asymmetric_stable_uses_decomposition() {
    let fam = StableFamily::new(1.5, Directions::Line { neg: 0.2, pos: 1.0 }).unwrap();
    let sf = ScaleFunctions::new(fam.measure().unwrap()).unwrap();
    let b = sample_process(&sf, 0.5, 1000, RngStreamSpec::new(9, 0), EpsilonPolicy::default(), &Serial).unwrap();
    assert_eq!(b.method, Method::SmallJumpsDiscarded);
    assert!(b.bias.bias_bound > 0.0);
}

#[test]
fn compound_poisson_is_exact() {
    let fam = CompoundPoissonFamily::symmetric_single(2.0, 1.0).unwrap();
    let sf = ScaleFunctions::new(fam.measure().unwrap()).unwrap();
    let (t, n) = (0.5, 100_000);
    let b = sample_process(&sf, t, n, RngStreamSpec::new(10, 0), EpsilonPolicy::default(), &Serial).unwrap();
    assert_eq!(b.method, Method::CompoundPoisson);
    let zeros = b.values.iter().filter(|&&x| x == 0.0).count() as f64;
    // P(X_t = 0) = sum_k P(N = 2k) P(symmetric walk at 0 after 2k steps).
    let lam = 2.0 * t;
    let mut p0 = 0.0;
    let mut pk = (-lam).exp();
    let mut binom = 1.0;
    for k in 0..60 {
        if k % 2 == 0 {
            p0 += pk * binom;
        }
        pk *= lam / (k + 1) as f64;
        if k % 2 == 1 {
            let m = (k + 1) as f64;
            binom = binom_central(m as u64);
        }
    }
    let frac = zeros / n as f64;
    let s = (p0 * (1.0 - p0) / n as f64).sqrt();
    assert!((frac - p0).abs() < 4.0 * s, "{frac} vs {p0}");
}

/// `C(2m, m) / 4^m` for `2m = k`.
fn binom_central(k: u64) -> f64 {
    let m = k / 2;
    let mut v = 1.0;
    for i in 1..=m {
        v *= (m + i) as f64 / (4.0 * i as f64);
    }
    v
}

#[test]
fn worker_count_does_not_change_batches() {
    let fam = TruncatedStableFamily::new(1.5, 1.0, 1.0).unwrap();
    let sf = ScaleFunctions::new(fam.measure().unwrap()).unwrap();
    let spec = RngStreamSpec::new(99, 3);
    let a = sample_process(&sf, 0.05, 10_000, spec, EpsilonPolicy::default(), &Serial).unwrap();
    for w in [2, 3, 5] {
        let b = sample_process(&sf, 0.05, 10_000, spec, EpsilonPolicy::default(), &Threads(w)).unwrap();
        assert!(a.values.iter().zip(&b.values).all(|(x, y)| x.to_bits() == y.to_bits()));
    }
    let c = sample_process(&sf, 0.05, 10_000, RngStreamSpec::new(99, 4), EpsilonPolicy::default(), &Serial).unwrap();
    assert_ne!(a.values, c.values);
}

#[test]
fn epsilon_policy_errors() {
    let fam = TruncatedStableFamily::new(1.0, 1.0, 1.0).unwrap();
    let sf = ScaleFunctions::new(fam.measure().unwrap()).unwrap();
    assert!(EpsilonPolicy::Absolute(2.0).resolve(&sf, 1.0, 1.0).is_err());
    assert!(EpsilonPolicy::Relative { eta: 0.0 }.resolve(&sf, 1.0, 1.0).is_err());
    let eps = EpsilonPolicy::Absolute(0.01).resolve(&sf, 1.0, 1.0).unwrap();
    assert_eq!(eps, 0.01);
}
