use levyconc_core::bounds::{bennett_exponent, g_c, h_c};
use levyconc_core::families::*;
use levyconc_core::measure::{Directions, LevyMeasure, LogGrid, RadialDensity, RadialPart, ScaleFunctions};

fn g_oracle(c: f64, x: f64) -> f64 {
    let f = |y: f64| y - (y + c) * (1.0 + y / c).ln() - x.ln();
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    while f(hi) > 0.0 {
        hi *= 2.0;
    }
    for _ in 0..300 {
        let mid = 0.5 * (lo + hi);
        if f(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

#[test]
fn truncated_h_examples() {
    let fam = TruncatedStableFamily::new(1.0, 1.0, 1.0).unwrap();
    assert!((fam.trunc_h(0.25, 0.1) - 0.8).abs() < 1e-15);
    assert!((fam.trunc_h(0.25, 0.125) - 1.0).abs() < 1e-15);
    assert!((fam.trunc_h(0.25, 0.5) - 2.0).abs() < 1e-15);
}

#[test]
fn truncated_h_matches_generic_on_both_regimes() {
    for alpha in [0.5, 1.0, 1.5] {
        for (k, m) in [(1.0, 1.0), (0.3, 2.5)] {
            let fam = TruncatedStableFamily::new(alpha, k, m).unwrap();
            let sf = ScaleFunctions::new(fam.measure().unwrap()).unwrap();
            for c in [0.05, 0.25, 1.0] {
                let ts = fam.switch_time(c);
                for f in [1e-3, 0.1, 0.5, 0.999, 1.0, 1.001, 2.0, 10.0, 1e3] {
                    let t = ts * f;
                    let generic = h_c(&sf, c, t).unwrap();
                    assert!(rel(generic, fam.trunc_h(c, t)) < 1e-10, "alpha={alpha} c={c} t={t}");
                }
                // Continuity at the switch.
                let below = fam.trunc_h(c, ts * (1.0 - 1e-12));
                let above = fam.trunc_h(c, ts * (1.0 + 1e-12));
                assert!(rel(below, above) < 1e-9);
            }
        }
    }
}

#[test]
fn closed_forms_agree_with_quadrature() {
    for alpha in [0.4, 1.0, 1.6] {
        let fam = TruncatedStableFamily::new(alpha, 0.7, 1.5).unwrap();
        let sf = ScaleFunctions::new(fam.measure().unwrap()).unwrap();
        let d = RadialDensity::new(move |r| r.powf(-1.0 - alpha), 1.5).unwrap();
        let numeric = ScaleFunctions::new(
            LevyMeasure::new(vec![0.0], Directions::symmetric_line(0.7), RadialPart::Numeric(d)).unwrap(),
        )
        .unwrap();
        for r in LogGrid::new(1e-3, 1.49, 20).unwrap().iter() {
            assert!(rel(sf.v(r).unwrap(), fam.v(r)) < 1e-13);
            assert!(rel(sf.nu_bar(r).unwrap(), fam.nu_bar(r)) < 1e-12);
            assert!(rel(numeric.v(r).unwrap(), fam.v(r)) < 1e-8);
            assert!(rel(numeric.nu_bar(r).unwrap(), fam.nu_bar(r)) < 1e-8);
            let hn = h_c(&numeric, 0.25, 0.01).unwrap();
            assert!(rel(hn, fam.trunc_h(0.25, 0.01)) < 1e-8);
        }
        let stable = StableFamily::symmetric(alpha, 0.7).unwrap();
        let sf = ScaleFunctions::new(stable.measure().unwrap()).unwrap();
        for r in [1e-3, 0.2, 3.0, 1e3] {
            assert!(rel(sf.v(r).unwrap(), stable.v(r)) < 1e-13);
            assert!(rel(sf.nu_bar(r).unwrap(), stable.nu_bar(r)) < 1e-13);
            if alpha > 1.0 {
                assert!(rel(sf.m_tail(r).unwrap(), stable.m_tail(r)) < 1e-13);
            } else {
                assert!(sf.m_tail(r).unwrap().is_infinite());
            }
        }
    }
}

#[test]
fn h_alpha_examples_and_identity() {
    let fam = TruncatedStableFamily::new(1.0, 1.0, 1.0).unwrap();
    assert!((fam.h_alpha(0.1) - 0.8).abs() < 1e-15);
    for alpha in [0.5, 1.0, 1.5] {
        let fam = TruncatedStableFamily::new(alpha, 1.3, 0.8).unwrap();
        let ts = fam.h_alpha_switch();
        assert!(rel(ts, fam.switch_time(fam.h_alpha_c())) < 1e-14);
        let below = fam.h_alpha(ts);
        let above = fam.h_alpha(ts * (1.0 + 1e-13));
        assert!(rel(below, above) < 1e-9);
        assert!(rel(below, fam.truncation) < 1e-12);
        for i in 0..40 {
            let t = ts * 10f64.powf(-2.0 + 0.1 * i as f64);
            assert!(rel(fam.h_alpha(t), fam.trunc_h(fam.h_alpha_c(), t)) < 1e-14);
        }
    }
}

#[test]
fn h_alpha_log_slopes() {
    for alpha in [0.5, 1.0, 1.5] {
        let fam = TruncatedStableFamily::new(alpha, 1.0, 1.0).unwrap();
        let ts = fam.h_alpha_switch();
        let slope = |a: f64, b: f64| (fam.h_alpha(b) / fam.h_alpha(a)).ln() / (b / a).ln();
        assert!((slope(ts / 100.0, ts / 10.0) - 1.0 / alpha).abs() < 1e-3);
        assert!((slope(ts * 10.0, ts * 100.0) - 0.5).abs() < 1e-3);
    }
}

#[test]
fn k_alpha_values() {
    let k1 = k_alpha(1.0).unwrap();
    assert!((k1 - (1.0 + 3.0 * g_oracle(0.25, 0.25))).abs() < 1e-11);
    assert!((k1 - 4.663565407879).abs() < 1e-10);
    let mut prev = 1.0;
    for i in 1..40 {
        let k = k_alpha(0.05 * i as f64).unwrap();
        assert!(k > prev);
        prev = k;
    }
}

#[test]
fn c_alpha_values_and_domination() {
    assert!((c_alpha(1.0) - 4.218281828459).abs() < 1e-11);
    assert_eq!(c_alpha(0.01), 2.0);
    for i in 1..20 {
        let alpha = 0.1 * i as f64;
        for j in 1..20 {
            let q = 0.05 * j as f64;
            let c = q * alpha / (2.0 * (2.0 - alpha));
            let g = g_c(c, q / 2.0).unwrap();
            assert!(1.0 + g <= c_alpha(alpha), "alpha={alpha} q={q}");
        }
    }
}

#[test]
fn trunc_tail_bound_examples() {
    let fam = TruncatedStableFamily::new(1.0, 1.0, 1.0).unwrap();
    assert_eq!(fam.g_t(0.3, 1.0), 1.0);
    let t = 0.01;
    let expect = 2.0 * c_alpha(1.0) * t / 0.5;
    assert!((fam.trunc_tail_bound(t, 0.5) - expect).abs() < 1e-14);
    assert!((fam.trunc_tail_bound(t, 0.5) - 0.16873127313836).abs() < 1e-11);
    for t in [0.01, 0.1, 1.0] {
        let mut prev = 1.0;
        for i in 1..200 {
            let x = 0.05 * i as f64;
            let b = fam.trunc_tail_bound(t, x);
            assert!(b <= prev + 1e-15, "t={t} x={x}");
            assert!(b > 0.0 && b <= 1.0);
            prev = b;
        }
    }
}

#[test]
fn g_t_matches_formula() {
    let fam = TruncatedStableFamily::new(1.5, 2.0, 0.7).unwrap();
    let (t, x) = (0.2, 1.9);
    let (k, m, a) = (2.0f64, 0.7f64, 1.5f64);
    let kappa = k * t / ((2.0 - a) * m.powf(a));
    let expo = (x / m - 1.0) - (x / m - 1.0 + kappa) * (1.0 + (2.0 - a) * m.powf(a - 1.0) * (x - m) / (k * t)).ln();
    assert!(rel(fam.g_t(t, x), expo.exp()) < 1e-12);
    assert!((bennett_exponent(kappa, x / m - 1.0) - expo).abs() < 1e-12);
}

#[test]
fn trunc_threshold_example() {
    let fam = TruncatedStableFamily::new(1.0, 1.0, 1.0).unwrap();
    let (q, t) = (0.5, 0.01);
    let first = c_alpha(1.0) * (2.0 * t / q);
    let second = (1.0 + g_oracle(t, q / 2.0)) * 1.0;
    let th = fam.trunc_threshold(q, t).unwrap();
    assert!(rel(th, first.min(second)) < 1e-12);
    assert!((first - 0.16873127313836).abs() < 1e-11);
}

#[test]
fn trunc_threshold_monotone_in_q_and_continuous() {
    for alpha in [0.7, 1.0, 1.5] {
        let fam = TruncatedStableFamily::new(alpha, 1.0, 1.0).unwrap();
        for t in [0.01, 0.1, 1.0] {
            let mut prev = f64::INFINITY;
            for j in 1..=20 {
                let v = fam.trunc_threshold(0.05 * j as f64, t).unwrap();
                assert!(v <= prev + 1e-14);
                prev = v;
            }
        }
        let q = 0.3;
        let switch = q * alpha / 2.0;
        let a = fam.trunc_threshold(q, switch * (1.0 - 1e-12)).unwrap();
        let b = fam.trunc_threshold(q, switch * (1.0 + 1e-12)).unwrap();
        assert!(rel(a, b) < 1e-9);
    }
}

#[test]
fn a_constant_of_truncated_family() {
    for alpha in [0.5, 1.0, 1.5] {
        let fam = TruncatedStableFamily::new(alpha, 1.0, 1.0).unwrap();
        let sf = ScaleFunctions::new(fam.measure().unwrap()).unwrap();
        let a = sf.a_constant(&sf.default_grid()).unwrap();
        assert!((a - fam.a_constant()).abs() < 1e-6);
    }
}

#[test]
fn k_constant_of_truncated_family_matches_dense_grid() {
    let fam = TruncatedStableFamily::new(1.5, 1.0, 1.0).unwrap();
    let sf = ScaleFunctions::new(fam.measure().unwrap()).unwrap();
    let k = sf.k_constant(&sf.default_grid()).unwrap();
    // Dense oracle from the closed forms: R M(R) / V(R) over (0, M). The
    // supremum is approached as R -> 0, so the grid reaches far below.
    let mut sup = 0.0f64;
    for i in 0..200_000 {
        let r = 10f64.powf(-16.0 + 16.0 * i as f64 / 200_000.0);
        let m_tail = 2.0 * (r.powf(-0.5) - 1.0) / 0.5;
        sup = sup.max(r * m_tail / fam.v(r));
    }
    assert!(k.is_finite());
    assert!((k - sup).abs() < 1e-6, "{k} vs {sup}");
}

#[test]
fn stable_exponent_rate_oracles() {
    // Cauchy with K = 1: scale pi.
    let fam = StableFamily::symmetric(1.0, 1.0).unwrap();
    assert!((fam.scale_at(1.0).unwrap() - std::f64::consts::PI).abs() < 1e-10);
    for alpha in [0.5, 1.5] {
        let fam = StableFamily::symmetric(alpha, 1.0).unwrap();
        let expect = 2.0 * libm::tgamma(1.0 - alpha) * (std::f64::consts::PI * alpha / 2.0).cos() / alpha;
        assert!(rel(fam.exponent_rate().unwrap(), expect) < 1e-9);
    }
}

#[test]
fn compound_poisson_measure() {
    let fam = CompoundPoissonFamily::symmetric_single(3.0, 1.0).unwrap();
    let sf = ScaleFunctions::new(fam.measure().unwrap()).unwrap();
    assert_eq!(sf.nu_bar(0.5).unwrap(), 3.0);
    assert!(CompoundPoissonFamily::new(1.0, vec![(1.0, 0.4)], Directions::symmetric_line(1.0), vec![0.0]).is_err());
}
