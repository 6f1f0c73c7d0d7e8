//! End-to-end acceptance checks, one test per criterion. Each test prints a
//! single `criterion N: PASS|FAIL ...` line before asserting.

use std::f64::consts::PI;

use levyconc::cli;
use levyconc::measure_file::MeasureSpec;
use levyconc::parallel::Pool;
use levyconc::verify::*;
use levyconc_core::bounds::{bennett_exponent, g_c, h_c, mean_sandwich, x0_mr};
use levyconc_core::families::{StableFamily, TruncatedStableFamily};
use levyconc_core::measure::ScaleFunctions;
use levyconc_core::rng::RngStreamSpec;
use levyconc_core::simulate::{sample_compound_tail, sample_truncated_small, EpsilonPolicy};

const N: usize = 100_000;

fn report(id: u32, ok: bool, detail: String) {
    println!("criterion {id}: {} {detail}", if ok { "PASS" } else { "FAIL" });
    assert!(ok, "criterion {id}: {detail}");
}

/// Plain bisection on `y - (y + c) ln(1 + y/c) = ln x`.
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

fn stable_sf(alpha: f64, k: f64) -> ScaleFunctions {
    ScaleFunctions::new(StableFamily::symmetric(alpha, k).unwrap().measure().unwrap()).unwrap()
}

fn trunc_sf(alpha: f64, k: f64, m: f64) -> ScaleFunctions {
    ScaleFunctions::new(TruncatedStableFamily::new(alpha, k, m).unwrap().measure().unwrap()).unwrap()
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

fn all_pass(r: &VerificationReport, names: &[&str]) -> Result<String, String> {
    let mut parts = Vec::new();
    for name in names {
        let c = r
            .checks
            .iter()
            .find(|c| c.name == *name)
            .ok_or_else(|| format!("{} {}: missing check {name}", r.theorem, r.family))?;
        let line = format!(
            "{}/{}@t={:?}: emp={:?} ci={:?} bound={:?} {}",
            r.theorem, name, r.t, c.empirical, c.ci, c.bound, c.verdict
        );
        if c.verdict != Verdict::Pass {
            return Err(format!("{line} ({})", c.note));
        }
        parts.push(line);
    }
    Ok(parts.join("; "))
}

#[test]
fn criterion_01_closed_form_scale_function() {
    let mut worst = 0.0f64;
    let (k, m) = (1.0, 1.0);
    for alpha in [0.3, 0.7, 1.0, 1.4, 1.8] {
        let sf = stable_sf(alpha, k);
        for c in [0.01, 0.1, 0.25, 1.0, 4.0] {
            for t in [1e-3, 0.05, 1.0, 20.0, 1e3] {
                // Total direction mass 2K on the line.
                let oracle = (2.0 * k * t / ((2.0 - alpha) * c)).powf(1.0 / alpha);
                worst = worst.max(rel(h_c(&sf, c, t).unwrap(), oracle));
            }
        }
    }
    let stable_worst = worst;
    let mut jump = 0.0f64;
    worst = 0.0;
    for alpha in [0.3, 0.7, 1.0, 1.4, 1.8] {
        let sf = trunc_sf(alpha, k, m);
        for c in [0.01, 0.1, 0.25, 1.0, 4.0] {
            let t_star = (2.0 - alpha) * c * m.powf(alpha) / (2.0 * k);
            for f in [1e-3, 0.3, 1.0, 3.0, 1e3] {
                let t = t_star * f;
                let oracle = if t <= t_star {
                    (2.0 * k * t / ((2.0 - alpha) * c)).powf(1.0 / alpha)
                } else {
                    (2.0 * k * m.powf(2.0 - alpha) * t / ((2.0 - alpha) * c)).sqrt()
                };
                worst = worst.max(rel(h_c(&sf, c, t).unwrap(), oracle));
            }
            let below = h_c(&sf, c, t_star * (1.0 - 1e-13)).unwrap();
            let above = h_c(&sf, c, t_star * (1.0 + 1e-13)).unwrap();
            jump = jump.max(rel(below, above));
        }
    }
    let ok = stable_worst < 1e-10 && worst < 1e-10 && jump < 1e-9;
    report(
        1,
        ok,
        format!("stable max rel err {stable_worst:.2e}; truncated max rel err {worst:.2e}; jump at t* {jump:.2e}"),
    );
}

#[test]
fn criterion_02_g_solver_certificates() {
    let mut at_one = 0.0f64;
    let mut resid = 0.0f64;
    for c in [1e-7, 1e-3, 0.05, 0.25, 1.0, 10.0, 1e3] {
        at_one = at_one.max(g_c(c, 1.0).unwrap().abs());
        for x in [1e-12, 1e-6, 0.01, 0.1, 0.25, 0.5, 0.9, 0.999999] {
            let g = g_c(c, x).unwrap();
            resid = resid.max((bennett_exponent(c, g) - x.ln()).abs());
        }
    }
    // Small-q limit at q = 1e-6, A = 1: c = q/2, x = q/2.
    let q = 1e-6;
    let g_small = g_c(q / 2.0, q / 2.0).unwrap();
    let oracle = g_oracle(q / 2.0, q / 2.0);
    let limit_ok = (g_small - 1.0).abs() < 1e-2;
    let ok = at_one <= 1e-14 && resid < 1e-10 && limit_ok;
    report(
        2,
        ok,
        format!(
            "max |g_c(1)| {at_one:e}; max residual {resid:.2e}; g_(q/2)(q/2) at q=1e-6 is {g_small:.10} \
             (oracle {oracle:.10}), distance to 1 is {:.4} against tolerance 1e-2",
            (g_small - 1.0).abs()
        ),
    );
}

#[test]
fn criterion_03_structural_constants() {
    let mut worst_a = 0.0f64;
    for alpha in [0.5, 1.0, 1.5] {
        let sf = stable_sf(alpha, 1.0);
        let a = sf.a_constant(&sf.default_grid()).unwrap();
        // nu_bar(R) = 2K R^-a / a and V(R)/R^2 = 2K R^-a / (2 - a).
        worst_a = worst_a.max((a - (2.0 - alpha) / alpha).abs());
    }
    let alpha = 1.5;
    let sf = stable_sf(alpha, 1.0);
    let k = sf.k_constant(&sf.default_grid()).unwrap();
    // M(R) = 2K R^(1-a) / (a - 1) and V(R)/R = 2K R^(1-a) / (2 - a).
    let k_oracle = (2.0 - alpha) / (alpha - 1.0);
    let ok = worst_a < 1e-6 && (k - k_oracle).abs() < 1e-6 && (k_oracle - 1.0).abs() < 1e-15;
    report(3, ok, format!("max |A - (2-a)/a| {worst_a:.2e}; K(1.5) = {k:?} vs {k_oracle:?}"));
}

#[test]
fn criterion_04_median_monte_carlo() {
    let pool = Pool::new(0).unwrap();
    let settings = Settings::new(&pool);
    let mut lines = Vec::new();
    let mut ok = true;

    let cauchy = MeasureSpec::stable(1.0, 1.0).build().unwrap();
    let r = verify_thm1(&cauchy, 1.0, 0.25, &LipschitzFunction::Norm, N, RngStreamSpec::new(41, 0), &settings).unwrap();
    // h = 2Kt/c = 8 for the Cauchy law.
    let bound = 8.0 * (1.0 + 3.0 * g_oracle(0.25, 0.25));
    let std = r.checks.iter().find(|c| c.name == "median-standard").unwrap();
    ok &= rel(std.bound.unwrap(), bound) < 1e-10;
    let b = sample_stable_norm_median(&cauchy);
    ok &= b.lower <= PI && PI <= b.upper;
    lines.push(format!("Cauchy median CI [{:.4}, {:.4}] vs pi, bound {bound:.4}", b.lower, b.upper));
    match all_pass(&r, &["median-standard", "median-refined"]) {
        Ok(s) => lines.push(s),
        Err(e) => {
            ok = false;
            lines.push(e);
        }
    }

    let trunc = MeasureSpec::truncated_stable(1.0, 1.0, 1.0).build().unwrap();
    for (i, t) in [0.05, 0.5].into_iter().enumerate() {
        let r = verify_thm1(&trunc, t, 0.25, &LipschitzFunction::Norm, N, RngStreamSpec::new(41, 1 + i as u64), &settings)
            .unwrap();
        // K(1) = 1 + 3 g_{1/4}(1/4); H_1(t) = 8t up to t = 1/8, sqrt(8t) after.
        let h1 = if t <= 0.125 { 8.0 * t } else { (8.0 * t).sqrt() };
        let closed = (1.0 + 3.0 * g_oracle(0.25, 0.25)) * h1;
        let c = r.checks.iter().find(|c| c.name == "median-closed-form").unwrap();
        ok &= rel(c.bound.unwrap(), closed) < 1e-10;
        match all_pass(&r, &["median-refined", "median-closed-form"]) {
            Ok(s) => lines.push(s),
            Err(e) => {
                ok = false;
                lines.push(e);
            }
        }
    }
    report(4, ok, lines.join(" | "));
}

/// Order-statistic interval for the median of `|X_1|` from an independent batch.
fn sample_stable_norm_median(family: &levyconc::measure_file::Family) -> MedianCi {
    let levyconc::measure_file::FamilyModel::Stable(fam) = &family.model else {
        unreachable!()
    };
    let pool = Pool::new(0).unwrap();
    let batch = levyconc_core::simulate::sample_stable(fam, 1.0, N, RngStreamSpec::new(42, 0), &pool).unwrap();
    empirical_median_ci(&batch, &LipschitzFunction::Norm, LEVEL).unwrap()
}

#[test]
fn criterion_05_concentration_around_truncated_mean() {
    let pool = Pool::new(0).unwrap();
    let settings = Settings::new(&pool);
    let checks = ["upper-tail", "lower-tail", "curve-1", "curve-2", "curve-3", "curve-4", "curve-5"];
    let cauchy = MeasureSpec::stable(1.0, 1.0).build().unwrap();
    let trunc = MeasureSpec::truncated_stable(1.0, 1.0, 1.0).build().unwrap();
    let mut lines = Vec::new();
    let mut ok = true;
    let mut stream = 0;
    for q in [0.1, 0.2] {
        for (fam, t) in [(&cauchy, 1.0), (&trunc, 0.02)] {
            let r =
                verify_thm2(fam, t, q, &LipschitzFunction::Norm, N, RngStreamSpec::new(51, stream), &settings).unwrap();
            stream += 1;
            let upper = r.checks.iter().find(|c| c.name == "upper-tail").unwrap();
            ok &= upper.bound == Some(q);
            match all_pass(&r, &checks) {
                Ok(_) => lines.push(format!(
                    "{} q={q}: exceedance {:?} (99% upper {:?}) <= {q}, curve ok",
                    r.family,
                    upper.empirical.unwrap(),
                    upper.ci.unwrap().1
                )),
                Err(e) => {
                    ok = false;
                    lines.push(e);
                }
            }
        }
    }
    report(5, ok, lines.join(" | "));
}

#[test]
fn criterion_06_concentration_around_mean() {
    let pool = Pool::new(0).unwrap();
    let settings = Settings::new(&pool);
    let trunc = MeasureSpec::truncated_stable(1.5, 1.0, 1.0).build().unwrap();
    let mut lines = Vec::new();
    let mut ok = true;
    for (i, q) in [0.1, 0.2].into_iter().enumerate() {
        let r =
            verify_thm3(&trunc, 0.05, q, &LipschitzFunction::Norm, N, RngStreamSpec::new(61, i as u64), &settings).unwrap();
        match all_pass(&r, &["upper-tail", "lower-tail"]) {
            Ok(s) => lines.push(format!("q={q}: {s}")),
            Err(e) => {
                ok = false;
                lines.push(e);
            }
        }
    }
    report(6, ok, lines.join(" | "));
}

#[test]
fn criterion_07_mean_sandwich() {
    let alpha = 1.5;
    let t = 0.125;
    let sf = stable_sf(alpha, 1.0);
    // V(x)/x^2 + M(x)/x = 2K x^-a (1/(2-a) + 1/(a-1)) = 1/t.
    let oracle = (2.0 * t * (1.0 / (2.0 - alpha) + 1.0 / (alpha - 1.0))).powf(1.0 / alpha);
    let x0 = x0_mr(&sf, t).unwrap();
    let mut ok = (oracle - 1.0).abs() < 1e-15 && (x0 - oracle).abs() < 1e-9;

    let pool = Pool::new(0).unwrap();
    let settings = Settings::new(&pool);
    let fam = MeasureSpec::stable(alpha, 1.0).build().unwrap();
    let r = verify_mr(&fam, t, N, RngStreamSpec::new(71, 0), &settings).unwrap();
    let mean = r.checks[0].empirical.unwrap();
    ok &= (0.25..=1.25).contains(&mean);
    let mc = all_pass(&r, &["mean-lower", "mean-upper", "h-ordering"]);
    ok &= mc.is_ok();

    let k = sf.k_constant(&sf.default_grid()).unwrap();
    let tsf = trunc_sf(alpha, 1.0, 1.0);
    let tk = tsf.k_constant(&tsf.default_grid()).unwrap();
    let mut grid_ok = true;
    for i in 0..16 {
        let t = 1e-3 * 2f64.powi(i);
        grid_ok &= mean_sandwich(&sf, t, k).unwrap().h_ordering_holds();
        grid_ok &= mean_sandwich(&tsf, t, tk).unwrap().h_ordering_holds();
    }
    ok &= grid_ok;
    report(
        7,
        ok,
        format!(
            "x0 = {x0:?} (oracle {oracle:?}); MC mean {mean:.4} in [0.25, 1.25]; h-ordering on grid {grid_ok}; {}",
            mc.unwrap_or_else(|e| e)
        ),
    );
}

#[test]
fn criterion_08_simulation_soundness() {
    let pool = Pool::new(0).unwrap();
    let fam = TruncatedStableFamily::new(1.0, 1.0, 1.0).unwrap();
    let sf = trunc_sf(1.0, 1.0, 1.0);
    let (r, t) = (0.5, 0.1);
    // nu_bar(x) = 2K (1/x - 1/M) on (0, M).
    let p = t * 2.0 * (1.0 / r - 1.0);
    let z = sample_compound_tail(&sf, r, t, N, RngStreamSpec::new(81, 0), &pool).unwrap();
    let frac = z.values.iter().filter(|&&x| x != 0.0).count() as f64 / N as f64;
    let sigma = (p * (1.0 - p) / N as f64).sqrt();
    let mut ok = frac <= p + 3.0 * sigma;
    let tail_line = format!("P(Z != 0) = {frac:.5} <= t nu_bar(R) + 3 sigma = {:.5}", p + 3.0 * sigma);

    let y = sample_truncated_small(&sf, r, t, N, RngStreamSpec::new(81, 1), EpsilonPolicy::default(), &pool).unwrap();
    let n = y.len() as f64;
    let mean = y.values.iter().sum::<f64>() / n;
    let sq: Vec<f64> = y.values.iter().map(|x| x * x).collect();
    let m2 = sq.iter().sum::<f64>() / n;
    let var2 = sq.iter().map(|s| (s - m2) * (s - m2)).sum::<f64>() / (n - 1.0);
    let hw = 2.576 * (var2 / n).sqrt();
    // V(R) = 2K R^(2-a)/(2-a) = 2R; E Y = 0 by symmetry.
    let target = t * 2.0 * r;
    let eps = y.bias.epsilon.unwrap();
    let eps_bias = t * 2.0 * eps;
    ok &= (m2 - target).abs() <= hw + eps_bias;
    ok &= (fam.v(r) - 2.0 * r).abs() < 1e-15;
    report(
        8,
        ok,
        format!(
            "{tail_line}; E|Y|^2 = {m2:.6} vs tV(R) = {target:.6} (CI half-width {hw:.2e}, eps bias {eps_bias:.2e}, mean {mean:.2e})"
        ),
    );
}

fn suite_csv(workers: &str) -> (i32, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let code = cli::run(
        ["levyconc", "verify", "--suite", "default", "--n", "2000", "--seed", "9", "--workers", workers],
        &mut out,
        &mut err,
    );
    (code, String::from_utf8(out).unwrap())
}

#[test]
fn criterion_09_determinism_across_workers() {
    let runs: Vec<(i32, String)> = ["1", "2", "4", "4"].iter().map(|w| suite_csv(w)).collect();
    let identical = runs.windows(2).all(|w| w[0].1 == w[1].1);
    let codes: Vec<i32> = runs.iter().map(|r| r.0).collect();
    let rows = runs[0].1.lines().count() - 1;
    let ok = identical && rows > 0 && codes.iter().all(|&c| c == cli::EXIT_OK);
    report(9, ok, format!("{rows} rows, byte-identical for workers 1/2/4 and repeat: {identical}; exit codes {codes:?}"));
}

#[test]
fn criterion_10_forced_failure() {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let code = cli::run(
        [
            "levyconc", "verify", "--theorem", "thm1", "--family", "stable", "--alpha", "1", "--t", "1", "--c", "0.25",
            "--n", "10000", "--bound-scale", "0.01",
        ],
        &mut out,
        &mut err,
    );
    let csv = String::from_utf8(out).unwrap();
    let fails = csv.lines().skip(1).filter(|l| l.contains(",FAIL,")).count();
    let ok = code == cli::EXIT_VERIFY_FAIL && fails > 0;
    report(10, ok, format!("exit code {code}, {fails} FAIL rows"));
}
