//! Families with closed-form functionals.
//!
//! The closed forms here shadow the generic quadrature pipeline in
//! [`crate::measure`] and serve as its oracles in the tests.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::bounds::{bennett_exponent, g_c};
use crate::error::{invalid, Error, Result};
use crate::measure::{Atom, ClosedForm, Directions, LevyMeasure, RadialPart};
use crate::quad::{integrate, integrate_radial, integrate_split, Tolerance};

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 2.0 {
        Ok(())
    } else {
        Err(invalid("alpha must lie strictly inside (0, 2)"))
    }
}

fn check_positive(what: &str, x: f64) -> Result<()> {
    if x > 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(invalid(what))
    }
}

/// Strictly stable Levy measure `sigma(du) r^{-1-alpha} dr`.
///
/// In one dimension with `K` on both half-lines this is the density
/// `K / |x|^{1+alpha}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StableFamily {
    pub alpha: f64,
    pub directions: Directions,
}

impl StableFamily {
    pub fn new(alpha: f64, directions: Directions) -> Result<Self> {
        check_alpha(alpha)?;
        let fam = StableFamily { alpha, directions };
        fam.measure()?;
        Ok(fam)
    }

    /// One-dimensional symmetric, density `intensity / |x|^{1+alpha}`.
    pub fn symmetric(alpha: f64, intensity: f64) -> Result<Self> {
        Self::new(alpha, Directions::symmetric_line(intensity))
    }

    /// Rotation invariant in `dim >= 2` with spherical mass `mass`.
    pub fn spherical(alpha: f64, dim: usize, mass: f64) -> Result<Self> {
        Self::new(alpha, Directions::Sphere { dim, mass })
    }

    pub fn dim(&self) -> usize {
        self.directions.dim()
    }

    pub fn is_symmetric(&self) -> bool {
        self.directions.is_symmetric()
    }

    pub fn measure(&self) -> Result<LevyMeasure> {
        LevyMeasure::new(
            vec![0.0; self.directions.dim()],
            self.directions,
            RadialPart::ClosedForm(ClosedForm::PowerLaw {
                alpha: self.alpha,
                cutoff: None,
            }),
        )
    }

    fn mass(&self) -> f64 {
        self.directions.total()
    }

    pub fn v(&self, r: f64) -> f64 {
        self.mass() * libm::pow(r, 2.0 - self.alpha) / (2.0 - self.alpha)
    }

    pub fn nu_bar(&self, r: f64) -> f64 {
        self.mass() * libm::pow(r, -self.alpha) / self.alpha
    }

    pub fn m_tail(&self, r: f64) -> f64 {
        if self.alpha <= 1.0 {
            f64::INFINITY
        } else {
            self.mass() * libm::pow(r, 1.0 - self.alpha) / (self.alpha - 1.0)
        }
    }

    /// `h_c(t) = (sigma(S^{d-1}) t / ((2 - alpha) c))^{1/alpha}`.
    pub fn h(&self, c: f64, t: f64) -> f64 {
        libm::pow(self.mass() * t / ((2.0 - self.alpha) * c), 1.0 / self.alpha)
    }

    /// `A = (2 - alpha) / alpha`.
    pub fn a_constant(&self) -> f64 {
        (2.0 - self.alpha) / self.alpha
    }

    /// `K = (2 - alpha) / (alpha - 1)`, infinite for `alpha <= 1`.
    pub fn k_constant(&self) -> f64 {
        if self.alpha <= 1.0 {
            f64::INFINITY
        } else {
            (2.0 - self.alpha) / (self.alpha - 1.0)
        }
    }

    /// `x0(t)`: `V/x^2 + M/x = sigma x^{-alpha} (1/(2-alpha) + 1/(alpha-1)) = 1/t`.
    pub fn x0(&self, t: f64) -> Result<f64> {
        let a = self.alpha;
        if a <= 1.0 {
            return Err(Error::InfiniteMean);
        }
        let coef = self.mass() * (1.0 / (2.0 - a) + 1.0 / (a - 1.0));
        Ok(libm::pow(coef * t, 1.0 / a))
    }

    /// Rate `lambda` in `E exp(i <u, X_1>) = exp(-lambda |u|^alpha)`.
    pub fn exponent_rate(&self) -> Result<f64> {
        Ok(self.mass() * cos_integral(self.alpha)? * abs_projection_moment(self.alpha, self.dim())?)
    }

    /// Distributional scale `(lambda t)^{1/alpha}` of `X_t`.
    pub fn scale_at(&self, t: f64) -> Result<f64> {
        Ok(libm::pow(self.exponent_rate()? * t, 1.0 / self.alpha))
    }
}

/// `C_alpha = int_0^inf (1 - cos r) r^{-1-alpha} dr`, by quadrature.
pub fn cos_integral(alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    let tol = Tolerance::with_rel(1e-12);
    let period = 2.0 * PI;
    let periods = 1024usize;
    let g = |r: f64| {
        let s = libm::sin(0.5 * r);
        2.0 * s * s * libm::pow(r, -1.0 - alpha)
    };
    let head = integrate_radial(g, 0.0, period, tol)?;
    let end = period * periods as f64;
    let body = integrate_split(&g, period, end, periods - 1, tol)?.value;
    // Tail by parts at a multiple of 2 pi, where sin vanishes and cos is 1.
    let s = 1.0 + alpha;
    let cos_tail = s * libm::pow(end, -s - 1.0) - s * (s + 1.0) * (s + 2.0) * libm::pow(end, -s - 3.0);
    let tail = libm::pow(end, -alpha) / alpha - cos_tail;
    Ok(head + body + tail)
}

/// `E |theta_1|^alpha` for `theta` uniform on the sphere `S^{d-1}`; 1 on the line.
pub fn abs_projection_moment(alpha: f64, dim: usize) -> Result<f64> {
    if dim <= 1 {
        return Ok(1.0);
    }
    let tol = Tolerance::with_rel(1e-12);
    let k = (dim - 2) as f64;
    let half = 0.5 * PI;
    let num = integrate(
        |p| libm::pow(libm::cos(p), alpha) * libm::pow(libm::sin(p), k),
        0.0,
        half,
        tol,
    )?
    .value;
    let den = integrate(|p| libm::pow(libm::sin(p), k), 0.0, half, tol)?.value;
    Ok(num / den)
}

/// One-dimensional symmetric stable measure truncated at `M`:
/// `nu(dx) = K |x|^{-1-alpha} 1{|x| <= M} dx`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TruncatedStableFamily {
    pub alpha: f64,
    pub intensity: f64,
    pub truncation: f64,
}

impl TruncatedStableFamily {
    pub fn new(alpha: f64, intensity: f64, truncation: f64) -> Result<Self> {
        check_alpha(alpha)?;
        check_positive("intensity must be positive", intensity)?;
        check_positive("truncation level must be positive", truncation)?;
        Ok(TruncatedStableFamily {
            alpha,
            intensity,
            truncation,
        })
    }

    pub fn measure(&self) -> Result<LevyMeasure> {
        LevyMeasure::new(
            vec![0.0],
            Directions::symmetric_line(self.intensity),
            RadialPart::ClosedForm(ClosedForm::PowerLaw {
                alpha: self.alpha,
                cutoff: Some(self.truncation),
            }),
        )
    }

    /// `V(R) = 2K min(R, M)^{2-alpha} / (2 - alpha)`.
    pub fn v(&self, r: f64) -> f64 {
        2.0 * self.intensity * libm::pow(r.min(self.truncation), 2.0 - self.alpha) / (2.0 - self.alpha)
    }

    /// `nu_bar(R) = (2K/alpha)(R^{-alpha} - M^{-alpha}) 1{R <= M}`.
    pub fn nu_bar(&self, r: f64) -> f64 {
        if r >= self.truncation {
            return 0.0;
        }
        2.0 * self.intensity / self.alpha
            * (libm::pow(r, -self.alpha) - libm::pow(self.truncation, -self.alpha))
    }

    /// `A = (2 - alpha) / alpha`.
    pub fn a_constant(&self) -> f64 {
        (2.0 - self.alpha) / self.alpha
    }

    /// Time `(2 - alpha) c M^alpha / 2K` at which `h_c` changes regime.
    pub fn switch_time(&self, c: f64) -> f64 {
        (2.0 - self.alpha) * c * libm::pow(self.truncation, self.alpha) / (2.0 * self.intensity)
    }

    /// Piecewise `h_c(t)`: power-`alpha` regime up to [`switch_time`](Self::switch_time),
    /// square-root regime after.
    pub fn trunc_h(&self, c: f64, t: f64) -> f64 {
        let (a, k, m) = (self.alpha, self.intensity, self.truncation);
        if t <= self.switch_time(c) {
            libm::pow(2.0 * k * t / ((2.0 - a) * c), 1.0 / a)
        } else {
            libm::sqrt(2.0 * k * libm::pow(m, 2.0 - a) * t / ((2.0 - a) * c))
        }
    }

    /// The `c` behind [`h_alpha`](Self::h_alpha): `alpha / 4(2 - alpha)`.
    pub fn h_alpha_c(&self) -> f64 {
        self.alpha / (4.0 * (2.0 - self.alpha))
    }

    /// `alpha M^alpha / 8K`.
    pub fn h_alpha_switch(&self) -> f64 {
        self.alpha * libm::pow(self.truncation, self.alpha) / (8.0 * self.intensity)
    }

    /// `H_alpha(t)`: `(8Kt/alpha)^{1/alpha}`, then `(8K M^{2-alpha} t / alpha)^{1/2}`.
    pub fn h_alpha(&self, t: f64) -> f64 {
        let (a, k, m) = (self.alpha, self.intensity, self.truncation);
        if t <= self.h_alpha_switch() {
            libm::pow(8.0 * k * t / a, 1.0 / a)
        } else {
            libm::sqrt(8.0 * k * libm::pow(m, 2.0 - a) * t / a)
        }
    }

    /// `C = 2K c_alpha^alpha / alpha`.
    pub fn big_c(&self) -> f64 {
        2.0 * self.intensity * libm::pow(c_alpha(self.alpha), self.alpha) / self.alpha
    }

    /// `C' = 2K M^{2-alpha} c_alpha^2 / alpha`.
    pub fn big_c_prime(&self) -> f64 {
        let ca = c_alpha(self.alpha);
        2.0 * self.intensity * libm::pow(self.truncation, 2.0 - self.alpha) * ca * ca / self.alpha
    }

    /// `Kt / ((2 - alpha) M^alpha)`.
    fn kappa(&self, t: f64) -> f64 {
        self.intensity * t / ((2.0 - self.alpha) * libm::pow(self.truncation, self.alpha))
    }

    /// `G_t(x)`; equal to 1 for `x <= M`.
    pub fn g_t(&self, t: f64, x: f64) -> f64 {
        if x <= self.truncation {
            return 1.0;
        }
        libm::exp(bennett_exponent(self.kappa(t), x / self.truncation - 1.0))
    }

    /// Tail bound `min{Ct/x^alpha, G_t(x)}` below `M c_alpha`,
    /// `min{C't/x^2, G_t(x)}` above, clamped to 1.
    pub fn trunc_tail_bound(&self, t: f64, x: f64) -> f64 {
        let power = if x <= self.truncation * c_alpha(self.alpha) {
            self.big_c() * t / libm::pow(x, self.alpha)
        } else {
            self.big_c_prime() * t / (x * x)
        };
        power.min(self.g_t(t, x)).min(1.0)
    }

    /// Two-case threshold: the minimum of the stable (or Brownian) regime
    /// value and the truncation-level value `[1 + g_{Kt/(2-alpha)M^alpha}(q/2)] M`.
    pub fn trunc_threshold(&self, q: f64, t: f64) -> Result<f64> {
        if !(q > 0.0 && q <= 1.0) {
            return Err(invalid("q must lie in (0, 1]"));
        }
        let (a, k, m) = (self.alpha, self.intensity, self.truncation);
        let ca = c_alpha(a);
        let switch = q * a * libm::pow(m, a) / (2.0 * k);
        let regime = if t <= switch {
            ca * libm::pow(2.0 * k * t / (q * a), 1.0 / a)
        } else {
            ca * libm::sqrt(2.0 * k * libm::pow(m, 2.0 - a) * t / (q * a))
        };
        let at_truncation = (1.0 + g_c(self.kappa(t), q / 2.0)?) * m;
        Ok(regime.min(at_truncation))
    }
}

/// `K(alpha) = 1 + 3 g_{alpha/4(2-alpha)}(1/4)`.
pub fn k_alpha(alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    Ok(1.0 + 3.0 * g_c(alpha / (4.0 * (2.0 - alpha)), 0.25)?)
}

/// `c_alpha = 1 + max(1, (1 + 2e) alpha / (2 (2 - alpha)))`.
pub fn c_alpha(alpha: f64) -> f64 {
    1.0 + f64::max(1.0, (1.0 + 2.0 * core::f64::consts::E) * alpha / (2.0 * (2.0 - alpha)))
}

/// Finite-activity measure: `rate` jumps per unit time with radii drawn from
/// `atoms` and directions from `directions`.
#[derive(Debug, Clone, PartialEq)]
pub struct CompoundPoissonFamily {
    pub rate: f64,
    /// `(radius, probability)` pairs; probabilities sum to 1.
    pub atoms: Vec<(f64, f64)>,
    pub directions: Directions,
    pub drift: Vec<f64>,
}

impl CompoundPoissonFamily {
    /// `directions` only fixes the dimension and the split between half-lines;
    /// it is normalised to unit mass.
    pub fn new(rate: f64, atoms: Vec<(f64, f64)>, directions: Directions, drift: Vec<f64>) -> Result<Self> {
        check_positive("rate must be positive", rate)?;
        let total: f64 = atoms.iter().map(|a| a.1).sum();
        if atoms.is_empty() || atoms.iter().any(|a| !(a.1 > 0.0)) || (total - 1.0).abs() > 1e-12 {
            return Err(invalid("atom probabilities must be positive and sum to 1"));
        }
        let fam = CompoundPoissonFamily {
            rate,
            atoms,
            directions,
            drift,
        };
        fam.measure()?;
        Ok(fam)
    }

    /// Symmetric one-dimensional jumps of a single size.
    pub fn symmetric_single(rate: f64, radius: f64) -> Result<Self> {
        Self::new(rate, vec![(radius, 1.0)], Directions::symmetric_line(0.5), vec![0.0])
    }

    pub fn measure(&self) -> Result<LevyMeasure> {
        let dirs = match self.directions {
            Directions::Line { neg, pos } => {
                let s = neg + pos;
                Directions::Line {
                    neg: neg / s,
                    pos: pos / s,
                }
            }
            Directions::Sphere { dim, .. } => Directions::Sphere { dim, mass: 1.0 },
        };
        let atoms = self
            .atoms
            .iter()
            .map(|&(radius, p)| Atom {
                radius,
                weight: self.rate * p,
            })
            .collect();
        LevyMeasure::new(
            self.drift.clone(),
            dirs,
            RadialPart::ClosedForm(ClosedForm::Atoms(atoms)),
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cauchy_rate_is_pi() {
        let fam = StableFamily::symmetric(1.0, 1.0).unwrap();
        assert!((fam.exponent_rate().unwrap() - PI).abs() < 1e-10);
    }

    #[test]
    fn cos_integral_matches_gamma_formula() {
        for alpha in [0.3, 0.5, 0.9, 1.2, 1.5, 1.9] {
            let expect = libm::tgamma(1.0 - alpha) * libm::cos(PI * alpha / 2.0) / alpha;
            let got = cos_integral(alpha).unwrap();
            assert!((got - expect).abs() < 1e-9 * expect.abs(), "{alpha}: {got} vs {expect}");
        }
    }

    #[test]
    fn projection_moment_matches_gamma_formula() {
        for d in [2usize, 3, 5] {
            for alpha in [0.5, 1.0, 1.5] {
                let df = d as f64;
                let expect = libm::tgamma(df / 2.0) * libm::tgamma((alpha + 1.0) / 2.0)
                    / (libm::sqrt(PI) * libm::tgamma((df + alpha) / 2.0));
                let got = abs_projection_moment(alpha, d).unwrap();
                assert!((got - expect).abs() < 1e-9, "d={d} alpha={alpha}: {got} vs {expect}");
            }
        }
    }

    #[test]
    fn truncated_regime_switch_is_continuous() {
        let fam = TruncatedStableFamily::new(1.0, 1.0, 1.0).unwrap();
        let ts = fam.switch_time(0.25);
        assert_eq!(ts, 0.125);
        let k = 1.0;
        let below = libm::pow(2.0 * k * ts / 0.25, 1.0);
        let above = libm::sqrt(2.0 * k * ts / 0.25);
        assert!((below - above).abs() < 1e-15);
        assert!((fam.trunc_h(0.25, 0.5) - 2.0).abs() < 1e-15);
    }

    #[test]
    fn c_alpha_small_alpha_is_two() {
        assert_eq!(c_alpha(1e-3), 2.0);
    }
}
