//! Levy measures and their radial functionals.
//!
//! A measure is stored as a product of a direction part and a radial part:
//! `nu(dx) = sigma(du) mu(dr)`. In one dimension the direction part is the
//! pair of half-line weights `(w-, w+)`; in `d >= 2` it is a multiple of the
//! uniform measure on the sphere. All radial functionals therefore reduce to
//! one-dimensional integrals against `mu`, scaled by the total direction mass.

use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::error::{invalid, Error, Result};
use crate::quad::{integrate_radial, Tolerance};

/// Direction part of a Levy measure.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Directions {
    /// One dimension: weights of the negative and positive half-lines.
    Line { neg: f64, pos: f64 },
    /// `d >= 2`, uniform on the sphere with total mass `sigma(S^{d-1})`.
    Sphere { dim: usize, mass: f64 },
}

impl Directions {
    pub fn symmetric_line(weight: f64) -> Self {
        Directions::Line {
            neg: weight,
            pos: weight,
        }
    }

    pub fn dim(&self) -> usize {
        match *self {
            Directions::Line { .. } => 1,
            Directions::Sphere { dim, .. } => dim,
        }
    }

    /// Total spherical mass `sigma(S^{d-1})` (`w- + w+` on the line).
    pub fn total(&self) -> f64 {
        match *self {
            Directions::Line { neg, pos } => neg + pos,
            Directions::Sphere { mass, .. } => mass,
        }
    }

    /// `w+ - w-` on the line; zero for the sphere.
    pub fn imbalance(&self) -> f64 {
        match *self {
            Directions::Line { neg, pos } => pos - neg,
            Directions::Sphere { .. } => 0.0,
        }
    }

    pub fn is_symmetric(&self) -> bool {
        self.imbalance() == 0.0
    }

    fn validate(&self) -> Result<()> {
        match *self {
            Directions::Line { neg, pos } => {
                if !(neg >= 0.0 && pos >= 0.0 && neg.is_finite() && pos.is_finite()) {
                    return Err(invalid("half-line weights must be finite and nonnegative"));
                }
                if neg + pos <= 0.0 {
                    return Err(invalid("half-line weights must not both vanish"));
                }
            }
            Directions::Sphere { dim, mass } => {
                if dim < 2 {
                    return Err(invalid("spherical direction part needs dim >= 2"));
                }
                if !(mass > 0.0 && mass.is_finite()) {
                    return Err(invalid("spherical mass must be positive and finite"));
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Atom {
    pub radius: f64,
    pub weight: f64,
}

/// Radial parts with closed-form functionals.
#[derive(Debug, Clone, PartialEq)]
pub enum ClosedForm {
    /// `mu(dr) = r^{-1-alpha} 1{r <= cutoff} dr`; no cutoff is the stable case.
    PowerLaw { alpha: f64, cutoff: Option<f64> },
    /// `mu = sum_i weight_i delta_{radius_i}`.
    Atoms(Vec<Atom>),
}

/// A user-supplied radial density `rho(r)` on `(0, r_max)`.
#[derive(Clone)]
pub struct RadialDensity {
    density: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    r_max: f64,
}

impl RadialDensity {
    pub fn new<F>(density: F, r_max: f64) -> Result<Self>
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        if !(r_max > 0.0) {
            return Err(invalid("r_max must be positive (possibly infinite)"));
        }
        Ok(RadialDensity {
            density: Arc::new(density),
            r_max,
        })
    }

    pub fn r_max(&self) -> f64 {
        self.r_max
    }

    #[inline]
    pub fn eval(&self, r: f64) -> f64 {
        if r <= 0.0 || r > self.r_max {
            0.0
        } else {
            (self.density)(r)
        }
    }
}

impl fmt::Debug for RadialDensity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("RadialDensity")
            .field("r_max", &self.r_max)
            .finish_non_exhaustive()
    }
}

#[derive(Debug, Clone)]
pub enum RadialPart {
    ClosedForm(ClosedForm),
    Numeric(RadialDensity),
}

/// Levy measure plus drift `b`.
#[derive(Debug, Clone)]
pub struct LevyMeasure {
    drift: Vec<f64>,
    directions: Directions,
    radial: RadialPart,
}

impl LevyMeasure {
    pub fn new(drift: Vec<f64>, directions: Directions, radial: RadialPart) -> Result<Self> {
        directions.validate()?;
        if drift.len() != directions.dim() {
            return Err(invalid("drift length must equal the dimension"));
        }
        if drift.iter().any(|b| !b.is_finite()) {
            return Err(invalid("drift must be finite"));
        }
        match &radial {
            RadialPart::ClosedForm(ClosedForm::PowerLaw { alpha, cutoff }) => {
                if !(*alpha > 0.0 && *alpha < 2.0) {
                    return Err(invalid("alpha must lie strictly inside (0, 2)"));
                }
                if let Some(m) = cutoff {
                    if !(*m > 0.0 && m.is_finite()) {
                        return Err(invalid("truncation level must be positive and finite"));
                    }
                }
            }
            RadialPart::ClosedForm(ClosedForm::Atoms(atoms)) => {
                if atoms.is_empty() {
                    return Err(invalid("atomic radial part needs at least one atom"));
                }
                if atoms
                    .iter()
                    .any(|a| !(a.radius > 0.0 && a.radius.is_finite() && a.weight > 0.0 && a.weight.is_finite()))
                {
                    return Err(invalid("atoms need positive finite radius and weight"));
                }
            }
            RadialPart::Numeric(_) => {}
        }
        Ok(LevyMeasure {
            drift,
            directions,
            radial,
        })
    }

    pub fn dim(&self) -> usize {
        self.directions.dim()
    }

    pub fn drift(&self) -> &[f64] {
        &self.drift
    }

    pub fn directions(&self) -> Directions {
        self.directions
    }

    pub fn radial(&self) -> &RadialPart {
        &self.radial
    }

    pub fn with_drift(mut self, drift: Vec<f64>) -> Result<Self> {
        if drift.len() != self.dim() {
            return Err(invalid("drift length must equal the dimension"));
        }
        self.drift = drift;
        Ok(self)
    }

    /// Symmetric law: balanced directions and zero drift.
    pub fn is_symmetric(&self) -> bool {
        self.directions.is_symmetric() && self.drift.iter().all(|&b| b == 0.0)
    }

    /// Whether `nu` has finite total mass (compound Poisson).
    pub fn is_finite_activity(&self) -> bool {
        matches!(self.radial, RadialPart::ClosedForm(ClosedForm::Atoms(_)))
    }

    /// Radius setting the default grids: the truncation level, the geometric
    /// middle of the atoms, or `r_max` of a numeric density.
    pub fn characteristic_scale(&self) -> f64 {
        match &self.radial {
            RadialPart::ClosedForm(ClosedForm::PowerLaw { cutoff, .. }) => cutoff.unwrap_or(1.0),
            RadialPart::ClosedForm(ClosedForm::Atoms(atoms)) => {
                let lo = atoms.iter().map(|a| a.radius).fold(f64::INFINITY, f64::min);
                let hi = atoms.iter().map(|a| a.radius).fold(0.0, f64::max);
                libm::sqrt(lo * hi)
            }
            RadialPart::Numeric(d) => {
                if d.r_max.is_finite() {
                    d.r_max
                } else {
                    1.0
                }
            }
        }
    }
}

/// Logarithmically spaced radii `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogGrid {
    pub lo: f64,
    pub hi: f64,
    pub points: usize,
}

impl LogGrid {
    pub fn new(lo: f64, hi: f64, points: usize) -> Result<Self> {
        let g = LogGrid { lo, hi, points };
        g.validate()?;
        Ok(g)
    }

    fn validate(&self) -> Result<()> {
        if self.points < 2 {
            return Err(invalid("log grid needs at least two points"));
        }
        if !(self.lo > 0.0 && self.hi > self.lo && self.hi.is_finite()) {
            return Err(invalid("log grid needs 0 < lo < hi < inf"));
        }
        Ok(())
    }

    pub fn iter(&self) -> impl Iterator<Item = f64> + '_ {
        let (a, b) = (libm::log(self.lo), libm::log(self.hi));
        let n = self.points;
        (0..n).map(move |i| {
            if i + 1 == n {
                self.hi
            } else {
                libm::exp(a + (b - a) * i as f64 / (n - 1) as f64)
            }
        })
    }
}

// Radial functionals per unit direction mass.

fn power_second(alpha: f64, cutoff: Option<f64>, r: f64) -> f64 {
    let r = cutoff.map_or(r, |m| r.min(m));
    libm::pow(r, 2.0 - alpha) / (2.0 - alpha)
}

fn power_tail_mass(alpha: f64, cutoff: Option<f64>, r: f64) -> f64 {
    match cutoff {
        Some(m) if r >= m => 0.0,
        Some(m) => (libm::pow(r, -alpha) - libm::pow(m, -alpha)) / alpha,
        None => libm::pow(r, -alpha) / alpha,
    }
}

/// `int_a^b r^{-alpha} dr` with `b` possibly infinite.
fn power_first(alpha: f64, a: f64, b: f64) -> f64 {
    if b <= a {
        return 0.0;
    }
    if alpha == 1.0 {
        return if b.is_finite() { libm::log(b / a) } else { f64::INFINITY };
    }
    if !b.is_finite() {
        return if alpha > 1.0 {
            libm::pow(a, 1.0 - alpha) / (alpha - 1.0)
        } else {
            f64::INFINITY
        };
    }
    (libm::pow(b, 1.0 - alpha) - libm::pow(a, 1.0 - alpha)) / (1.0 - alpha)
}

fn power_tail_moment(alpha: f64, cutoff: Option<f64>, r: f64) -> f64 {
    match cutoff {
        Some(m) if r >= m => 0.0,
        Some(m) => power_first(alpha, r, m),
        None => power_first(alpha, r, f64::INFINITY),
    }
}

fn power_shell(alpha: f64, cutoff: Option<f64>, a: f64, b: f64) -> f64 {
    let b = cutoff.map_or(b, |m| b.min(m));
    power_first(alpha, a, b)
}

const MEMO_WIDTH: f64 = 0.5;

/// Cumulative radial integrals of a numeric density on log-spaced nodes.
#[derive(Debug)]
struct Memo {
    log_lo: f64,
    nodes: Vec<f64>,
    second: Vec<f64>,
    tail_mass: Vec<f64>,
    tail_moment: Vec<f64>,
    first_from_lo: Vec<f64>,
}

/// Cached evaluators for `V`, `M`, `nu_bar` and the first-moment shells.
///
/// Immutable after construction; numeric densities get their memo tables
/// filled in [`ScaleFunctions::new`].
#[derive(Debug, Clone)]
pub struct ScaleFunctions {
    measure: LevyMeasure,
    tol: Tolerance,
    grid_lo: f64,
    grid_hi: f64,
    memo: Option<Arc<Memo>>,
}

impl ScaleFunctions {
    pub fn new(measure: LevyMeasure) -> Result<Self> {
        Self::with_tolerance(measure, Tolerance::default())
    }

    pub fn with_tolerance(measure: LevyMeasure, tol: Tolerance) -> Result<Self> {
        let scale = measure.characteristic_scale();
        let mut sf = ScaleFunctions {
            measure,
            tol,
            grid_lo: scale * 1e-8,
            grid_hi: scale * 1e8,
            memo: None,
        };
        if let RadialPart::Numeric(d) = &sf.measure.radial {
            let d = d.clone();
            sf.check_integrability(&d)?;
            sf.memo = Some(Arc::new(sf.build_memo(&d)?));
        }
        Ok(sf)
    }

    pub fn measure(&self) -> &LevyMeasure {
        &self.measure
    }

    pub fn tolerance(&self) -> Tolerance {
        self.tol
    }

    pub fn scale(&self) -> f64 {
        self.measure.characteristic_scale()
    }

    /// Grid used for the constants when none is given: 400 points on
    /// `[1e-8, 1e8]` times the characteristic scale.
    pub fn default_grid(&self) -> LogGrid {
        LogGrid {
            lo: self.grid_lo,
            hi: self.grid_hi,
            points: 400,
        }
    }

    fn check_integrability(&self, d: &RadialDensity) -> Result<()> {
        let v1 = integrate_radial(|r| r * r * d.eval(r), 0.0, 1.0, self.tol)?;
        let n1 = integrate_radial(|r| d.eval(r), 1.0, d.r_max.max(1.0), self.tol)?;
        if !v1.is_finite() || !n1.is_finite() {
            return Err(invalid("numeric density violates int (r^2 ^ 1) mu(dr) < inf"));
        }
        // No atom at the origin: V must fall towards zero.
        let mut prev = v1;
        for k in 1..=6 {
            let eps = libm::pow(10.0, -(2 * k) as f64);
            let v = integrate_radial(|r| r * r * d.eval(r), 0.0, eps, self.tol)?;
            if v > prev * (1.0 + 1e-12) {
                return Err(invalid("V is not monotone near the origin"));
            }
            prev = v;
        }
        if v1 > 0.0 && prev >= v1 * (1.0 - 1e-6) {
            return Err(invalid("V(eps) does not vanish as eps -> 0"));
        }
        Ok(())
    }

    fn build_memo(&self, d: &RadialDensity) -> Result<Memo> {
        let log_lo = libm::log(self.grid_lo);
        let log_hi = libm::log(self.grid_hi);
        let count = libm::ceil((log_hi - log_lo) / MEMO_WIDTH) as usize + 1;
        let nodes: Vec<f64> = (0..count)
            .map(|i| libm::exp(log_lo + MEMO_WIDTH * i as f64))
            .collect();
        let rmax = d.r_max;
        let clip = |a: f64, b: f64| (a.min(rmax), b.min(rmax));
        let seg = |g: &dyn Fn(f64) -> f64, a: f64, b: f64| -> Result<f64> {
            let (a, b) = clip(a, b);
            if b <= a {
                Ok(0.0)
            } else {
                integrate_radial(g, a, b, self.tol)
            }
        };
        let f2 = |r: f64| r * r * d.eval(r);
        let f0 = |r: f64| d.eval(r);
        let f1 = |r: f64| r * d.eval(r);

        let mut second = vec![0.0; count];
        second[0] = seg(&f2, 0.0, nodes[0])?;
        let mut first_from_lo = vec![0.0; count];
        for i in 1..count {
            second[i] = second[i - 1] + seg(&f2, nodes[i - 1], nodes[i])?;
            first_from_lo[i] = first_from_lo[i - 1] + seg(&f1, nodes[i - 1], nodes[i])?;
        }
        let mut tail_mass = vec![0.0; count];
        let mut tail_moment = vec![0.0; count];
        let top = nodes[count - 1];
        if rmax > top {
            tail_mass[count - 1] = integrate_radial(f0, top, rmax, self.tol)?;
            tail_moment[count - 1] = integrate_radial(f1, top, rmax, self.tol)?;
        }
        for i in (0..count - 1).rev() {
            tail_mass[i] = tail_mass[i + 1] + seg(&f0, nodes[i], nodes[i + 1])?;
            tail_moment[i] = tail_moment[i + 1] + seg(&f1, nodes[i], nodes[i + 1])?;
        }
        Ok(Memo {
            log_lo,
            nodes,
            second,
            tail_mass,
            tail_moment,
            first_from_lo,
        })
    }

    /// Index `i` with `nodes[i] <= r < nodes[i+1]`, when inside the table.
    fn memo_slot(memo: &Memo, r: f64) -> Option<usize> {
        let n = memo.nodes.len();
        if r < memo.nodes[0] || r >= memo.nodes[n - 1] {
            return None;
        }
        let i = libm::floor((libm::log(r) - memo.log_lo) / MEMO_WIDTH) as usize;
        let i = i.min(n - 2);
        // Guard against rounding in the log.
        if memo.nodes[i] > r {
            Some(i.saturating_sub(1))
        } else if memo.nodes[i + 1] <= r {
            Some(i + 1)
        } else {
            Some(i)
        }
    }

    fn numeric_piece(&self, d: &RadialDensity, power: i32, a: f64, b: f64) -> Result<f64> {
        let (a, b) = (a.min(d.r_max), b.min(d.r_max));
        if b <= a {
            return Ok(0.0);
        }
        integrate_radial(|r| libm::pow(r, power as f64) * d.eval(r), a, b, self.tol)
    }

    fn radial_second(&self, r: f64) -> Result<f64> {
        match &self.measure.radial {
            RadialPart::ClosedForm(ClosedForm::PowerLaw { alpha, cutoff }) => {
                Ok(power_second(*alpha, *cutoff, r))
            }
            RadialPart::ClosedForm(ClosedForm::Atoms(atoms)) => Ok(atoms
                .iter()
                .filter(|a| a.radius <= r)
                .map(|a| a.weight * a.radius * a.radius)
                .sum()),
            RadialPart::Numeric(d) => {
                let memo = self.memo.as_ref().expect("numeric measure has a memo");
                match Self::memo_slot(memo, r) {
                    Some(i) => Ok(memo.second[i] + self.numeric_piece(d, 2, memo.nodes[i], r)?),
                    None if r < memo.nodes[0] => self.numeric_piece(d, 2, 0.0, r),
                    None => {
                        let n = memo.nodes.len();
                        Ok(memo.second[n - 1] + self.numeric_piece(d, 2, memo.nodes[n - 1], r)?)
                    }
                }
            }
        }
    }

    fn radial_tail_mass(&self, r: f64) -> Result<f64> {
        match &self.measure.radial {
            RadialPart::ClosedForm(ClosedForm::PowerLaw { alpha, cutoff }) => {
                Ok(power_tail_mass(*alpha, *cutoff, r))
            }
            RadialPart::ClosedForm(ClosedForm::Atoms(atoms)) => Ok(atoms
                .iter()
                .filter(|a| a.radius > r)
                .map(|a| a.weight)
                .sum()),
            RadialPart::Numeric(d) => {
                let memo = self.memo.as_ref().expect("numeric measure has a memo");
                match Self::memo_slot(memo, r) {
                    Some(i) => {
                        Ok(self.numeric_piece(d, 0, r, memo.nodes[i + 1])? + memo.tail_mass[i + 1])
                    }
                    None if r < memo.nodes[0] => {
                        Ok(self.numeric_piece(d, 0, r, memo.nodes[0])? + memo.tail_mass[0])
                    }
                    None => self.numeric_piece(d, 0, r, f64::INFINITY),
                }
            }
        }
    }

    fn radial_tail_moment(&self, r: f64) -> Result<f64> {
        match &self.measure.radial {
            RadialPart::ClosedForm(ClosedForm::PowerLaw { alpha, cutoff }) => {
                Ok(power_tail_moment(*alpha, *cutoff, r))
            }
            RadialPart::ClosedForm(ClosedForm::Atoms(atoms)) => Ok(atoms
                .iter()
                .filter(|a| a.radius > r)
                .map(|a| a.weight * a.radius)
                .sum()),
            RadialPart::Numeric(d) => {
                let memo = self.memo.as_ref().expect("numeric measure has a memo");
                match Self::memo_slot(memo, r) {
                    Some(i) => {
                        Ok(self.numeric_piece(d, 1, r, memo.nodes[i + 1])? + memo.tail_moment[i + 1])
                    }
                    None if r < memo.nodes[0] => {
                        Ok(self.numeric_piece(d, 1, r, memo.nodes[0])? + memo.tail_moment[0])
                    }
                    None => self.numeric_piece(d, 1, r, f64::INFINITY),
                }
            }
        }
    }

    /// `int_{(a, b]} r mu(dr)`.
    fn radial_shell(&self, a: f64, b: f64) -> Result<f64> {
        if b <= a {
            return Ok(0.0);
        }
        match &self.measure.radial {
            RadialPart::ClosedForm(ClosedForm::PowerLaw { alpha, cutoff }) => {
                Ok(power_shell(*alpha, *cutoff, a, b))
            }
            RadialPart::ClosedForm(ClosedForm::Atoms(atoms)) => Ok(atoms
                .iter()
                .filter(|x| x.radius > a && x.radius <= b)
                .map(|x| x.weight * x.radius)
                .sum()),
            RadialPart::Numeric(d) => {
                let memo = self.memo.as_ref().expect("numeric measure has a memo");
                match (Self::memo_slot(memo, a), Self::memo_slot(memo, b)) {
                    (Some(i), Some(j)) if i < j => {
                        let head = self.numeric_piece(d, 1, a, memo.nodes[i + 1])?;
                        let mid = memo.first_from_lo[j] - memo.first_from_lo[i + 1];
                        let tail = self.numeric_piece(d, 1, memo.nodes[j], b)?;
                        Ok(head + mid + tail)
                    }
                    _ => self.numeric_piece(d, 1, a, b),
                }
            }
        }
    }

    fn check_radius(r: f64) -> Result<()> {
        if r > 0.0 && !r.is_nan() {
            Ok(())
        } else {
            Err(Error::Domain {
                what: "radius R > 0",
                value: r,
            })
        }
    }

    /// `V(R) = int_{|x| <= R} |x|^2 nu(dx)`.
    pub fn v(&self, r: f64) -> Result<f64> {
        Self::check_radius(r)?;
        Ok(self.measure.directions.total() * self.radial_second(r)?)
    }

    /// `nu_bar(R) = nu(|x| > R)`.
    pub fn nu_bar(&self, r: f64) -> Result<f64> {
        Self::check_radius(r)?;
        Ok(self.measure.directions.total() * self.radial_tail_mass(r)?)
    }

    /// `M(R) = int_{|x| > R} |x| nu(dx)`; `+inf` when the mean is infinite.
    pub fn m_tail(&self, r: f64) -> Result<f64> {
        Self::check_radius(r)?;
        Ok(self.measure.directions.total() * self.radial_tail_moment(r)?)
    }

    /// Coordinate-wise `int_{a < |y| <= b} y nu(dy)`.
    ///
    /// Exactly zero for balanced half-line weights and for spherical measures.
    pub fn shell_first_moment(&self, a: f64, b: f64) -> Result<Vec<f64>> {
        if !(a >= 0.0) {
            return Err(Error::Domain {
                what: "shell inner radius >= 0",
                value: a,
            });
        }
        let mut out = vec![0.0; self.measure.dim()];
        let imbalance = self.measure.directions.imbalance();
        if imbalance != 0.0 && b > a {
            out[0] = imbalance * self.radial_shell(a, b)?;
        }
        Ok(out)
    }

    /// Smallest grid-certified `A` with `nu_bar(R) <= A V(R) / R^2`.
    pub fn a_constant(&self, grid: &LogGrid) -> Result<f64> {
        grid.validate()?;
        let mut sup = 0.0f64;
        for r in grid.iter() {
            let v = self.v(r)?;
            let nb = self.nu_bar(r)?;
            if nb == 0.0 {
                continue;
            }
            if v == 0.0 {
                return Ok(f64::INFINITY);
            }
            sup = sup.max(r * r * nb / v);
        }
        // Limits of the ratio at 0 and infinity for power laws.
        if let RadialPart::ClosedForm(ClosedForm::PowerLaw { alpha, .. }) = &self.measure.radial {
            sup = sup.max((2.0 - alpha) / alpha);
        }
        Ok(sup)
    }

    /// Smallest grid-certified `K` with `M(R) <= K V(R) / R`.
    pub fn k_constant(&self, grid: &LogGrid) -> Result<f64> {
        grid.validate()?;
        let mut sup = 0.0f64;
        for r in grid.iter() {
            let m = self.m_tail(r)?;
            if m.is_infinite() {
                return Ok(f64::INFINITY);
            }
            if m == 0.0 {
                continue;
            }
            let v = self.v(r)?;
            if v == 0.0 {
                return Ok(f64::INFINITY);
            }
            sup = sup.max(r * m / v);
        }
        if let RadialPart::ClosedForm(ClosedForm::PowerLaw { alpha, .. }) = &self.measure.radial {
            // Near the origin R M(R) / V(R) -> (2-alpha)/(alpha-1), or diverges for alpha <= 1.
            if *alpha <= 1.0 {
                return Ok(f64::INFINITY);
            }
            sup = sup.max((2.0 - alpha) / (alpha - 1.0));
        }
        Ok(sup)
    }
}
