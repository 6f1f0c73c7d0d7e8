//! Measure definition files.
//!
//! A measure file is TOML with a flat set of keys:
//!
//! ```toml
//! family = "truncated-stable"   # stable | truncated-stable | compound-poisson
//! alpha = 1.0                   # stable index, stable families only
//! intensity = 1.0               # density K of the jump measure per unit surface
//! truncation = 1.0              # cutoff M, truncated-stable only
//! rate = 2.0                    # total jump rate, compound-poisson only
//! atoms = [[1.0, 0.5], [2.0, 0.5]]  # (radius, probability), compound-poisson only
//! dim = 1
//! drift = [0.0]
//! weights = [1.0, 1.0]          # (negative, positive) half-line multipliers, dim = 1
//! ```
//!
//! In one dimension the stable density is `K w_-/|x|^{1+alpha}` on the
//! negative half-line and `K w_+/|x|^{1+alpha}` on the positive one. In
//! `d >= 2` the direction measure is uniform with total mass `K |S^{d-1}|`.

use std::path::Path;

use levyconc_core::families::{CompoundPoissonFamily, StableFamily, TruncatedStableFamily};
use levyconc_core::measure::{Directions, LevyMeasure, ScaleFunctions};
use serde::{Deserialize, Serialize};

use crate::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum FamilyKind {
    Stable,
    TruncatedStable,
    CompoundPoisson,
}

fn default_intensity() -> f64 {
    1.0
}

fn default_dim() -> usize {
    1
}

/// Parsed measure file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeasureSpec {
    pub family: FamilyKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(default = "default_intensity")]
    pub intensity: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub truncation: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rate: Option<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub atoms: Vec<[f64; 2]>,
    #[serde(default = "default_dim")]
    pub dim: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub drift: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weights: Option<[f64; 2]>,
}

impl MeasureSpec {
    pub fn stable(alpha: f64, intensity: f64) -> Self {
        MeasureSpec {
            family: FamilyKind::Stable,
            alpha: Some(alpha),
            intensity,
            truncation: None,
            rate: None,
            atoms: Vec::new(),
            dim: 1,
            drift: None,
            weights: None,
        }
    }

    pub fn truncated_stable(alpha: f64, intensity: f64, truncation: f64) -> Self {
        MeasureSpec {
            family: FamilyKind::TruncatedStable,
            truncation: Some(truncation),
            ..Self::stable(alpha, intensity)
        }
    }

    pub fn compound_poisson(rate: f64, atoms: Vec<[f64; 2]>) -> Self {
        MeasureSpec {
            family: FamilyKind::CompoundPoisson,
            alpha: None,
            rate: Some(rate),
            atoms,
            ..Self::stable(1.0, 1.0)
        }
    }

    pub fn from_toml_str(text: &str) -> Result<Self, Error> {
        let spec: MeasureSpec = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        spec.build()?;
        Ok(spec)
    }

    pub fn from_path(path: &Path) -> Result<Self, Error> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("measure spec serializes")
    }

    fn require(&self, value: Option<f64>, key: &str) -> Result<f64, Error> {
        value.ok_or_else(|| Error::Config(format!("family {:?} needs `{key}`", self.family)))
    }

    fn forbid(&self, present: bool, key: &str) -> Result<(), Error> {
        if present {
            Err(Error::Config(format!("`{key}` does not apply to family {:?}", self.family)))
        } else {
            Ok(())
        }
    }

    fn line_directions(&self, scale: f64) -> Directions {
        let [neg, pos] = self.weights.unwrap_or([1.0, 1.0]);
        Directions::Line {
            neg: scale * neg,
            pos: scale * pos,
        }
    }

    /// Validates the spec and builds the family.
    pub fn build(&self) -> Result<Family, Error> {
        if self.dim == 0 {
            return Err(Error::Config("dim must be at least 1".into()));
        }
        self.forbid(self.dim > 1 && self.weights.is_some(), "weights (dim > 1)")?;
        let drift = self.drift.clone().unwrap_or_else(|| vec![0.0; self.dim]);
        if drift.len() != self.dim {
            return Err(Error::Config(format!("drift has {} entries, dim is {}", drift.len(), self.dim)));
        }
        let kind = match self.family {
            FamilyKind::Stable => {
                self.forbid(self.truncation.is_some(), "truncation")?;
                self.forbid(self.rate.is_some() || !self.atoms.is_empty(), "rate/atoms")?;
                let alpha = self.require(self.alpha, "alpha")?;
                let fam = if self.dim == 1 {
                    StableFamily::new(alpha, self.line_directions(self.intensity))?
                } else {
                    StableFamily::spherical(alpha, self.dim, self.intensity * sphere_area(self.dim))?
                };
                FamilyModel::Stable(fam)
            }
            FamilyKind::TruncatedStable => {
                self.forbid(self.rate.is_some() || !self.atoms.is_empty(), "rate/atoms")?;
                self.forbid(self.weights.is_some(), "weights")?;
                if self.dim != 1 {
                    return Err(Error::Config("truncated-stable is one-dimensional".into()));
                }
                let alpha = self.require(self.alpha, "alpha")?;
                let m = self.require(self.truncation, "truncation")?;
                FamilyModel::Truncated(TruncatedStableFamily::new(alpha, self.intensity, m)?)
            }
            FamilyKind::CompoundPoisson => {
                self.forbid(self.alpha.is_some(), "alpha")?;
                self.forbid(self.truncation.is_some(), "truncation")?;
                let rate = self.require(self.rate, "rate")?;
                if self.atoms.is_empty() {
                    return Err(Error::Config("compound-poisson needs `atoms`".into()));
                }
                let dirs = if self.dim == 1 {
                    self.line_directions(1.0)
                } else {
                    Directions::Sphere { dim: self.dim, mass: 1.0 }
                };
                let atoms = self.atoms.iter().map(|a| (a[0], a[1])).collect();
                FamilyModel::Compound(CompoundPoissonFamily::new(rate, atoms, dirs, drift.clone())?)
            }
        };
        let measure = kind.measure()?.with_drift(drift)?;
        Ok(Family {
            label: self.label(),
            model: kind,
            measure,
        })
    }

    /// Short identifier used in report rows.
    pub fn label(&self) -> String {
        let mut s = match self.family {
            FamilyKind::Stable => format!("stable(alpha={:?},K={:?}", self.alpha.unwrap_or(f64::NAN), self.intensity),
            FamilyKind::TruncatedStable => format!(
                "truncated-stable(alpha={:?},K={:?},M={:?}",
                self.alpha.unwrap_or(f64::NAN),
                self.intensity,
                self.truncation.unwrap_or(f64::NAN)
            ),
            FamilyKind::CompoundPoisson => format!("compound-poisson(rate={:?}", self.rate.unwrap_or(f64::NAN)),
        };
        if self.dim != 1 {
            s.push_str(&format!(",d={}", self.dim));
        }
        if let Some([neg, pos]) = self.weights {
            s.push_str(&format!(",w=[{neg:?};{pos:?}]"));
        }
        if let Some(drift) = &self.drift {
            if drift.iter().any(|&b| b != 0.0) {
                let parts: Vec<String> = drift.iter().map(|b| format!("{b:?}")).collect();
                s.push_str(&format!(",b=[{}]", parts.join(";")));
            }
        }
        s.push(')');
        s
    }
}

/// `|S^{d-1}| = 2 pi^{d/2} / Gamma(d/2)`.
pub fn sphere_area(dim: usize) -> f64 {
    let h = dim as f64 / 2.0;
    2.0 * std::f64::consts::PI.powf(h) / statrs::function::gamma::gamma(h)
}

#[derive(Debug, Clone, PartialEq)]
pub enum FamilyModel {
    Stable(StableFamily),
    Truncated(TruncatedStableFamily),
    Compound(CompoundPoissonFamily),
}

impl FamilyModel {
    fn measure(&self) -> levyconc_core::error::Result<LevyMeasure> {
        match self {
            FamilyModel::Stable(f) => f.measure(),
            FamilyModel::Truncated(f) => f.measure(),
            FamilyModel::Compound(f) => f.measure(),
        }
    }
}

/// A validated family with its measure.
#[derive(Debug, Clone)]
pub struct Family {
    pub label: String,
    pub model: FamilyModel,
    pub measure: LevyMeasure,
}

impl Family {
    pub fn scale_functions(&self) -> Result<ScaleFunctions, Error> {
        Ok(ScaleFunctions::new(self.measure.clone())?)
    }

    pub fn dim(&self) -> usize {
        self.measure.dim()
    }

    /// Symmetric jump measure and zero drift.
    pub fn is_centred(&self) -> bool {
        self.measure.is_symmetric()
    }

    pub fn truncated(&self) -> Option<&TruncatedStableFamily> {
        match &self.model {
            FamilyModel::Truncated(f) => Some(f),
            _ => None,
        }
    }
}
