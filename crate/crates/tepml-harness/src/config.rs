//! Study configuration, read from TOML. Unknown keys are rejected so a typo
//! cannot silently fall back to a default.

use crate::error::{HarnessError, Result};
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};
use tepml::{MaterialParams, PmlProfile, C64};
use tepml_fem::{Extent, TractionRecovery};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    /// Seed for every randomized part of a study.
    #[serde(default)]
    pub seed: u64,
    /// Report destination; `--out` overrides it, stdout when neither is set.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    #[serde(default)]
    pub material: MaterialConfig,
    #[serde(default)]
    pub geometry: GeometryConfig,
    #[serde(default)]
    pub discretization: DiscretizationConfig,
    pub study: StudyConfig,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MaterialConfig {
    pub rho: f64,
    pub lame_lambda: f64,
    pub lame_mu: f64,
    pub gamma: f64,
    pub eta: f64,
    pub kappa: f64,
    pub omega_re: f64,
    pub omega_im: f64,
}

impl Default for MaterialConfig {
    fn default() -> Self {
        Self { rho: 1.0, lame_lambda: 1.0, lame_mu: 1.0, gamma: 0.2, eta: 0.2, kappa: 1.0, omega_re: 2.0, omega_im: 0.0 }
    }
}

impl MaterialConfig {
    pub fn params(&self) -> Result<MaterialParams> {
        let p = MaterialParams {
            rho: self.rho,
            lame_lambda: self.lame_lambda,
            lame_mu: self.lame_mu,
            gamma: self.gamma,
            eta: self.eta,
            kappa: self.kappa,
            omega: C64::new(self.omega_re, self.omega_im),
        };
        p.validate().map_err(|e| HarnessError::Config(format!("material: {e}")))?;
        Ok(p)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GeometryConfig {
    /// Half-widths of the centred cuboid obstacle.
    pub obstacle_half: [f64; 3],
    /// Half-widths of B₁.
    pub l: [f64; 3],
    /// Layer thicknesses (the same on every axis).
    pub d: Vec<f64>,
    pub alpha0: Vec<f64>,
    pub zeta: f64,
    /// The ramp ends at l̄ = l + lbar_fraction·d.
    pub lbar_fraction: f64,
}

impl Default for GeometryConfig {
    fn default() -> Self {
        Self { obstacle_half: [0.4; 3], l: [1.0; 3], d: vec![1.0], alpha0: vec![1.0], zeta: 2.0, lbar_fraction: 0.5 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepAxis {
    D,
    Alpha0,
}

impl SweepAxis {
    pub fn name(self) -> &'static str {
        match self {
            SweepAxis::D => "d",
            SweepAxis::Alpha0 => "alpha0",
        }
    }
}

/// One point of a sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepPoint {
    pub d: f64,
    pub alpha0: f64,
}

impl GeometryConfig {
    /// The axis with more than one value; `d` when both are single.
    pub fn sweep_axis(&self) -> Result<SweepAxis> {
        match (self.d.len(), self.alpha0.len()) {
            (0, _) | (_, 0) => Err(HarnessError::Config("geometry.d and geometry.alpha0 need at least one value".into())),
            (nd, na) if nd > 1 && na > 1 => {
                Err(HarnessError::Config("exactly one of geometry.d, geometry.alpha0 may list several values".into()))
            }
            (_, na) if na > 1 => Ok(SweepAxis::Alpha0),
            _ => Ok(SweepAxis::D),
        }
    }

    /// Sweep points in increasing order of the swept value.
    pub fn sweep(&self) -> Result<Vec<SweepPoint>> {
        let axis = self.sweep_axis()?;
        let mut pts: Vec<SweepPoint> = match axis {
            SweepAxis::D => self.d.iter().map(|&d| SweepPoint { d, alpha0: self.alpha0[0] }).collect(),
            SweepAxis::Alpha0 => self.alpha0.iter().map(|&a| SweepPoint { d: self.d[0], alpha0: a }).collect(),
        };
        pts.sort_by(|a, b| a.d.total_cmp(&b.d).then(a.alpha0.total_cmp(&b.alpha0)));
        pts.dedup();
        for p in &pts {
            self.profile(*p)?;
        }
        Ok(pts)
    }

    pub fn profile(&self, p: SweepPoint) -> Result<PmlProfile> {
        if !(self.lbar_fraction > 0.0 && self.lbar_fraction < 1.0) {
            return Err(HarnessError::Config(format!("lbar_fraction {} outside (0, 1)", self.lbar_fraction)));
        }
        let lbar = std::array::from_fn(|j| self.l[j] + self.lbar_fraction * p.d);
        let prof = PmlProfile::new(self.l, [p.d; 3], lbar, p.alpha0, self.zeta)
            .map_err(|e| HarnessError::Config(format!("geometry at d = {}, alpha0 = {}: {e}", p.d, p.alpha0)))?;
        if (0..3).any(|j| !(self.obstacle_half[j] > 0.0 && self.obstacle_half[j] < self.l[j])) {
            return Err(HarnessError::Config("obstacle must sit strictly inside B1".into()));
        }
        Ok(prof)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExtentChoice {
    Octant,
    Full,
}

impl From<ExtentChoice> for Extent {
    fn from(e: ExtentChoice) -> Self {
        match e {
            ExtentChoice::Octant => Extent::Octant,
            ExtentChoice::Full => Extent::Full,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DiscretizationConfig {
    pub h: f64,
    /// Quadrature points per edge of ∂B₁ for the boundary potentials.
    pub n_per_edge: usize,
    pub extent: ExtentChoice,
    /// In-memory factor limit before spilling to a temporary file.
    pub memory_budget_mb: usize,
}

impl Default for DiscretizationConfig {
    fn default() -> Self {
        Self { h: 0.1, n_per_edge: 24, extent: ExtentChoice::Octant, memory_budget_mb: 1024 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RecoveryChoice {
    Variational,
    Averaged,
}

impl From<RecoveryChoice> for TractionRecovery {
    fn from(r: RecoveryChoice) -> Self {
        match r {
            RecoveryChoice::Variational => TractionRecovery::Variational,
            RecoveryChoice::Averaged => TractionRecovery::Averaged,
        }
    }
}

fn default_true() -> bool {
    true
}
fn default_rays() -> usize {
    8
}
fn default_ray_samples() -> usize {
    200
}
fn default_target_n() -> usize {
    8
}
fn default_fields() -> usize {
    200
}
fn default_recovery() -> RecoveryChoice {
    RecoveryChoice::Variational
}
fn default_zeta_grid() -> Vec<f64> {
    vec![1.5, 2.0, 3.0]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum StudyConfig {
    /// H¹(Ω₁) error of the truncated problem against the point source.
    Converge {
        #[serde(default)]
        source_column: usize,
        /// Repeat the sweep with α₀ = 0.
        #[serde(default = "default_true")]
        control: bool,
        /// Also solve with the exact stretched field on ∂B₂ (same
        /// factorization), separating truncation from discretization error.
        #[serde(default)]
        truncation_reference: bool,
    },
    /// Stretched-kernel decay along rays, and the PML extension on ∂B₂.
    Decay {
        #[serde(default)]
        source_column: usize,
        #[serde(default = "default_rays")]
        rays: usize,
        #[serde(default = "default_ray_samples")]
        ray_samples: usize,
        /// Quadrature points per edge of ∂B₂ used as targets.
        #[serde(default = "default_target_n")]
        target_n_per_edge: usize,
        #[serde(default = "default_true")]
        control: bool,
    },
    /// PML DtN map against the exact traction.
    Dtn {
        #[serde(default)]
        source_column: usize,
        #[serde(default = "default_recovery")]
        recovery: RecoveryChoice,
        /// Mesh size of the floor comparison at the largest sweep value;
        /// defaults to twice `h`.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        coarse_h: Option<f64>,
    },
    /// Ellipticity and special-frequency probes over a (ζ, α₀) grid.
    Coercivity {
        #[serde(default = "default_zeta_grid")]
        zeta_grid: Vec<f64>,
        #[serde(default = "default_fields")]
        fields: usize,
    },
    /// Constraint slacks over a (ζ, α₀) grid.
    Constraints {
        #[serde(default = "default_zeta_grid")]
        zeta_grid: Vec<f64>,
    },
}

impl StudyConfig {
    pub fn name(&self) -> &'static str {
        match self {
            StudyConfig::Converge { .. } => "converge",
            StudyConfig::Decay { .. } => "decay",
            StudyConfig::Dtn { .. } => "dtn",
            StudyConfig::Coercivity { .. } => "coercivity",
            StudyConfig::Constraints { .. } => "constraints",
        }
    }
}

impl Config {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let c: Config = toml::from_str(text).map_err(|e| HarnessError::Config(e.to_string()))?;
        c.validate()?;
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| HarnessError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("configs always serialize")
    }

    pub fn validate(&self) -> Result<()> {
        self.material.params()?;
        self.geometry.sweep()?;
        let h = self.discretization.h;
        if !(h > 0.0 && h.is_finite()) {
            return Err(HarnessError::Config(format!("discretization.h = {h}")));
        }
        if self.discretization.n_per_edge == 0 {
            return Err(HarnessError::Config("discretization.n_per_edge must be positive".into()));
        }
        let column_ok = |k: usize| {
            if k > 3 {
                Err(HarnessError::Config(format!("source_column {k} out of range 0..=3")))
            } else {
                Ok(())
            }
        };
        match &self.study {
            StudyConfig::Converge { source_column, .. } | StudyConfig::Dtn { source_column, .. } => column_ok(*source_column)?,
            StudyConfig::Decay { source_column, ray_samples, target_n_per_edge, .. } => {
                column_ok(*source_column)?;
                if *ray_samples < 3 || *target_n_per_edge == 0 {
                    return Err(HarnessError::Config("decay needs ray_samples >= 3 and target_n_per_edge >= 1".into()));
                }
            }
            StudyConfig::Coercivity { zeta_grid, fields } => {
                if zeta_grid.is_empty() || *fields == 0 {
                    return Err(HarnessError::Config("coercivity needs a zeta grid and at least one field".into()));
                }
            }
            StudyConfig::Constraints { zeta_grid } => {
                if zeta_grid.is_empty() {
                    return Err(HarnessError::Config("constraints need a zeta grid".into()));
                }
            }
        }
        if let StudyConfig::Dtn { coarse_h: Some(c), .. } = self.study {
            if !(c > h) {
                return Err(HarnessError::Config(format!("coarse_h = {c} must exceed h = {h}")));
            }
        }
        if matches!(self.study, StudyConfig::Coercivity { .. } | StudyConfig::Constraints { .. }) && self.geometry.d.len() != 1 {
            return Err(HarnessError::Config("the grid studies sweep alpha0 and zeta; give a single d".into()));
        }
        Ok(())
    }
}
