//! Run configuration, read from JSON with unknown keys rejected.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::geometry::SQRT3;
use crate::potential::Morse;
use crate::terms::Selection;
use crate::{Error, Result};

/// Relative tail tolerance of the default Morse truncation radius.
pub const DECAY_TOL: f64 = 1e-10;

/// ε used by single-point commands when no depth is given.
pub const DEFAULT_EPS: f64 = 0.05;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sweep {
    /// Values of ε directly.
    Eps(Vec<f64>),
    /// Physical Morse depths; ε follows from `ε² ∝ D_e`.
    #[serde(rename = "d_e")]
    DE(Vec<f64>),
}

impl Default for Sweep {
    fn default() -> Self {
        Sweep::Eps(vec![0.1, 0.08, 0.06, 0.04, 0.03, 0.02, 0.015, 0.01])
    }
}

/// Potential and window used for the interpolation-gap estimates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GapConfig {
    pub lambda: f64,
    pub gamma_sw: f64,
    pub sw_cutoff: f64,
    pub selection: Selection,
    /// Half-width in lattice units.
    pub half_width: f64,
    pub n_y: usize,
    pub eps: Vec<f64>,
}

impl Default for GapConfig {
    fn default() -> Self {
        Self {
            lambda: 1.0,
            gamma_sw: 0.05,
            sw_cutoff: 1.01,
            selection: Selection::Nearest,
            half_width: 40.0,
            n_y: 2,
            eps: vec![0.05, 0.025],
        }
    }
}

/// Sinusoidal test misfit `γ(t) = K sin²(πt)` for `pn-solve`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SinusoidalConfig {
    pub k: f64,
    /// Elastic constant `α1`; `α_eff = 2 α1`.
    pub alpha1: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    /// Stillinger–Weber prefactor.
    pub lambda: f64,
    pub gamma_sw: f64,
    pub sw_cutoff: f64,
    pub selection: Selection,
    /// Physical Morse depth for single-point commands.
    pub d_e: Option<f64>,
    /// Morse width.
    pub c: f64,
    /// Morse equilibrium distance; defaults to `d_z`.
    pub r_e: Option<f64>,
    pub d_z: f64,
    pub a: f64,
    /// Half-width of the window in rescaled units (`L a / ε` lattice units).
    #[serde(rename = "L")]
    pub l: f64,
    pub n_y: usize,
    /// Morse truncation radius; defaults to the tail-decay rule.
    pub r_cut: Option<f64>,
    pub ode_tol: f64,
    pub newton_tol: f64,
    pub krylov_tol: f64,
    pub sweep: Sweep,
    pub gap: GapConfig,
    pub sinusoidal: Option<SinusoidalConfig>,
    pub seed: u64,
    pub output_dir: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            lambda: 1.0,
            gamma_sw: 0.25,
            sw_cutoff: 1.6,
            selection: Selection::All,
            d_e: None,
            c: 1.5,
            r_e: None,
            d_z: 1.0 / SQRT3,
            a: 1.0,
            l: 20.0,
            n_y: 1,
            r_cut: None,
            ode_tol: 1e-12,
            newton_tol: 1e-9,
            krylov_tol: 1e-10,
            sweep: Sweep::default(),
            gap: GapConfig::default(),
            sinusoidal: None,
            seed: 7,
            output_dir: None,
        }
    }
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::Config(format!("{name} must be positive and finite, got {v}")))
    }
}

fn tolerance(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v <= 1e-2 {
        Ok(())
    } else {
        Err(Error::Config(format!("{name} must lie in (0, 1e-2], got {v}")))
    }
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.lambda.is_finite() {
            return Err(Error::Config(format!("lambda must be finite, got {}", self.lambda)));
        }
        positive("gamma_sw", self.gamma_sw)?;
        positive("sw_cutoff", self.sw_cutoff)?;
        positive("c", self.c)?;
        positive("d_z", self.d_z)?;
        positive("a", self.a)?;
        positive("L", self.l)?;
        if let Some(r) = self.r_e {
            positive("r_e", r)?;
        }
        if let Some(r) = self.r_cut {
            positive("r_cut", r)?;
            if r <= self.r_e() {
                return Err(Error::Config(format!("r_cut {r} must exceed r_e {}", self.r_e())));
            }
        }
        if let Some(d) = self.d_e {
            positive("d_e", d)?;
        }
        if self.n_y == 0 {
            return Err(Error::Config("n_y must be at least 1".into()));
        }
        tolerance("ode_tol", self.ode_tol)?;
        tolerance("newton_tol", self.newton_tol)?;
        tolerance("krylov_tol", self.krylov_tol)?;
        let values = match &self.sweep {
            Sweep::Eps(v) | Sweep::DE(v) => v,
        };
        if values.is_empty() {
            return Err(Error::Config("sweep must not be empty".into()));
        }
        for &v in values {
            positive("sweep value", v)?;
        }
        let g = &self.gap;
        positive("gap.gamma_sw", g.gamma_sw)?;
        positive("gap.sw_cutoff", g.sw_cutoff)?;
        positive("gap.half_width", g.half_width)?;
        if g.n_y == 0 {
            return Err(Error::Config("gap.n_y must be at least 1".into()));
        }
        for &e in &g.eps {
            positive("gap.eps", e)?;
        }
        if let Some(s) = &self.sinusoidal {
            positive("sinusoidal.k", s.k)?;
            positive("sinusoidal.alpha1", s.alpha1)?;
        }
        Ok(())
    }

    pub fn r_e(&self) -> f64 {
        self.r_e.unwrap_or(self.d_z)
    }

    /// Morse truncation radius: explicit, or where the tail drops below
    /// [`DECAY_TOL`] of the well depth.
    pub fn r_cut(&self) -> f64 {
        self.r_cut.unwrap_or_else(|| Morse::decay_radius(self.c, self.r_e(), DECAY_TOL))
    }

    /// Canonical JSON (fixed field order) of the validated config.
    pub fn canonical_json(&self) -> String {
        serde_json::to_string(self).unwrap_or_default()
    }

    /// Git-style content hash: SHA-256 of `"blob <len>\0"` followed by the
    /// canonical JSON.
    pub fn content_hash(&self) -> String {
        let body = self.canonical_json();
        let mut h = Sha256::new();
        h.update(format!("blob {}\0", body.len()).as_bytes());
        h.update(body.as_bytes());
        h.finalize().iter().map(|b| format!("{b:02x}")).collect()
    }
}
