//! JSON configuration of experiments and model families.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{LltError, Result};
use crate::model::{MapModel, ModelSpec};

/// A model given inline or as a path to a model JSON file (relative paths
/// are resolved against the config file's directory).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ModelRef {
    Inline(ModelSpec),
    Path(PathBuf),
}

impl ModelRef {
    pub fn resolve(&self, base_dir: Option<&Path>) -> Result<ModelSpec> {
        match self {
            ModelRef::Inline(spec) => Ok(spec.clone()),
            ModelRef::Path(p) => {
                let full = match base_dir {
                    Some(dir) if p.is_relative() => dir.join(p),
                    _ => p.clone(),
                };
                Ok(serde_json::from_str(&std::fs::read_to_string(full)?)?)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DensitySource {
    Exact,
    Montecarlo,
    Both,
}

impl DensitySource {
    pub fn exact(self) -> bool {
        matches!(self, DensitySource::Exact | DensitySource::Both)
    }

    pub fn montecarlo(self) -> bool {
        matches!(self, DensitySource::Montecarlo | DensitySource::Both)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct McSettings {
    pub n_paths: usize,
    pub seed: u64,
    /// Histogram bins per dimension.
    pub bins: usize,
}

impl Default for McSettings {
    fn default() -> Self {
        Self { n_paths: 100_000, seed: 1, bins: 60 }
    }
}

/// Sup-norm search grid for `|f_{k,t} - η_Σ|`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SupGridSettings {
    /// Points per dimension of the initial grid.
    pub points: usize,
    /// Half-width of the search box in standard deviations of `Σ`.
    pub width_sd: f64,
    pub max_refinements: usize,
    /// Refinement stops once the sup changes by less than this fraction.
    pub rel_change: f64,
}

impl Default for SupGridSettings {
    fn default() -> Self {
        Self { points: 401, width_sd: 8.0, max_refinements: 12, rel_change: 0.01 }
    }
}

/// Settings of the lattice scan and uniform radius sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LatticeSettings {
    pub delta: f64,
    pub a: f64,
    pub resolution: usize,
    pub radius_margin: f64,
}

impl Default for LatticeSettings {
    fn default() -> Self {
        Self { delta: 0.5, a: 20.0, resolution: 64, radius_margin: crate::fourier::DEFAULT_RADIUS_MARGIN }
    }
}

/// Everything in an experiment except the model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentSettings {
    pub t_grid: Vec<f64>,
    /// Start state.
    pub k: usize,
    pub density_source: DensitySource,
    pub mc: McSettings,
    pub grid: SupGridSettings,
    pub lattice: LatticeSettings,
    /// Half-width of the accepted band around slope -1/2.
    pub slope_band: f64,
    /// Also run the full assumption diagnostics inside `run`.
    pub diagnostics: bool,
}

impl Default for ExperimentSettings {
    fn default() -> Self {
        Self {
            t_grid: vec![10.0, 20.0, 40.0, 80.0, 160.0],
            k: 0,
            density_source: DensitySource::Exact,
            mc: McSettings::default(),
            grid: SupGridSettings::default(),
            lattice: LatticeSettings::default(),
            slope_band: 0.15,
            diagnostics: false,
        }
    }
}

impl ExperimentSettings {
    pub fn validate(&self) -> Result<()> {
        if self.t_grid.len() < 2 {
            return Err(LltError::InvalidInput("t_grid needs at least two points".into()));
        }
        if self.t_grid.windows(2).any(|w| !(w[1] > w[0])) || self.t_grid[0] <= 0.0 {
            return Err(LltError::InvalidInput("t_grid must be positive and strictly increasing".into()));
        }
        if self.mc.n_paths == 0 || self.mc.bins == 0 || self.grid.points < 3 {
            return Err(LltError::InvalidInput("sample and grid sizes must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub model: ModelRef,
    #[serde(flatten)]
    pub settings: ExperimentSettings,
    /// Directory the JSON was read from, for resolving model paths.
    #[serde(skip)]
    pub base_dir: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn new(model: ModelSpec, settings: ExperimentSettings) -> Self {
        Self { model: ModelRef::Inline(model), settings, base_dir: None }
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let mut cfg: Self = serde_json::from_str(&std::fs::read_to_string(path)?)?;
        cfg.base_dir = path.parent().map(Path::to_path_buf);
        Ok(cfg)
    }

    pub fn model_spec(&self) -> Result<ModelSpec> {
        self.model.resolve(self.base_dir.as_deref())
    }

    pub fn build_model(&self) -> Result<MapModel> {
        self.model_spec()?.build()
    }
}

/// A parametrized family of models.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FamilySpec {
    Members { members: Vec<ModelRef> },
    /// `(1-θ)·from + θ·to`.
    Interpolate { from: ModelRef, to: ModelRef, thetas: Vec<f64> },
    /// Rates multiplied by `θ`.
    Scale { base: ModelRef, thetas: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FamilyConfig {
    pub family: FamilySpec,
    #[serde(flatten)]
    pub settings: ExperimentSettings,
    #[serde(skip)]
    pub base_dir: Option<PathBuf>,
}

impl FamilyConfig {
    pub fn from_file(path: &Path) -> Result<Self> {
        let mut cfg: Self = serde_json::from_str(&std::fs::read_to_string(path)?)?;
        cfg.base_dir = path.parent().map(Path::to_path_buf);
        Ok(cfg)
    }

    /// `(label, θ, spec)` for each member.
    pub fn members(&self) -> Result<Vec<(String, Option<f64>, ModelSpec)>> {
        let dir = self.base_dir.as_deref();
        match &self.family {
            FamilySpec::Members { members } => members
                .iter()
                .enumerate()
                .map(|(i, m)| Ok((format!("member_{i}"), None, m.resolve(dir)?)))
                .collect(),
            FamilySpec::Interpolate { from, to, thetas } => {
                let (a, b) = (from.resolve(dir)?, to.resolve(dir)?);
                thetas.iter().map(|&th| Ok((format!("theta_{th}"), Some(th), a.interpolate(&b, th)?))).collect()
            }
            FamilySpec::Scale { base, thetas } => {
                let a = base.resolve(dir)?;
                thetas.iter().map(|&th| Ok((format!("theta_{th}"), Some(th), a.scale(th)?))).collect()
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_inline_config_with_defaults() {
        let cfg: ExperimentConfig =
            serde_json::from_str(r#"{"model":{"type":"local_time","g":[[-1,1],[1,-1]]},"t_grid":[5,10]}"#).unwrap();
        assert_eq!(cfg.settings.t_grid, vec![5.0, 10.0]);
        assert_eq!(cfg.settings.density_source, DensitySource::Exact);
        assert!(cfg.build_model().is_ok());
        cfg.settings.validate().unwrap();
    }

    #[test]
    fn rejects_bad_t_grid() {
        let mut s = ExperimentSettings::default();
        s.t_grid = vec![10.0];
        assert!(s.validate().is_err());
        s.t_grid = vec![10.0, 5.0];
        assert!(s.validate().is_err());
    }

    #[test]
    fn resolves_model_paths() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("m.json"), r#"{"type":"marp","d0":[[-1]],"d1":[[1]]}"#).unwrap();
        std::fs::write(dir.path().join("cfg.json"), r#"{"model":"m.json","density_source":"both"}"#).unwrap();
        let cfg = ExperimentConfig::from_file(&dir.path().join("cfg.json")).unwrap();
        assert_eq!(cfg.build_model().unwrap().kind(), "marp");
        assert_eq!(cfg.settings.density_source, DensitySource::Both);
    }

    #[test]
    fn family_members() {
        let cfg: FamilyConfig = serde_json::from_str(
            r#"{"family":{"kind":"scale","base":{"type":"local_time","g":[[-1,1],[1,-1]]},"thetas":[0.5,1,2]}}"#,
        )
        .unwrap();
        let m = cfg.members().unwrap();
        assert_eq!(m.len(), 3);
        assert_eq!(m[2].2, ModelSpec::LocalTime { g: vec![vec![-2.0, 2.0], vec![2.0, -2.0]], a: None });
    }
}
