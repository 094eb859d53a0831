//! Simulation configuration files.
//!
//! One TOML document describes the world, the sweep plan and the mapping
//! parameters. The fuzzy classifier lives in its own file, referenced by
//! `fuzzy_config` (relative to the world file) or left at the built-in default.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fuzzy::{FuzzyConfig, FuzzyError};
use crate::geometry::Point;
use crate::log::MissionLog;
use crate::mapper::{extract_walls, MapError, WallModel, WallParams};
use crate::sim::{SimError, SweepPlan, World};

pub const DEFAULT_WORLD: &str = include_str!("../data/default-world.toml");
pub const DEFAULT_FUZZY: &str = include_str!("../data/default-fuzzy.toml");
pub const DEFAULT_SEED: u64 = 7;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    Parse { path: String, message: String },
    #[error("invalid configuration: {0}")]
    Invalid(String),
}

impl From<SimError> for ConfigError {
    fn from(e: SimError) -> Self {
        ConfigError::Invalid(e.to_string())
    }
}

impl From<FuzzyError> for ConfigError {
    fn from(e: FuzzyError) -> Self {
        ConfigError::Invalid(e.to_string())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MappingConfig {
    /// Range hits farther than this from their scan pose are dropped before
    /// wall extraction.
    pub max_range_mm: Option<f64>,
    pub params: WallParams,
}

impl Default for MappingConfig {
    fn default() -> Self {
        Self { max_range_mm: Some(2000.0), params: WallParams::default() }
    }
}

impl MappingConfig {
    /// Wall model from the range hits recorded in `log`.
    pub fn extract(&self, log: &MissionLog) -> Result<WallModel, MapError> {
        let pts: Vec<Point> = log.point_cloud(self.max_range_mm).iter().map(|p| p.position()).collect();
        extract_walls(&pts, &self.params)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "yes")]
    pub noise_enabled: bool,
    pub world: World,
    #[serde(default)]
    pub plan: SweepPlan,
    #[serde(default)]
    pub mapping: MappingConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fuzzy_config: Option<PathBuf>,
    #[serde(skip)]
    pub fuzzy: FuzzyConfig,
}

fn default_seed() -> u64 {
    DEFAULT_SEED
}

fn yes() -> bool {
    true
}

impl Default for SimConfig {
    fn default() -> Self {
        Self::from_toml(DEFAULT_WORLD, None).expect("embedded world config is valid")
    }
}

impl SimConfig {
    /// Parses a world document; `base` resolves a relative `fuzzy_config`.
    pub fn from_toml(text: &str, base: Option<&Path>) -> Result<Self, ConfigError> {
        let origin = base.map_or_else(|| "<config>".to_string(), |p| p.display().to_string());
        let mut cfg: SimConfig = toml::from_str(text)
            .map_err(|e| ConfigError::Parse { path: origin, message: e.to_string() })?;
        if let Some(rel) = &cfg.fuzzy_config {
            let path = match base.and_then(Path::parent) {
                Some(dir) => dir.join(rel),
                None => rel.clone(),
            };
            cfg.fuzzy = load_fuzzy(&path)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|source| ConfigError::Io { path: path.to_owned(), source })?;
        Self::from_toml(&text, Some(path))
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.world.validate()?;
        self.plan.validate()?;
        self.fuzzy.validate()?;
        if let Some(r) = self.mapping.max_range_mm {
            if !(r > 0.0) {
                return Err(ConfigError::Invalid("mapping.max_range_mm must be positive".into()));
            }
        }
        Ok(())
    }
}

pub fn load_fuzzy(path: &Path) -> Result<FuzzyConfig, ConfigError> {
    let text = std::fs::read_to_string(path)
        .map_err(|source| ConfigError::Io { path: path.to_owned(), source })?;
    FuzzyConfig::from_toml(&text).map_err(|e| ConfigError::Parse {
        path: path.display().to_string(),
        message: e.to_string(),
    })
}
