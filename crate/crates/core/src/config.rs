//! Pipeline configuration: a single JSON document. Command-line flags
//! override file values; unknown keys are rejected.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::blur::DEFAULT_K;
use crate::error::{Error, Result};
use crate::keyframe::KeyframePolicy;
use crate::tour::TourOptions;

/// Environment variable naming the config file.
pub const CONFIG_ENV: &str = "TRIAGE_CONFIG";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PipelineConfig {
    /// Blur window half-width in frames.
    pub k: usize,
    pub keyframes: KeyframePolicy,
    pub tour: TourOptions,
    /// Integer box-downscale applied before blur scoring; 1 disables it.
    pub downscale: usize,
    pub frames_dir: Option<PathBuf>,
    pub panos_dir: Option<PathBuf>,
    pub reconstruction: Option<PathBuf>,
    pub output_dir: Option<PathBuf>,
    pub lenient: bool,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            k: DEFAULT_K,
            keyframes: KeyframePolicy::default(),
            tour: TourOptions::default(),
            downscale: 1,
            frames_dir: None,
            panos_dir: None,
            reconstruction: None,
            output_dir: None,
            lenient: false,
        }
    }
}

impl PipelineConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    /// Load from an explicit path, else from `TRIAGE_CONFIG`, else defaults.
    pub fn load(explicit: Option<&Path>) -> Result<Self> {
        match explicit {
            Some(p) => Self::from_path(p),
            None => match std::env::var_os(CONFIG_ENV) {
                Some(p) if !p.is_empty() => Self::from_path(Path::new(&p)),
                _ => Ok(Self::default()),
            },
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.downscale < 1 {
            return Err(Error::Config("downscale must be >= 1".into()));
        }
        self.keyframes.validate()?;
        self.tour.validate()
    }
}
