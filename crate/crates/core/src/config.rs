use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::affordance::{TrainConfig, DEFAULT_THRESHOLD};
use crate::connectivity::{ConnectivityParams, DEFAULT_ALPHA_FRACTION_MIN};
use crate::error::{Error, Result};
use crate::scenegen::TerrainParams;
use crate::segmentation::SegmentParams;
use crate::semantics::DEFAULT_SEMANTIC_THRESHOLD;
use crate::similarity::{SsimParams, DEFAULT_ADJACENCY_THRESHOLD, DEFAULT_STRIP_WIDTH};
use crate::tile::{DEFAULT_TILE_SIZE, DEFAULT_TRANSPARENCY_THRESHOLD};

/// Every tunable of the pipeline in one serializable place. Missing fields
/// take their defaults when loading.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub tile_size: u32,
    pub ssim_threshold: f64,
    pub transparency_threshold: f64,
    pub strip_width: u32,
    pub alpha_fraction_min: f64,
    pub semantic_sim_threshold: f64,
    pub affordance_threshold: f64,
    pub terrain: TerrainParams,
    pub train: TrainConfig,
    pub seed: u64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            tile_size: DEFAULT_TILE_SIZE,
            ssim_threshold: DEFAULT_ADJACENCY_THRESHOLD,
            transparency_threshold: DEFAULT_TRANSPARENCY_THRESHOLD,
            strip_width: DEFAULT_STRIP_WIDTH,
            alpha_fraction_min: DEFAULT_ALPHA_FRACTION_MIN,
            semantic_sim_threshold: DEFAULT_SEMANTIC_THRESHOLD,
            affordance_threshold: DEFAULT_THRESHOLD,
            terrain: TerrainParams::default(),
            train: TrainConfig::default(),
            seed: 42,
        }
    }
}

fn check_unit(name: &str, v: f64) -> Result<()> {
    if (0.0..=1.0).contains(&v) {
        Ok(())
    } else {
        Err(Error::Argument(format!("{name} = {v} is outside [0, 1]")))
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        if self.tile_size == 0 {
            return Err(Error::Argument("tile_size must be positive".into()));
        }
        if self.strip_width == 0 || self.strip_width * 2 > self.tile_size {
            return Err(Error::Argument(format!(
                "strip_width {} must be in 1..={}",
                self.strip_width,
                self.tile_size / 2
            )));
        }
        if !(-1.0..=1.0).contains(&self.ssim_threshold) {
            return Err(Error::Argument(format!(
                "ssim_threshold = {} is outside [-1, 1]",
                self.ssim_threshold
            )));
        }
        if !(-1.0..=1.0).contains(&self.semantic_sim_threshold) {
            return Err(Error::Argument(format!(
                "semantic_sim_threshold = {} is outside [-1, 1]",
                self.semantic_sim_threshold
            )));
        }
        check_unit("transparency_threshold", self.transparency_threshold)?;
        check_unit("alpha_fraction_min", self.alpha_fraction_min)?;
        check_unit("affordance_threshold", self.affordance_threshold)?;
        check_unit("train.val_fraction", self.train.val_fraction)?;
        if !(self.train.lr > 0.0) || self.train.batch_size == 0 || self.train.hidden_size == 0 {
            return Err(Error::Argument(
                "train.lr, train.batch_size and train.hidden_size must be positive".into(),
            ));
        }
        if !(0.0..1.0).contains(&self.train.momentum) {
            return Err(Error::Argument("train.momentum must be in [0, 1)".into()));
        }
        self.terrain.validate()
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| Error::json("config", e))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    /// Canonical serialization; the manifest hash is taken over these bytes.
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes") + "\n"
    }

    pub fn segment_params(&self) -> SegmentParams {
        SegmentParams {
            similarity_threshold: self.ssim_threshold,
            transparency_threshold: self.transparency_threshold,
            strip_width: self.strip_width,
            ssim: SsimParams::default(),
        }
    }

    pub fn connectivity_params(&self) -> ConnectivityParams {
        ConnectivityParams {
            ssim_threshold: self.ssim_threshold,
            alpha_fraction_min: self.alpha_fraction_min,
            strip_width: self.strip_width,
            transparency_threshold: self.transparency_threshold,
            ssim: SsimParams::default(),
        }
    }

    pub fn train_config(&self) -> TrainConfig {
        TrainConfig { seed: self.seed, ..self.train }
    }
}
