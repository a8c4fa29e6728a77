//! Single-file pipeline configuration (TOML).
//!
//! Every key is optional; missing keys take the defaults below.
//!
//! ```toml
//! [codec]
//! gop_size = 12        # 1 I-frame + 11 P-frames
//! search_range = 7
//! lossless = true
//! quant_step = 8       # used only when lossless = false
//!
//! [model]
//! channels = 32        # C
//! samples_per_gop = 3  # T
//! bag_radius = 8       # k
//! groups = 4           # G
//! descriptor = 32      # C'
//! backbone_hidden = [8, 16]
//! fcn_width = 16
//! classifier_width = 16
//! seed = 0
//!
//! [detect]
//! threshold = 0.5      # τ
//! nms_radius = 2       # w
//!
//! [train]
//! steps = 200
//! lr = 0.5
//! fd_step = 1e-4
//! stages = ["fcn", "classifier"]
//! top_n_raters = 2
//! alpha = 1.0          # α
//!
//! [eval]
//! thresholds = [0.05, 0.1, 0.15, 0.2, 0.25, 0.3, 0.35, 0.4, 0.45, 0.5]
//! ```

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::codec::EncoderConfig;
use crate::error::{Error, Result};
use crate::eval::default_thresholds;
use crate::model::ModelConfig;
use crate::pipeline::DetectConfig;
use crate::training::TrainConfig;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CodecConfig {
    pub gop_size: usize,
    pub search_range: u8,
    pub lossless: bool,
    pub quant_step: u16,
}

impl Default for CodecConfig {
    fn default() -> Self {
        Self {
            gop_size: 12,
            search_range: 7,
            lossless: true,
            quant_step: 8,
        }
    }
}

impl CodecConfig {
    pub fn encoder(&self) -> EncoderConfig {
        EncoderConfig {
            gop_size: self.gop_size,
            search_range: self.search_range,
            quant_step: (!self.lossless).then_some(self.quant_step),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalConfig {
    pub thresholds: Vec<f64>,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            thresholds: default_thresholds(),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub codec: CodecConfig,
    pub model: ModelConfig,
    pub detect: DetectConfig,
    pub train: TrainConfig,
    pub eval: EvalConfig,
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        self.codec.encoder().validate()?;
        self.model.validate()?;
        self.detect.validate()?;
        self.train.validate()?;
        if self.eval.thresholds.is_empty() || self.eval.thresholds.iter().any(|t| !(*t >= 0.0)) {
            return Err(Error::config("eval.thresholds must be a non-empty list of non-negative values"));
        }
        if self.model.samples_per_gop >= self.codec.gop_size {
            return Err(Error::config(format!(
                "model.samples_per_gop ({}) must be below codec.gop_size ({})",
                self.model.samples_per_gop, self.codec.gop_size
            )));
        }
        Ok(())
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string_pretty(self).map_err(|e| Error::config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }
}
