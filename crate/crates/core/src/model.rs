//! The full parameter set, its configuration, seeded initialization and the
//! JSON weights file.
//!
//! Tensor names are dotted paths, `<module>.<layer>.<tensor>`:
//!
//! | prefix                    | tensors                                                  |
//! |---------------------------|----------------------------------------------------------|
//! | `backbone_I`, `backbone_M`, `backbone_R` | `conv{i}.weight`, `conv{i}.bias`          |
//! | `scam_M`, `scam_R`        | `enc0`, `enc1`, `fc1`, `fc2`, `spatial`, `refine0..2` (`.weight`/`.bias`) |
//! | `lstm`                    | `l{0,1}.w_i{i,f,g,o}`, `l{0,1}.w_h{i,f,g,o}`, `l{0,1}.b_i*`, `l{0,1}.b_h*` |
//! | `fcn`                     | `conv{0..3}.weight`, `conv{0..3}.bias`                    |
//! | `classifier`              | `conv{0,1}.weight`, `conv{0,1}.bias`                      |
//!
//! The table order is also the initialization order.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::backbone::{init_in_order, BackbonePlan, BackboneParams};
use crate::error::{Error, Result};
use crate::rng::SplitMix64;
use crate::scam::ScamParams;
use crate::temporal::{ClassifierParams, FcnParams, LstmParams};
use crate::tensor::Param;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    /// Feature channels C shared by backbones, attention and LSTM.
    pub channels: usize,
    /// Sampled P-frames per GOP (T).
    pub samples_per_gop: usize,
    /// Local frames bag radius k; bags hold 2k+1 frames.
    pub bag_radius: usize,
    /// Similarity groups G.
    pub groups: usize,
    /// Pooled descriptor size C'.
    pub descriptor: usize,
    /// Hidden widths of the backbone stacks; the last layer outputs C.
    pub backbone_hidden: Vec<usize>,
    pub fcn_width: usize,
    pub classifier_width: usize,
    pub seed: u64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            channels: 32,
            samples_per_gop: 3,
            bag_radius: 8,
            groups: 4,
            descriptor: 32,
            backbone_hidden: vec![8, 16],
            fcn_width: 16,
            classifier_width: 16,
            seed: 0,
        }
    }
}

impl ModelConfig {
    /// Configuration small enough for finite-difference training.
    pub fn tiny() -> Self {
        Self {
            channels: 8,
            samples_per_gop: 3,
            bag_radius: 2,
            groups: 2,
            descriptor: 8,
            backbone_hidden: vec![8],
            fcn_width: 4,
            classifier_width: 4,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("channels", self.channels),
            ("samples_per_gop", self.samples_per_gop),
            ("groups", self.groups),
            ("descriptor", self.descriptor),
            ("fcn_width", self.fcn_width),
            ("classifier_width", self.classifier_width),
        ];
        if let Some((name, _)) = positive.iter().find(|(_, v)| *v == 0) {
            return Err(Error::config(format!("model.{name} must be positive")));
        }
        if self.channels % self.groups != 0 {
            return Err(Error::config(format!(
                "channels ({}) must be divisible by groups ({})",
                self.channels, self.groups
            )));
        }
        if self.backbone_hidden.contains(&0) {
            return Err(Error::config("backbone widths must be positive"));
        }
        Ok(())
    }

    pub fn backbone_plan(&self, in_channels: usize) -> BackbonePlan {
        BackbonePlan::new(in_channels, &self.backbone_hidden, self.channels)
    }

    /// Spatial stride of the backbones, i.e. the motion resize cell.
    pub fn feature_stride(&self) -> usize {
        1 << (self.backbone_hidden.len() + 1)
    }
}

/// Parameter groups, in initialization order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Stage {
    #[serde(rename = "backbone_I")]
    BackboneI,
    #[serde(rename = "backbone_M")]
    BackboneM,
    #[serde(rename = "backbone_R")]
    BackboneR,
    #[serde(rename = "scam_M")]
    ScamM,
    #[serde(rename = "scam_R")]
    ScamR,
    #[serde(rename = "lstm")]
    Lstm,
    #[serde(rename = "fcn")]
    Fcn,
    #[serde(rename = "classifier")]
    Classifier,
}

impl Stage {
    pub const ALL: [Stage; 8] = [
        Stage::BackboneI,
        Stage::BackboneM,
        Stage::BackboneR,
        Stage::ScamM,
        Stage::ScamR,
        Stage::Lstm,
        Stage::Fcn,
        Stage::Classifier,
    ];

    pub fn prefix(self) -> &'static str {
        match self {
            Stage::BackboneI => "backbone_I",
            Stage::BackboneM => "backbone_M",
            Stage::BackboneR => "backbone_R",
            Stage::ScamM => "scam_M",
            Stage::ScamR => "scam_R",
            Stage::Lstm => "lstm",
            Stage::Fcn => "fcn",
            Stage::Classifier => "classifier",
        }
    }

    pub fn from_prefix(s: &str) -> Option<Stage> {
        Stage::ALL.into_iter().find(|st| st.prefix() == s)
    }

    /// Stages whose outputs feed the per-frame timeline.
    pub fn is_frontend(self) -> bool {
        self < Stage::Lstm
    }
}

/// A tensor together with its full name and owning stage.
pub struct NamedParam<'a> {
    pub name: String,
    pub stage: Stage,
    pub param: &'a Param,
}

pub struct NamedParamMut<'a> {
    pub name: String,
    pub stage: Stage,
    pub param: &'a mut Param,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ModelParams {
    pub backbone_i: BackboneParams,
    pub backbone_m: BackboneParams,
    pub backbone_r: BackboneParams,
    pub scam_m: ScamParams,
    pub scam_r: ScamParams,
    pub lstm: LstmParams,
    pub fcn: FcnParams,
    pub classifier: ClassifierParams,
}

impl ModelParams {
    pub fn zeros(cfg: &ModelConfig) -> Result<Self> {
        cfg.validate()?;
        Ok(Self {
            backbone_i: BackboneParams::zeros(&cfg.backbone_plan(3)),
            backbone_m: BackboneParams::zeros(&cfg.backbone_plan(2)),
            backbone_r: BackboneParams::zeros(&cfg.backbone_plan(3)),
            scam_m: ScamParams::zeros(cfg.channels, 2),
            scam_r: ScamParams::zeros(cfg.channels, 3),
            lstm: LstmParams::zeros(cfg.channels),
            fcn: FcnParams::zeros(cfg.groups, cfg.fcn_width, cfg.descriptor),
            classifier: ClassifierParams::zeros(cfg.descriptor, cfg.classifier_width),
        })
    }

    /// Seeded initialization: one SplitMix64 stream seeded with `cfg.seed`,
    /// weights uniform in ±1/√fan_in drawn in tensor-name order, biases zero.
    pub fn init(cfg: &ModelConfig) -> Result<Self> {
        let mut params = Self::zeros(cfg)?;
        let mut rng = SplitMix64::new(cfg.seed);
        init_in_order(params.named_params_mut().into_iter().map(|p| p.param), &mut rng);
        Ok(params)
    }

    pub fn named_params(&self) -> Vec<NamedParam<'_>> {
        let groups = vec![
            (Stage::BackboneI, self.backbone_i.named_params()),
            (Stage::BackboneM, self.backbone_m.named_params()),
            (Stage::BackboneR, self.backbone_r.named_params()),
            (Stage::ScamM, self.scam_m.named_params()),
            (Stage::ScamR, self.scam_r.named_params()),
            (Stage::Lstm, self.lstm.named_params()),
            (Stage::Fcn, self.fcn.named_params()),
            (Stage::Classifier, self.classifier.named_params()),
        ];
        groups
            .into_iter()
            .flat_map(|(stage, list)| {
                list.into_iter().map(move |(n, param)| NamedParam {
                    name: format!("{}.{n}", stage.prefix()),
                    stage,
                    param,
                })
            })
            .collect()
    }

    pub fn named_params_mut(&mut self) -> Vec<NamedParamMut<'_>> {
        let groups = vec![
            (Stage::BackboneI, self.backbone_i.named_params_mut()),
            (Stage::BackboneM, self.backbone_m.named_params_mut()),
            (Stage::BackboneR, self.backbone_r.named_params_mut()),
            (Stage::ScamM, self.scam_m.named_params_mut()),
            (Stage::ScamR, self.scam_r.named_params_mut()),
            (Stage::Lstm, self.lstm.named_params_mut()),
            (Stage::Fcn, self.fcn.named_params_mut()),
            (Stage::Classifier, self.classifier.named_params_mut()),
        ];
        groups
            .into_iter()
            .flat_map(|(stage, list)| {
                list.into_iter().map(move |(n, param)| NamedParamMut {
                    name: format!("{}.{n}", stage.prefix()),
                    stage,
                    param,
                })
            })
            .collect()
    }

    /// Scalar parameter count of the given stages.
    pub fn count(&self, stages: &[Stage]) -> usize {
        self.named_params()
            .iter()
            .filter(|p| stages.contains(&p.stage))
            .map(|p| p.param.len())
            .sum()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeightsMetadata {
    pub seed: u64,
    pub config: ModelConfig,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeightsFile {
    pub metadata: WeightsMetadata,
    pub tensors: BTreeMap<String, Param>,
}

impl WeightsFile {
    pub fn from_model(params: &ModelParams, cfg: &ModelConfig) -> Self {
        Self {
            metadata: WeightsMetadata {
                seed: cfg.seed,
                config: cfg.clone(),
            },
            tensors: params
                .named_params()
                .into_iter()
                .map(|p| (p.name, p.param.clone()))
                .collect(),
        }
    }

    /// Rebuild typed parameters; every tensor must be present with the shape
    /// the stored config implies, and no extra names are allowed.
    pub fn into_model(self) -> Result<(ModelParams, ModelConfig)> {
        let cfg = self.metadata.config;
        let mut params = ModelParams::zeros(&cfg)?;
        let mut tensors = self.tensors;
        for p in params.named_params_mut() {
            let t = tensors
                .remove(&p.name)
                .ok_or_else(|| Error::shape(format!("weights file lacks tensor {}", p.name)))?;
            if t.shape != p.param.shape || t.data.len() != p.param.data.len() {
                return Err(Error::shape(format!(
                    "tensor {} has shape {:?}, expected {:?}",
                    p.name, t.shape, p.param.shape
                )));
            }
            *p.param = t;
        }
        if let Some(extra) = tensors.keys().next() {
            return Err(Error::shape(format!("unexpected tensor {extra} in weights file")));
        }
        Ok((params, cfg))
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn init_is_deterministic_and_seed_sensitive() {
        let cfg = ModelConfig::tiny();
        let a = ModelParams::init(&cfg).unwrap();
        let b = ModelParams::init(&cfg).unwrap();
        assert_eq!(a, b);
        let c = ModelParams::init(&ModelConfig { seed: 1, ..cfg }).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn first_weight_is_first_generator_draw() {
        let cfg = ModelConfig {
            seed: 42,
            ..ModelConfig::default()
        };
        let p = ModelParams::init(&cfg).unwrap();
        let mut rng = SplitMix64::new(42);
        let bound = 1.0 / 27f64.sqrt();
        assert_eq!(p.backbone_i.layers[0].weight.data[0], rng.symmetric(bound));
    }

    #[test]
    fn names_are_unique_and_prefixed() {
        let p = ModelParams::zeros(&ModelConfig::default()).unwrap();
        let names: Vec<String> = p.named_params().into_iter().map(|n| n.name).collect();
        let mut sorted = names.clone();
        sorted.sort();
        sorted.dedup();
        assert_eq!(sorted.len(), names.len());
        assert_eq!(names[0], "backbone_I.conv0.weight");
        assert!(names.contains(&"scam_R.refine2.bias".to_string()));
        assert!(names.contains(&"lstm.l1.w_hg".to_string()));
        assert_eq!(names.last().unwrap(), "classifier.conv1.bias");
    }

    #[test]
    fn weights_roundtrip() {
        let cfg = ModelConfig::tiny();
        let p = ModelParams::init(&cfg).unwrap();
        let json = WeightsFile::from_model(&p, &cfg).to_json().unwrap();
        let (q, cfg2) = WeightsFile::from_json(&json).unwrap().into_model().unwrap();
        assert_eq!(p, q);
        assert_eq!(cfg, cfg2);
    }

    #[test]
    fn weights_with_wrong_shape_rejected() {
        let cfg = ModelConfig::tiny();
        let p = ModelParams::init(&cfg).unwrap();
        let mut file = WeightsFile::from_model(&p, &cfg);
        file.tensors.get_mut("fcn.conv0.weight").unwrap().shape = vec![1];
        assert!(matches!(file.into_model(), Err(Error::Shape(_))));
    }

    #[test]
    fn tiny_head_fits_training_budget() {
        let cfg = ModelConfig::tiny();
        let p = ModelParams::zeros(&cfg).unwrap();
        assert_eq!(p.count(&[Stage::Lstm]), 1152);
        assert_eq!(p.count(&[Stage::Fcn]), 668);
        assert_eq!(p.count(&[Stage::Classifier]), 113);
    }

    #[test]
    fn groups_must_divide_channels() {
        let cfg = ModelConfig {
            channels: 30,
            ..ModelConfig::default()
        };
        assert!(matches!(cfg.validate(), Err(Error::Config(_))));
    }
}
