//! End-to-end inference: compressed stream → per-frame descriptors → scores
//! → boundary timestamps.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::backbone::{normalize_motion, normalize_residual, normalize_rgb, resize_motion, resize_residual};
use crate::backtrace::{accumulate, sample_indices};
use crate::codec::{Gop, GopStream};
use crate::error::{Error, Result};
use crate::model::{ModelConfig, ModelParams};
use crate::scam::scam_forward;
use crate::temporal::{
    bag_indices, group_similarity, lstm_forward_batch, pick_peaks, timeline_from_gops, FrameTimeline,
    GopDescriptors, GroupSimilarityMap,
};
use crate::tensor::Tensor3;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DetectConfig {
    /// Minimum score τ for a boundary.
    pub threshold: f64,
    /// Non-maximum suppression radius in timeline frames.
    pub nms_radius: usize,
}

impl Default for DetectConfig {
    fn default() -> Self {
        Self {
            threshold: 0.5,
            nms_radius: 2,
        }
    }
}

impl DetectConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.threshold) {
            return Err(Error::config("detect.threshold must lie in [0, 1]"));
        }
        Ok(())
    }
}

/// Descriptors of one GOP. Partial GOPs contribute min(T, available) frames.
pub fn gop_descriptors(
    params: &ModelParams,
    cfg: &ModelConfig,
    gop: &Gop,
    start_frame: usize,
    search_range: u8,
) -> Result<GopDescriptors> {
    let x_i = params.backbone_i.forward(&normalize_rgb(&gop.iframe))?;
    let iframe = x_i.spatial_mean();
    let acc = accumulate(gop)?;
    let count = cfg.samples_per_gop.min(acc.len());
    let cell = cfg.feature_stride();
    let pframes = if count == 0 {
        Vec::new()
    } else {
        sample_indices(acc.len(), count)?
            .into_iter()
            .map(|t| {
                let a = &acc[t];
                let x_m = params.backbone_m.forward(&normalize_motion(a, search_range))?;
                let x_r = params.backbone_r.forward(&normalize_residual(a))?;
                let v = scam_forward(
                    &params.scam_m,
                    &params.scam_r,
                    &x_i,
                    &x_m,
                    &resize_motion(a, cell),
                    &x_r,
                    &resize_residual(a, cell),
                )?;
                Ok((start_frame + a.source_index + 1, v))
            })
            .collect::<Result<Vec<_>>>()?
    };
    Ok(GopDescriptors {
        start_frame,
        iframe,
        pframes,
    })
}

/// Per-frame descriptor timeline for a whole stream; GOPs run in parallel.
pub fn extract_timeline(params: &ModelParams, cfg: &ModelConfig, stream: &GopStream) -> Result<FrameTimeline> {
    stream.validate()?;
    let sr = stream.header.search_range;
    let gops = stream
        .gops
        .par_iter()
        .enumerate()
        .map(|(g, gop)| gop_descriptors(params, cfg, gop, stream.gop_start(g), sr))
        .collect::<Result<Vec<_>>>()?;
    timeline_from_gops(gops, stream.header.fps.as_f64())
}

/// Every intermediate of the temporal head, kept for partial recomputation.
#[derive(Clone, Debug, PartialEq)]
pub struct HeadTrace {
    /// Similarity map per candidate frame.
    pub sims: Vec<GroupSimilarityMap>,
    /// FCN activations (post-ReLU) per candidate frame, one tensor per layer.
    pub fcn: Vec<Vec<Tensor3>>,
    pub descriptors: Vec<Vec<f64>>,
    pub hidden: Vec<Vec<f64>>,
    pub scores: Vec<f64>,
}

/// LSTM outputs for every bag of the timeline.
pub fn bag_hidden_states(params: &ModelParams, cfg: &ModelConfig, timeline: &FrameTimeline) -> Result<Vec<Vec<Vec<f64>>>> {
    let len = timeline.len();
    let bags = (0..len)
        .map(|l| {
            Ok(bag_indices(len, l, cfg.bag_radius)?
                .into_iter()
                .map(|i| timeline.vectors[i].clone())
                .collect::<Vec<_>>())
        })
        .collect::<Result<Vec<_>>>()?;
    if let Some(v) = timeline.vectors.iter().find(|v| v.len() != cfg.channels) {
        return Err(Error::shape(format!(
            "timeline descriptors have {} channels, model expects {}",
            v.len(),
            cfg.channels
        )));
    }
    Ok(bags
        .par_chunks(16)
        .flat_map_iter(|chunk| lstm_forward_batch(&params.lstm, chunk))
        .collect())
}

/// Similarity maps from LSTM outputs.
pub fn similarity_maps(cfg: &ModelConfig, hidden: &[Vec<Vec<f64>>]) -> Result<Vec<GroupSimilarityMap>> {
    hidden.par_iter().map(|h| group_similarity(h, cfg.groups)).collect()
}

/// FCN + classifier over precomputed similarity maps.
pub fn trace_from_sims(params: &ModelParams, sims: Vec<GroupSimilarityMap>) -> Result<HeadTrace> {
    let fcn = sims
        .par_iter()
        .map(|s| params.fcn.activations(s))
        .collect::<Result<Vec<_>>>()?;
    let descriptors: Vec<Vec<f64>> = fcn.iter().map(|a| a[3].spatial_mean()).collect();
    let hidden = params.classifier.hidden(&descriptors);
    let scores = params.classifier.output(&hidden);
    Ok(HeadTrace {
        sims,
        fcn,
        descriptors,
        hidden,
        scores,
    })
}

pub fn head_trace(params: &ModelParams, cfg: &ModelConfig, timeline: &FrameTimeline) -> Result<HeadTrace> {
    let hidden = bag_hidden_states(params, cfg, timeline)?;
    trace_from_sims(params, similarity_maps(cfg, &hidden)?)
}

/// Boundary score per timeline frame.
pub fn score_timeline(params: &ModelParams, cfg: &ModelConfig, timeline: &FrameTimeline) -> Result<Vec<f64>> {
    Ok(head_trace(params, cfg, timeline)?.scores)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Detection {
    pub fps: f64,
    /// Source frame index of each timeline position.
    pub source_frames: Vec<usize>,
    pub scores: Vec<f64>,
    pub boundaries_s: Vec<f64>,
}

pub fn detect(
    params: &ModelParams,
    cfg: &ModelConfig,
    detect_cfg: &DetectConfig,
    stream: &GopStream,
) -> Result<Detection> {
    detect_cfg.validate()?;
    let timeline = extract_timeline(params, cfg, stream)?;
    let scores = score_timeline(params, cfg, &timeline)?;
    let ts = timeline.timestamps();
    let boundaries_s = pick_peaks(&scores, detect_cfg.threshold, detect_cfg.nms_radius)
        .into_iter()
        .map(|l| ts[l])
        .collect();
    Ok(Detection {
        fps: timeline.fps,
        source_frames: timeline.source_frames,
        scores,
        boundaries_s,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codec::{encode, EncoderConfig, Fps, Frame, RawVideo};

    fn clip(frames: usize) -> GopStream {
        let fr = (0..frames)
            .map(|t| {
                let mut f = Frame::filled(32, 32, [20, 40, 60]);
                for y in 8..16 {
                    for x in 0..8 {
                            for (c, v) in [200, 100, 50].into_iter().enumerate() {
                        f.set((x + t) % 32, y, c, v);
                    }
                    }
                }
                f
            })
            .collect();
        let raw = RawVideo::new(32, 32, Fps::new(25, 1).unwrap(), fr).unwrap();
        encode(&raw, &EncoderConfig { gop_size: 6, ..Default::default() }).unwrap()
    }

    #[test]
    fn timeline_has_iframe_plus_samples_per_gop() {
        let cfg = ModelConfig::tiny();
        let params = ModelParams::init(&cfg).unwrap();
        // 14 frames: GOPs of 6, 6 and a partial 2 (one P-frame)
        let tl = extract_timeline(&params, &cfg, &clip(14)).unwrap();
        assert_eq!(tl.len(), 4 + 4 + 2);
        assert_eq!(tl.source_frames[..4], [0, 1, 3, 5]);
        assert_eq!(tl.source_frames[8..], [12, 13]);
    }

    #[test]
    fn scores_are_probabilities_and_deterministic() {
        let cfg = ModelConfig::tiny();
        let params = ModelParams::init(&cfg).unwrap();
        let stream = clip(12);
        let a = detect(&params, &cfg, &DetectConfig::default(), &stream).unwrap();
        let b = detect(&params, &cfg, &DetectConfig::default(), &stream).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.scores.len(), a.source_frames.len());
        assert!(a.scores.iter().all(|s| *s > 0.0 && *s < 1.0));
    }

    #[test]
    fn channel_mismatch_is_shape_error() {
        let cfg = ModelConfig::tiny();
        let params = ModelParams::init(&cfg).unwrap();
        let tl = FrameTimeline {
            vectors: vec![vec![0.0; 3]; 4],
            source_frames: vec![0, 1, 2, 3],
            fps: 25.0,
        };
        assert!(matches!(score_timeline(&params, &cfg, &tl), Err(Error::Shape(_))));
    }
}
