//! Small stride-2 conv stacks standing in for the I-frame, motion and
//! residual feature extractors, plus the inputs they consume.

use crate::backtrace::AccumulatedPFrame;
use crate::codec::Frame;
use crate::error::{Error, Result};
use crate::rng::SplitMix64;
use crate::tensor::{Conv2d, Param, Tensor3};

/// Backbone output, C × ⌈H/s⌉ × ⌈W/s⌉ with s = 2^layers.
pub type FeatureMap = Tensor3;

/// Channel plan of one backbone: input channels, then the output width of
/// each stride-2 layer. The default stack is `in → 8 → 16 → C`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BackbonePlan {
    pub in_channels: usize,
    pub widths: Vec<usize>,
}

impl BackbonePlan {
    pub fn new(in_channels: usize, hidden: &[usize], out_channels: usize) -> Self {
        let mut widths = hidden.to_vec();
        widths.push(out_channels);
        Self {
            in_channels,
            widths,
        }
    }

    /// Spatial reduction factor of the whole stack.
    pub fn stride(&self) -> usize {
        1 << self.widths.len()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BackboneParams {
    pub layers: Vec<Conv2d>,
}

impl BackboneParams {
    pub fn zeros(plan: &BackbonePlan) -> Self {
        let mut in_c = plan.in_channels;
        let layers = plan
            .widths
            .iter()
            .map(|&out| {
                let conv = Conv2d::zeros(in_c, out, 2);
                in_c = out;
                conv
            })
            .collect();
        Self { layers }
    }

    pub fn in_channels(&self) -> usize {
        self.layers[0].in_channels()
    }

    pub fn out_channels(&self) -> usize {
        self.layers.last().map_or(0, Conv2d::out_channels)
    }

    pub fn stride(&self) -> usize {
        1 << self.layers.len()
    }

    pub fn named_params(&self) -> Vec<(String, &Param)> {
        let mut out = Vec::with_capacity(2 * self.layers.len());
        for (i, l) in self.layers.iter().enumerate() {
            out.push((format!("conv{i}.weight"), &l.weight));
            out.push((format!("conv{i}.bias"), &l.bias));
        }
        out
    }

    pub fn named_params_mut(&mut self) -> Vec<(String, &mut Param)> {
        let mut out = Vec::with_capacity(2 * self.layers.len());
        for (i, l) in self.layers.iter_mut().enumerate() {
            out.push((format!("conv{i}.weight"), &mut l.weight));
            out.push((format!("conv{i}.bias"), &mut l.bias));
        }
        out
    }

    pub fn forward(&self, input: &Tensor3) -> Result<FeatureMap> {
        if input.channels != self.in_channels() {
            return Err(Error::shape(format!(
                "backbone expects {} input channels, got {}",
                self.in_channels(),
                input.channels
            )));
        }
        let mut x = self.layers[0].forward_relu(input)?;
        for layer in &self.layers[1..] {
            x = layer.forward_relu(&x)?;
        }
        Ok(x)
    }
}

/// Seeded initialization of a single backbone.
pub fn init_params(seed: u64, plan: &BackbonePlan) -> BackboneParams {
    let mut params = BackboneParams::zeros(plan);
    let mut rng = SplitMix64::new(seed);
    init_in_order(params.named_params_mut().into_iter().map(|(_, p)| p), &mut rng);
    params
}

/// Weights uniform in ±1/√fan_in, drawn in the given order; biases
/// (rank-1 tensors) are zero and consume no draws.
pub(crate) fn init_in_order<'a>(params: impl IntoIterator<Item = &'a mut Param>, rng: &mut SplitMix64) {
    for p in params {
        if p.shape.len() <= 1 {
            p.data.fill(0.0);
            continue;
        }
        let bound = 1.0 / (p.fan_in() as f64).sqrt();
        for v in &mut p.data {
            *v = rng.symmetric(bound);
        }
    }
}

/// RGB frame to a 3-plane tensor with values `v/255 − 0.5`.
pub fn normalize_rgb(frame: &Frame) -> Tensor3 {
    let (w, h) = (frame.width, frame.height);
    let mut t = Tensor3::zeros(3, h, w);
    for y in 0..h {
        for x in 0..w {
            for c in 0..3 {
                *t.at_mut(c, y, x) = frame.get(x, y, c) as f64 / 255.0 - 0.5;
            }
        }
    }
    t
}

/// Accumulated motion in pixels, as a 2-plane tensor (no scaling).
pub fn motion_planes(acc: &AccumulatedPFrame) -> Tensor3 {
    Tensor3 {
        channels: 2,
        height: acc.height,
        width: acc.width,
        data: acc.motion.iter().map(|&v| v as f64).collect(),
    }
}

/// Motion-backbone input: accumulated displacement divided by the search range.
pub fn normalize_motion(acc: &AccumulatedPFrame, search_range: u8) -> Tensor3 {
    let s = search_range.max(1) as f64;
    let mut t = motion_planes(acc);
    t.data.iter_mut().for_each(|v| *v /= s);
    t
}

/// Residual-backbone input: accumulated residual divided by 255.
pub fn normalize_residual(acc: &AccumulatedPFrame) -> Tensor3 {
    Tensor3 {
        channels: 3,
        height: acc.height,
        width: acc.width,
        data: acc.residual.iter().map(|&v| v as f64 / 255.0).collect(),
    }
}

/// Average-pool every `cell × cell` block onto the feature grid
/// (⌈H/cell⌉ × ⌈W/cell⌉). Cells hanging off the bottom/right edge are padded
/// by replicating the last row/column, so every mean covers `cell²` samples.
pub fn resize_mean(field: &Tensor3, cell: usize) -> Tensor3 {
    let oh = field.height.div_ceil(cell);
    let ow = field.width.div_ceil(cell);
    let mut out = Tensor3::zeros(field.channels, oh, ow);
    let n = (cell * cell) as f64;
    for c in 0..field.channels {
        for oy in 0..oh {
            for ox in 0..ow {
                let mut sum = 0.0;
                for dy in 0..cell {
                    let y = (oy * cell + dy).min(field.height - 1);
                    for dx in 0..cell {
                        let x = (ox * cell + dx).min(field.width - 1);
                        sum += field.at(c, y, x);
                    }
                }
                *out.at_mut(c, oy, ox) = sum / n;
            }
        }
    }
    out
}

/// Resized motion guidance M^t: the accumulated per-pixel field pooled onto
/// the feature grid, still in pixel units.
pub fn resize_motion(acc: &AccumulatedPFrame, cell: usize) -> Tensor3 {
    resize_mean(&motion_planes(acc), cell)
}

/// Resized residual guidance R^t, pooled from the /255-normalized residual.
pub fn resize_residual(acc: &AccumulatedPFrame, cell: usize) -> Tensor3 {
    resize_mean(&normalize_residual(acc), cell)
}
