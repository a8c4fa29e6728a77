//! Dense f64 tensors and the handful of layers the model is built from.
//!
//! Everything here is deliberately plain: row-major `Vec<f64>` storage and
//! loops with a fixed summation order, so forward passes are bit-reproducible.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A named-parameter payload: shape plus row-major data.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Param {
    pub shape: Vec<usize>,
    pub data: Vec<f64>,
}

impl Param {
    pub fn zeros(shape: &[usize]) -> Self {
        Self {
            shape: shape.to_vec(),
            data: vec![0.0; shape.iter().product()],
        }
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    /// Number of inputs feeding one output unit: product of all but the
    /// leading dimension.
    pub fn fan_in(&self) -> usize {
        self.shape.iter().skip(1).product::<usize>().max(1)
    }

    /// Leading-dimension index (output unit) that element `elem` belongs to.
    pub fn output_of(&self, elem: usize) -> usize {
        if self.shape.len() <= 1 {
            elem
        } else {
            elem / self.fan_in()
        }
    }
}

/// Channel-major rank-3 tensor (C × H × W).
#[derive(Clone, Debug, PartialEq)]
pub struct Tensor3 {
    pub channels: usize,
    pub height: usize,
    pub width: usize,
    pub data: Vec<f64>,
}

impl Tensor3 {
    pub fn zeros(channels: usize, height: usize, width: usize) -> Self {
        Self {
            channels,
            height,
            width,
            data: vec![0.0; channels * height * width],
        }
    }

    pub fn from_vec(channels: usize, height: usize, width: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != channels * height * width {
            return Err(Error::shape(format!(
                "{} values cannot form a {channels}x{height}x{width} tensor",
                data.len()
            )));
        }
        Ok(Self {
            channels,
            height,
            width,
            data,
        })
    }

    #[inline]
    pub fn plane_len(&self) -> usize {
        self.height * self.width
    }

    #[inline]
    pub fn at(&self, c: usize, y: usize, x: usize) -> f64 {
        self.data[(c * self.height + y) * self.width + x]
    }

    #[inline]
    pub fn at_mut(&mut self, c: usize, y: usize, x: usize) -> &mut f64 {
        &mut self.data[(c * self.height + y) * self.width + x]
    }

    pub fn channel(&self, c: usize) -> &[f64] {
        let n = self.plane_len();
        &self.data[c * n..(c + 1) * n]
    }

    pub fn channel_mut(&mut self, c: usize) -> &mut [f64] {
        let n = self.plane_len();
        &mut self.data[c * n..(c + 1) * n]
    }

    pub fn same_grid(&self, other: &Tensor3) -> bool {
        self.height == other.height && self.width == other.width
    }

    /// Per-channel spatial mean.
    pub fn spatial_mean(&self) -> Vec<f64> {
        let n = self.plane_len() as f64;
        (0..self.channels)
            .map(|c| self.channel(c).iter().sum::<f64>() / n)
            .collect()
    }

    /// Elementwise sum of two equally shaped tensors.
    pub fn add(&self, other: &Tensor3) -> Result<Tensor3> {
        if self.channels != other.channels || !self.same_grid(other) {
            return Err(Error::shape(format!(
                "cannot add {}x{}x{} and {}x{}x{}",
                self.channels, self.height, self.width, other.channels, other.height, other.width
            )));
        }
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect();
        Ok(Tensor3 { data, ..*self })
    }

    /// Channel-wise concatenation.
    pub fn concat(parts: &[&Tensor3]) -> Result<Tensor3> {
        let first = parts.first().ok_or_else(|| Error::shape("nothing to concatenate"))?;
        if parts.iter().any(|p| !p.same_grid(first)) {
            return Err(Error::shape("concatenated maps must share a spatial grid"));
        }
        let channels = parts.iter().map(|p| p.channels).sum();
        let mut data = Vec::with_capacity(channels * first.plane_len());
        for p in parts {
            data.extend_from_slice(&p.data);
        }
        Ok(Tensor3 {
            channels,
            height: first.height,
            width: first.width,
            data,
        })
    }

    pub fn relu_in_place(&mut self) {
        self.data.iter_mut().for_each(|v| *v = relu(*v));
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
}

#[inline]
pub fn relu(x: f64) -> f64 {
    if x > 0.0 {
        x
    } else {
        0.0
    }
}

#[inline]
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Max-shifted softmax over a flat slice.
pub fn softmax(values: &[f64]) -> Vec<f64> {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = values.iter().map(|v| (v - max).exp()).collect();
    let total: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / total).collect()
}

/// 3×3 convolution with zero padding 1.
#[derive(Clone, Debug, PartialEq)]
pub struct Conv2d {
    pub stride: usize,
    /// out × in × 3 × 3
    pub weight: Param,
    /// out
    pub bias: Param,
}

impl Conv2d {
    pub fn zeros(in_channels: usize, out_channels: usize, stride: usize) -> Self {
        Self {
            stride,
            weight: Param::zeros(&[out_channels, in_channels, 3, 3]),
            bias: Param::zeros(&[out_channels]),
        }
    }

    pub fn in_channels(&self) -> usize {
        self.weight.shape[1]
    }

    pub fn out_channels(&self) -> usize {
        self.weight.shape[0]
    }

    pub fn output_dims(&self, height: usize, width: usize) -> (usize, usize) {
        ((height - 1) / self.stride + 1, (width - 1) / self.stride + 1)
    }

    pub fn forward(&self, input: &Tensor3) -> Result<Tensor3> {
        if input.channels != self.in_channels() {
            return Err(Error::shape(format!(
                "conv expects {} input channels, got {}",
                self.in_channels(),
                input.channels
            )));
        }
        let (oh, ow) = self.output_dims(input.height, input.width);
        let mut out = Tensor3::zeros(self.out_channels(), oh, ow);
        let hwc = to_hwc(input);
        let mut taps = Vec::with_capacity(9 * input.channels);
        for o in 0..self.out_channels() {
            self.gather_taps(o, &mut taps);
            self.write_channel_hwc(&hwc, input.height, input.width, &taps, o, &mut out);
        }
        Ok(out)
    }

    /// Conv followed by ReLU.
    pub fn forward_relu(&self, input: &Tensor3) -> Result<Tensor3> {
        let mut out = self.forward(input)?;
        out.relu_in_place();
        Ok(out)
    }

    /// Recompute output channel `o` into an already-shaped output tensor.
    /// Summation order per output value: kernel row, kernel column, input
    /// channel, then bias.
    pub fn write_channel(&self, input: &Tensor3, o: usize, out: &mut Tensor3) {
        let mut taps = Vec::with_capacity(9 * input.channels);
        self.gather_taps(o, &mut taps);
        self.write_channel_hwc(&to_hwc(input), input.height, input.width, &taps, o, out);
    }

    /// Weights of output channel `o` reordered to [ky][kx][ic].
    fn gather_taps(&self, o: usize, taps: &mut Vec<f64>) {
        let in_c = self.in_channels();
        let w = &self.weight.data[o * in_c * 9..(o + 1) * in_c * 9];
        taps.clear();
        for k in 0..9 {
            taps.extend((0..in_c).map(|ic| w[ic * 9 + k]));
        }
    }

    fn write_channel_hwc(&self, hwc: &[f64], h: usize, w: usize, taps: &[f64], o: usize, out: &mut Tensor3) {
        let in_c = self.in_channels();
        let bias = self.bias.data[o];
        let (ow, oh) = (out.width, out.height);
        let plane = &mut out.data[o * oh * ow..(o + 1) * oh * ow];
        for oy in 0..oh {
            for ox in 0..ow {
                let mut acc = 0.0;
                for ky in 0..3 {
                    let iy = oy * self.stride + ky;
                    if iy == 0 || iy > h {
                        continue;
                    }
                    for kx in 0..3 {
                        let ix = ox * self.stride + kx;
                        if ix == 0 || ix > w {
                            continue;
                        }
                        let px = &hwc[((iy - 1) * w + ix - 1) * in_c..][..in_c];
                        let tk = &taps[(ky * 3 + kx) * in_c..][..in_c];
                        for (a, b) in tk.iter().zip(px) {
                            acc += a * b;
                        }
                    }
                }
                plane[oy * ow + ox] = acc + bias;
            }
        }
    }
}

/// Channel-major to pixel-major (H × W × C) copy.
fn to_hwc(t: &Tensor3) -> Vec<f64> {
    let plane = t.height * t.width;
    let mut out = vec![0.0; plane * t.channels];
    for c in 0..t.channels {
        for (p, &v) in t.channel(c).iter().enumerate() {
            out[p * t.channels + c] = v;
        }
    }
    out
}

/// Fully connected layer.
#[derive(Clone, Debug, PartialEq)]
pub struct Linear {
    /// out × in
    pub weight: Param,
    pub bias: Param,
}

impl Linear {
    pub fn zeros(in_features: usize, out_features: usize) -> Self {
        Self {
            weight: Param::zeros(&[out_features, in_features]),
            bias: Param::zeros(&[out_features]),
        }
    }

    pub fn forward(&self, input: &[f64]) -> Vec<f64> {
        let in_f = self.weight.shape[1];
        debug_assert_eq!(input.len(), in_f);
        self.weight
            .data
            .chunks(in_f)
            .zip(&self.bias.data)
            .map(|(row, b)| dot(row, input) + b)
            .collect()
    }
}

/// 1-D convolution along a sequence, kernel 3, zero padding 1.
/// Sequences are stored as `len` vectors of `channels` values.
#[derive(Clone, Debug, PartialEq)]
pub struct Conv1d {
    /// out × in × 3
    pub weight: Param,
    pub bias: Param,
}

impl Conv1d {
    pub fn zeros(in_channels: usize, out_channels: usize) -> Self {
        Self {
            weight: Param::zeros(&[out_channels, in_channels, 3]),
            bias: Param::zeros(&[out_channels]),
        }
    }

    pub fn in_channels(&self) -> usize {
        self.weight.shape[1]
    }

    pub fn out_channels(&self) -> usize {
        self.weight.shape[0]
    }

    pub fn forward(&self, seq: &[Vec<f64>]) -> Vec<Vec<f64>> {
        let mut out = vec![vec![0.0; self.out_channels()]; seq.len()];
        for o in 0..self.out_channels() {
            self.write_channel(seq, o, &mut out);
        }
        out
    }

    pub fn write_channel(&self, seq: &[Vec<f64>], o: usize, out: &mut [Vec<f64>]) {
        let in_c = self.in_channels();
        let len = seq.len() as isize;
        let wbase = o * in_c * 3;
        for (t, slot) in out.iter_mut().enumerate() {
            let mut acc = 0.0;
            for k in 0..3 {
                let src = t as isize + k as isize - 1;
                if src < 0 || src >= len {
                    continue;
                }
                let v = &seq[src as usize];
                for (ic, x) in v.iter().enumerate() {
                    acc += self.weight.data[wbase + ic * 3 + k] * x;
                }
            }
            slot[o] = acc + self.bias.data[o];
        }
    }
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stride_two_halves_with_ceiling() {
        let conv = Conv2d::zeros(1, 1, 2);
        assert_eq!(conv.output_dims(8, 8), (4, 4));
        assert_eq!(conv.output_dims(9, 7), (5, 4));
        assert_eq!(conv.output_dims(1, 1), (1, 1));
    }

    #[test]
    fn conv_matches_direct_sum() {
        let mut conv = Conv2d::zeros(2, 1, 1);
        for (i, w) in conv.weight.data.iter_mut().enumerate() {
            *w = (i as f64) * 0.1 - 0.5;
        }
        conv.bias.data[0] = 0.25;
        let input = Tensor3::from_vec(2, 3, 3, (0..18).map(|v| v as f64).collect()).unwrap();
        let out = conv.forward(&input).unwrap();
        // Brute force with explicit padding.
        for oy in 0..3 {
            for ox in 0..3 {
                let mut expect = 0.25;
                for ic in 0..2 {
                    for ky in 0..3 {
                        for kx in 0..3 {
                            let (iy, ix) = (oy as i32 + ky as i32 - 1, ox as i32 + kx as i32 - 1);
                            if (0..3).contains(&iy) && (0..3).contains(&ix) {
                                expect += conv.weight.data[ic * 9 + ky * 3 + kx]
                                    * input.at(ic, iy as usize, ix as usize);
                            }
                        }
                    }
                }
                assert!((out.at(0, oy, ox) - expect).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn conv1d_zero_pads_sequence_ends() {
        let mut conv = Conv1d::zeros(1, 1);
        conv.weight.data = vec![1.0, 10.0, 100.0];
        let seq = vec![vec![1.0], vec![2.0], vec![3.0]];
        let out = conv.forward(&seq);
        assert_eq!(out, vec![vec![210.0], vec![321.0], vec![32.0]]);
    }

    #[test]
    fn sigmoid_is_stable_at_extremes() {
        assert_eq!(sigmoid(0.0), 0.5);
        assert!(sigmoid(-800.0) >= 0.0);
        assert!(sigmoid(800.0) <= 1.0);
        assert!((sigmoid(10.0) - 0.999_954_602_131_297_6).abs() < 1e-15);
    }

    #[test]
    fn softmax_sums_to_one() {
        let w = softmax(&[1.0, 2.0, 3.0, -4.0]);
        assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-15);
    }
}
