//! Spatial-channel attention: I-frame features are re-weighted per channel
//! and pooled spatially under guidance from a P-frame signal (motion or
//! residual), and the P-frame features are pooled back under a weight map
//! predicted from their sum with the I-frame features.

use crate::backbone::FeatureMap;
use crate::error::{Error, Result};
use crate::tensor::{relu, sigmoid, softmax, Conv2d, Linear, Param, Tensor3};

/// Parameters of one attention branch (motion or residual).
#[derive(Clone, Debug, PartialEq)]
pub struct ScamParams {
    /// [x_I; x_G; guidance] (2C + g channels) → C
    pub enc0: Conv2d,
    /// C → C
    pub enc1: Conv2d,
    /// C → C/2
    pub fc1: Linear,
    /// C/2 → C
    pub fc2: Linear,
    /// C → 1
    pub spatial: Conv2d,
    /// C → C → C → 1, ReLU between layers
    pub refine: [Conv2d; 3],
}

impl ScamParams {
    pub fn zeros(channels: usize, guidance_channels: usize) -> Self {
        let reduced = (channels / 2).max(1);
        Self {
            enc0: Conv2d::zeros(2 * channels + guidance_channels, channels, 1),
            enc1: Conv2d::zeros(channels, channels, 1),
            fc1: Linear::zeros(channels, reduced),
            fc2: Linear::zeros(reduced, channels),
            spatial: Conv2d::zeros(channels, 1, 1),
            refine: [
                Conv2d::zeros(channels, channels, 1),
                Conv2d::zeros(channels, channels, 1),
                Conv2d::zeros(channels, 1, 1),
            ],
        }
    }

    pub fn channels(&self) -> usize {
        self.enc1.out_channels()
    }

    pub fn named_params(&self) -> Vec<(String, &Param)> {
        vec![
            ("enc0.weight".into(), &self.enc0.weight),
            ("enc0.bias".into(), &self.enc0.bias),
            ("enc1.weight".into(), &self.enc1.weight),
            ("enc1.bias".into(), &self.enc1.bias),
            ("fc1.weight".into(), &self.fc1.weight),
            ("fc1.bias".into(), &self.fc1.bias),
            ("fc2.weight".into(), &self.fc2.weight),
            ("fc2.bias".into(), &self.fc2.bias),
            ("spatial.weight".into(), &self.spatial.weight),
            ("spatial.bias".into(), &self.spatial.bias),
            ("refine0.weight".into(), &self.refine[0].weight),
            ("refine0.bias".into(), &self.refine[0].bias),
            ("refine1.weight".into(), &self.refine[1].weight),
            ("refine1.bias".into(), &self.refine[1].bias),
            ("refine2.weight".into(), &self.refine[2].weight),
            ("refine2.bias".into(), &self.refine[2].bias),
        ]
    }

    pub fn named_params_mut(&mut self) -> Vec<(String, &mut Param)> {
        let [r0, r1, r2] = &mut self.refine;
        vec![
            ("enc0.weight".into(), &mut self.enc0.weight),
            ("enc0.bias".into(), &mut self.enc0.bias),
            ("enc1.weight".into(), &mut self.enc1.weight),
            ("enc1.bias".into(), &mut self.enc1.bias),
            ("fc1.weight".into(), &mut self.fc1.weight),
            ("fc1.bias".into(), &mut self.fc1.bias),
            ("fc2.weight".into(), &mut self.fc2.weight),
            ("fc2.bias".into(), &mut self.fc2.bias),
            ("spatial.weight".into(), &mut self.spatial.weight),
            ("spatial.bias".into(), &mut self.spatial.bias),
            ("refine0.weight".into(), &mut r0.weight),
            ("refine0.bias".into(), &mut r0.bias),
            ("refine1.weight".into(), &mut r1.weight),
            ("refine1.bias".into(), &mut r1.bias),
            ("refine2.weight".into(), &mut r2.weight),
            ("refine2.bias".into(), &mut r2.bias),
        ]
    }
}

fn check_grids(maps: &[&Tensor3]) -> Result<()> {
    let first = maps[0];
    if maps.iter().any(|m| !m.same_grid(first)) {
        return Err(Error::shape("attention inputs must share one feature grid"));
    }
    Ok(())
}

/// z = conv(ReLU(conv([x_I; x_G; guidance]))), in exactly that order.
pub fn guidance_encode(
    params: &ScamParams,
    x_i: &FeatureMap,
    x_g: &FeatureMap,
    guidance: &Tensor3,
) -> Result<FeatureMap> {
    check_grids(&[x_i, x_g, guidance])?;
    let cat = Tensor3::concat(&[x_i, x_g, guidance])?;
    let hidden = params.enc0.forward_relu(&cat)?;
    params.enc1.forward(&hidden)
}

/// W_cha = sigmoid(W2·ReLU(W1·avgpool(z) + b1) + b2).
pub fn channel_weight(params: &ScamParams, z: &FeatureMap) -> Vec<f64> {
    let pooled = z.spatial_mean();
    let hidden: Vec<f64> = params.fc1.forward(&pooled).into_iter().map(relu).collect();
    params.fc2.forward(&hidden).into_iter().map(sigmoid).collect()
}

/// x_I scaled channel by channel.
pub fn apply_channel(x_i: &FeatureMap, weights: &[f64]) -> Result<FeatureMap> {
    if weights.len() != x_i.channels {
        return Err(Error::shape(format!(
            "{} channel weights for {} channels",
            weights.len(),
            x_i.channels
        )));
    }
    let mut out = x_i.clone();
    for (c, w) in weights.iter().enumerate() {
        out.channel_mut(c).iter_mut().for_each(|v| *v *= w);
    }
    Ok(out)
}

/// Softmax over all positions of a single-channel conv of z, row-major.
pub fn spatial_weight(params: &ScamParams, z: &FeatureMap) -> Result<Vec<f64>> {
    let logits = params.spatial.forward(z)?;
    Ok(softmax(&logits.data))
}

/// Per-channel weighted sum over the spatial grid.
pub fn attend(x: &FeatureMap, weights: &[f64]) -> Result<Vec<f64>> {
    if weights.len() != x.plane_len() {
        return Err(Error::shape(format!(
            "{} spatial weights for a {}x{} grid",
            weights.len(),
            x.height,
            x.width
        )));
    }
    Ok((0..x.channels)
        .map(|c| x.channel(c).iter().zip(weights).map(|(v, w)| v * w).sum())
        .collect())
}

/// Weight map predicted by the refine stack from `x_G + x_I`, softmax-normalized.
pub fn refine_weight(params: &ScamParams, x_g: &FeatureMap, x_i: &FeatureMap) -> Result<Vec<f64>> {
    check_grids(&[x_g, x_i])?;
    let sum = x_g.add(x_i)?;
    let h = params.refine[0].forward_relu(&sum)?;
    let h = params.refine[1].forward_relu(&h)?;
    let logits = params.refine[2].forward(&h)?;
    Ok(softmax(&logits.data))
}

/// Weighted pool of the P-frame features under the refine weight map.
pub fn bidirectional_refine(params: &ScamParams, x_g: &FeatureMap, x_i: &FeatureMap) -> Result<Vec<f64>> {
    let w = refine_weight(params, x_g, x_i)?;
    attend(x_g, &w)
}

/// One branch: attended I-frame features plus refined P-frame features.
pub fn branch_forward(
    params: &ScamParams,
    x_i: &FeatureMap,
    x_g: &FeatureMap,
    guidance: &Tensor3,
) -> Result<Vec<f64>> {
    let z = guidance_encode(params, x_i, x_g, guidance)?;
    let x_cha = apply_channel(x_i, &channel_weight(params, &z))?;
    let v_hat = attend(&x_cha, &spatial_weight(params, &z)?)?;
    let refined = bidirectional_refine(params, x_g, x_i)?;
    Ok(v_hat.iter().zip(&refined).map(|(a, b)| a + b).collect())
}

/// Fused P-frame descriptor ṽ = v_M + v_R.
#[allow(clippy::too_many_arguments)]
pub fn scam_forward(
    params_m: &ScamParams,
    params_r: &ScamParams,
    x_i: &FeatureMap,
    x_m: &FeatureMap,
    motion: &Tensor3,
    x_r: &FeatureMap,
    residual: &Tensor3,
) -> Result<Vec<f64>> {
    let v_m = branch_forward(params_m, x_i, x_m, motion)?;
    let v_r = branch_forward(params_r, x_i, x_r, residual)?;
    Ok(v_m.iter().zip(&v_r).map(|(a, b)| a + b).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn filled(c: usize, h: usize, w: usize, f: impl Fn(usize, usize, usize) -> f64) -> Tensor3 {
        let mut t = Tensor3::zeros(c, h, w);
        for ci in 0..c {
            for y in 0..h {
                for x in 0..w {
                    *t.at_mut(ci, y, x) = f(ci, y, x);
                }
            }
        }
        t
    }

    #[test]
    fn zero_params_give_half_channel_weights() {
        let p = ScamParams::zeros(4, 2);
        let z = filled(4, 3, 3, |c, y, x| (c + y * x) as f64);
        assert_eq!(channel_weight(&p, &z), vec![0.5; 4]);
    }

    #[test]
    fn large_output_bias_saturates_channel_weight() {
        let mut p = ScamParams::zeros(4, 2);
        p.fc2.bias.data.fill(10.0);
        let z = Tensor3::zeros(4, 2, 2);
        for w in channel_weight(&p, &z) {
            assert!((w - 0.999_954_602_131_297_6).abs() < 1e-12);
        }
    }

    #[test]
    fn apply_channel_scales_one_channel() {
        let x = filled(3, 2, 2, |c, y, x| (c * 4 + y * 2 + x) as f64 + 1.0);
        let out = apply_channel(&x, &[1.0, 0.25, 1.0]).unwrap();
        assert_eq!(out.channel(0), x.channel(0));
        assert_eq!(out.channel(2), x.channel(2));
        for (a, b) in out.channel(1).iter().zip(x.channel(1)) {
            assert_eq!(*a, b * 0.25);
        }
        assert_eq!(apply_channel(&x, &[1.0; 3]).unwrap(), x);
        assert!(apply_channel(&x, &[0.0; 3]).unwrap().data.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn constant_logits_give_uniform_spatial_weight() {
        let mut p = ScamParams::zeros(2, 2);
        p.spatial.bias.data[0] = 3.0;
        let w = spatial_weight(&p, &Tensor3::zeros(2, 3, 4)).unwrap();
        for v in w {
            assert!((v - 1.0 / 12.0).abs() < 1e-15);
        }
    }

    #[test]
    fn peak_logit_dominates() {
        // Logits +20 at one cell of a 2×2 grid, 0 elsewhere.
        let w = softmax(&[0.0, 20.0, 0.0, 0.0]);
        let expect = 1.0 / (1.0 + 3.0 * (-20.0f64).exp());
        assert!((w[1] - expect).abs() < 1e-15);
        let x = filled(2, 2, 2, |c, y, x| (c * 10 + y * 2 + x) as f64);
        let v = attend(&x, &w).unwrap();
        assert!((v[0] - 1.0).abs() < 1e-6);
        assert!((v[1] - 11.0).abs() < 1e-6);
    }

    #[test]
    fn attend_uniform_is_mean() {
        let x = filled(2, 2, 3, |c, y, x| (c + y * 3 + x) as f64);
        let v = attend(&x, &[1.0 / 6.0; 6]).unwrap();
        let m = x.spatial_mean();
        for (a, b) in v.iter().zip(&m) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_refine_stack_pools_uniformly() {
        let p = ScamParams::zeros(2, 2);
        let x_g = filled(2, 3, 3, |c, y, x| (c * 9 + y * 3 + x) as f64);
        let x_i = filled(2, 3, 3, |_, y, _| y as f64);
        let v = bidirectional_refine(&p, &x_g, &x_i).unwrap();
        let m = x_g.spatial_mean();
        for (a, b) in v.iter().zip(&m) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn grid_mismatch_is_shape_error() {
        let p = ScamParams::zeros(2, 2);
        let a = Tensor3::zeros(2, 2, 2);
        let b = Tensor3::zeros(2, 3, 2);
        assert!(matches!(guidance_encode(&p, &a, &b, &a), Err(Error::Shape(_))));
        assert!(matches!(bidirectional_refine(&p, &a, &b), Err(Error::Shape(_))));
    }
}
