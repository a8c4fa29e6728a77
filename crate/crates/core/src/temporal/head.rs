use super::GroupSimilarityMap;
use crate::error::{Error, Result};
use crate::tensor::{relu, sigmoid, Conv1d, Conv2d, Param, Tensor3};

/// Four 3×3 conv-ReLU layers over the similarity map: G → w → w → w → C'.
#[derive(Clone, Debug, PartialEq)]
pub struct FcnParams {
    pub layers: [Conv2d; 4],
}

impl FcnParams {
    pub fn zeros(groups: usize, width: usize, descriptor: usize) -> Self {
        Self {
            layers: [
                Conv2d::zeros(groups, width, 1),
                Conv2d::zeros(width, width, 1),
                Conv2d::zeros(width, width, 1),
                Conv2d::zeros(width, descriptor, 1),
            ],
        }
    }

    pub fn descriptor_len(&self) -> usize {
        self.layers[3].out_channels()
    }

    pub fn named_params(&self) -> Vec<(String, &Param)> {
        self.layers
            .iter()
            .enumerate()
            .flat_map(|(i, l)| {
                [
                    (format!("conv{i}.weight"), &l.weight),
                    (format!("conv{i}.bias"), &l.bias),
                ]
            })
            .collect()
    }

    pub fn named_params_mut(&mut self) -> Vec<(String, &mut Param)> {
        self.layers
            .iter_mut()
            .enumerate()
            .flat_map(|(i, l)| {
                [
                    (format!("conv{i}.weight"), &mut l.weight),
                    (format!("conv{i}.bias"), &mut l.bias),
                ]
            })
            .collect()
    }

    /// Every layer's activation, input excluded.
    pub fn activations(&self, sim: &GroupSimilarityMap) -> Result<Vec<Tensor3>> {
        let mut acts: Vec<Tensor3> = Vec::with_capacity(4);
        for layer in &self.layers {
            let input = acts.last().unwrap_or(&sim.0);
            acts.push(layer.forward_relu(input)?);
        }
        Ok(acts)
    }
}

/// Timeline classifier: conv1d(C' → w), ReLU, conv1d(w → 1), sigmoid.
#[derive(Clone, Debug, PartialEq)]
pub struct ClassifierParams {
    pub conv0: Conv1d,
    pub conv1: Conv1d,
}

impl ClassifierParams {
    pub fn zeros(descriptor: usize, width: usize) -> Self {
        Self {
            conv0: Conv1d::zeros(descriptor, width),
            conv1: Conv1d::zeros(width, 1),
        }
    }

    pub fn named_params(&self) -> Vec<(String, &Param)> {
        vec![
            ("conv0.weight".into(), &self.conv0.weight),
            ("conv0.bias".into(), &self.conv0.bias),
            ("conv1.weight".into(), &self.conv1.weight),
            ("conv1.bias".into(), &self.conv1.bias),
        ]
    }

    pub fn named_params_mut(&mut self) -> Vec<(String, &mut Param)> {
        vec![
            ("conv0.weight".into(), &mut self.conv0.weight),
            ("conv0.bias".into(), &mut self.conv0.bias),
            ("conv1.weight".into(), &mut self.conv1.weight),
            ("conv1.bias".into(), &mut self.conv1.bias),
        ]
    }

    /// Hidden layer activations (after ReLU), one vector per timeline frame.
    pub fn hidden(&self, descriptors: &[Vec<f64>]) -> Vec<Vec<f64>> {
        let mut h = self.conv0.forward(descriptors);
        h.iter_mut().flatten().for_each(|v| *v = relu(*v));
        h
    }

    pub fn output(&self, hidden: &[Vec<f64>]) -> Vec<f64> {
        self.conv1.forward(hidden).into_iter().map(|v| sigmoid(v[0])).collect()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct HeadParams {
    pub fcn: FcnParams,
    pub classifier: ClassifierParams,
}

/// FCN over one similarity map followed by a global spatial mean.
pub fn head_forward(params: &FcnParams, sim: &GroupSimilarityMap) -> Result<Vec<f64>> {
    if params.layers[0].in_channels() != sim.groups() {
        return Err(Error::shape(format!(
            "FCN expects {} groups, similarity map has {}",
            params.layers[0].in_channels(),
            sim.groups()
        )));
    }
    let acts = params.activations(sim)?;
    Ok(acts[3].spatial_mean())
}

/// Boundary score per timeline frame, each in (0, 1).
pub fn classify(params: &ClassifierParams, descriptors: &[Vec<f64>]) -> Result<Vec<f64>> {
    if let Some(d) = descriptors.iter().find(|d| d.len() != params.conv0.in_channels()) {
        return Err(Error::shape(format!(
            "classifier expects {}-dim descriptors, got {}",
            params.conv0.in_channels(),
            d.len()
        )));
    }
    Ok(params.output(&params.hidden(descriptors)))
}
