//! Two-layer LSTM over a bag of descriptors.
//!
//! `lstm_forward` evaluates the gate equations literally, one step and one
//! gate at a time. `lstm_forward_batch` runs many bags together with the
//! four gates fused into one matrix; it is what the pipeline uses and must
//! agree with the literal form to 1e-9.

use crate::tensor::{dot, sigmoid, Param};

#[derive(Clone, Debug, PartialEq)]
pub struct LstmLayer {
    pub w_ii: Param,
    pub w_if: Param,
    pub w_ig: Param,
    pub w_io: Param,
    pub w_hi: Param,
    pub w_hf: Param,
    pub w_hg: Param,
    pub w_ho: Param,
    pub b_ii: Param,
    pub b_if: Param,
    pub b_ig: Param,
    pub b_io: Param,
    pub b_hi: Param,
    pub b_hf: Param,
    pub b_hg: Param,
    pub b_ho: Param,
}

impl LstmLayer {
    pub fn zeros(input: usize, hidden: usize) -> Self {
        let wi = || Param::zeros(&[hidden, input]);
        let wh = || Param::zeros(&[hidden, hidden]);
        let b = || Param::zeros(&[hidden]);
        Self {
            w_ii: wi(),
            w_if: wi(),
            w_ig: wi(),
            w_io: wi(),
            w_hi: wh(),
            w_hf: wh(),
            w_hg: wh(),
            w_ho: wh(),
            b_ii: b(),
            b_if: b(),
            b_ig: b(),
            b_io: b(),
            b_hi: b(),
            b_hf: b(),
            b_hg: b(),
            b_ho: b(),
        }
    }

    pub fn input_size(&self) -> usize {
        self.w_ii.shape[1]
    }

    pub fn hidden_size(&self) -> usize {
        self.w_ii.shape[0]
    }

    pub fn named_params(&self) -> Vec<(String, &Param)> {
        vec![
            ("w_ii".into(), &self.w_ii),
            ("w_if".into(), &self.w_if),
            ("w_ig".into(), &self.w_ig),
            ("w_io".into(), &self.w_io),
            ("w_hi".into(), &self.w_hi),
            ("w_hf".into(), &self.w_hf),
            ("w_hg".into(), &self.w_hg),
            ("w_ho".into(), &self.w_ho),
            ("b_ii".into(), &self.b_ii),
            ("b_if".into(), &self.b_if),
            ("b_ig".into(), &self.b_ig),
            ("b_io".into(), &self.b_io),
            ("b_hi".into(), &self.b_hi),
            ("b_hf".into(), &self.b_hf),
            ("b_hg".into(), &self.b_hg),
            ("b_ho".into(), &self.b_ho),
        ]
    }

    pub fn named_params_mut(&mut self) -> Vec<(String, &mut Param)> {
        vec![
            ("w_ii".into(), &mut self.w_ii),
            ("w_if".into(), &mut self.w_if),
            ("w_ig".into(), &mut self.w_ig),
            ("w_io".into(), &mut self.w_io),
            ("w_hi".into(), &mut self.w_hi),
            ("w_hf".into(), &mut self.w_hf),
            ("w_hg".into(), &mut self.w_hg),
            ("w_ho".into(), &mut self.w_ho),
            ("b_ii".into(), &mut self.b_ii),
            ("b_if".into(), &mut self.b_if),
            ("b_ig".into(), &mut self.b_ig),
            ("b_io".into(), &mut self.b_io),
            ("b_hi".into(), &mut self.b_hi),
            ("b_hf".into(), &mut self.b_hf),
            ("b_hg".into(), &mut self.b_hg),
            ("b_ho".into(), &mut self.b_ho),
        ]
    }

    /// Gate pre-activation `W_x·x + b_x + W_h·h + b_h`, one unit at a time.
    fn gate(&self, wx: &Param, bx: &Param, wh: &Param, bh: &Param, x: &[f64], h: &[f64]) -> Vec<f64> {
        let (n_in, n_h) = (self.input_size(), self.hidden_size());
        (0..n_h)
            .map(|u| {
                dot(&wx.data[u * n_in..(u + 1) * n_in], x)
                    + bx.data[u]
                    + dot(&wh.data[u * n_h..(u + 1) * n_h], h)
                    + bh.data[u]
            })
            .collect()
    }

    /// One literal step; returns (h, c).
    pub fn step(&self, x: &[f64], h_prev: &[f64], c_prev: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let i: Vec<f64> = self
            .gate(&self.w_ii, &self.b_ii, &self.w_hi, &self.b_hi, x, h_prev)
            .into_iter()
            .map(sigmoid)
            .collect();
        let f: Vec<f64> = self
            .gate(&self.w_if, &self.b_if, &self.w_hf, &self.b_hf, x, h_prev)
            .into_iter()
            .map(sigmoid)
            .collect();
        let g: Vec<f64> = self
            .gate(&self.w_ig, &self.b_ig, &self.w_hg, &self.b_hg, x, h_prev)
            .into_iter()
            .map(f64::tanh)
            .collect();
        let o: Vec<f64> = self
            .gate(&self.w_io, &self.b_io, &self.w_ho, &self.b_ho, x, h_prev)
            .into_iter()
            .map(sigmoid)
            .collect();
        let c: Vec<f64> = (0..c_prev.len()).map(|u| f[u] * c_prev[u] + i[u] * g[u]).collect();
        let h = (0..c.len()).map(|u| o[u] * c[u].tanh()).collect();
        (h, c)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LstmParams {
    pub layers: Vec<LstmLayer>,
}

impl LstmParams {
    /// Two layers, input and hidden size both `channels`.
    pub fn zeros(channels: usize) -> Self {
        Self {
            layers: vec![LstmLayer::zeros(channels, channels), LstmLayer::zeros(channels, channels)],
        }
    }

    pub fn named_params(&self) -> Vec<(String, &Param)> {
        self.layers
            .iter()
            .enumerate()
            .flat_map(|(i, l)| {
                l.named_params()
                    .into_iter()
                    .map(move |(n, p)| (format!("l{i}.{n}"), p))
            })
            .collect()
    }

    pub fn named_params_mut(&mut self) -> Vec<(String, &mut Param)> {
        self.layers
            .iter_mut()
            .enumerate()
            .flat_map(|(i, l)| {
                l.named_params_mut()
                    .into_iter()
                    .map(move |(n, p)| (format!("l{i}.{n}"), p))
            })
            .collect()
    }
}

/// Literal evaluation of the stacked recurrence from zero initial states.
/// Returns the last layer's hidden state at every step.
pub fn lstm_forward(params: &LstmParams, sequence: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let mut inputs = sequence.to_vec();
    for layer in &params.layers {
        let n = layer.hidden_size();
        let (mut h, mut c) = (vec![0.0; n], vec![0.0; n]);
        let mut outputs = Vec::with_capacity(inputs.len());
        for x in &inputs {
            let (h_next, c_next) = layer.step(x, &h, &c);
            h = h_next;
            c = c_next;
            outputs.push(h.clone());
        }
        inputs = outputs;
    }
    inputs
}

/// One layer's gates packed as rows [i; f; g; o] over the joint input
/// `[x; h]`, with both bias vectors folded together.
struct FusedLayer {
    n_in: usize,
    n_h: usize,
    weight: Vec<f64>,
    bias: Vec<f64>,
}

impl FusedLayer {
    fn new(layer: &LstmLayer) -> Self {
        let (n_in, n_h) = (layer.input_size(), layer.hidden_size());
        let cols = n_in + n_h;
        let mut weight = Vec::with_capacity(4 * n_h * cols);
        let mut bias = Vec::with_capacity(4 * n_h);
        let gates = [
            (&layer.w_ii, &layer.w_hi, &layer.b_ii, &layer.b_hi),
            (&layer.w_if, &layer.w_hf, &layer.b_if, &layer.b_hf),
            (&layer.w_ig, &layer.w_hg, &layer.b_ig, &layer.b_hg),
            (&layer.w_io, &layer.w_ho, &layer.b_io, &layer.b_ho),
        ];
        for (wx, wh, bx, bh) in gates {
            for u in 0..n_h {
                weight.extend_from_slice(&wx.data[u * n_in..(u + 1) * n_in]);
                weight.extend_from_slice(&wh.data[u * n_h..(u + 1) * n_h]);
                bias.push(bx.data[u] + bh.data[u]);
            }
        }
        Self { n_in, n_h, weight, bias }
    }
}

/// Batched evaluation over many equally long sequences.
pub fn lstm_forward_batch(params: &LstmParams, sequences: &[Vec<Vec<f64>>]) -> Vec<Vec<Vec<f64>>> {
    let mut inputs: Vec<Vec<Vec<f64>>> = sequences.to_vec();
    for layer in &params.layers {
        let fused = FusedLayer::new(layer);
        let (n_in, n_h) = (fused.n_in, fused.n_h);
        let cols = n_in + n_h;
        let mut joint = vec![0.0; cols];
        let mut pre = vec![0.0; 4 * n_h];
        inputs = inputs
            .iter()
            .map(|seq| {
                let mut h = vec![0.0; n_h];
                let mut c = vec![0.0; n_h];
                seq.iter()
                    .map(|x| {
                        joint[..n_in].copy_from_slice(x);
                        joint[n_in..].copy_from_slice(&h);
                        for (r, p) in pre.iter_mut().enumerate() {
                            *p = dot(&fused.weight[r * cols..(r + 1) * cols], &joint) + fused.bias[r];
                        }
                        for u in 0..n_h {
                            let i = sigmoid(pre[u]);
                            let f = sigmoid(pre[n_h + u]);
                            let g = pre[2 * n_h + u].tanh();
                            let o = sigmoid(pre[3 * n_h + u]);
                            c[u] = f * c[u] + i * g;
                            h[u] = o * c[u].tanh();
                        }
                        h.clone()
                    })
                    .collect()
            })
            .collect();
    }
    inputs
}
