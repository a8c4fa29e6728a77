//! Soft labels, rater selection, BCE and finite-difference micro-training.
//!
//! Training perturbs one scalar at a time and re-evaluates the mean BCE over
//! the dataset. To keep that affordable the forward pass is cached stage by
//! stage: a probe in the FCN only recomputes the perturbed output channel and
//! the layers after it, a probe in the classifier only the classifier. The
//! cached path is bit-identical to a full forward pass.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::annotation::BoundaryAnnotation;
use crate::codec::GopStream;
use crate::error::{Error, Result};
use crate::eval::prf;
use crate::model::{ModelConfig, ModelParams, Stage};
use crate::pipeline::{extract_timeline, head_trace, trace_from_sims, HeadTrace};
use crate::temporal::FrameTimeline;
use crate::tensor::{relu, Tensor3};

/// Hard cap on the number of trainable scalars.
pub const PARAM_BUDGET: usize = 2000;

const SCORE_CLIP: f64 = 1e-7;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SoftLabelConfig {
    /// Gaussian width α in timeline frames.
    pub alpha: f64,
    pub clamp_max: f64,
}

impl Default for SoftLabelConfig {
    fn default() -> Self {
        Self {
            alpha: 1.0,
            clamp_max: 1.0,
        }
    }
}

/// label[i] = min(clamp_max, Σ_l exp(−(l−i)² / 2α²)) over boundary frames l.
pub fn soft_labels(boundary_frames: &[usize], len: usize, cfg: &SoftLabelConfig) -> Result<Vec<f64>> {
    if !(cfg.alpha > 0.0) {
        return Err(Error::config("alpha must be positive"));
    }
    if let Some(&l) = boundary_frames.iter().find(|&&l| l >= len) {
        return Err(Error::Index { index: l, len });
    }
    let two_a2 = 2.0 * cfg.alpha * cfg.alpha;
    Ok((0..len)
        .map(|i| {
            let s: f64 = boundary_frames
                .iter()
                .map(|&l| {
                    let d = l as f64 - i as f64;
                    (-d * d / two_a2).exp()
                })
                .sum();
            s.min(cfg.clamp_max)
        })
        .collect())
}

/// Consistency of each rater: mean F1 at Rel.Dis. 0.05 against every other
/// rater. A sole rater scores 1.
pub fn rater_scores(ann: &BoundaryAnnotation) -> Result<Vec<f64>> {
    let n = ann.raters.len();
    if n == 1 {
        return Ok(vec![1.0]);
    }
    (0..n)
        .map(|r| {
            let mut sum = 0.0;
            for o in (0..n).filter(|&o| o != r) {
                sum += prf(&ann.raters[r], &ann.raters[o], ann.duration_s, 0.05)?.f1;
            }
            Ok(sum / (n - 1) as f64)
        })
        .collect()
}

/// The `top_n` most consistent raters, ties broken by lower index; returned
/// in rank order.
pub fn select_raters(ann: &BoundaryAnnotation, top_n: usize) -> Result<Vec<usize>> {
    if top_n == 0 || top_n > ann.raters.len() {
        return Err(Error::config(format!(
            "top_n = {top_n} but the annotation has {} raters",
            ann.raters.len()
        )));
    }
    let scores = rater_scores(ann)?;
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    order.truncate(top_n);
    Ok(order)
}

/// Union of the selected raters' boundaries, each mapped to the nearest
/// timeline frame; sorted and deduplicated.
pub fn boundary_frames(timeline: &FrameTimeline, ann: &BoundaryAnnotation, raters: &[usize]) -> Vec<usize> {
    let mut frames: Vec<usize> = raters
        .iter()
        .flat_map(|&r| ann.raters[r].iter().map(|&t| timeline.nearest(t)))
        .collect();
    frames.sort_unstable();
    frames.dedup();
    frames
}

/// Soft training labels for a timeline.
pub fn training_labels(
    timeline: &FrameTimeline,
    ann: &BoundaryAnnotation,
    top_n: usize,
    cfg: &SoftLabelConfig,
) -> Result<Vec<f64>> {
    let frames = if ann.raters.is_empty() {
        Vec::new()
    } else {
        boundary_frames(timeline, ann, &select_raters(ann, top_n.min(ann.raters.len()))?)
    };
    soft_labels(&frames, timeline.len(), cfg)
}

/// Mean binary cross-entropy, scores clipped to [1e-7, 1 − 1e-7].
pub fn bce_loss(scores: &[f64], labels: &[f64]) -> Result<f64> {
    if scores.len() != labels.len() {
        return Err(Error::shape(format!(
            "{} scores vs {} labels",
            scores.len(),
            labels.len()
        )));
    }
    if scores.is_empty() {
        return Ok(0.0);
    }
    let sum: f64 = scores
        .iter()
        .zip(labels)
        .map(|(&s, &y)| {
            let s = s.clamp(SCORE_CLIP, 1.0 - SCORE_CLIP);
            -(y * s.ln() + (1.0 - y) * (1.0 - s).ln())
        })
        .sum();
    Ok(sum / scores.len() as f64)
}

/// (f(x + h) − f(x − h)) / 2h.
pub fn central_difference(f: impl Fn(f64) -> f64, x: f64, h: f64) -> f64 {
    (f(x + h) - f(x - h)) / (2.0 * h)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub steps: usize,
    pub lr: f64,
    /// Finite-difference step h.
    pub fd_step: f64,
    /// Parameter groups that are updated; everything else stays at its
    /// initial value.
    pub stages: Vec<Stage>,
    pub top_n_raters: usize,
    /// Soft-label width α.
    pub alpha: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            steps: 200,
            lr: 0.5,
            fd_step: 1e-4,
            stages: vec![Stage::Fcn, Stage::Classifier],
            top_n_raters: 2,
            alpha: 1.0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.lr >= 0.0) || !self.lr.is_finite() {
            return Err(Error::config("train.lr must be finite and non-negative"));
        }
        if !(self.fd_step > 0.0) {
            return Err(Error::config("train.fd_step must be positive"));
        }
        if self.top_n_raters == 0 {
            return Err(Error::config("train.top_n_raters must be positive"));
        }
        if !(self.alpha > 0.0) {
            return Err(Error::config("train.alpha must be positive"));
        }
        Ok(())
    }

    pub fn soft_labels(&self) -> SoftLabelConfig {
        SoftLabelConfig {
            alpha: self.alpha,
            ..SoftLabelConfig::default()
        }
    }
}

/// How a perturbed loss is evaluated.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Recompute {
    /// Reuse cached activations upstream of the perturbed tensor.
    Cached,
    /// Run the whole pipeline from the compressed stream.
    Full,
}

/// One trainable scalar.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
struct Probe {
    stage: Stage,
    tensor: usize,
    elem: usize,
    /// Layer index inside the FCN / classifier.
    layer: usize,
    /// Output channel the scalar feeds.
    out: usize,
}

fn probes(params: &ModelParams, stages: &[Stage]) -> Vec<Probe> {
    let mut out = Vec::new();
    for (tensor, p) in params.named_params().into_iter().enumerate() {
        if !stages.contains(&p.stage) {
            continue;
        }
        // "<stage>.conv<j>.<weight|bias>" for the head; 0 elsewhere.
        let layer = p
            .name
            .split('.')
            .nth(1)
            .and_then(|s| s.strip_prefix("conv"))
            .and_then(|s| s.parse().ok())
            .unwrap_or(0);
        for elem in 0..p.param.len() {
            out.push(Probe {
                stage: p.stage,
                tensor,
                elem,
                layer,
                out: p.param.output_of(elem),
            });
        }
    }
    out
}

fn scalar_mut(params: &mut ModelParams, tensor: usize, elem: usize) -> &mut f64 {
    let mut list = params.named_params_mut();
    let p = list.swap_remove(tensor).param;
    &mut p.data[elem]
}

/// Forward state of one dataset item.
#[derive(Clone, Debug)]
struct ItemCache {
    timeline: FrameTimeline,
    trace: HeadTrace,
}

fn build_cache(params: &ModelParams, cfg: &ModelConfig, stream: &GopStream) -> Result<ItemCache> {
    let timeline = extract_timeline(params, cfg, stream)?;
    let trace = head_trace(params, cfg, &timeline)?;
    Ok(ItemCache { timeline, trace })
}

/// Scores with one FCN output channel recomputed from cached activations.
fn fcn_probe_scores(params: &ModelParams, cache: &HeadTrace, layer: usize, o: usize) -> Result<Vec<f64>> {
    let layers = &params.fcn.layers;
    let mut descriptors = Vec::with_capacity(cache.fcn.len());
    for (acts, sim) in cache.fcn.iter().zip(&cache.sims) {
        let input: &Tensor3 = if layer == 0 { &sim.0 } else { &acts[layer - 1] };
        let mut cur = acts[layer].clone();
        layers[layer].write_channel(input, o, &mut cur);
        cur.channel_mut(o).iter_mut().for_each(|v| *v = relu(*v));
        for l in &layers[layer + 1..] {
            cur = l.forward_relu(&cur)?;
        }
        descriptors.push(cur.spatial_mean());
    }
    Ok(params.classifier.output(&params.classifier.hidden(&descriptors)))
}

fn classifier_probe_scores(params: &ModelParams, cache: &HeadTrace, layer: usize, o: usize) -> Vec<f64> {
    let cls = &params.classifier;
    if layer == 0 {
        let mut hidden = cache.hidden.clone();
        cls.conv0.write_channel(&cache.descriptors, o, &mut hidden);
        hidden.iter_mut().for_each(|h| h[o] = relu(h[o]));
        cls.output(&hidden)
    } else {
        cls.output(&cache.hidden)
    }
}

fn item_scores(
    params: &ModelParams,
    cfg: &ModelConfig,
    probe: Probe,
    stream: &GopStream,
    cache: &ItemCache,
    mode: Recompute,
) -> Result<Vec<f64>> {
    if mode == Recompute::Full || probe.stage.is_frontend() {
        return Ok(build_cache(params, cfg, stream)?.trace.scores);
    }
    match probe.stage {
        Stage::Lstm => Ok(head_trace(params, cfg, &cache.timeline)?.scores),
        Stage::Fcn => fcn_probe_scores(params, &cache.trace, probe.layer, probe.out),
        _ => Ok(classifier_probe_scores(params, &cache.trace, probe.layer, probe.out)),
    }
}

fn probe_loss(
    params: &ModelParams,
    cfg: &ModelConfig,
    probe: Probe,
    dataset: &[(GopStream, Vec<f64>)],
    caches: &[ItemCache],
    mode: Recompute,
) -> Result<f64> {
    let mut sum = 0.0;
    for ((stream, labels), cache) in dataset.iter().zip(caches) {
        sum += bce_loss(&item_scores(params, cfg, probe, stream, cache, mode)?, labels)?;
    }
    Ok(sum / dataset.len() as f64)
}

fn mean_loss(caches: &[ItemCache], dataset: &[(GopStream, Vec<f64>)]) -> Result<f64> {
    let mut sum = 0.0;
    for (cache, (_, labels)) in caches.iter().zip(dataset) {
        sum += bce_loss(&cache.trace.scores, labels)?;
    }
    Ok(sum / dataset.len() as f64)
}

fn check_dataset(dataset: &[(GopStream, Vec<f64>)], caches: &[ItemCache]) -> Result<()> {
    for (i, ((_, labels), cache)) in dataset.iter().zip(caches).enumerate() {
        if labels.len() != cache.timeline.len() {
            return Err(Error::shape(format!(
                "item {i}: {} labels for a {}-frame timeline",
                labels.len(),
                cache.timeline.len()
            )));
        }
    }
    Ok(())
}

/// Mean BCE of the model over a dataset.
pub fn dataset_loss(params: &ModelParams, cfg: &ModelConfig, dataset: &[(GopStream, Vec<f64>)]) -> Result<f64> {
    let caches = dataset
        .iter()
        .map(|(s, _)| build_cache(params, cfg, s))
        .collect::<Result<Vec<_>>>()?;
    check_dataset(dataset, &caches)?;
    mean_loss(&caches, dataset)
}

fn check_budget(params: &ModelParams, stages: &[Stage]) -> Result<usize> {
    let n = params.count(stages);
    if n > PARAM_BUDGET {
        return Err(Error::config(format!(
            "{n} trainable parameters exceed the budget of {PARAM_BUDGET}"
        )));
    }
    Ok(n)
}

fn gradients_with(
    params: &ModelParams,
    cfg: &ModelConfig,
    dataset: &[(GopStream, Vec<f64>)],
    caches: &[ItemCache],
    probes: &[Probe],
    h: f64,
    mode: Recompute,
) -> Result<Vec<f64>> {
    probes
        .par_iter()
        .map_init(
            || params.clone(),
            |local, &probe| {
                let orig = *scalar_mut(local, probe.tensor, probe.elem);
                *scalar_mut(local, probe.tensor, probe.elem) = orig + h;
                let plus = probe_loss(local, cfg, probe, dataset, caches, mode);
                *scalar_mut(local, probe.tensor, probe.elem) = orig - h;
                let minus = probe_loss(local, cfg, probe, dataset, caches, mode);
                *scalar_mut(local, probe.tensor, probe.elem) = orig;
                Ok((plus? - minus?) / (2.0 * h))
            },
        )
        .collect()
}

/// Central finite-difference gradient of the mean BCE for every scalar in
/// `stages`, in parameter-name order (tensor by tensor, row-major).
pub fn finite_difference_gradients(
    params: &ModelParams,
    cfg: &ModelConfig,
    dataset: &[(GopStream, Vec<f64>)],
    stages: &[Stage],
    h: f64,
    mode: Recompute,
) -> Result<Vec<f64>> {
    check_budget(params, stages)?;
    let caches = dataset
        .iter()
        .map(|(s, _)| build_cache(params, cfg, s))
        .collect::<Result<Vec<_>>>()?;
    check_dataset(dataset, &caches)?;
    gradients_with(params, cfg, dataset, &caches, &probes(params, stages), h, mode)
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainOutcome {
    pub params: ModelParams,
    /// Mean BCE before the first step and after every step (`steps + 1` values).
    pub loss_trace: Vec<f64>,
}

/// Plain gradient descent with finite-difference gradients.
pub fn micro_train(
    params: &ModelParams,
    cfg: &ModelConfig,
    dataset: &[(GopStream, Vec<f64>)],
    train: &TrainConfig,
) -> Result<TrainOutcome> {
    train.validate()?;
    check_budget(params, &train.stages)?;
    if dataset.is_empty() {
        return Err(Error::config("training dataset is empty"));
    }
    let mut params = params.clone();
    let probes = probes(&params, &train.stages);
    let mut caches = dataset
        .iter()
        .map(|(s, _)| build_cache(&params, cfg, s))
        .collect::<Result<Vec<_>>>()?;
    check_dataset(dataset, &caches)?;
    let mut loss_trace = vec![mean_loss(&caches, dataset)?];
    let head_only = train.stages.iter().all(|s| matches!(s, Stage::Fcn | Stage::Classifier));
    for _ in 0..train.steps {
        let grads = gradients_with(&params, cfg, dataset, &caches, &probes, train.fd_step, Recompute::Cached)?;
        for (probe, g) in probes.iter().zip(&grads) {
            *scalar_mut(&mut params, probe.tensor, probe.elem) -= train.lr * g;
        }
        // Frozen timeline and LSTM: only the FCN onwards needs refreshing.
        caches = if head_only {
            caches
                .into_iter()
                .map(|c| {
                    Ok(ItemCache {
                        trace: trace_from_sims(&params, c.trace.sims)?,
                        timeline: c.timeline,
                    })
                })
                .collect::<Result<Vec<_>>>()?
        } else {
            dataset
                .iter()
                .map(|(s, _)| build_cache(&params, cfg, s))
                .collect::<Result<Vec<_>>>()?
        };
        loss_trace.push(mean_loss(&caches, dataset)?);
    }
    Ok(TrainOutcome { params, loss_trace })
}

/// Loss trace as `step,loss` CSV.
pub fn loss_trace_csv(trace: &[f64]) -> String {
    let mut s = String::from("step,loss\n");
    for (i, l) in trace.iter().enumerate() {
        s.push_str(&format!("{i},{l:.12}\n"));
    }
    s
}
