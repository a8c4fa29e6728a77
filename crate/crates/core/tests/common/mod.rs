//! Independent oracles and input generators shared by the integration tests.
#![allow(dead_code)]

use lcvs::codec::{Fps, Frame, MotionField, MotionVector, RawVideo, MACROBLOCK};
use lcvs::rng::SplitMix64;
use lcvs::temporal::LstmParams;

/// Random clip: smooth gradient background, a drifting textured square and
/// sprinkled noise, so motion search has something real to find.
pub fn random_video(seed: u64, width: usize, height: usize, frames: usize) -> RawVideo {
    let mut rng = SplitMix64::new(seed);
    let base = [0, 1, 2].map(|_| rng.range_inclusive(0, 200) as i64);
    let (vx, vy) = (rng.range_inclusive(-3, 3), rng.range_inclusive(-3, 3));
    let size = rng.range_inclusive(4, 12);
    let (sx, sy) = (rng.range_inclusive(0, width as i64), rng.range_inclusive(0, height as i64));
    let out = (0..frames as i64)
        .map(|t| {
            let mut f = Frame::filled(width, height, [0, 0, 0]);
            for y in 0..height {
                for x in 0..width {
                    for (c, b) in base.iter().enumerate() {
                        let v = b + (x as i64 * 3 + y as i64 * 2 + t) % 56;
                        f.set(x, y, c, v.clamp(0, 255) as u8);
                    }
                }
            }
            let (x0, y0) = (sx + vx * t, sy + vy * t);
            for y in y0..y0 + size {
                for x in x0..x0 + size {
                    if (0..width as i64).contains(&x) && (0..height as i64).contains(&y) {
                        let v = (((x - x0) * 37 + (y - y0) * 11) % 255) as u8;
                        f.set(x as usize, y as usize, 0, v);
                        f.set(x as usize, y as usize, 1, 255 - v);
                    }
                }
            }
            for _ in 0..rng.range_inclusive(0, 6) {
                let x = rng.range_inclusive(0, width as i64 - 1) as usize;
                let y = rng.range_inclusive(0, height as i64 - 1) as usize;
                f.set(x, y, 2, rng.range_inclusive(0, 255) as u8);
            }
            f
        })
        .collect();
    RawVideo::new(width, height, Fps::new(25, 1).unwrap(), out).unwrap()
}

/// Exhaustive block matching: minimal SAD, ties to the smallest |dx|+|dy|,
/// then smallest dy, then smallest dx.
pub fn oracle_motion(reference: &Frame, cur: &Frame, range: i32) -> MotionField {
    let cols = cur.width.div_ceil(MACROBLOCK);
    let rows = cur.height.div_ceil(MACROBLOCK);
    let mut field = MotionField::zeros(cur.width, cur.height);
    for by in 0..rows {
        for bx in 0..cols {
            let mut best: Option<((u64, i32, i32, i32), (i32, i32))> = None;
            for dy in -range..=range {
                for dx in -range..=range {
                    let mut sad = 0u64;
                    for y in by * MACROBLOCK..((by + 1) * MACROBLOCK).min(cur.height) {
                        for x in bx * MACROBLOCK..((bx + 1) * MACROBLOCK).min(cur.width) {
                            for c in 0..3 {
                                let r = reference.get_clamped(x as isize + dx as isize, y as isize + dy as isize, c);
                                sad += (cur.get(x, y, c) as i64 - r as i64).unsigned_abs();
                            }
                        }
                    }
                    let key = (sad, dx.abs() + dy.abs(), dy, dx);
                    if best.is_none_or(|(k, _)| key < k) {
                        best = Some((key, (dx, dy)));
                    }
                }
            }
            let (dx, dy) = best.unwrap().1;
            field.vectors[by * cols + bx] = MotionVector::new(dx as i8, dy as i8);
        }
    }
    field
}

fn sig(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

fn affine(w: &[f64], b: &[f64], x: &[f64], u: usize) -> f64 {
    let n = x.len();
    let mut s = 0.0;
    for (k, xv) in x.iter().enumerate() {
        s += w[u * n + k] * xv;
    }
    s + b[u]
}

/// Stacked LSTM written straight from the gate equations:
/// i = σ(W_ii x + b_ii + W_hi h + b_hi), f, g (tanh), o likewise;
/// c' = f·c + i·g, h' = o·tanh(c').
pub fn literal_lstm(params: &LstmParams, seq: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let mut xs = seq.to_vec();
    for l in &params.layers {
        let n = l.b_ii.data.len();
        let mut h = vec![0.0; n];
        let mut c = vec![0.0; n];
        let mut ys = Vec::new();
        for x in &xs {
            let mut h2 = vec![0.0; n];
            let mut c2 = vec![0.0; n];
            for u in 0..n {
                let i = sig(affine(&l.w_ii.data, &l.b_ii.data, x, u) + affine(&l.w_hi.data, &l.b_hi.data, &h, u));
                let f = sig(affine(&l.w_if.data, &l.b_if.data, x, u) + affine(&l.w_hf.data, &l.b_hf.data, &h, u));
                let g = (affine(&l.w_ig.data, &l.b_ig.data, x, u) + affine(&l.w_hg.data, &l.b_hg.data, &h, u)).tanh();
                let o = sig(affine(&l.w_io.data, &l.b_io.data, x, u) + affine(&l.w_ho.data, &l.b_ho.data, &h, u));
                c2[u] = f * c[u] + i * g;
                h2[u] = o * c2[u].tanh();
            }
            h = h2;
            c = c2;
            ys.push(h.clone());
        }
        xs = ys;
    }
    xs
}

/// Randomize every LSTM tensor uniformly in [-scale, scale).
pub fn randomize_lstm(params: &mut LstmParams, rng: &mut SplitMix64, scale: f64) {
    for (_, p) in params.named_params_mut() {
        p.data.iter_mut().for_each(|v| *v = rng.symmetric(scale));
    }
}

/// Maximum matching by exhaustive search over which ground truth (if any)
/// each prediction takes.
pub fn brute_force_matching(preds: &[f64], gts: &[f64], len_s: f64, thr: f64) -> usize {
    fn go(i: usize, preds: &[f64], gts: &[f64], used: &mut Vec<bool>, len_s: f64, thr: f64) -> usize {
        if i == preds.len() {
            return 0;
        }
        let mut best = go(i + 1, preds, gts, used, len_s, thr);
        for j in 0..gts.len() {
            if !used[j] && (preds[i] - gts[j]).abs() / len_s <= thr {
                used[j] = true;
                best = best.max(1 + go(i + 1, preds, gts, used, len_s, thr));
                used[j] = false;
            }
        }
        best
    }
    go(0, preds, gts, &mut vec![false; gts.len()], len_s, thr)
}

pub fn random_map(rng: &mut SplitMix64, c: usize, h: usize, w: usize, scale: f64) -> lcvs::tensor::Tensor3 {
    let mut t = lcvs::tensor::Tensor3::zeros(c, h, w);
    t.data.iter_mut().for_each(|v| *v = rng.symmetric(scale));
    t
}

pub fn random_scam(rng: &mut SplitMix64, c: usize, g: usize, scale: f64) -> lcvs::scam::ScamParams {
    let mut p = lcvs::scam::ScamParams::zeros(c, g);
    for (_, t) in p.named_params_mut() {
        t.data.iter_mut().for_each(|v| *v = rng.symmetric(scale));
    }
    p
}

/// Every pipeline stage's output, serialized, for fixed seeds: raw video,
/// stream, decode, accumulation dump, detection, loss trace and weights.
pub fn pipeline_outputs(clips: usize, train_steps: usize) -> Vec<Vec<u8>> {
    use lcvs::backtrace::{accumulate, write_accumulated};
    use lcvs::codec::{decode, encode, serialize, write_raw_video, EncoderConfig};
    use lcvs::model::{ModelConfig, ModelParams, WeightsFile};
    use lcvs::pipeline::{detect, extract_timeline, DetectConfig};
    use lcvs::synth::{generate_all, hard_cut_suite};
    use lcvs::training::{loss_trace_csv, micro_train, training_labels, SoftLabelConfig, TrainConfig};

    let mut out = Vec::new();
    let clips = generate_all(&hard_cut_suite(clips, 21)).unwrap();
    let cfg = ModelConfig::tiny();
    let params = ModelParams::init(&cfg).unwrap();
    let mut data = Vec::new();
    for (v, ann) in &clips {
        out.push(write_raw_video(v));
        let s = encode(v, &EncoderConfig::default()).unwrap();
        out.push(serialize(&s));
        out.push(write_raw_video(&decode(&s).unwrap()));
        let acc: Vec<_> = s.gops.iter().map(|g| accumulate(g).unwrap()).collect();
        out.push(write_accumulated(s.width(), s.height(), &acc));
        let det = detect(&params, &cfg, &DetectConfig::default(), &s).unwrap();
        out.push(serde_json::to_vec(&det).unwrap());
        let tl = extract_timeline(&params, &cfg, &s).unwrap();
        data.push((s, training_labels(&tl, ann, 2, &SoftLabelConfig::default()).unwrap()));
    }
    let train = TrainConfig { steps: train_steps, ..TrainConfig::default() };
    let t = micro_train(&params, &cfg, &data, &train).unwrap();
    out.push(loss_trace_csv(&t.loss_trace).into_bytes());
    out.push(WeightsFile::from_model(&t.params, &cfg).to_json().unwrap().into_bytes());
    out
}

pub fn in_pool<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> T {
    rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap().install(f)
}
