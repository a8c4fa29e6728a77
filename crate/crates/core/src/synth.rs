//! Synthetic clips with exactly known boundaries: flat-colored scenes, one
//! moving square sprite per segment, hard cuts between segments.

use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::annotation::BoundaryAnnotation;
use crate::codec::{Fps, Frame, RawVideo};
use crate::error::{Error, Result};
use crate::rng::SplitMix64;

/// Default τ_pix for [`baseline_detector`]: mean absolute difference per
/// 8-bit sample.
pub const DEFAULT_BASELINE_TAU: f64 = 12.0;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpriteSpec {
    pub size: usize,
    /// Pixels per frame.
    pub velocity: (i32, i32),
    /// Top-left corner at the segment's first frame.
    pub start: (i32, i32),
    #[serde(default = "white")]
    pub color: [u8; 3],
}

fn white() -> [u8; 3] {
    [255, 255, 255]
}

/// Two-color background pattern.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PatternKind {
    VerticalStripes,
    HorizontalStripes,
    DiagonalStripes,
    Checker,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PatternSpec {
    pub kind: PatternKind,
    /// Stripe / square width in pixels.
    pub period: usize,
    pub color: [u8; 3],
}

impl PatternSpec {
    fn covers(&self, x: usize, y: usize) -> bool {
        let p = self.period.max(1);
        let cell = match self.kind {
            PatternKind::VerticalStripes => x / p,
            PatternKind::HorizontalStripes => y / p,
            PatternKind::DiagonalStripes => (x + y) / p,
            PatternKind::Checker => x / p + y / p,
        };
        cell % 2 == 1
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SegmentSpec {
    pub duration_frames: usize,
    pub background: [u8; 3],
    /// Optional pattern drawn over the background.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pattern: Option<PatternSpec>,
    pub sprite: SpriteSpec,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    pub video_id: String,
    pub width: usize,
    pub height: usize,
    pub fps: Fps,
    pub segments: Vec<SegmentSpec>,
    pub rater_count: usize,
    /// Standard deviation of rater jitter, seconds.
    pub rater_jitter_sd: f64,
    pub seed: u64,
}

impl SynthSpec {
    pub fn validate(&self) -> Result<()> {
        if self.width == 0 || self.height == 0 || self.width > u16::MAX as usize || self.height > u16::MAX as usize {
            return Err(Error::InvalidDimensions(format!("{}x{}", self.width, self.height)));
        }
        if self.segments.is_empty() {
            return Err(Error::config("synthetic spec has no segments"));
        }
        if self.segments.iter().any(|s| s.duration_frames == 0) {
            return Err(Error::config("segment durations must be at least 1 frame"));
        }
        if !(self.rater_jitter_sd >= 0.0) || !self.rater_jitter_sd.is_finite() {
            return Err(Error::config("rater_jitter_sd must be finite and non-negative"));
        }
        Fps::new(self.fps.num, self.fps.den)?;
        Ok(())
    }

    pub fn num_frames(&self) -> usize {
        self.segments.iter().map(|s| s.duration_frames).sum()
    }

    pub fn duration_s(&self) -> f64 {
        self.num_frames() as f64 / self.fps.as_f64()
    }

    /// Frames at which a new segment starts.
    pub fn junction_frames(&self) -> Vec<usize> {
        let mut at = 0;
        let mut out = Vec::new();
        for s in &self.segments[..self.segments.len() - 1] {
            at += s.duration_frames;
            out.push(at);
        }
        out
    }

    /// True boundary timestamps (junction frame / fps).
    pub fn true_boundaries(&self) -> Vec<f64> {
        let fps = self.fps.as_f64();
        self.junction_frames().into_iter().map(|f| f as f64 / fps).collect()
    }
}

fn render(spec: &SynthSpec, seg: &SegmentSpec, local: usize) -> Frame {
    let mut f = Frame::filled(spec.width, spec.height, seg.background);
    if let Some(pat) = &seg.pattern {
        for y in 0..spec.height {
            for x in 0..spec.width {
                if pat.covers(x, y) {
                    for (c, &v) in pat.color.iter().enumerate() {
                        f.set(x, y, c, v);
                    }
                }
            }
        }
    }
    let sp = &seg.sprite;
    let x0 = sp.start.0 as i64 + sp.velocity.0 as i64 * local as i64;
    let y0 = sp.start.1 as i64 + sp.velocity.1 as i64 * local as i64;
    for y in y0.max(0)..(y0 + sp.size as i64).min(spec.height as i64) {
        for x in x0.max(0)..(x0 + sp.size as i64).min(spec.width as i64) {
            for (c, &v) in sp.color.iter().enumerate() {
                f.set(x as usize, y as usize, c, v);
            }
        }
    }
    f
}

/// Render the clip and simulate its raters.
pub fn generate(spec: &SynthSpec) -> Result<(RawVideo, BoundaryAnnotation)> {
    spec.validate()?;
    let mut frames = Vec::with_capacity(spec.num_frames());
    for seg in &spec.segments {
        for local in 0..seg.duration_frames {
            frames.push(render(spec, seg, local));
        }
    }
    let video = RawVideo::new(spec.width, spec.height, spec.fps, frames)?;

    let duration = spec.duration_s();
    let truth = spec.true_boundaries();
    let normal = Normal::new(0.0, spec.rater_jitter_sd).map_err(|e| Error::config(e.to_string()))?;
    let mut rng = SplitMix64::new(spec.seed);
    let raters = (0..spec.rater_count)
        .map(|_| {
            let mut list: Vec<f64> = truth
                .iter()
                .map(|&t| (t + normal.sample(&mut rng)).clamp(0.0, duration))
                .collect();
            list.sort_by(f64::total_cmp);
            list
        })
        .collect();
    let ann = BoundaryAnnotation {
        video_id: spec.video_id.clone(),
        fps: spec.fps.as_f64(),
        num_frames: spec.num_frames(),
        duration_s: duration,
        raters,
    };
    Ok((video, ann))
}

pub fn generate_all(specs: &[SynthSpec]) -> Result<Vec<(RawVideo, BoundaryAnnotation)>> {
    specs.par_iter().map(generate).collect()
}

/// Mean absolute difference between consecutive frames, per 8-bit sample.
/// Entry `t` compares frame `t` with frame `t − 1`; entry 0 is 0.
pub fn frame_differences(video: &RawVideo) -> Vec<f64> {
    let mut d = vec![0.0; video.frames.len()];
    for t in 1..video.frames.len() {
        let (a, b) = (&video.frames[t - 1].data, &video.frames[t].data);
        let sum: u64 = a.iter().zip(b).map(|(&x, &y)| x.abs_diff(y) as u64).sum();
        d[t] = sum as f64 / a.len() as f64;
    }
    d
}

/// Pixel-difference detector: a boundary at frame `t` when the difference to
/// the previous frame exceeds `tau_pix` and is a strict maximum within ±2.
pub fn baseline_detector(video: &RawVideo, tau_pix: f64) -> Vec<f64> {
    let d = frame_differences(video);
    let fps = video.fps.as_f64();
    (1..d.len())
        .filter(|&t| {
            d[t] > tau_pix
                && (t.saturating_sub(2)..=(t + 2).min(d.len() - 1))
                    .filter(|&m| m != t)
                    .all(|m| d[t] > d[m])
        })
        .map(|t| t as f64 / fps)
        .collect()
}

fn random_color(rng: &mut SplitMix64) -> [u8; 3] {
    [0, 1, 2].map(|_| rng.range_inclusive(0, 255) as u8)
}

/// A background whose summed channel difference from `prev` is at least
/// `min_distance`; with `high_contrast` every channel jumps to the opposite
/// quarter of the range instead.
fn distinct_background(
    rng: &mut SplitMix64,
    prev: Option<[u8; 3]>,
    min_distance: u32,
    high_contrast: bool,
) -> [u8; 3] {
    if let (true, Some(p)) = (high_contrast, prev) {
        return p.map(|v| {
            if v < 128 {
                rng.range_inclusive(192, 255) as u8
            } else {
                rng.range_inclusive(0, 63) as u8
            }
        });
    }
    loop {
        let c = random_color(rng);
        let far = prev.is_none_or(|p| {
            let d: u32 = c.iter().zip(&p).map(|(a, b)| a.abs_diff(*b) as u32).sum();
            d >= min_distance
        });
        if far {
            return c;
        }
    }
}

/// A sprite that stays fully inside the frame for `frames` frames.
fn random_sprite(
    rng: &mut SplitMix64,
    width: usize,
    height: usize,
    frames: usize,
    max_speed: i64,
    background: [u8; 3],
) -> SpriteSpec {
    let size = rng.range_inclusive(6, 12) as usize;
    let span = frames.saturating_sub(1) as i64;
    let axis = |rng: &mut SplitMix64, extent: usize| -> (i32, i32) {
        let room = (extent - size) as i64;
        let vmax = (room / span.max(1)).min(max_speed);
        let v = rng.range_inclusive(-vmax, vmax);
        let (lo, hi) = if v >= 0 { (0, room - v * span) } else { (-v * span, room) };
        (rng.range_inclusive(lo, hi) as i32, v as i32)
    };
    let (x, vx) = axis(rng, width);
    let (y, vy) = axis(rng, height);
    let mut color = random_color(rng);
    while color.iter().zip(&background).map(|(a, b)| a.abs_diff(*b) as u32).sum::<u32>() < 120 {
        color = random_color(rng);
    }
    SpriteSpec {
        size,
        velocity: (vx, vy),
        start: (x, y),
        color,
    }
}

/// Knobs of a random hard-cut clip.
#[derive(Clone, Debug, PartialEq)]
pub struct CutFamily {
    pub width: usize,
    pub height: usize,
    pub fps: Fps,
    pub segments: (usize, usize),
    pub segment_frames: (usize, usize),
    pub rater_count: usize,
    pub rater_jitter_sd: f64,
    /// Largest sprite speed per axis, pixels per frame.
    pub max_speed: i64,
    /// Draw a random two-color pattern on every segment's background.
    pub textured: bool,
    /// Minimum summed RGB difference between consecutive backgrounds.
    pub min_background_distance: u32,
    /// Flip every background channel to the opposite quarter at each cut.
    pub high_contrast: bool,
}

impl CutFamily {
    /// 64×64 clips of 2–4 segments, 15–40 frames each, at 25 fps.
    pub fn hard_cut() -> Self {
        Self {
            width: 64,
            height: 64,
            fps: Fps { num: 25, den: 1 },
            segments: (2, 4),
            segment_frames: (15, 40),
            rater_count: 5,
            rater_jitter_sd: 0.04,
            max_speed: 3,
            textured: false,
            min_background_distance: 180,
            high_contrast: false,
        }
    }

    /// Short 64×48 clips for micro-training: 48 frames at 24 fps, one or two
    /// cuts.
    pub fn training() -> Self {
        Self {
            width: 64,
            height: 48,
            fps: Fps { num: 24, den: 1 },
            segments: (2, 3),
            segment_frames: (12, 24),
            rater_count: 3,
            rater_jitter_sd: 0.02,
            max_speed: 0,
            textured: false,
            min_background_distance: 180,
            high_contrast: false,
        }
    }

    pub fn spec(&self, video_id: String, seed: u64) -> SynthSpec {
        let mut rng = SplitMix64::new(seed);
        let n = rng.range_inclusive(self.segments.0 as i64, self.segments.1 as i64) as usize;
        let mut prev = None;
        let segments = (0..n)
            .map(|_| {
                let duration_frames =
                    rng.range_inclusive(self.segment_frames.0 as i64, self.segment_frames.1 as i64) as usize;
                let background = distinct_background(&mut rng, prev, self.min_background_distance, self.high_contrast);
                prev = Some(background);
                let pattern = self.textured.then(|| PatternSpec {
                    kind: [
                        PatternKind::VerticalStripes,
                        PatternKind::HorizontalStripes,
                        PatternKind::DiagonalStripes,
                        PatternKind::Checker,
                    ][rng.range_inclusive(0, 3) as usize],
                    period: rng.range_inclusive(3, 10) as usize,
                    color: random_color(&mut rng),
                });
                let sprite = random_sprite(
                    &mut rng,
                    self.width,
                    self.height,
                    duration_frames,
                    self.max_speed,
                    background,
                );
                SegmentSpec {
                    duration_frames,
                    background,
                    pattern,
                    sprite,
                }
            })
            .collect();
        SynthSpec {
            video_id,
            width: self.width,
            height: self.height,
            fps: self.fps,
            segments,
            rater_count: self.rater_count,
            rater_jitter_sd: self.rater_jitter_sd,
            seed: rng.next_u64(),
        }
    }

    /// `count` clips; clip `i` is seeded from `seed` and `i` only.
    pub fn suite(&self, prefix: &str, count: usize, seed: u64) -> Vec<SynthSpec> {
        let mut rng = SplitMix64::new(seed);
        (0..count)
            .map(|i| self.spec(format!("{prefix}{i:03}"), rng.next_u64()))
            .collect()
    }
}

/// The 30-clip hard-cut validation suite.
pub fn hard_cut_suite(count: usize, seed: u64) -> Vec<SynthSpec> {
    CutFamily::hard_cut().suite("cut", count, seed)
}
