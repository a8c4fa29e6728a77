use crate::error::{Error, Result};

/// Per-frame descriptors in temporal order, with the source frame index each
/// one was taken from.
#[derive(Clone, Debug, PartialEq)]
pub struct FrameTimeline {
    pub vectors: Vec<Vec<f64>>,
    pub source_frames: Vec<usize>,
    pub fps: f64,
}

impl FrameTimeline {
    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn timestamps(&self) -> Vec<f64> {
        self.source_frames.iter().map(|&f| f as f64 / self.fps).collect()
    }

    /// Timeline position whose timestamp is closest to `t_s` (earlier wins ties).
    pub fn nearest(&self, t_s: f64) -> usize {
        let ts = self.timestamps();
        let mut best = 0;
        for (i, &v) in ts.iter().enumerate() {
            if (v - t_s).abs() < (ts[best] - t_s).abs() {
                best = i;
            }
        }
        best
    }
}

/// Descriptors for one GOP: the pooled I-frame features and, for each sampled
/// P-frame, its source frame index and fused descriptor.
#[derive(Clone, Debug, PartialEq)]
pub struct GopDescriptors {
    pub start_frame: usize,
    pub iframe: Vec<f64>,
    pub pframes: Vec<(usize, Vec<f64>)>,
}

/// Lay GOP descriptors out on one timeline: I-frame first, then its sampled
/// P-frames, GOP after GOP.
pub fn timeline_from_gops(gops: Vec<GopDescriptors>, fps: f64) -> Result<FrameTimeline> {
    let channels = gops.first().map_or(0, |g| g.iframe.len());
    let mut vectors = Vec::new();
    let mut source_frames = Vec::new();
    for g in gops {
        if g.iframe.len() != channels || g.pframes.iter().any(|(_, v)| v.len() != channels) {
            return Err(Error::shape("timeline descriptors differ in length"));
        }
        vectors.push(g.iframe);
        source_frames.push(g.start_frame);
        for (f, v) in g.pframes {
            vectors.push(v);
            source_frames.push(f);
        }
    }
    if source_frames.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::shape("timeline frames are not strictly increasing"));
    }
    Ok(FrameTimeline {
        vectors,
        source_frames,
        fps,
    })
}

/// Frames whose score reaches `threshold` and strictly exceeds every other
/// score within `radius` positions.
pub fn pick_peaks(scores: &[f64], threshold: f64, radius: usize) -> Vec<usize> {
    (0..scores.len())
        .filter(|&l| {
            let s = scores[l];
            s >= threshold
                && (l.saturating_sub(radius)..=(l + radius).min(scores.len() - 1))
                    .filter(|&m| m != l)
                    .all(|m| s > scores[m])
        })
        .collect()
}

/// Peak frames as timestamps `l / fps`.
pub fn scores_to_boundaries(scores: &[f64], fps: f64, threshold: f64, radius: usize) -> Vec<f64> {
    pick_peaks(scores, threshold, radius)
        .into_iter()
        .map(|l| l as f64 / fps)
        .collect()
}
