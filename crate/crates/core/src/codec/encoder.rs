use rayon::prelude::*;

use super::{
    compensate, grid_dims, Frame, Gop, GopStream, MotionField, MotionVector, PFrame, RawVideo,
    ResidualPlane, StreamHeader, FLAG_LOSSY, FLAG_PARTIAL_GOP, MACROBLOCK,
};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct EncoderConfig {
    /// Frames per GOP, I-frame included.
    pub gop_size: usize,
    /// Full-search window radius in pixels.
    pub search_range: u8,
    /// Uniform residual quantizer step; `None` keeps residuals lossless.
    pub quant_step: Option<u16>,
}

impl Default for EncoderConfig {
    fn default() -> Self {
        Self {
            gop_size: 12,
            search_range: 7,
            quant_step: None,
        }
    }
}

impl EncoderConfig {
    pub fn validate(&self) -> Result<()> {
        if self.gop_size < 2 || self.gop_size > 256 {
            return Err(Error::config(format!("gop_size {} outside [2, 256]", self.gop_size)));
        }
        if !(1..=32).contains(&self.search_range) {
            return Err(Error::config(format!(
                "search_range {} outside [1, 32]",
                self.search_range
            )));
        }
        if self.quant_step == Some(0) {
            return Err(Error::config("quantizer step must be positive"));
        }
        Ok(())
    }
}

/// Encode a raw video. GOPs are independent once their I-frames are fixed,
/// so they are encoded in parallel; the output does not depend on the
/// thread count.
pub fn encode(raw: &RawVideo, cfg: &EncoderConfig) -> Result<GopStream> {
    cfg.validate()?;
    if raw.frames.is_empty() {
        return Err(Error::EmptyVideo);
    }
    if raw.width < MACROBLOCK || raw.height < MACROBLOCK {
        return Err(Error::InvalidDimensions(format!(
            "{}x{} is smaller than a {MACROBLOCK}x{MACROBLOCK} macroblock",
            raw.width, raw.height
        )));
    }
    if raw.width > u16::MAX as usize || raw.height > u16::MAX as usize {
        return Err(Error::InvalidDimensions(format!("{}x{}", raw.width, raw.height)));
    }
    let gops: Vec<Gop> = raw
        .frames
        .par_chunks(cfg.gop_size)
        .map(|chunk| encode_gop(chunk, cfg))
        .collect();

    let mut flags = 0;
    if cfg.quant_step.is_some() {
        flags |= FLAG_LOSSY;
    }
    if raw.frames.len() % cfg.gop_size != 0 {
        flags |= FLAG_PARTIAL_GOP;
    }
    Ok(GopStream {
        header: StreamHeader {
            width: raw.width as u16,
            height: raw.height as u16,
            fps: raw.fps,
            gop_count: gops.len() as u32,
            pframes_per_gop: (cfg.gop_size - 1) as u8,
            macroblock_size: MACROBLOCK as u8,
            search_range: cfg.search_range,
            flags,
        },
        gops,
    })
}

fn encode_gop(frames: &[Frame], cfg: &EncoderConfig) -> Gop {
    let iframe = frames[0].clone();
    let mut recon = iframe.clone();
    let mut pframes = Vec::with_capacity(frames.len() - 1);
    for src in &frames[1..] {
        let motion = estimate_motion(&recon, src, cfg.search_range);
        let pred = compensate(&recon, &motion);
        let mut residual = ResidualPlane::zeros(src.width, src.height);
        let mut next = pred.clone();
        for y in 0..src.height {
            for x in 0..src.width {
                for c in 0..3 {
                    let p = pred.get(x, y, c) as i32;
                    let diff = src.get(x, y, c) as i32 - p;
                    let coded = match cfg.quant_step {
                        None => diff,
                        Some(q) => quantize(diff, q as i32),
                    };
                    residual.set(x, y, c, coded as i16);
                    next.set(x, y, c, (p + coded).clamp(0, 255) as u8);
                }
            }
        }
        pframes.push(PFrame { motion, residual });
        recon = next;
    }
    Gop { iframe, pframes }
}

/// Round-to-nearest (half away from zero) reconstruction value, kept inside
/// the representable residual range.
fn quantize(diff: i32, q: i32) -> i32 {
    let level = if diff >= 0 {
        (diff + q / 2) / q
    } else {
        -((-diff + q / 2) / q)
    };
    (level * q).clamp(-255, 255)
}

/// Candidate displacements ordered by the tie-break rule: smallest
/// |dx|+|dy|, then smallest dy, then smallest dx.
fn candidates(range: i32) -> Vec<(i32, i32)> {
    let mut c: Vec<(i32, i32)> = (-range..=range)
        .flat_map(|dy| (-range..=range).map(move |dx| (dx, dy)))
        .collect();
    c.sort_by_key(|&(dx, dy)| (dx.abs() + dy.abs(), dy, dx));
    c
}

/// Full-search SAD motion estimation of `cur` against `reference`.
pub fn estimate_motion(reference: &Frame, cur: &Frame, search_range: u8) -> MotionField {
    let (cols, rows) = grid_dims(cur.width, cur.height);
    let cands = candidates(search_range as i32);
    let mut vectors = Vec::with_capacity(cols * rows);
    for by in 0..rows {
        for bx in 0..cols {
            let x0 = bx * MACROBLOCK;
            let y0 = by * MACROBLOCK;
            let x1 = (x0 + MACROBLOCK).min(cur.width);
            let y1 = (y0 + MACROBLOCK).min(cur.height);
            let mut best = (0, 0);
            let mut best_sad = u64::MAX;
            for &(dx, dy) in &cands {
                if let Some(sad) = block_sad(reference, cur, (x0, y0, x1, y1), dx, dy, best_sad) {
                    if sad < best_sad {
                        best_sad = sad;
                        best = (dx, dy);
                    }
                }
            }
            vectors.push(MotionVector::new(best.0 as i8, best.1 as i8));
        }
    }
    MotionField {
        cols,
        rows,
        vectors,
    }
}

/// SAD of one block against the displaced reference, or `None` once the
/// running sum reaches `limit` (it cannot win any more).
fn block_sad(
    reference: &Frame,
    cur: &Frame,
    (x0, y0, x1, y1): (usize, usize, usize, usize),
    dx: i32,
    dy: i32,
    limit: u64,
) -> Option<u64> {
    let mut sad = 0u64;
    for y in y0..y1 {
        let ry = y as isize + dy as isize;
        for x in x0..x1 {
            let rx = x as isize + dx as isize;
            for c in 0..3 {
                let a = cur.get(x, y, c) as i32;
                let b = reference.get_clamped(rx, ry, c) as i32;
                sad += (a - b).unsigned_abs() as u64;
            }
        }
        if sad >= limit {
            return None;
        }
    }
    Some(sad)
}
