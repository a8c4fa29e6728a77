//! Backtracing of chained P-frames onto their GOP's I-frame.
//!
//! A decoded P-frame depends on the previous reconstruction, which depends on
//! the one before, and so on back to the I-frame. `accumulate` composes those
//! hops in a single forward pass so that every P-frame is described by a
//! per-pixel displacement into the I-frame plus an accumulated residual.

use crate::codec::{Frame, Gop};
use crate::error::{Error, Result};

pub const ACC_MAGIC: [u8; 4] = *b"LCVA";

/// A P-frame expressed relative to the I-frame only.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AccumulatedPFrame {
    pub width: usize,
    pub height: usize,
    /// 2 × H × W: the dx plane then the dy plane, in pixels.
    pub motion: Vec<i32>,
    /// 3 × H × W, channel-major.
    pub residual: Vec<i32>,
    /// Index of this P-frame within its GOP's P-frame list (0-based; the
    /// source frame sits `source_index + 1` frames after the I-frame).
    pub source_index: usize,
}

impl AccumulatedPFrame {
    #[inline]
    pub fn displacement(&self, x: usize, y: usize) -> (i32, i32) {
        let i = y * self.width + x;
        (self.motion[i], self.motion[self.width * self.height + i])
    }

    #[inline]
    pub fn residual_at(&self, x: usize, y: usize, c: usize) -> i32 {
        self.residual[(c * self.height + y) * self.width + x]
    }
}

/// Compose the P-frames of `gop` onto its I-frame.
///
/// For pixel `p` at step `t` with macroblock vector `d`, the source pixel is
/// `q = clamp(p + d)`; then `acc_motion_t(p) = acc_motion_{t-1}(q) + (q - p)`
/// and `acc_residual_t(p) = acc_residual_{t-1}(q) + r_t(p)`. When `p + d` is
/// in bounds, `q - p == d`. Storing the clamped hop keeps `p + acc_motion(p)`
/// on the exact I-frame pixel the decoder ends up reading.
pub fn accumulate(gop: &Gop) -> Result<Vec<AccumulatedPFrame>> {
    let (w, h) = (gop.iframe.width, gop.iframe.height);
    let plane = w * h;
    let mut prev_motion = vec![0i32; 2 * plane];
    let mut prev_residual = vec![0i32; 3 * plane];
    let mut out = Vec::with_capacity(gop.pframes.len());
    for (t, p) in gop.pframes.iter().enumerate() {
        if p.residual.width != w || p.residual.height != h || p.residual.data.len() != 3 * plane {
            return Err(Error::shape(format!("P-frame {t} residual does not match {w}x{h}")));
        }
        let (cols, rows) = crate::codec::grid_dims(w, h);
        if p.motion.cols != cols || p.motion.rows != rows {
            return Err(Error::shape(format!("P-frame {t} motion grid does not match {w}x{h}")));
        }
        let mut motion = vec![0i32; 2 * plane];
        let mut residual = vec![0i32; 3 * plane];
        for y in 0..h {
            for x in 0..w {
                let mv = p.motion.at_pixel(x, y);
                let qx = (x as i32 + mv.dx as i32).clamp(0, w as i32 - 1) as usize;
                let qy = (y as i32 + mv.dy as i32).clamp(0, h as i32 - 1) as usize;
                let i = y * w + x;
                let q = qy * w + qx;
                motion[i] = prev_motion[q] + (qx as i32 - x as i32);
                motion[plane + i] = prev_motion[plane + q] + (qy as i32 - y as i32);
                for c in 0..3 {
                    residual[c * plane + i] =
                        prev_residual[c * plane + q] + p.residual.data[c * plane + i] as i32;
                }
            }
        }
        let frame = AccumulatedPFrame {
            width: w,
            height: h,
            motion,
            residual,
            source_index: t,
        };
        prev_motion.clone_from(&frame.motion);
        prev_residual.clone_from(&frame.residual);
        out.push(frame);
    }
    Ok(out)
}

/// Rebuild a P-frame from the I-frame and its accumulated fields:
/// `I[p + acc_motion(p)] + acc_residual(p)`, clamped to [0, 255].
pub fn reconstruct(iframe: &Frame, acc: &AccumulatedPFrame) -> Frame {
    let mut out = iframe.clone();
    for y in 0..acc.height {
        for x in 0..acc.width {
            let (dx, dy) = acc.displacement(x, y);
            let sx = x as isize + dx as isize;
            let sy = y as isize + dy as isize;
            for c in 0..3 {
                let v = iframe.get_clamped(sx, sy, c) as i32 + acc.residual_at(x, y, c);
                out.set(x, y, c, v.clamp(0, 255) as u8);
            }
        }
    }
    out
}

/// Indices of `count` P-frames out of `available`, spread uniformly with each
/// pick at the end of its bin: `floor((j+1)·available/count) − 1`.
/// 11 P-frames, 3 samples → {2, 6, 10}.
pub fn sample_indices(available: usize, count: usize) -> Result<Vec<usize>> {
    if count == 0 || count > available {
        return Err(Error::InvalidSampleCount {
            requested: count,
            available,
        });
    }
    Ok((0..count).map(|j| (j + 1) * available / count - 1).collect())
}

pub fn sample_pframes(acc: &[AccumulatedPFrame], count: usize) -> Result<Vec<&AccumulatedPFrame>> {
    Ok(sample_indices(acc.len(), count)?
        .into_iter()
        .map(|i| &acc[i])
        .collect())
}

/// Dump of accumulated planes, little-endian:
/// `"LCVA" | version u16 = 1 | width u16 | height u16 | gop_count u32`, then
/// per GOP `frames u8` and per frame `source_index u8`, the motion field as
/// 2·H·W i16 (dx plane, dy plane) and the residual as 3·H·W i16
/// (channel-major). Values outside the i16 range saturate.
pub fn write_accumulated(width: usize, height: usize, gops: &[Vec<AccumulatedPFrame>]) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(&ACC_MAGIC);
    out.extend_from_slice(&1u16.to_le_bytes());
    out.extend_from_slice(&(width as u16).to_le_bytes());
    out.extend_from_slice(&(height as u16).to_le_bytes());
    out.extend_from_slice(&(gops.len() as u32).to_le_bytes());
    let sat = |v: i32| v.clamp(i16::MIN as i32, i16::MAX as i32) as i16;
    for frames in gops {
        out.push(frames.len() as u8);
        for f in frames {
            out.push(f.source_index as u8);
            for v in f.motion.iter().chain(&f.residual) {
                out.extend_from_slice(&sat(*v).to_le_bytes());
            }
        }
    }
    out
}
