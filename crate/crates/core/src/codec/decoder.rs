use rayon::prelude::*;

use super::{Frame, Gop, GopStream, MotionField, RawVideo};
use crate::error::Result;

/// Motion-compensated prediction: every pixel copies the reference pixel its
/// macroblock vector points at, with coordinates clamped to the frame.
pub fn compensate(reference: &Frame, motion: &MotionField) -> Frame {
    let mut out = reference.clone();
    for y in 0..reference.height {
        for x in 0..reference.width {
            let mv = motion.at_pixel(x, y);
            let sx = x as isize + mv.dx as isize;
            let sy = y as isize + mv.dy as isize;
            for c in 0..3 {
                out.set(x, y, c, reference.get_clamped(sx, sy, c));
            }
        }
    }
    out
}

/// Sequentially decode one GOP: I-frame followed by each P-frame.
pub fn decode_gop(gop: &Gop) -> Vec<Frame> {
    let mut frames = Vec::with_capacity(gop.frame_count());
    frames.push(gop.iframe.clone());
    for p in &gop.pframes {
        let prev = frames.last().expect("I-frame pushed first");
        let mut next = compensate(prev, &p.motion);
        for y in 0..next.height {
            for x in 0..next.width {
                for c in 0..3 {
                    let v = next.get(x, y, c) as i32 + p.residual.get(x, y, c) as i32;
                    next.set(x, y, c, v.clamp(0, 255) as u8);
                }
            }
        }
        frames.push(next);
    }
    frames
}

pub fn decode(stream: &GopStream) -> Result<RawVideo> {
    stream.validate()?;
    let per_gop: Vec<Vec<Frame>> = stream.gops.par_iter().map(decode_gop).collect();
    RawVideo::new(
        stream.width(),
        stream.height(),
        stream.header.fps,
        per_gop.into_iter().flatten().collect(),
    )
}
