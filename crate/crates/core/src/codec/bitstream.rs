//! Binary layout of a [`GopStream`]. All multi-byte values little-endian.
//!
//! ```text
//! "LCVS" | version u16 | width u16 | height u16 | fps_num u16 | fps_den u16
//! | gop_count u32 | pframes_per_gop u8 | macroblock_size u8
//! | mv_search_range u8 | flags u8
//! per GOP:   I-frame RGB24, 3·H·W bytes, row-major interleaved
//!   per P:   motion grid, rows·cols pairs of (i8 dx, i8 dy), row-major
//!            residual, 3·H·W i16, channel-major then row-major
//! ```
//!
//! The trailing partial GOP carries no explicit count: its P-frame count is
//! implied by the bytes that remain after its I-frame.

use super::{
    grid_dims, Fps, Frame, Gop, GopStream, MotionField, MotionVector, PFrame, ResidualPlane,
    StreamHeader, MACROBLOCK,
};
use crate::error::{Error, Result};

pub const STREAM_MAGIC: [u8; 4] = *b"LCVS";
pub const STREAM_VERSION: u16 = 1;
pub const HEADER_LEN: usize = 22;

pub fn serialize(stream: &GopStream) -> Vec<u8> {
    let h = &stream.header;
    let (w, ht) = (h.width as usize, h.height as usize);
    let (cols, rows) = grid_dims(w, ht);
    let pframes: usize = stream.gops.iter().map(|g| g.pframes.len()).sum();
    let mut out = Vec::with_capacity(
        HEADER_LEN + stream.gops.len() * 3 * w * ht + pframes * (2 * cols * rows + 6 * w * ht),
    );
    out.extend_from_slice(&STREAM_MAGIC);
    out.extend_from_slice(&STREAM_VERSION.to_le_bytes());
    out.extend_from_slice(&h.width.to_le_bytes());
    out.extend_from_slice(&h.height.to_le_bytes());
    out.extend_from_slice(&h.fps.num.to_le_bytes());
    out.extend_from_slice(&h.fps.den.to_le_bytes());
    out.extend_from_slice(&h.gop_count.to_le_bytes());
    out.extend_from_slice(&[h.pframes_per_gop, h.macroblock_size, h.search_range, h.flags]);
    for gop in &stream.gops {
        out.extend_from_slice(&gop.iframe.data);
        for p in &gop.pframes {
            for v in &p.motion.vectors {
                out.push(v.dx as u8);
                out.push(v.dy as u8);
            }
            for r in &p.residual.data {
                out.extend_from_slice(&r.to_le_bytes());
            }
        }
    }
    out
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.buf.len() - self.pos < n {
            return Err(Error::Truncated { offset: self.pos });
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    fn u16(&mut self) -> Result<u16> {
        let b = self.take(2)?;
        Ok(u16::from_le_bytes([b[0], b[1]]))
    }

    fn u32(&mut self) -> Result<u32> {
        let b = self.take(4)?;
        Ok(u32::from_le_bytes([b[0], b[1], b[2], b[3]]))
    }

    fn remaining(&self) -> usize {
        self.buf.len() - self.pos
    }
}

pub fn deserialize(bytes: &[u8]) -> Result<GopStream> {
    let mut r = Reader { buf: bytes, pos: 0 };
    let magic: [u8; 4] = match r.take(4) {
        Ok(m) => m.try_into().expect("four bytes"),
        Err(_) => {
            let mut found = [0u8; 4];
            found[..bytes.len()].copy_from_slice(bytes);
            if found[..bytes.len()] != STREAM_MAGIC[..bytes.len()] {
                return Err(Error::BadMagic {
                    expected: STREAM_MAGIC,
                    found,
                });
            }
            return Err(Error::Truncated { offset: 0 });
        }
    };
    if magic != STREAM_MAGIC {
        return Err(Error::BadMagic {
            expected: STREAM_MAGIC,
            found: magic,
        });
    }
    let version = r.u16()?;
    if version != STREAM_VERSION {
        return Err(Error::BadVersion(version));
    }
    let width = r.u16()?;
    let height = r.u16()?;
    let fps_num = r.u16()?;
    let fps_den = r.u16()?;
    let gop_count = r.u32()?;
    let pframes_per_gop = r.u8()?;
    let macroblock_size = r.u8()?;
    let search_range = r.u8()?;
    let flags = r.u8()?;
    let header = StreamHeader {
        width,
        height,
        fps: Fps {
            num: fps_num,
            den: fps_den,
        },
        gop_count,
        pframes_per_gop,
        macroblock_size,
        search_range,
        flags,
    };
    if macroblock_size as usize != MACROBLOCK {
        return Err(Error::CorruptStream {
            offset: 19,
            reason: format!("macroblock size {macroblock_size} (expected 16)"),
        });
    }
    if (width as usize) < MACROBLOCK || (height as usize) < MACROBLOCK {
        return Err(Error::CorruptStream {
            offset: 6,
            reason: format!("frame size {width}x{height} smaller than a macroblock"),
        });
    }
    if fps_num == 0 || fps_den == 0 {
        return Err(Error::CorruptStream {
            offset: 10,
            reason: "zero frame rate component".into(),
        });
    }
    if flags & !0b11 != 0 {
        return Err(Error::CorruptStream {
            offset: 21,
            reason: format!("unknown flag bits {flags:#04x}"),
        });
    }
    if gop_count == 0 {
        return Err(Error::CorruptStream {
            offset: 14,
            reason: "stream declares zero GOPs".into(),
        });
    }

    let (w, h) = (width as usize, height as usize);
    let (cols, rows) = grid_dims(w, h);
    let iframe_len = 3 * w * h;
    let motion_len = 2 * cols * rows;
    let pframe_len = motion_len + 2 * iframe_len;
    let t_enc = pframes_per_gop as usize;

    // Refuse absurd counts before allocating anything for them.
    let min_len = (gop_count as usize - 1)
        .saturating_mul(iframe_len + t_enc * pframe_len)
        .saturating_add(iframe_len);
    if r.remaining() < min_len {
        let full_gop = iframe_len + t_enc * pframe_len;
        let whole = r.remaining() / full_gop.max(1);
        return Err(Error::Truncated {
            offset: HEADER_LEN + whole * full_gop,
        });
    }

    let mut gops = Vec::with_capacity(gop_count as usize);
    for g in 0..gop_count as usize {
        let iframe = Frame {
            width: w,
            height: h,
            data: r.take(iframe_len)?.to_vec(),
        };
        let count = if g + 1 == gop_count as usize && header.partial_tail() {
            let rem = r.remaining();
            let n = rem / pframe_len;
            if rem % pframe_len != 0 {
                return Err(Error::Truncated {
                    offset: r.pos + n * pframe_len,
                });
            }
            if n >= t_enc {
                return Err(Error::CorruptStream {
                    offset: r.pos,
                    reason: format!("partial GOP carries {n} P-frames, expected fewer than {t_enc}"),
                });
            }
            n
        } else {
            t_enc
        };
        let mut pframes = Vec::with_capacity(count);
        for _ in 0..count {
            let mstart = r.pos;
            let raw = r.take(motion_len)?;
            let vectors: Vec<MotionVector> = raw
                .chunks_exact(2)
                .map(|p| MotionVector::new(p[0] as i8, p[1] as i8))
                .collect();
            if let Some(i) = vectors.iter().position(|v| {
                (v.dx as i32).abs() > search_range as i32 || (v.dy as i32).abs() > search_range as i32
            }) {
                return Err(Error::CorruptStream {
                    offset: mstart + 2 * i,
                    reason: "motion vector outside the search range".into(),
                });
            }
            let rstart = r.pos;
            let raw = r.take(2 * iframe_len)?;
            let data: Vec<i16> = raw
                .chunks_exact(2)
                .map(|p| i16::from_le_bytes([p[0], p[1]]))
                .collect();
            if let Some(i) = data.iter().position(|v| !(-255..=255).contains(v)) {
                return Err(Error::CorruptStream {
                    offset: rstart + 2 * i,
                    reason: format!("residual {} outside [-255, 255]", data[i]),
                });
            }
            pframes.push(PFrame {
                motion: MotionField {
                    cols,
                    rows,
                    vectors,
                },
                residual: ResidualPlane {
                    width: w,
                    height: h,
                    data,
                },
            });
        }
        gops.push(Gop { iframe, pframes });
    }
    if r.remaining() != 0 {
        return Err(Error::CorruptStream {
            offset: r.pos,
            reason: format!("{} trailing bytes", r.remaining()),
        });
    }
    Ok(GopStream { header, gops })
}
