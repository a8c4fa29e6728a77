//! Uncompressed video container:
//! `"LCVR" | width u16 | height u16 | fps_num u16 | fps_den u16 | frames u32`
//! followed by each frame as three planes (R, G, B), row-major.

use super::{Fps, Frame, RawVideo};
use crate::error::{Error, Result};

pub const RAW_MAGIC: [u8; 4] = *b"LCVR";
const RAW_HEADER_LEN: usize = 16;

pub fn write_raw_video(video: &RawVideo) -> Vec<u8> {
    let plane = video.width * video.height;
    let mut out = Vec::with_capacity(RAW_HEADER_LEN + video.frames.len() * 3 * plane);
    out.extend_from_slice(&RAW_MAGIC);
    out.extend_from_slice(&(video.width as u16).to_le_bytes());
    out.extend_from_slice(&(video.height as u16).to_le_bytes());
    out.extend_from_slice(&video.fps.num.to_le_bytes());
    out.extend_from_slice(&video.fps.den.to_le_bytes());
    out.extend_from_slice(&(video.frames.len() as u32).to_le_bytes());
    for f in &video.frames {
        for c in 0..3 {
            out.extend(f.data.iter().skip(c).step_by(3));
        }
    }
    out
}

pub fn read_raw_video(bytes: &[u8]) -> Result<RawVideo> {
    if bytes.len() < RAW_HEADER_LEN {
        if bytes.len() >= 4 && bytes[..4] != RAW_MAGIC {
            return Err(Error::BadMagic {
                expected: RAW_MAGIC,
                found: bytes[..4].try_into().expect("four bytes"),
            });
        }
        return Err(Error::Truncated { offset: 0 });
    }
    let magic: [u8; 4] = bytes[..4].try_into().expect("four bytes");
    if magic != RAW_MAGIC {
        return Err(Error::BadMagic {
            expected: RAW_MAGIC,
            found: magic,
        });
    }
    let u16_at = |o: usize| u16::from_le_bytes([bytes[o], bytes[o + 1]]);
    let width = u16_at(4) as usize;
    let height = u16_at(6) as usize;
    let fps = Fps::new(u16_at(8), u16_at(10)).map_err(|_| Error::CorruptStream {
        offset: 8,
        reason: "zero frame rate component".into(),
    })?;
    let count = u32::from_le_bytes(bytes[12..16].try_into().expect("four bytes")) as usize;
    let plane = width * height;
    let frame_len = 3 * plane;
    let body = &bytes[RAW_HEADER_LEN..];
    if body.len() < count * frame_len {
        return Err(Error::Truncated {
            offset: RAW_HEADER_LEN + (body.len() / frame_len.max(1)) * frame_len,
        });
    }
    if body.len() > count * frame_len {
        return Err(Error::CorruptStream {
            offset: RAW_HEADER_LEN + count * frame_len,
            reason: "trailing bytes".into(),
        });
    }
    let frames = body
        .chunks_exact(frame_len.max(1))
        .take(count)
        .map(|planar| {
            let mut data = vec![0u8; frame_len];
            for c in 0..3 {
                for (i, v) in planar[c * plane..(c + 1) * plane].iter().enumerate() {
                    data[i * 3 + c] = *v;
                }
            }
            Frame {
                width,
                height,
                data,
            }
        })
        .collect();
    RawVideo::new(width, height, fps, frames)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn raw_file_roundtrip() {
        let mut f = Frame::filled(3, 2, [1, 2, 3]);
        f.set(2, 1, 0, 200);
        let v = RawVideo::new(3, 2, Fps::new(30, 1).unwrap(), vec![f.clone(), f]).unwrap();
        let bytes = write_raw_video(&v);
        assert_eq!(&bytes[..4], b"LCVR");
        // Planar: the R plane of frame 0 comes first.
        assert_eq!(&bytes[16..22], &[1, 1, 1, 1, 1, 200]);
        assert_eq!(read_raw_video(&bytes).unwrap(), v);
    }

    #[test]
    fn raw_file_rejects_truncation() {
        let v = RawVideo::new(2, 2, Fps::new(25, 1).unwrap(), vec![Frame::filled(2, 2, [9, 9, 9])])
            .unwrap();
        let bytes = write_raw_video(&v);
        assert!(matches!(
            read_raw_video(&bytes[..bytes.len() - 1]),
            Err(Error::Truncated { offset: 16 })
        ));
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(matches!(read_raw_video(&bad), Err(Error::BadMagic { .. })));
    }
}
