//! A minimal motion-compensated GOP codec.
//!
//! Each group of pictures stores one raw I-frame followed by P-frames coded as
//! one integer motion vector per 16×16 macroblock plus a per-pixel residual.
//! A motion vector `(dx, dy)` points from a block in the current frame to its
//! source in the reference frame: the prediction of pixel `(x, y)` is the
//! reference pixel at `(x + dx, y + dy)`, clamped to the frame.

mod bitstream;
mod decoder;
mod encoder;
mod rawfile;

pub use bitstream::{deserialize, serialize, HEADER_LEN, STREAM_MAGIC, STREAM_VERSION};
pub use decoder::{compensate, decode, decode_gop};
pub use encoder::{encode, estimate_motion, EncoderConfig};
pub use rawfile::{read_raw_video, write_raw_video, RAW_MAGIC};

use crate::error::{Error, Result};

pub const MACROBLOCK: usize = 16;

pub const FLAG_LOSSY: u8 = 0b01;
pub const FLAG_PARTIAL_GOP: u8 = 0b10;

/// Frame rate as a rational number.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct Fps {
    pub num: u16,
    pub den: u16,
}

impl Fps {
    pub fn new(num: u16, den: u16) -> Result<Self> {
        if den == 0 || num == 0 {
            return Err(Error::config(format!("invalid frame rate {num}/{den}")));
        }
        Ok(Self { num, den })
    }

    pub fn as_f64(self) -> f64 {
        self.num as f64 / self.den as f64
    }
}

/// Interleaved RGB24 image, row-major.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Frame {
    pub width: usize,
    pub height: usize,
    pub data: Vec<u8>,
}

impl Frame {
    pub fn filled(width: usize, height: usize, rgb: [u8; 3]) -> Self {
        let mut data = Vec::with_capacity(width * height * 3);
        for _ in 0..width * height {
            data.extend_from_slice(&rgb);
        }
        Self {
            width,
            height,
            data,
        }
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize, c: usize) -> u8 {
        self.data[(y * self.width + x) * 3 + c]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, c: usize, v: u8) {
        self.data[(y * self.width + x) * 3 + c] = v;
    }

    /// Pixel read with coordinates clamped to the frame.
    #[inline]
    pub fn get_clamped(&self, x: isize, y: isize, c: usize) -> u8 {
        let x = x.clamp(0, self.width as isize - 1) as usize;
        let y = y.clamp(0, self.height as isize - 1) as usize;
        self.get(x, y, c)
    }
}

/// Uncompressed input video.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RawVideo {
    pub width: usize,
    pub height: usize,
    pub fps: Fps,
    pub frames: Vec<Frame>,
}

impl RawVideo {
    pub fn new(width: usize, height: usize, fps: Fps, frames: Vec<Frame>) -> Result<Self> {
        if frames.is_empty() {
            return Err(Error::EmptyVideo);
        }
        if width == 0 || height == 0 || width > u16::MAX as usize || height > u16::MAX as usize {
            return Err(Error::InvalidDimensions(format!("{width}x{height}")));
        }
        for (i, f) in frames.iter().enumerate() {
            if f.width != width || f.height != height || f.data.len() != width * height * 3 {
                return Err(Error::InvalidDimensions(format!(
                    "frame {i} is {}x{}, expected {width}x{height}",
                    f.width, f.height
                )));
            }
        }
        Ok(Self {
            width,
            height,
            fps,
            frames,
        })
    }

    pub fn duration_s(&self) -> f64 {
        self.frames.len() as f64 / self.fps.as_f64()
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub struct MotionVector {
    pub dx: i8,
    pub dy: i8,
}

impl MotionVector {
    pub const ZERO: MotionVector = MotionVector { dx: 0, dy: 0 };

    pub fn new(dx: i8, dy: i8) -> Self {
        Self { dx, dy }
    }
}

/// One motion vector per macroblock, row-major over the macroblock grid.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MotionField {
    pub cols: usize,
    pub rows: usize,
    pub vectors: Vec<MotionVector>,
}

impl MotionField {
    pub fn zeros(width: usize, height: usize) -> Self {
        let (cols, rows) = grid_dims(width, height);
        Self {
            cols,
            rows,
            vectors: vec![MotionVector::ZERO; cols * rows],
        }
    }

    pub fn uniform(width: usize, height: usize, mv: MotionVector) -> Self {
        let mut f = Self::zeros(width, height);
        f.vectors.fill(mv);
        f
    }

    #[inline]
    pub fn block(&self, bx: usize, by: usize) -> MotionVector {
        self.vectors[by * self.cols + bx]
    }

    /// Vector governing pixel (x, y).
    #[inline]
    pub fn at_pixel(&self, x: usize, y: usize) -> MotionVector {
        self.block(x / MACROBLOCK, y / MACROBLOCK)
    }
}

/// Macroblock grid dimensions (cols, rows) for a frame size.
pub fn grid_dims(width: usize, height: usize) -> (usize, usize) {
    (width.div_ceil(MACROBLOCK), height.div_ceil(MACROBLOCK))
}

/// Signed per-pixel correction, channel-major then row-major (3 × H × W).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ResidualPlane {
    pub width: usize,
    pub height: usize,
    pub data: Vec<i16>,
}

impl ResidualPlane {
    pub fn zeros(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            data: vec![0; 3 * width * height],
        }
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize, c: usize) -> i16 {
        self.data[(c * self.height + y) * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, c: usize, v: i16) {
        self.data[(c * self.height + y) * self.width + x] = v;
    }

    pub fn energy(&self) -> u64 {
        self.data.iter().map(|v| v.unsigned_abs() as u64).sum()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PFrame {
    pub motion: MotionField,
    pub residual: ResidualPlane,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Gop {
    pub iframe: Frame,
    pub pframes: Vec<PFrame>,
}

impl Gop {
    pub fn frame_count(&self) -> usize {
        1 + self.pframes.len()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct StreamHeader {
    pub width: u16,
    pub height: u16,
    pub fps: Fps,
    pub gop_count: u32,
    pub pframes_per_gop: u8,
    pub macroblock_size: u8,
    pub search_range: u8,
    pub flags: u8,
}

impl StreamHeader {
    pub fn lossy(&self) -> bool {
        self.flags & FLAG_LOSSY != 0
    }

    pub fn partial_tail(&self) -> bool {
        self.flags & FLAG_PARTIAL_GOP != 0
    }

    pub fn gop_size(&self) -> usize {
        self.pframes_per_gop as usize + 1
    }
}

/// An encoded video: header plus GOPs. Only the last GOP may hold fewer than
/// `pframes_per_gop` P-frames, and then the partial-GOP flag is set.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GopStream {
    pub header: StreamHeader,
    pub gops: Vec<Gop>,
}

impl GopStream {
    pub fn width(&self) -> usize {
        self.header.width as usize
    }

    pub fn height(&self) -> usize {
        self.header.height as usize
    }

    pub fn frame_count(&self) -> usize {
        self.gops.iter().map(Gop::frame_count).sum()
    }

    /// Index of the first source frame of GOP `g`.
    pub fn gop_start(&self, g: usize) -> usize {
        g * self.header.gop_size()
    }

    /// Structural consistency check. Offsets in errors refer to the
    /// serialized layout.
    pub fn validate(&self) -> Result<()> {
        let h = &self.header;
        let (w, ht) = (h.width as usize, h.height as usize);
        if h.macroblock_size as usize != MACROBLOCK {
            return Err(Error::CorruptStream {
                offset: 19,
                reason: format!("macroblock size {} (expected 16)", h.macroblock_size),
            });
        }
        if w < MACROBLOCK || ht < MACROBLOCK {
            return Err(Error::CorruptStream {
                offset: 6,
                reason: format!("frame size {w}x{ht} smaller than a macroblock"),
            });
        }
        if h.fps.den == 0 || h.fps.num == 0 {
            return Err(Error::CorruptStream {
                offset: 10,
                reason: "zero frame rate component".into(),
            });
        }
        if h.gop_count as usize != self.gops.len() {
            return Err(Error::CorruptStream {
                offset: 14,
                reason: format!("header declares {} GOPs, found {}", h.gop_count, self.gops.len()),
            });
        }
        let (cols, rows) = grid_dims(w, ht);
        let t_enc = h.pframes_per_gop as usize;
        let mut offset = HEADER_LEN;
        let pframe_len = 2 * cols * rows + 6 * w * ht;
        for (g, gop) in self.gops.iter().enumerate() {
            let last = g + 1 == self.gops.len();
            let count_ok = if last && h.partial_tail() {
                gop.pframes.len() < t_enc
            } else {
                gop.pframes.len() == t_enc
            };
            if !count_ok {
                return Err(Error::CorruptStream {
                    offset,
                    reason: format!("GOP {g} holds {} P-frames", gop.pframes.len()),
                });
            }
            if gop.iframe.width != w || gop.iframe.height != ht || gop.iframe.data.len() != 3 * w * ht {
                return Err(Error::CorruptStream {
                    offset,
                    reason: format!("GOP {g} I-frame has wrong dimensions"),
                });
            }
            offset += 3 * w * ht;
            for p in &gop.pframes {
                let mf = &p.motion;
                if mf.cols != cols || mf.rows != rows || mf.vectors.len() != cols * rows {
                    return Err(Error::CorruptStream {
                        offset,
                        reason: "motion grid has wrong dimensions".into(),
                    });
                }
                let range = h.search_range as i32;
                if mf
                    .vectors
                    .iter()
                    .any(|v| (v.dx as i32).abs() > range || (v.dy as i32).abs() > range)
                {
                    return Err(Error::CorruptStream {
                        offset,
                        reason: "motion vector outside the search range".into(),
                    });
                }
                let r = &p.residual;
                if r.width != w || r.height != ht || r.data.len() != 3 * w * ht {
                    return Err(Error::CorruptStream {
                        offset: offset + 2 * cols * rows,
                        reason: "residual plane has wrong dimensions".into(),
                    });
                }
                offset += pframe_len;
            }
        }
        Ok(())
    }
}
