//! Event boundary detection over compressed GOP video streams.
//!
//! The crate covers the whole path from raw RGB frames to boundary timestamps:
//! a small GOP codec ([`codec`]), backtracing of P-frames onto their I-frame
//! ([`backtrace`]), feature backbones and spatial-channel attention
//! ([`backbone`], [`scam`]), the temporal boundary head ([`temporal`]),
//! finite-difference micro-training ([`training`]), evaluation ([`eval`]) and
//! a synthetic clip generator ([`synth`]).

pub mod annotation;
pub mod backbone;
pub mod backtrace;
pub mod bench;
pub mod codec;
pub mod config;
pub mod error;
pub mod eval;
pub mod model;
pub mod pipeline;
pub mod rng;
pub mod scam;
pub mod synth;
pub mod temporal;
pub mod tensor;
pub mod training;

pub use annotation::BoundaryAnnotation;
pub use error::{Error, Result};
