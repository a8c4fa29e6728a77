//! Timing of P-frame accumulation against GOP length.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::backtrace::accumulate;
use crate::codec::{grid_dims, Frame, Gop, MotionField, MotionVector, PFrame, ResidualPlane};
use crate::rng::SplitMix64;

/// A GOP with random vectors within ±`search_range` and random residuals.
pub fn random_gop(width: usize, height: usize, pframes: usize, search_range: u8, seed: u64) -> Gop {
    let mut rng = SplitMix64::new(seed);
    let mut iframe = Frame::filled(width, height, [0, 0, 0]);
    iframe.data.iter_mut().for_each(|v| *v = rng.range_inclusive(0, 255) as u8);
    let (cols, rows) = grid_dims(width, height);
    let sr = search_range as i64;
    let pframes = (0..pframes)
        .map(|_| {
            let mut motion = MotionField::zeros(width, height);
            motion.vectors = (0..cols * rows)
                .map(|_| MotionVector::new(rng.range_inclusive(-sr, sr) as i8, rng.range_inclusive(-sr, sr) as i8))
                .collect();
            let mut residual = ResidualPlane::zeros(width, height);
            residual.data.iter_mut().for_each(|v| *v = rng.range_inclusive(-8, 8) as i16);
            PFrame { motion, residual }
        })
        .collect();
    Gop { iframe, pframes }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchPoint {
    pub t_enc: usize,
    /// Best of the repetitions, seconds.
    pub seconds: f64,
}

/// Minimum wall-clock time of `accumulate` over `reps` runs per GOP length.
pub fn bench_accumulate(t_encs: &[usize], width: usize, height: usize, reps: usize, seed: u64) -> Vec<BenchPoint> {
    t_encs
        .iter()
        .map(|&t| {
            let gop = random_gop(width, height, t, 7, seed ^ t as u64);
            let best = (0..reps.max(1))
                .map(|_| {
                    let start = Instant::now();
                    let acc = accumulate(&gop).expect("well-formed GOP");
                    std::hint::black_box(&acc);
                    start.elapsed().as_secs_f64()
                })
                .fold(f64::INFINITY, f64::min);
            BenchPoint { t_enc: t, seconds: best }
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
}

/// Ordinary least squares y = slope·x + intercept.
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> LinearFit {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r2 = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    LinearFit { slope, intercept, r2 }
}
