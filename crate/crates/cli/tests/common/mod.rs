#![allow(dead_code)]

use std::path::{Path, PathBuf};

use ntd::formats;
use ntd_core::{init_factors, Beta, FactorSet, Matrix, SolverConfig, Spectrogram, Tensor3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const HOP: f64 = 0.02;
pub const FRAMES_PER_BAR: usize = 24;
pub const BINS: usize = 1025;

pub fn run<I: IntoIterator<Item = S>, S: AsRef<str>>(args: I) -> ntd::Result<ntd::Outcome> {
    let mut argv = vec!["ntd".to_string()];
    argv.extend(args.into_iter().map(|s| s.as_ref().to_string()));
    ntd::run(argv)
}

pub fn p(path: &Path) -> String {
    path.to_str().unwrap().to_string()
}

pub fn bar_seconds() -> f64 {
    FRAMES_PER_BAR as f64 * HOP
}

/// Bar grid `0, d, 2d, ..., n·d` with `d` = one bar.
pub fn bar_times(n: usize) -> Vec<f64> {
    (0..=n).map(|b| b as f64 * bar_seconds()).collect()
}

/// Power spectrum of one frame: a few harmonic partials of `f0` Hz.
fn partials(out: &mut [f64], f0: f64, gain: f64) {
    let bin_hz = 44100.0 / 2048.0;
    for h in 1..=6 {
        let bin = (f0 * h as f64 / bin_hz).round() as usize;
        if bin < out.len() {
            out[bin] += gain / h as f64;
        }
    }
}

/// One bar of a pattern: each frame sounds one of two harmonic tones,
/// following `rhythm` (one entry per frame, `false` = first tone).
fn pattern_bar(pitches: [f64; 2], rhythm: impl Fn(usize) -> bool) -> Vec<Vec<f64>> {
    (0..FRAMES_PER_BAR)
        .map(|i| {
            let mut frame = vec![0.01; BINS];
            partials(&mut frame, pitches[rhythm(i) as usize], 100.0);
            frame
        })
        .collect()
}

/// Power spectrogram whose bars follow `layout` (`true` = pattern A), plus
/// additive uniform noise at 1% of the peak value. The two patterns use
/// different tones and different rhythms.
pub fn patterned_spectrogram(layout: &[bool], seed: u64) -> Spectrogram {
    let a = pattern_bar([220.0, 330.0], |i| (i / 6) % 2 == 1);
    let b = pattern_bar([147.0, 523.0], |i| i >= 12);
    let frames = layout.len() * FRAMES_PER_BAR;
    let mut data = vec![0.0; BINS * frames];
    for (bar, &is_a) in layout.iter().enumerate() {
        let pat = if is_a { &a } else { &b };
        for (i, frame) in pat.iter().enumerate() {
            let f = bar * FRAMES_PER_BAR + i;
            for (band, &v) in frame.iter().enumerate() {
                data[band * frames + f] = v;
            }
        }
    }
    let peak = data.iter().copied().fold(0.0, f64::max);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for v in &mut data {
        *v += 0.01 * peak * rng.gen_range(0.0..1.0);
    }
    Spectrogram::new(BINS, frames, HOP, data).unwrap()
}

/// A×8, B×8, A×8, B×8.
pub fn alternating_layout() -> Vec<bool> {
    (0..32).map(|b| (b / 8) % 2 == 0).collect()
}

pub fn write_pipeline_inputs(dir: &Path, spec: &Spectrogram, bars: &[f64]) -> (PathBuf, PathBuf) {
    let s = dir.join("spec.txt");
    let b = dir.join("bars.txt");
    formats::write_spectrogram(&s, spec).unwrap();
    formats::write_times(&b, bars).unwrap();
    (s, b)
}

/// Seeded factors with entries uniform on `[ε, 1]`.
pub fn planted_factors(dims: [usize; 3], core: [usize; 3], seed: u64) -> FactorSet {
    let mut cfg = SolverConfig::new(Beta::EUCLIDEAN, core);
    cfg.seed = seed;
    init_factors(dims, &cfg).unwrap()
}

/// Every entry multiplied by `1 + u`, `u` uniform on `[lo, hi)`.
pub fn perturbed(f: &FactorSet, rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> FactorSet {
    let mut jitter = |v: &[f64]| -> Vec<f64> { v.iter().map(|x| x * (1.0 + rng.gen_range(lo..hi))).collect() };
    FactorSet::new(
        Matrix::new(f.w.rows(), f.w.cols(), jitter(f.w.as_slice())).unwrap(),
        Matrix::new(f.h.rows(), f.h.cols(), jitter(f.h.as_slice())).unwrap(),
        Matrix::new(f.q.rows(), f.q.cols(), jitter(f.q.as_slice())).unwrap(),
        Tensor3::new(f.core.dims(), jitter(f.core.as_slice())).unwrap(),
    )
    .unwrap()
}
