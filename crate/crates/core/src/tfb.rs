//! Time–frequency–bar tensors built from spectrograms and bar boundaries.
//!
//! A spectrogram frame `f` covers the interval `[f·hop, (f+1)·hop)`; its
//! nearest frame for a time `t` is therefore `⌊t / hop⌋`.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{NtdError, Result};
use crate::tensor::{Matrix, Tensor3};

/// Frames sampled per bar by default.
pub const DEFAULT_FRAMES_PER_BAR: usize = 96;

/// Nonnegative `bands × frames` spectrogram with a uniform hop.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrogram {
    bands: usize,
    frames: usize,
    hop_seconds: f64,
    data: Vec<f64>,
}

impl Spectrogram {
    /// `data` is row-major: band `b` occupies `data[b * frames..(b + 1) * frames]`.
    pub fn new(bands: usize, frames: usize, hop_seconds: f64, data: Vec<f64>) -> Result<Self> {
        if bands == 0 || frames == 0 {
            return Err(NtdError::arg("spectrogram needs at least one band and one frame"));
        }
        if !(hop_seconds > 0.0 && hop_seconds.is_finite()) {
            return Err(NtdError::arg(format!("hop must be positive, got {hop_seconds}")));
        }
        if data.len() != bands * frames {
            return Err(NtdError::arg(format!(
                "{bands}x{frames} spectrogram needs {} values, got {}",
                bands * frames,
                data.len()
            )));
        }
        if let Some(i) = data.iter().position(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(NtdError::arg(format!(
                "spectrogram entry (band {}, frame {}) = {} is not finite and nonnegative",
                i / frames,
                i % frames,
                data[i]
            )));
        }
        Ok(Spectrogram {
            bands,
            frames,
            hop_seconds,
            data,
        })
    }

    pub fn bands(&self) -> usize {
        self.bands
    }

    pub fn frames(&self) -> usize {
        self.frames
    }

    pub fn hop_seconds(&self) -> f64 {
        self.hop_seconds
    }

    /// Total time covered, `frames · hop`.
    pub fn duration(&self) -> f64 {
        self.frames as f64 * self.hop_seconds
    }

    pub fn get(&self, band: usize, frame: usize) -> f64 {
        self.data[band * self.frames + frame]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    /// Index of the frame covering time `t` (clamped to the last frame).
    pub fn nearest_frame(&self, t: f64) -> usize {
        let f = libm::floor(t / self.hop_seconds);
        if f <= 0.0 {
            0
        } else {
            (f as usize).min(self.frames - 1)
        }
    }
}

/// Bar boundaries in seconds; bar `b` spans `[times[b], times[b + 1])`.
#[derive(Debug, Clone, PartialEq)]
pub struct BarGrid {
    boundaries: Vec<f64>,
}

impl BarGrid {
    pub fn new(boundaries: Vec<f64>) -> Result<Self> {
        if boundaries.len() < 2 {
            return Err(NtdError::arg("a bar grid needs at least two boundaries"));
        }
        if !(boundaries[0] >= 0.0) || boundaries.iter().any(|t| !t.is_finite()) {
            return Err(NtdError::arg("bar boundaries must be finite and start at or after 0"));
        }
        if let Some(i) = boundaries.windows(2).position(|w| !(w[1] > w[0])) {
            return Err(NtdError::arg(format!(
                "bar boundaries must be strictly increasing (entry {} = {} follows {})",
                i + 1,
                boundaries[i + 1],
                boundaries[i]
            )));
        }
        Ok(BarGrid { boundaries })
    }

    pub fn boundaries(&self) -> &[f64] {
        &self.boundaries
    }

    pub fn bar_count(&self) -> usize {
        self.boundaries.len() - 1
    }
}

/// Triangular Mel filterbank.
#[derive(Debug, Clone, PartialEq)]
pub struct MelBank {
    pub n_filters: usize,
    pub f_min: f64,
    pub f_max: f64,
    pub sample_rate: f64,
    pub n_fft: usize,
    /// Center frequency of every filter, in Hz.
    pub centers_hz: Vec<f64>,
    /// `n_filters × (n_fft/2 + 1)`.
    pub weights: Matrix,
}

impl MelBank {
    pub fn n_bins(&self) -> usize {
        self.n_fft / 2 + 1
    }
}

pub fn hz_to_mel(hz: f64) -> f64 {
    2595.0 * libm::log10(1.0 + hz / 700.0)
}

pub fn mel_to_hz(mel: f64) -> f64 {
    700.0 * (libm::pow(10.0, mel / 2595.0) - 1.0)
}

/// `n_filters` unit-peak triangles whose centers are equally spaced on the
/// Mel scale between `f_min` and `f_max`. Filter `m` rises from center
/// `m − 1` to center `m` and falls to center `m + 1`, with `f_min` and
/// `f_max` acting as the outermost centers.
pub fn mel_filterbank(n_filters: usize, f_min: f64, f_max: f64, sample_rate: f64, n_fft: usize) -> Result<MelBank> {
    if n_filters == 0 || n_fft < 2 {
        return Err(NtdError::arg("mel filterbank needs n_filters >= 1 and n_fft >= 2"));
    }
    if !(sample_rate > 0.0) || !(0.0 <= f_min && f_min < f_max && f_max <= sample_rate / 2.0) {
        return Err(NtdError::arg(format!(
            "mel filterbank needs 0 <= f_min < f_max <= sample_rate/2, got f_min={f_min}, f_max={f_max}, sample_rate={sample_rate}"
        )));
    }
    let (lo, hi) = (hz_to_mel(f_min), hz_to_mel(f_max));
    let edges: Vec<f64> = (0..n_filters + 2)
        .map(|i| mel_to_hz(lo + (hi - lo) * i as f64 / (n_filters + 1) as f64))
        .collect();
    let n_bins = n_fft / 2 + 1;
    let bin_hz = sample_rate / n_fft as f64;
    let weights = Matrix::from_fn(n_filters, n_bins, |m, k| {
        let f = k as f64 * bin_hz;
        let (left, center, right) = (edges[m], edges[m + 1], edges[m + 2]);
        if f > left && f <= center {
            (f - left) / (center - left)
        } else if f > center && f < right {
            (right - f) / (right - center)
        } else {
            0.0
        }
    })?;
    Ok(MelBank {
        n_filters,
        f_min,
        f_max,
        sample_rate,
        n_fft,
        centers_hz: edges[1..=n_filters].to_vec(),
        weights,
    })
}

/// `weights · spec`; the time axis is unchanged.
pub fn apply_mel(spec: &Spectrogram, bank: &MelBank) -> Result<Spectrogram> {
    if spec.bands != bank.n_bins() {
        return Err(NtdError::arg(format!(
            "spectrogram has {} bands, the mel bank expects {} (n_fft {})",
            spec.bands,
            bank.n_bins(),
            bank.n_fft
        )));
    }
    let power = Matrix::new(spec.bands, spec.frames, spec.data.clone())?;
    let mel = bank.weights.matmul(&power)?;
    Spectrogram::new(bank.n_filters, spec.frames, spec.hop_seconds, mel.into_vec())
}

/// Nonnegative log-Mel: `ln(x + 1)` entrywise.
pub fn nnlms(spec: &Spectrogram) -> Result<Spectrogram> {
    // Spectrogram construction already rejects negative entries.
    let data = spec.data.iter().map(|&v| libm::log1p(v)).collect();
    Spectrogram::new(spec.bands, spec.frames, spec.hop_seconds, data)
}

/// Slices `spec` along `bars` into a `bands × frames_per_bar × bars` tensor.
///
/// Bar `b` is sampled at `t_b + (i + ½)·(t_{b+1} − t_b)/frames_per_bar` for
/// `i = 0..frames_per_bar`, each position mapped to its nearest frame. The
/// tensor entries are copies of spectrogram entries; nothing is interpolated.
pub fn build_tfb(spec: &Spectrogram, bars: &BarGrid, frames_per_bar: usize) -> Result<Tensor3> {
    if frames_per_bar == 0 {
        return Err(NtdError::arg("frames_per_bar must be at least 1"));
    }
    let end = spec.duration();
    let slack = 1e-9 * end.max(1.0);
    let n_bars = bars.bar_count();
    let mut frame_index = vec![0usize; n_bars * frames_per_bar];
    for (b, w) in bars.boundaries.windows(2).enumerate() {
        let (start, stop) = (w[0], w[1]);
        if stop > end + slack {
            return Err(NtdError::arg(format!(
                "bar {b} ends at {stop} s, beyond the spectrogram end at {end} s"
            )));
        }
        let width = stop - start;
        if width < spec.hop_seconds * (1.0 - 1e-9) {
            return Err(NtdError::arg(format!(
                "bar {b} lasts {width} s, shorter than one hop ({} s)",
                spec.hop_seconds
            )));
        }
        let step = width / frames_per_bar as f64;
        for i in 0..frames_per_bar {
            let t = start + (i as f64 + 0.5) * step;
            frame_index[b * frames_per_bar + i] = spec.nearest_frame(t);
        }
    }

    // Mode 1 = band, mode 2 = in-bar position, mode 3 = bar.
    Tensor3::from_fn([spec.bands, frames_per_bar, n_bars], |band, i, b| {
        spec.get(band, frame_index[b * frames_per_bar + i])
    })
}
