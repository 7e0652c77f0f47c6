//! Bar-level segmentation from the bar factor `Q`, and boundary scoring.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{NtdError, Result};
use crate::tensor::{dot, Matrix};
use crate::tfb::BarGrid;

/// Cosine similarity between the rows of `q` (`L × L`). Rows of zeros have
/// zero similarity with everything, themselves included.
pub fn bar_autosimilarity(q: &Matrix) -> Matrix {
    let n = q.rows();
    let norms: Vec<f64> = (0..n).map(|r| libm::sqrt(dot(q.row(r), q.row(r)))).collect();
    let mut sim = Matrix::filled(n, n, 0.0).expect("q has at least one row");
    for a in 0..n {
        if norms[a] == 0.0 {
            continue;
        }
        sim.set(a, a, 1.0);
        for b in a + 1..n {
            if norms[b] == 0.0 {
                continue;
            }
            let s = dot(q.row(a), q.row(b)) / (norms[a] * norms[b]);
            sim.set(a, b, s);
            sim.set(b, a, s);
        }
    }
    sim
}

/// Parameters of the checkerboard novelty segmentation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SegmentParams {
    /// Half-width of the checkerboard kernel, in bars.
    pub kernel_half_width: usize,
    /// Peaks must exceed this multiple of the mean novelty.
    pub peak_threshold: f64,
    /// Peaks must also exceed this normalized novelty (novelty lies in
    /// `[-1, 1]`). Suppresses peaks made of rounding noise when the
    /// similarity matrix is essentially constant.
    pub min_contrast: f64,
}

impl Default for SegmentParams {
    fn default() -> Self {
        SegmentParams {
            kernel_half_width: 4,
            peak_threshold: 1.0,
            min_contrast: 0.1,
        }
    }
}

/// Normalized checkerboard novelty at every bar boundary `0..=L`.
///
/// At boundary `i` the kernel covers bars `i−w..i+w`; same-side pairs count
/// `+sim`, cross pairs `−sim`, and the sum is divided by `Σ|sim|` over the
/// window. Boundaries where the kernel does not fit get 0.
pub fn novelty_curve(sim: &Matrix, half_width: usize) -> Result<Vec<f64>> {
    let n = sim.rows();
    if sim.cols() != n {
        return Err(NtdError::arg("similarity matrix must be square"));
    }
    if half_width == 0 || 2 * half_width > n {
        return Err(NtdError::arg(format!(
            "kernel half-width {half_width} does not fit a {n}x{n} similarity matrix"
        )));
    }
    let mut curve = vec![0.0; n + 1];
    for (i, c) in curve.iter_mut().enumerate().take(n - half_width + 1).skip(half_width) {
        let (mut signed, mut total) = (0.0, 0.0);
        for a in i - half_width..i + half_width {
            for b in i - half_width..i + half_width {
                let s = sim.get(a, b);
                if (a < i) == (b < i) {
                    signed += s;
                } else {
                    signed -= s;
                }
                total += libm::fabs(s);
            }
        }
        *c = if total > 0.0 { signed / total } else { 0.0 };
    }
    Ok(curve)
}

/// Boundary bar indices from a bar similarity matrix. Always contains `0`
/// and `L`.
pub fn segment_bars(sim: &Matrix, params: &SegmentParams) -> Result<Vec<usize>> {
    let n = sim.rows();
    let w = params.kernel_half_width;
    let curve = novelty_curve(sim, w)?;
    let valid = &curve[w..=n - w];
    let mean = valid.iter().sum::<f64>() / valid.len() as f64;
    let threshold = (params.peak_threshold * mean).max(params.min_contrast);

    let mut out = vec![0];
    for i in w..=n - w {
        let v = curve[i];
        if v > curve[i - 1] && v >= curve[i + 1] && v > threshold && i != 0 && i != n {
            out.push(i);
        }
    }
    out.push(n);
    Ok(out)
}

/// Strictly increasing boundary times in seconds.
///
/// By convention a track's boundary set includes its start and its end;
/// [`evaluate_boundaries`] can trim those before scoring. Empty sets are
/// allowed so that empty estimates can still be scored.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundarySet {
    times: Vec<f64>,
}

impl BoundarySet {
    pub fn new(times: Vec<f64>) -> Result<Self> {
        if let Some(i) = times.iter().position(|t| !(t.is_finite() && *t >= 0.0)) {
            return Err(NtdError::arg(format!(
                "boundary {i} = {} is not a finite time >= 0",
                times[i]
            )));
        }
        if let Some(i) = times.windows(2).position(|w| !(w[1] > w[0])) {
            return Err(NtdError::arg(format!(
                "boundaries must be strictly increasing (entry {} = {} follows {})",
                i + 1,
                times[i + 1],
                times[i]
            )));
        }
        Ok(BoundarySet { times })
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    fn trimmed(&self) -> &[f64] {
        match self.times.len() {
            0..=2 => &[],
            n => &self.times[1..n - 1],
        }
    }
}

/// Maps bar indices to the corresponding bar boundary times.
pub fn bars_to_seconds(indices: &[usize], bars: &BarGrid) -> Result<BoundarySet> {
    let grid = bars.boundaries();
    let times = indices
        .iter()
        .map(|&b| {
            grid.get(b)
                .copied()
                .ok_or_else(|| NtdError::arg(format!("bar index {b} outside 0..={}", bars.bar_count())))
        })
        .collect::<Result<Vec<_>>>()?;
    BoundarySet::new(times)
}

/// Which side of an evaluation had nothing to score.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EvalWarning {
    EmptyEstimate,
    EmptyReference,
    BothEmpty,
}

impl EvalWarning {
    pub fn as_str(self) -> &'static str {
        match self {
            EvalWarning::EmptyEstimate => "empty_estimate",
            EvalWarning::EmptyReference => "empty_reference",
            EvalWarning::BothEmpty => "both_empty",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub precision: f64,
    pub recall: f64,
    pub f_measure: f64,
    pub tolerance: f64,
    pub hits: usize,
    /// Number of estimated boundaries scored (after trimming).
    pub est_count: usize,
    /// Number of reference boundaries scored (after trimming).
    pub ref_count: usize,
    pub warning: Option<EvalWarning>,
}

/// Precision, recall and F-measure of `est` against `reference` with a hit
/// window of `±tolerance` seconds.
///
/// Boundaries are matched one-to-one with the maximum possible number of
/// hits. With `trim`, the first and last boundary of each set (track start
/// and end) are dropped before matching.
pub fn evaluate_boundaries(
    est: &BoundarySet,
    reference: &BoundarySet,
    tolerance: f64,
    trim: bool,
) -> Result<EvalReport> {
    if !(tolerance > 0.0 && tolerance.is_finite()) {
        return Err(NtdError::arg(format!("tolerance must be positive, got {tolerance}")));
    }
    let (e, r) = if trim {
        (est.trimmed(), reference.trimmed())
    } else {
        (est.times(), reference.times())
    };
    let hits = count_hits(e, r, tolerance);
    let precision = if e.is_empty() {
        0.0
    } else {
        hits as f64 / e.len() as f64
    };
    let recall = if r.is_empty() {
        0.0
    } else {
        hits as f64 / r.len() as f64
    };
    let f_measure = if precision + recall > 0.0 {
        2.0 * precision * recall / (precision + recall)
    } else {
        0.0
    };
    let warning = match (e.is_empty(), r.is_empty()) {
        (true, true) => Some(EvalWarning::BothEmpty),
        (true, false) => Some(EvalWarning::EmptyEstimate),
        (false, true) => Some(EvalWarning::EmptyReference),
        (false, false) => None,
    };
    Ok(EvalReport {
        precision,
        recall,
        f_measure,
        tolerance,
        hits,
        est_count: e.len(),
        ref_count: r.len(),
        warning,
    })
}

/// Maximum one-to-one matching between two sorted time lists.
///
/// Each estimate, in increasing order, takes the earliest unmatched
/// reference inside its window. All windows have the same width, so this
/// greedy choice is optimal.
fn count_hits(est: &[f64], reference: &[f64], tolerance: f64) -> usize {
    let mut next = 0;
    let mut hits = 0;
    for &e in est {
        while next < reference.len() && e - reference[next] > tolerance {
            next += 1;
        }
        if next < reference.len() && reference[next] - e <= tolerance {
            hits += 1;
            next += 1;
        }
    }
    hits
}
