//! The β-divergence family, the aggregate objective `D_β` and the
//! multiplicative-update exponent `γ(β)`.

use alloc::format;

use crate::error::{NtdError, Result};
use crate::tensor::Tensor3;

/// The β parameter of the divergence. Always finite.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct Beta(f64);

impl Beta {
    pub const ITAKURA_SAITO: Beta = Beta(0.0);
    pub const KULLBACK_LEIBLER: Beta = Beta(1.0);
    pub const EUCLIDEAN: Beta = Beta(2.0);

    pub fn new(value: f64) -> Result<Self> {
        if value.is_finite() {
            Ok(Beta(value))
        } else {
            Err(NtdError::arg(format!("beta must be finite, got {value}")))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

/// `d_β(x | y)`.
///
/// Branches are selected by exact comparison: `β = 0` (Itakura–Saito),
/// `β = 1` (Kullback–Leibler), anything else uses the generic formula.
/// Each branch is evaluated in a cancellation-free form around `x ≈ y`
/// where one is available; small negative rounding residue is clipped to 0.
///
/// `y` must be positive. `x = 0` is allowed except when `β ≤ 0`, where the
/// divergence is infinite.
pub fn beta_div(x: f64, y: f64, beta: Beta) -> Result<f64> {
    if !(y > 0.0) || !y.is_finite() {
        return Err(NtdError::domain(format!("beta-divergence needs y > 0, got y = {y}")));
    }
    if !(x >= 0.0) || !x.is_finite() {
        return Err(NtdError::domain(format!(
            "beta-divergence needs finite x >= 0, got x = {x}"
        )));
    }
    let b = beta.0;
    let d = if b == 0.0 {
        if x == 0.0 {
            return Err(NtdError::domain("Itakura-Saito divergence is infinite at x = 0"));
        }
        // x/y − log(x/y) − 1 with r = x/y − 1
        let r = x / y - 1.0;
        r - libm::log1p(r)
    } else if b == 1.0 {
        if x == 0.0 {
            y
        } else {
            // y · ((1+s)·ln(1+s) − s), s = x/y − 1
            let s = x / y - 1.0;
            y * ((1.0 + s) * libm::log1p(s) - s)
        }
    } else if b == 2.0 {
        let diff = x - y;
        0.5 * diff * diff
    } else {
        if x == 0.0 && b < 0.0 {
            return Err(NtdError::domain(format!(
                "beta-divergence with beta = {b} is infinite at x = 0"
            )));
        }
        // y^β · (r^β − 1 − β(r − 1)) / (β(β − 1)) with r = x/y, written with
        // expm1/log1p so that it vanishes exactly at r = 1.
        let s = x / y - 1.0;
        let shape = libm::expm1(b * libm::log1p(s)) - b * s;
        libm::pow(y, b) * shape / (b * (b - 1.0))
    };
    Ok(d.max(0.0))
}

/// `D_β(x | approx)`: the sum of [`beta_div`] over all entries.
///
/// The sum streams over the entries in storage order with Neumaier
/// compensation, so repeated evaluations are bit-identical.
pub fn objective(x: &Tensor3, approx: &Tensor3, beta: Beta) -> Result<f64> {
    if x.dims() != approx.dims() {
        return Err(NtdError::arg("objective: data and approximation have different dims"));
    }
    let mut sum = NeumaierSum::default();
    for (i, (&xv, &yv)) in x.as_slice().iter().zip(approx.as_slice()).enumerate() {
        match beta_div(xv, yv, beta) {
            Ok(d) => sum.add(d),
            Err(NtdError::NumericalDomain { message, iteration }) => {
                let (j, k, l) = x.index_of(i);
                return Err(NtdError::NumericalDomain {
                    message: format!("{message} (entry ({j}, {k}, {l}))"),
                    iteration,
                });
            }
            Err(e) => return Err(e),
        }
    }
    Ok(sum.total())
}

/// Exponent applied to the multiplicative-update ratio.
pub fn gamma_exponent(beta: Beta) -> f64 {
    let b = beta.0;
    if b < 1.0 {
        1.0 / (2.0 - b)
    } else if b <= 2.0 {
        1.0
    } else {
        1.0 / (b - 1.0)
    }
}

#[derive(Debug, Default, Clone, Copy)]
pub(crate) struct NeumaierSum {
    sum: f64,
    comp: f64,
}

impl NeumaierSum {
    pub(crate) fn add(&mut self, v: f64) {
        let t = self.sum + v;
        if libm::fabs(self.sum) >= libm::fabs(v) {
            self.comp += (self.sum - t) + v;
        } else {
            self.comp += (v - t) + self.sum;
        }
        self.sum = t;
    }

    pub(crate) fn total(self) -> f64 {
        self.sum + self.comp
    }
}
