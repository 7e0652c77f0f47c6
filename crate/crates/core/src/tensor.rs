//! Dense matrices and third-order tensors.
//!
//! Storage is row-major throughout: a [`Matrix`] stores row `r` contiguously,
//! and a [`Tensor3`] of dims `(J, K, L)` stores entry `(j, k, l)` at
//! `(j * K + k) * L + l` (mode-1 index slowest, mode-3 index fastest).
//!
//! Unfoldings follow the Kolda–Bader column convention: in the mode-`n`
//! unfolding, the indices of the two remaining modes vary with the
//! lower-numbered mode fastest.
//!
//! No routine in this module forms a Kronecker product. Products of a tensor
//! with `A ⊗ B ⊗ C` are always carried out as a chain of mode products.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{NtdError, Result};

/// One of the three tensor modes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Mode {
    First,
    Second,
    Third,
}

impl Mode {
    pub const ALL: [Mode; 3] = [Mode::First, Mode::Second, Mode::Third];

    /// Zero-based axis index.
    pub fn index(self) -> usize {
        match self {
            Mode::First => 0,
            Mode::Second => 1,
            Mode::Third => 2,
        }
    }

    /// One-based mode number, as used in `X₍₁₎`, `×₂` and friends.
    pub fn number(self) -> usize {
        self.index() + 1
    }
}

impl TryFrom<usize> for Mode {
    type Error = NtdError;

    /// Accepts the one-based mode numbers 1, 2 and 3.
    fn try_from(n: usize) -> Result<Self> {
        match n {
            1 => Ok(Mode::First),
            2 => Ok(Mode::Second),
            3 => Ok(Mode::Third),
            _ => Err(NtdError::arg(format!("mode must be 1, 2 or 3, got {n}"))),
        }
    }
}

/// Dense row-major matrix of `f64`.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(NtdError::arg(format!(
                "matrix dimensions must be positive, got {rows}x{cols}"
            )));
        }
        if rows * cols != data.len() {
            return Err(NtdError::arg(format!(
                "{rows}x{cols} matrix needs {} values, got {}",
                rows * cols,
                data.len()
            )));
        }
        Ok(Matrix { rows, cols, data })
    }

    /// Builds a matrix from nested rows; all rows must have the same length.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let cols = rows.first().map_or(0, |r| r.as_ref().len());
        if rows.iter().any(|r| r.as_ref().len() != cols) {
            return Err(NtdError::arg("ragged rows"));
        }
        let data = rows.iter().flat_map(|r| r.as_ref().iter().copied()).collect();
        Matrix::new(rows.len(), cols, data)
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Result<Self> {
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                data.push(f(r, c));
            }
        }
        Matrix::new(rows, cols, data)
    }

    pub fn filled(rows: usize, cols: usize, value: f64) -> Result<Self> {
        Matrix::new(rows, cols, vec![value; rows * cols])
    }

    pub fn identity(n: usize) -> Result<Self> {
        Matrix::from_fn(n, n, |r, c| if r == c { 1.0 } else { 0.0 })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        self.data[r * self.cols + c] = v;
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    pub fn transpose(&self) -> Matrix {
        let mut data = Vec::with_capacity(self.data.len());
        for c in 0..self.cols {
            for r in 0..self.rows {
                data.push(self.get(r, c));
            }
        }
        Matrix {
            rows: self.cols,
            cols: self.rows,
            data,
        }
    }

    /// `self · rhs`.
    pub fn matmul(&self, rhs: &Matrix) -> Result<Matrix> {
        if self.cols != rhs.rows {
            return Err(NtdError::arg(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, rhs.rows, rhs.cols
            )));
        }
        let mut out = vec![0.0; self.rows * rhs.cols];
        for (out_row, lhs_row) in out.chunks_exact_mut(rhs.cols).zip(self.data.chunks_exact(self.cols)) {
            for (&a, rhs_row) in lhs_row.iter().zip(rhs.data.chunks_exact(rhs.cols)) {
                axpy(a, rhs_row, out_row);
            }
        }
        Ok(Matrix {
            rows: self.rows,
            cols: rhs.cols,
            data: out,
        })
    }

    /// `self · rhsᵀ`, without forming the transpose.
    pub fn matmul_transposed(&self, rhs: &Matrix) -> Result<Matrix> {
        if self.cols != rhs.cols {
            return Err(NtdError::arg(format!(
                "cannot multiply {}x{} by the transpose of {}x{}",
                self.rows, self.cols, rhs.rows, rhs.cols
            )));
        }
        let mut data = Vec::with_capacity(self.rows * rhs.rows);
        for lhs_row in self.data.chunks_exact(self.cols) {
            for rhs_row in rhs.data.chunks_exact(rhs.cols) {
                data.push(dot(lhs_row, rhs_row));
            }
        }
        Ok(Matrix {
            rows: self.rows,
            cols: rhs.rows,
            data,
        })
    }
}

/// Dense third-order tensor of `f64`, dims `(J, K, L)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor3 {
    dims: [usize; 3],
    data: Vec<f64>,
}

impl Tensor3 {
    pub fn new(dims: [usize; 3], data: Vec<f64>) -> Result<Self> {
        if dims.contains(&0) {
            return Err(NtdError::arg(format!(
                "tensor dimensions must be positive, got {}x{}x{}",
                dims[0], dims[1], dims[2]
            )));
        }
        let len = dims[0] * dims[1] * dims[2];
        if len != data.len() {
            return Err(NtdError::arg(format!(
                "{}x{}x{} tensor needs {len} values, got {}",
                dims[0],
                dims[1],
                dims[2],
                data.len()
            )));
        }
        Ok(Tensor3 { dims, data })
    }

    pub fn from_fn(dims: [usize; 3], mut f: impl FnMut(usize, usize, usize) -> f64) -> Result<Self> {
        let mut data = Vec::with_capacity(dims[0] * dims[1] * dims[2]);
        for j in 0..dims[0] {
            for k in 0..dims[1] {
                for l in 0..dims[2] {
                    data.push(f(j, k, l));
                }
            }
        }
        Tensor3::new(dims, data)
    }

    pub fn filled(dims: [usize; 3], value: f64) -> Result<Self> {
        Tensor3::new(dims, vec![value; dims[0] * dims[1] * dims[2]])
    }

    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    pub fn offset(&self, j: usize, k: usize, l: usize) -> usize {
        (j * self.dims[1] + k) * self.dims[2] + l
    }

    #[inline]
    pub fn get(&self, j: usize, k: usize, l: usize) -> f64 {
        self.data[self.offset(j, k, l)]
    }

    /// Inverse of [`Tensor3::offset`].
    pub fn index_of(&self, offset: usize) -> (usize, usize, usize) {
        let l = offset % self.dims[2];
        let rest = offset / self.dims[2];
        (rest / self.dims[1], rest % self.dims[1], l)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    /// Mode-`n` unfolding `X₍ₙ₎` (Kolda–Bader column order).
    pub fn matricize(&self, mode: Mode) -> Matrix {
        let [nj, nk, nl] = self.dims;
        let (rows, cols) = unfolding_shape(self.dims, mode);
        let mut out = vec![0.0; rows * cols];
        let mut src = self.data.iter();
        for j in 0..nj {
            for k in 0..nk {
                for l in 0..nl {
                    let (r, c) = match mode {
                        Mode::First => (j, k + l * nk),
                        Mode::Second => (k, j + l * nj),
                        Mode::Third => (l, j + k * nj),
                    };
                    // `src` walks the storage in (j, k, l) order.
                    out[r * cols + c] = *src.next().unwrap();
                }
            }
        }
        Matrix { rows, cols, data: out }
    }

    /// Inverse of [`Tensor3::matricize`].
    pub fn fold(m: &Matrix, mode: Mode, dims: [usize; 3]) -> Result<Tensor3> {
        if dims.contains(&0) {
            return Err(NtdError::arg("tensor dimensions must be positive"));
        }
        let (rows, cols) = unfolding_shape(dims, mode);
        if m.shape() != (rows, cols) {
            return Err(NtdError::arg(format!(
                "cannot fold a {}x{} matrix along mode {} into {}x{}x{} (expected {rows}x{cols})",
                m.rows,
                m.cols,
                mode.number(),
                dims[0],
                dims[1],
                dims[2]
            )));
        }
        let [nj, nk, nl] = dims;
        let mut data = Vec::with_capacity(m.data.len());
        for j in 0..nj {
            for k in 0..nk {
                for l in 0..nl {
                    let (r, c) = match mode {
                        Mode::First => (j, k + l * nk),
                        Mode::Second => (k, j + l * nj),
                        Mode::Third => (l, j + k * nj),
                    };
                    data.push(m.data[r * cols + c]);
                }
            }
        }
        Ok(Tensor3 { dims, data })
    }

    /// Mode-`n` product `self ×ₙ m`: the `n`-th dimension is replaced by
    /// `m.rows()`.
    ///
    /// Works directly on the row-major storage. Every output entry
    /// accumulates its sum in ascending order of the contracted index, so the
    /// result is bit-identical to `fold(m · X₍ₙ₎)`.
    pub fn mode_product(&self, m: &Matrix, mode: Mode) -> Result<Tensor3> {
        let n = mode.index();
        if m.cols != self.dims[n] {
            return Err(NtdError::arg(format!(
                "mode-{} product needs a matrix with {} columns, got {}x{}",
                mode.number(),
                self.dims[n],
                m.rows,
                m.cols
            )));
        }
        let [_, nk, nl] = self.dims;
        let mut dims = self.dims;
        dims[n] = m.rows;
        let mut out = vec![0.0; dims[0] * dims[1] * dims[2]];
        match mode {
            Mode::First => {
                // out[a, :, :] = Σ_j m[a, j] · t[j, :, :]
                let slab = nk * nl;
                for (out_slab, m_row) in out.chunks_exact_mut(slab).zip(m.data.chunks_exact(m.cols)) {
                    for (&coef, src) in m_row.iter().zip(self.data.chunks_exact(slab)) {
                        axpy(coef, src, out_slab);
                    }
                }
            }
            Mode::Second => {
                // out[j, a, :] = Σ_k m[a, k] · t[j, k, :]
                let (src_slab, out_slab) = (nk * nl, m.rows * nl);
                for (out_j, src_j) in out.chunks_exact_mut(out_slab).zip(self.data.chunks_exact(src_slab)) {
                    for (out_row, m_row) in out_j.chunks_exact_mut(nl).zip(m.data.chunks_exact(m.cols)) {
                        for (&coef, src_row) in m_row.iter().zip(src_j.chunks_exact(nl)) {
                            axpy(coef, src_row, out_row);
                        }
                    }
                }
            }
            Mode::Third => {
                // out[j, k, c] = Σ_l t[j, k, l] · m[c, l]
                for (out_fibre, src_fibre) in out.chunks_exact_mut(m.rows).zip(self.data.chunks_exact(nl)) {
                    for (o, m_row) in out_fibre.iter_mut().zip(m.data.chunks_exact(m.cols)) {
                        *o = dot(src_fibre, m_row);
                    }
                }
            }
        }
        Ok(Tensor3 { dims, data: out })
    }
}

/// `g ×₁ w ×₂ h ×₃ q`, evaluated in lexicographic mode order.
pub fn multiway_product(g: &Tensor3, w: &Matrix, h: &Matrix, q: &Matrix) -> Result<Tensor3> {
    check_conforming(g, [w, h, q])?;
    g.mode_product(w, Mode::First)?
        .mode_product(h, Mode::Second)?
        .mode_product(q, Mode::Third)
}

/// The contracted unfolding `V` used by the factor updates.
///
/// `a` and `b` multiply the two modes other than `mode`, in increasing mode
/// order: for mode 1 they act on modes 2 and 3, for mode 2 on modes 1 and 3,
/// for mode 3 on modes 1 and 2. The result is the mode-`mode` unfolding of
/// that product, i.e. `g₍ₙ₎ (b ⊗ a)ᵀ` under the Kolda–Bader column order,
/// computed without forming the Kronecker product.
pub fn contracted_unfolding(g: &Tensor3, a: &Matrix, b: &Matrix, mode: Mode) -> Result<Matrix> {
    let (first, second) = match mode {
        Mode::First => (Mode::Second, Mode::Third),
        Mode::Second => (Mode::First, Mode::Third),
        Mode::Third => (Mode::First, Mode::Second),
    };
    for (m, other) in [(a, first), (b, second)] {
        if m.cols != g.dims[other.index()] {
            return Err(NtdError::arg(format!(
                "contracted unfolding along mode {}: factor for mode {} has {} columns, core dimension is {}",
                mode.number(),
                other.number(),
                m.cols,
                g.dims[other.index()]
            )));
        }
    }
    Ok(g.mode_product(a, first)?.mode_product(b, second)?.matricize(mode))
}

fn check_conforming(g: &Tensor3, factors: [&Matrix; 3]) -> Result<()> {
    for (mode, f) in Mode::ALL.into_iter().zip(factors) {
        if f.cols != g.dims[mode.index()] {
            return Err(NtdError::arg(format!(
                "factor for mode {} has {} columns but the core has dimension {}",
                mode.number(),
                f.cols,
                g.dims[mode.index()]
            )));
        }
    }
    Ok(())
}

fn unfolding_shape(dims: [usize; 3], mode: Mode) -> (usize, usize) {
    let n = mode.index();
    (dims[n], dims.iter().product::<usize>() / dims[n])
}

#[inline]
fn axpy(a: f64, x: &[f64], y: &mut [f64]) {
    for (yi, &xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}

#[inline]
pub(crate) fn dot(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).fold(0.0, |acc, (&a, &b)| acc + a * b)
}

/// Entrywise operations shared by [`Matrix`] and [`Tensor3`].
pub trait Elementwise: Clone {
    fn values(&self) -> &[f64];
    fn values_mut(&mut self) -> &mut [f64];
    /// Shape used to decide whether two operands conform.
    fn shape_key(&self) -> [usize; 3];

    /// Entrywise power. An exponent of `0` yields the constant-one array
    /// (no `0⁰` is evaluated); negative exponents require strictly positive
    /// entries.
    fn power(&self, p: f64) -> Result<Self> {
        let mut out = self.clone();
        if p == 0.0 {
            out.values_mut().fill(1.0);
            return Ok(out);
        }
        if p == 1.0 {
            return Ok(out);
        }
        if p < 0.0 {
            if let Some(i) = self.values().iter().position(|&v| v <= 0.0) {
                return Err(NtdError::domain(format!(
                    "negative power {p} of non-positive entry {} at offset {i}",
                    self.values()[i]
                )));
            }
        }
        for v in out.values_mut() {
            *v = powf(*v, p);
        }
        Ok(out)
    }

    fn multiply(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a * b)
    }

    /// Entrywise division; a zero anywhere in `other` is a domain error.
    fn divide(&self, other: &Self) -> Result<Self> {
        if let Some(i) = other.values().iter().position(|&v| v == 0.0) {
            return Err(NtdError::domain(format!("division by a zero entry at offset {i}")));
        }
        self.zip_with(other, |a, b| a / b)
    }

    /// `max(self, eps)` entrywise.
    fn clamp_min(&self, eps: f64) -> Self {
        let mut out = self.clone();
        for v in out.values_mut() {
            *v = v.max(eps);
        }
        out
    }

    fn zip_with(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        if self.shape_key() != other.shape_key() {
            return Err(NtdError::arg("entrywise operands have different shapes"));
        }
        let mut out = self.clone();
        for (o, &b) in out.values_mut().iter_mut().zip(other.values()) {
            *o = f(*o, b);
        }
        Ok(out)
    }
}

impl Elementwise for Matrix {
    fn values(&self) -> &[f64] {
        &self.data
    }
    fn values_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }
    fn shape_key(&self) -> [usize; 3] {
        [self.rows, self.cols, 1]
    }
}

impl Elementwise for Tensor3 {
    fn values(&self) -> &[f64] {
        &self.data
    }
    fn values_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }
    fn shape_key(&self) -> [usize; 3] {
        self.dims
    }
}

/// `x^p` with cheap paths for the exponents the solver hits most often.
#[inline]
pub(crate) fn powf(x: f64, p: f64) -> f64 {
    if p == 0.0 {
        1.0
    } else if p == 1.0 {
        x
    } else if p == -1.0 {
        1.0 / x
    } else if p == 2.0 {
        x * x
    } else if p == -2.0 {
        1.0 / (x * x)
    } else if p == 0.5 {
        libm::sqrt(x)
    } else {
        libm::pow(x, p)
    }
}
