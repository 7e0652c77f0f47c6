//! Slow, obviously-correct reference computations used only by tests.
//!
//! Everything here works from raw index loops and explicit Kronecker
//! products; nothing calls the contraction or update code of `ntd-core`.
//! Only the plain containers (`Matrix`, `Tensor3`, `FactorSet`) are shared.

use ntd_core::{FactorSet, Matrix, Tensor3};

/// Dense row-major matrix used inside the oracles.
#[derive(Debug, Clone, PartialEq)]
pub struct Dense {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl Dense {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Dense {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_matrix(m: &Matrix) -> Self {
        Dense::from_fn(m.rows(), m.cols(), |r, c| m.get(r, c))
    }

    pub fn from_fn(rows: usize, cols: usize, f: impl Fn(usize, usize) -> f64) -> Self {
        let mut d = Dense::zeros(rows, cols);
        for r in 0..rows {
            for c in 0..cols {
                d.data[r * cols + c] = f(r, c);
            }
        }
        d
    }

    pub fn at(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    pub fn transpose(&self) -> Dense {
        Dense::from_fn(self.cols, self.rows, |r, c| self.at(c, r))
    }

    pub fn mul(&self, rhs: &Dense) -> Dense {
        assert_eq!(self.cols, rhs.rows, "oracle matmul shape mismatch");
        Dense::from_fn(self.rows, rhs.cols, |r, c| {
            (0..self.cols).map(|i| self.at(r, i) * rhs.at(i, c)).sum()
        })
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Dense {
        Dense {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn zip(&self, other: &Dense, f: impl Fn(f64, f64) -> f64) -> Dense {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        Dense {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(&a, &b)| f(a, b)).collect(),
        }
    }

    pub fn to_matrix(&self) -> Matrix {
        Matrix::new(self.rows, self.cols, self.data.clone()).unwrap()
    }
}

/// `a ⊗ b`.
pub fn kron(a: &Dense, b: &Dense) -> Dense {
    Dense::from_fn(a.rows * b.rows, a.cols * b.cols, |r, c| {
        a.at(r / b.rows, c / b.cols) * b.at(r % b.rows, c % b.cols)
    })
}

/// Mode-`mode` (1-based) unfolding with Kolda–Bader columns, by index loops.
pub fn unfold(t: &Tensor3, mode: usize) -> Dense {
    let [nj, nk, nl] = t.dims();
    let (rows, cols) = match mode {
        1 => (nj, nk * nl),
        2 => (nk, nj * nl),
        3 => (nl, nj * nk),
        _ => panic!("bad mode"),
    };
    let mut d = Dense::zeros(rows, cols);
    for j in 0..nj {
        for k in 0..nk {
            for l in 0..nl {
                let (r, c) = match mode {
                    1 => (j, k + nk * l),
                    2 => (k, j + nj * l),
                    _ => (l, j + nj * k),
                };
                d.data[r * cols + c] = t.get(j, k, l);
            }
        }
    }
    d
}

/// Row-major `vec(t)`: index `(j·K + k)·L + l`, as a column.
pub fn vec_of(t: &Tensor3) -> Dense {
    let [nj, nk, nl] = t.dims();
    let mut d = Dense::zeros(nj * nk * nl, 1);
    for j in 0..nj {
        for k in 0..nk {
            for l in 0..nl {
                d.data[(j * nk + k) * nl + l] = t.get(j, k, l);
            }
        }
    }
    d
}

pub fn unvec(v: &Dense, dims: [usize; 3]) -> Tensor3 {
    Tensor3::new(dims, v.data.clone()).unwrap()
}

/// `𝒢 ×₁ W ×₂ H ×₃ Q` as `(W ⊗ H ⊗ Q) · vec(𝒢)`.
pub fn multiway(g: &Tensor3, w: &Matrix, h: &Matrix, q: &Matrix) -> Tensor3 {
    let big = kron(
        &kron(&Dense::from_matrix(w), &Dense::from_matrix(h)),
        &Dense::from_matrix(q),
    );
    unvec(&big.mul(&vec_of(g)), [w.rows(), h.rows(), q.rows()])
}

/// `𝒢₍ₙ₎ (b ⊗ a)ᵀ`: the mode-`n` unfolding of `𝒢` with `a`, `b` applied to
/// the other two modes in increasing mode order.
pub fn contracted_unfolding(g: &Tensor3, a: &Matrix, b: &Matrix, mode: usize) -> Dense {
    let k = kron(&Dense::from_matrix(b), &Dense::from_matrix(a));
    unfold(g, mode).mul(&k.transpose())
}

fn gamma(beta: f64) -> f64 {
    if beta < 1.0 {
        1.0 / (2.0 - beta)
    } else if beta <= 2.0 {
        1.0
    } else {
        1.0 / (beta - 1.0)
    }
}

/// Numerator and denominator of the factor update for `mode`, from the
/// Kronecker form `X₍ₙ₎ ≈ U 𝒢₍ₙ₎ (b ⊗ a)ᵀ`.
pub fn factor_terms(x: &Tensor3, f: &FactorSet, mode: usize, beta: f64) -> (Dense, Dense) {
    let (u, a, b) = match mode {
        1 => (&f.w, &f.h, &f.q),
        2 => (&f.h, &f.w, &f.q),
        _ => (&f.q, &f.w, &f.h),
    };
    let v = contracted_unfolding(&f.core, a, b, mode);
    let m = unfold(x, mode);
    let uv = Dense::from_matrix(u).mul(&v);
    let vt = v.transpose();
    let num = uv.zip(&m, |y, x| y.powf(beta - 2.0) * x).mul(&vt);
    let den = uv.map(|y| y.powf(beta - 1.0)).mul(&vt);
    (num, den)
}

pub fn update_factor(x: &Tensor3, f: &FactorSet, mode: usize, beta: f64, eps: f64) -> Matrix {
    let u = Dense::from_matrix(match mode {
        1 => &f.w,
        2 => &f.h,
        _ => &f.q,
    });
    let (num, den) = factor_terms(x, f, mode, beta);
    let g = gamma(beta);
    let ratio = num.zip(&den, |n, d| (n / d).powf(g));
    u.zip(&ratio, |a, r| (a * r).max(eps)).to_matrix()
}

/// Numerator and denominator of the core update as vectors, through
/// `vec(𝒳) = (W ⊗ H ⊗ Q) vec(𝒢)`.
pub fn core_terms(x: &Tensor3, f: &FactorSet, beta: f64) -> (Dense, Dense) {
    let big = kron(
        &kron(&Dense::from_matrix(&f.w), &Dense::from_matrix(&f.h)),
        &Dense::from_matrix(&f.q),
    );
    let model = big.mul(&vec_of(&f.core));
    let data = vec_of(x);
    let bt = big.transpose();
    let num = bt.mul(&model.zip(&data, |y, x| y.powf(beta - 2.0) * x));
    let den = bt.mul(&model.map(|y| y.powf(beta - 1.0)));
    (num, den)
}

pub fn update_core(x: &Tensor3, f: &FactorSet, beta: f64, eps: f64) -> Tensor3 {
    let (num, den) = core_terms(x, f, beta);
    let g = gamma(beta);
    let core = vec_of(&f.core);
    let out = core.zip(&num.zip(&den, |n, d| (n / d).powf(g)), |c, r| (c * r).max(eps));
    unvec(&out, f.core.dims())
}

/// One full loop (W, H, Q, core) through the Kronecker formulation.
pub fn iterate(x: &Tensor3, f: &FactorSet, beta: f64, eps: f64) -> FactorSet {
    let mut f = f.clone();
    f.w = update_factor(x, &f, 1, beta, eps);
    f.h = update_factor(x, &f, 2, beta, eps);
    f.q = update_factor(x, &f, 3, beta, eps);
    f.core = update_core(x, &f, beta, eps);
    f
}

/// Largest `|ratio^γ − 1|` over every factor and core coordinate whose value
/// exceeds `floor`, with all blocks held at `f`.
pub fn max_ratio_deviation(x: &Tensor3, f: &FactorSet, beta: f64, floor: f64) -> f64 {
    let g = gamma(beta);
    let mut worst: f64 = 0.0;
    for (mode, u) in [(1, &f.w), (2, &f.h), (3, &f.q)] {
        let (num, den) = factor_terms(x, f, mode, beta);
        for (i, &val) in u.as_slice().iter().enumerate() {
            if val > floor {
                worst = worst.max(((num.data[i] / den.data[i]).powf(g) - 1.0).abs());
            }
        }
    }
    let (num, den) = core_terms(x, f, beta);
    for (i, &val) in f.core.as_slice().iter().enumerate() {
        if val > floor {
            worst = worst.max(((num.data[i] / den.data[i]).powf(g) - 1.0).abs());
        }
    }
    worst
}

/// `d_β(x|y)` straight from the three-branch definition.
pub fn beta_div(x: f64, y: f64, beta: f64) -> f64 {
    if beta == 0.0 {
        x / y - (x / y).ln() - 1.0
    } else if beta == 1.0 {
        x * (x / y).ln() + (y - x)
    } else {
        (x.powf(beta) + (beta - 1.0) * y.powf(beta) - beta * x * y.powf(beta - 1.0)) / (beta * (beta - 1.0))
    }
}

/// Size of a maximum one-to-one matching between `est` and `reference`
/// with `|e − r| ≤ tol`, by exhaustive search.
pub fn brute_force_hits(est: &[f64], reference: &[f64], tol: f64) -> usize {
    fn go(est: &[f64], reference: &[f64], used: &mut Vec<bool>, tol: f64) -> usize {
        let Some((&e, rest)) = est.split_first() else {
            return 0;
        };
        let mut best = go(rest, reference, used, tol);
        for (i, &r) in reference.iter().enumerate() {
            if !used[i] && (e - r).abs() <= tol {
                used[i] = true;
                best = best.max(1 + go(rest, reference, used, tol));
                used[i] = false;
            }
        }
        best
    }
    go(est, reference, &mut vec![false; reference.len()], tol)
}

/// `max |a − b| / max(|b|, tiny)` entrywise.
pub fn max_rel_err(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter()
        .zip(b)
        .map(|(&x, &y)| (x - y).abs() / y.abs().max(f64::MIN_POSITIVE))
        .fold(0.0, f64::max)
}
