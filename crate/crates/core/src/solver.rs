//! Multiplicative-update solver for nonnegative Tucker decomposition under
//! the β-divergence.
//!
//! One iteration updates `W`, `H`, `Q` and then the core `𝒢`, each update
//! using the freshest values of the other blocks. Every update has the form
//!
//! ```text
//! U ← max(U · (numerator ÷ denominator)^γ(β), ε)
//! ```
//!
//! For a factor, the numerator and denominator come from the matricized
//! model `X₍ₙ₎ ≈ U V` with `V` the contracted unfolding of the core and the
//! other two factors. For the core they are the data-weighted residual
//! tensors contracted back with `Wᵀ`, `Hᵀ`, `Qᵀ` through mode products.

use alloc::format;
use alloc::vec::Vec;
use core::time::Duration;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::divergence::{gamma_exponent, objective, Beta};
use crate::error::{NtdError, Result};
use crate::tensor::{contracted_unfolding, multiway_product, powf, Elementwise, Matrix, Mode, Tensor3};

/// One NTD iterate: `X ≈ 𝒢 ×₁ W ×₂ H ×₃ Q`.
#[derive(Debug, Clone, PartialEq)]
pub struct FactorSet {
    pub w: Matrix,
    pub h: Matrix,
    pub q: Matrix,
    pub core: Tensor3,
}

impl FactorSet {
    pub fn new(w: Matrix, h: Matrix, q: Matrix, core: Tensor3) -> Result<Self> {
        let f = FactorSet { w, h, q, core };
        // Conformity check only.
        f.core_dims_checked()?;
        Ok(f)
    }

    fn core_dims_checked(&self) -> Result<[usize; 3]> {
        let cd = self.core.dims();
        for mode in Mode::ALL {
            let m = self.factor(mode);
            if m.cols() != cd[mode.index()] {
                return Err(NtdError::arg(format!(
                    "factor {} has {} columns but core dimension {} is {}",
                    mode.number(),
                    m.cols(),
                    mode.number(),
                    cd[mode.index()]
                )));
            }
        }
        Ok(cd)
    }

    pub fn factor(&self, mode: Mode) -> &Matrix {
        match mode {
            Mode::First => &self.w,
            Mode::Second => &self.h,
            Mode::Third => &self.q,
        }
    }

    /// `(J, K, L)` of the tensor this factor set models.
    pub fn data_dims(&self) -> [usize; 3] {
        [self.w.rows(), self.h.rows(), self.q.rows()]
    }

    pub fn core_dims(&self) -> [usize; 3] {
        self.core.dims()
    }

    /// `𝒢 ×₁ W ×₂ H ×₃ Q`.
    pub fn reconstruct(&self) -> Result<Tensor3> {
        multiway_product(&self.core, &self.w, &self.h, &self.q)
    }

    fn all_values(&self) -> impl Iterator<Item = f64> + '_ {
        self.w
            .values()
            .iter()
            .chain(self.h.values())
            .chain(self.q.values())
            .chain(self.core.values())
            .copied()
    }

    /// Smallest entry over the three factors and the core.
    pub fn min_entry(&self) -> f64 {
        self.all_values().fold(f64::INFINITY, f64::min)
    }
}

/// Solver parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub beta: Beta,
    /// Lower clamp applied to every factor and core entry after each update.
    pub epsilon: f64,
    /// `(J', K', L')`.
    pub core_dims: [usize; 3],
    pub max_iters: usize,
    /// Stop once the relative loss decrease over one evaluation period falls
    /// below this value.
    pub rel_tol: f64,
    pub seed: u64,
    /// Evaluate the objective every this many iterations.
    pub loss_eval_period: usize,
    /// Clamp the data to `epsilon` before solving. Needed for `β ≤ 0` when the
    /// data contain zeros.
    pub clamp_data: bool,
}

impl SolverConfig {
    pub const DEFAULT_EPSILON: f64 = 1e-12;
    pub const DEFAULT_REL_TOL: f64 = 1e-8;

    pub fn new(beta: Beta, core_dims: [usize; 3]) -> Self {
        SolverConfig {
            beta,
            epsilon: Self::DEFAULT_EPSILON,
            core_dims,
            max_iters: 1000,
            rel_tol: Self::DEFAULT_REL_TOL,
            seed: 0,
            loss_eval_period: 1,
            clamp_data: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return Err(NtdError::arg(format!(
                "epsilon must lie in (0, 1), got {}",
                self.epsilon
            )));
        }
        if self.core_dims.contains(&0) {
            return Err(NtdError::arg("core dimensions must be at least 1"));
        }
        if !(self.rel_tol >= 0.0) {
            return Err(NtdError::arg(format!("rel_tol must be >= 0, got {}", self.rel_tol)));
        }
        if self.loss_eval_period == 0 {
            return Err(NtdError::arg("loss_eval_period must be at least 1"));
        }
        Ok(())
    }
}

/// Objective values recorded during [`solve`].
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LossTrace {
    /// Objective values; entry 0 is the loss of the initial factors.
    pub losses: Vec<f64>,
    /// Iteration index at which each entry of `losses` was evaluated.
    pub loss_iters: Vec<usize>,
    /// Wall-clock duration of every iteration performed.
    pub iter_times: Vec<Duration>,
    /// Iteration at which the relative-decrease test fired, if it did.
    pub converged_at: Option<usize>,
}

impl LossTrace {
    pub fn final_loss(&self) -> Option<f64> {
        self.losses.last().copied()
    }

    pub fn iterations(&self) -> usize {
        self.iter_times.len()
    }
}

/// Source of iteration timings. The core has no clock of its own.
pub trait Stopwatch {
    fn start(&mut self);
    fn stop(&mut self) -> Duration;
}

/// Records every iteration as taking zero time.
#[derive(Debug, Default, Clone, Copy)]
pub struct NoClock;

impl Stopwatch for NoClock {
    fn start(&mut self) {}
    fn stop(&mut self) -> Duration {
        Duration::ZERO
    }
}

/// Random factors with entries i.i.d. uniform on `[ε, 1]`, deterministic in
/// `cfg.seed`. Draw order: `W`, `H`, `Q`, then the core, each row-major.
pub fn init_factors(data_dims: [usize; 3], cfg: &SolverConfig) -> Result<FactorSet> {
    cfg.validate()?;
    if data_dims.contains(&0) {
        return Err(NtdError::arg("data dimensions must be positive"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let eps = cfg.epsilon;
    let mut draw = |rows: usize, cols: usize| Matrix::from_fn(rows, cols, |_, _| rng.gen_range(eps..=1.0));
    let w = draw(data_dims[0], cfg.core_dims[0])?;
    let h = draw(data_dims[1], cfg.core_dims[1])?;
    let q = draw(data_dims[2], cfg.core_dims[2])?;
    let core = Tensor3::from_fn(cfg.core_dims, |_, _, _| rng.gen_range(eps..=1.0))?;
    FactorSet::new(w, h, q, core)
}

/// Multiplicative update of the factor for `mode`, all other blocks fixed.
pub fn update_mode_factor(x: &Tensor3, f: &FactorSet, mode: Mode, cfg: &SolverConfig) -> Result<Matrix> {
    check_dims(x, f)?;
    update_factor_with(&x.matricize(mode), f, mode, cfg)
}

fn update_factor_with(x_unfolded: &Matrix, f: &FactorSet, mode: Mode, cfg: &SolverConfig) -> Result<Matrix> {
    let (a, b) = match mode {
        Mode::First => (&f.h, &f.q),
        Mode::Second => (&f.w, &f.q),
        Mode::Third => (&f.w, &f.h),
    };
    let v = contracted_unfolding(&f.core, a, b, mode)?;
    let u = f.factor(mode);
    let model = u.matmul(&v)?;
    let (num_weights, den_weights) = residual_weights(model, x_unfolded, cfg.beta)?;
    let num = num_weights.matmul_transposed(&v)?;
    let den = den_weights.matmul_transposed(&v)?;
    apply_ratio(u, &num, &den, cfg)
}

/// Multiplicative update of the core, factors fixed.
pub fn update_core(x: &Tensor3, f: &FactorSet, cfg: &SolverConfig) -> Result<Tensor3> {
    check_dims(x, f)?;
    let model = f.reconstruct()?;
    let (num_weights, den_weights) = residual_weights(model, x, cfg.beta)?;
    let (wt, ht, qt) = (f.w.transpose(), f.h.transpose(), f.q.transpose());
    let num = multiway_product(&num_weights, &wt, &ht, &qt)?;
    let den = multiway_product(&den_weights, &wt, &ht, &qt)?;
    apply_ratio(&f.core, &num, &den, cfg)
}

/// One full loop: `W`, `H`, `Q`, then the core.
pub fn iterate(x: &Tensor3, f: &FactorSet, cfg: &SolverConfig) -> Result<FactorSet> {
    check_dims(x, f)?;
    let unfolded = Mode::ALL.map(|m| x.matricize(m));
    iterate_with(x, &unfolded, f.clone(), cfg)
}

fn iterate_with(x: &Tensor3, unfolded: &[Matrix; 3], mut f: FactorSet, cfg: &SolverConfig) -> Result<FactorSet> {
    f.w = update_factor_with(&unfolded[0], &f, Mode::First, cfg)?;
    f.h = update_factor_with(&unfolded[1], &f, Mode::Second, cfg)?;
    f.q = update_factor_with(&unfolded[2], &f, Mode::Third, cfg)?;
    f.core = update_core(x, &f, cfg)?;
    Ok(f)
}

/// Runs [`iterate`] until `cfg.max_iters` or the relative-decrease test
/// fires. Starts from `init`, or from [`init_factors`] when `None`.
pub fn solve(x: &Tensor3, cfg: &SolverConfig, init: Option<FactorSet>) -> Result<(FactorSet, LossTrace)> {
    solve_timed(x, cfg, init, &mut NoClock)
}

/// [`solve`] with iteration timings taken from `clock`.
pub fn solve_timed<C: Stopwatch + ?Sized>(
    x: &Tensor3,
    cfg: &SolverConfig,
    init: Option<FactorSet>,
    clock: &mut C,
) -> Result<(FactorSet, LossTrace)> {
    cfg.validate()?;
    if let Some(i) = x.values().iter().position(|v| !(v.is_finite() && *v >= 0.0)) {
        let (j, k, l) = x.index_of(i);
        return Err(NtdError::arg(format!(
            "data entry ({j}, {k}, {l}) = {} is not a finite nonnegative value",
            x.values()[i]
        )));
    }
    let clamped;
    let x = if cfg.clamp_data {
        clamped = x.clamp_min(cfg.epsilon);
        &clamped
    } else {
        x
    };

    let mut f = match init {
        Some(f) => {
            check_dims(x, &f)?;
            if f.core_dims() != cfg.core_dims {
                return Err(NtdError::arg("initial core dims differ from the configured core dims"));
            }
            if f.all_values().any(|v| !(v.is_finite() && v >= cfg.epsilon)) {
                return Err(NtdError::arg("initial factors must be finite and >= epsilon"));
            }
            f
        }
        None => init_factors(x.dims(), cfg)?,
    };

    let unfolded = Mode::ALL.map(|m| x.matricize(m));
    let mut trace = LossTrace::default();
    let initial = evaluate(x, &f, cfg, 0)?;
    trace.losses.push(initial);
    trace.loss_iters.push(0);

    for it in 1..=cfg.max_iters {
        clock.start();
        f = iterate_with(x, &unfolded, f, cfg).map_err(|e| e.at_iteration(it))?;
        trace.iter_times.push(clock.stop());

        if it % cfg.loss_eval_period == 0 || it == cfg.max_iters {
            let prev = *trace.losses.last().unwrap();
            let loss = evaluate(x, &f, cfg, it)?;
            trace.losses.push(loss);
            trace.loss_iters.push(it);
            if (prev - loss) / prev.max(f64::MIN_POSITIVE) < cfg.rel_tol {
                trace.converged_at = Some(it);
                break;
            }
        }
    }
    Ok((f, trace))
}

fn evaluate(x: &Tensor3, f: &FactorSet, cfg: &SolverConfig, it: usize) -> Result<f64> {
    let loss = f
        .reconstruct()
        .and_then(|approx| objective(x, &approx, cfg.beta))
        .map_err(|e| e.at_iteration(it))?;
    if !loss.is_finite() {
        return Err(NtdError::NumericalDomain {
            message: format!("objective is not finite ({loss})"),
            iteration: Some(it),
        });
    }
    Ok(loss)
}

fn check_dims(x: &Tensor3, f: &FactorSet) -> Result<()> {
    f.core_dims_checked()?;
    if f.data_dims() != x.dims() {
        let [j, k, l] = x.dims();
        let [fj, fk, fl] = f.data_dims();
        return Err(NtdError::arg(format!(
            "factors model a {fj}x{fk}x{fl} tensor, data is {j}x{k}x{l}"
        )));
    }
    Ok(())
}

/// Turns the model `M` into the pair `(M^(β−2) · X, M^(β−1))`, reusing the
/// model's storage.
fn residual_weights<T: Elementwise>(model: T, x: &T, beta: Beta) -> Result<(T, T)> {
    let b = beta.value();
    if b < 2.0 {
        if let Some(i) = model.values().iter().position(|&v| !(v > 0.0)) {
            return Err(NtdError::domain(format!(
                "model entry {} at offset {i} is not positive",
                model.values()[i]
            )));
        }
    }
    let mut num = model.clone();
    let mut den = model;
    for ((n, d), &xv) in num.values_mut().iter_mut().zip(den.values_mut()).zip(x.values()) {
        let m = *d;
        *n = powf(m, b - 2.0) * xv;
        *d = powf(m, b - 1.0);
    }
    Ok((num, den))
}

fn apply_ratio<T: Elementwise>(current: &T, num: &T, den: &T, cfg: &SolverConfig) -> Result<T> {
    let gamma = gamma_exponent(cfg.beta);
    let mut out = current.clone();
    for (i, ((u, &n), &d)) in out
        .values_mut()
        .iter_mut()
        .zip(num.values())
        .zip(den.values())
        .enumerate()
    {
        let ratio = n / d;
        if !(d > 0.0) || !ratio.is_finite() {
            return Err(NtdError::domain(format!(
                "update ratio {n} / {d} at offset {i} is not finite"
            )));
        }
        *u = (*u * powf(ratio, gamma)).max(cfg.epsilon);
    }
    Ok(out)
}
