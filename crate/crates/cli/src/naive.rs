//! Reference multiplicative updates that materialize every Kronecker
//! product. Only useful as a slow baseline for `ntd bench`.

use std::time::{Duration, Instant};

use ntd_core::{gamma_exponent, objective, Elementwise, FactorSet, Matrix, Mode, SolverConfig, Tensor3};

use crate::error::{CliError, Result};

/// Largest `J·K·L · J'·K'·L'` for which the core Kronecker matrix is built.
pub const MAX_KRONECKER_ENTRIES: usize = 4_000_000;

pub fn check_size(data_dims: [usize; 3], core_dims: [usize; 3]) -> Result<()> {
    let entries = data_dims.iter().chain(&core_dims).product::<usize>();
    if entries > MAX_KRONECKER_ENTRIES {
        let [j, k, l] = data_dims;
        let [a, b, c] = core_dims;
        return Err(CliError::Argument(format!(
            "naive path would materialize a {}x{} Kronecker matrix for {j}x{k}x{l} data with a {a}x{b}x{c} core \
             ({entries} entries, limit {MAX_KRONECKER_ENTRIES}); use smaller dims or drop --allow-naive",
            j * k * l,
            a * b * c,
        )));
    }
    Ok(())
}

pub fn kron(a: &Matrix, b: &Matrix) -> Matrix {
    let (br, bc) = b.shape();
    Matrix::from_fn(a.rows() * br, a.cols() * bc, |r, c| {
        a.get(r / br, c / bc) * b.get(r % br, c % bc)
    })
    .expect("kronecker dims are positive")
}

fn column(v: &[f64]) -> Matrix {
    Matrix::new(v.len(), 1, v.to_vec()).expect("nonempty vector")
}

fn mu_step<T: Elementwise>(current: &T, num: &T, den: &T, gamma: f64, eps: f64) -> ntd_core::Result<T> {
    let ratio = num.divide(den)?.power(gamma)?;
    Ok(current.multiply(&ratio)?.clamp_min(eps))
}

fn update_factor(x: &Tensor3, f: &FactorSet, mode: Mode, cfg: &SolverConfig) -> Result<Matrix> {
    let (u, a, b) = match mode {
        Mode::First => (&f.w, &f.h, &f.q),
        Mode::Second => (&f.h, &f.w, &f.q),
        Mode::Third => (&f.q, &f.w, &f.h),
    };
    let beta = cfg.beta.value();
    let v = f.core.matricize(mode).matmul_transposed(&kron(b, a))?;
    let model = u.matmul(&v)?;
    let data = x.matricize(mode);
    let num = model.power(beta - 2.0)?.multiply(&data)?.matmul_transposed(&v)?;
    let den = model.power(beta - 1.0)?.matmul_transposed(&v)?;
    Ok(mu_step(u, &num, &den, gamma_exponent(cfg.beta), cfg.epsilon)?)
}

fn update_core(x: &Tensor3, f: &FactorSet, cfg: &SolverConfig) -> Result<Tensor3> {
    let beta = cfg.beta.value();
    let big = kron(&kron(&f.w, &f.h), &f.q);
    let big_t = big.transpose();
    let model = big.matmul(&column(f.core.as_slice()))?;
    let data = column(x.as_slice());
    let num = big_t.matmul(&model.power(beta - 2.0)?.multiply(&data)?)?;
    let den = big_t.matmul(&model.power(beta - 1.0)?)?;
    let core = column(f.core.as_slice());
    let next = mu_step(&core, &num, &den, gamma_exponent(cfg.beta), cfg.epsilon)?;
    Ok(Tensor3::new(f.core.dims(), next.into_vec())?)
}

/// One W, H, Q, core sweep through the explicit Kronecker formulation.
pub fn iterate(x: &Tensor3, f: &FactorSet, cfg: &SolverConfig) -> Result<FactorSet> {
    let mut f = f.clone();
    f.w = update_factor(x, &f, Mode::First, cfg)?;
    f.h = update_factor(x, &f, Mode::Second, cfg)?;
    f.q = update_factor(x, &f, Mode::Third, cfg)?;
    f.core = update_core(x, &f, cfg)?;
    Ok(f)
}

/// Runs `iters` naive sweeps from `init`, returning the loss after every
/// sweep (index 0 is the initial loss) and the per-sweep wall time.
pub fn run(x: &Tensor3, init: FactorSet, cfg: &SolverConfig, iters: usize) -> Result<(Vec<f64>, Vec<Duration>)> {
    check_size(x.dims(), cfg.core_dims)?;
    let mut f = init;
    let mut losses = vec![objective(x, &f.reconstruct()?, cfg.beta)?];
    let mut times = Vec::with_capacity(iters);
    for _ in 0..iters {
        let t = Instant::now();
        f = iterate(x, &f, cfg)?;
        times.push(t.elapsed());
        losses.push(objective(x, &f.reconstruct()?, cfg.beta)?);
    }
    Ok((losses, times))
}
