//! Nonnegative Tucker decomposition (NTD) of third-order tensors under the
//! β-divergence, fitted with multiplicative updates.
//!
//! ```text
//! X ≈ 𝒢 ×₁ W ×₂ H ×₃ Q,   W, H, Q, 𝒢 ≥ 0
//! ```
//!
//! The crate is `no_std` (it needs `alloc`) and has no I/O. It provides:
//!
//! - [`tensor`]: dense matrices and tensors, unfoldings, mode products and
//!   the Kronecker-free contractions the updates are built on;
//! - [`divergence`]: `d_β`, the aggregate objective and the update exponent
//!   `γ(β)`;
//! - [`solver`]: the update rules and the solve loop;
//! - [`tfb`]: Mel filterbanks and time–frequency–bar tensors built from
//!   spectrograms;
//! - [`segmentation`]: bar segmentation from the bar factor, and boundary
//!   scoring.
//!
//! ```
//! use ntd_core::{solve, Beta, SolverConfig, Tensor3};
//!
//! let x = Tensor3::from_fn([6, 5, 4], |j, k, l| 1.0 + ((j * k + l) % 3) as f64).unwrap();
//! let mut cfg = SolverConfig::new(Beta::KULLBACK_LEIBLER, [2, 2, 2]);
//! cfg.max_iters = 50;
//! let (factors, trace) = solve(&x, &cfg, None).unwrap();
//! assert_eq!(factors.w.shape(), (6, 2));
//! assert!(trace.final_loss().unwrap() <= trace.losses[0]);
//! ```
#![cfg_attr(not(test), no_std)]
// `!(a > b)` is used deliberately so that NaN fails the check.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod divergence;
pub mod error;
pub mod segmentation;
pub mod solver;
pub mod tensor;
pub mod tfb;

pub use divergence::{beta_div, gamma_exponent, objective, Beta};
pub use error::{NtdError, Result};
pub use segmentation::{
    bar_autosimilarity, bars_to_seconds, evaluate_boundaries, segment_bars, BoundarySet, EvalReport, EvalWarning,
    SegmentParams,
};
pub use solver::{
    init_factors, iterate, solve, solve_timed, update_core, update_mode_factor, FactorSet, LossTrace, NoClock,
    SolverConfig, Stopwatch,
};
pub use tensor::{contracted_unfolding, multiway_product, Elementwise, Matrix, Mode, Tensor3};
pub use tfb::{apply_mel, build_tfb, mel_filterbank, nnlms, BarGrid, MelBank, Spectrogram};
