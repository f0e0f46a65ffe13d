//! Robust PCA and matrix completion through bilinear factor penalties.
//!
//! The low-rank part is written as `L = U V^T` and penalised with either the
//! double nuclear norm `(||U||_* + ||V||_*)^2 / 4` or the hybrid
//! `((||U||_F^2 + 2 ||V||_*) / 3)^(3/2)`. At the optimal factorization these
//! equal the Schatten-1/2 and Schatten-2/3 quasi-norms of `L`, but every
//! iteration only needs SVDs of the thin factors.

// `!(x > 0.0)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod admm;
pub mod bench;
pub mod dense;
pub mod error;
pub mod norms;
pub mod pnm;
pub mod prox;
pub mod rank;

pub use admm::{
    complete_dn, complete_fn, solve_rpca_nuclear, solve_sl_half, solve_sl_two_thirds,
    SolverOptions, SolverReport, Termination,
};
pub use dense::{DenseMatrix, ObservationMask, ThinSvd};
pub use error::{Error, Result};
pub use rank::{estimate_rank, RankEstimate};
