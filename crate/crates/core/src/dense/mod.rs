//! Dense matrix container, masks, and the small set of factorizations the
//! solvers need.

mod linalg;
mod mask;
mod matrix;
mod svd;

pub mod io;

pub use linalg::{pseudo_inverse, regularized_gram, solve_gram};
pub use mask::ObservationMask;
pub use matrix::DenseMatrix;
pub use svd::{full_thin_svd, singular_values, spectral_norm, thin_svd, ThinSvd};
