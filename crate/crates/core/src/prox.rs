//! Closed-form proximal maps: soft shrinkage, singular value thresholding,
//! and the `l_{1/2}` / `l_{2/3}` thresholding operators.
//!
//! The quasi-norm operators solve the scalar problems
//!
//! ```text
//! half:        argmin_x (x - a)^2 + gamma * |x|^(1/2)
//! two-thirds:  argmin_x (x - c)^2 + gamma * |x|^(2/3)
//! ```
//!
//! exactly. Both objectives have two competing local minima near the
//! threshold; at the threshold itself the two values tie and the operators
//! return 0.

use std::f64::consts::PI;

use crate::dense::{full_thin_svd, DenseMatrix};
use crate::error::{Error, Result};

/// Validated positive threshold weight.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd)]
pub struct ThresholdParam(f64);

impl ThresholdParam {
    pub fn new(gamma: f64) -> Result<Self> {
        if gamma > 0.0 && gamma.is_finite() {
            Ok(Self(gamma))
        } else {
            Err(Error::InvalidArgument(format!(
                "threshold weight must be positive and finite, got {gamma}"
            )))
        }
    }

    pub fn get(self) -> f64 {
        self.0
    }
}

#[inline]
pub fn soft_threshold(x: f64, tau: f64) -> f64 {
    (x.abs() - tau).max(0.0) * x.signum()
}

/// Shrinks the singular values of `a` by `tau`, keeping the singular vectors.
pub fn svt(a: &DenseMatrix, tau: f64) -> Result<DenseMatrix> {
    let (m, n) = a.shape();
    if m == 0 || n == 0 {
        return Ok(a.clone());
    }
    let svd = full_thin_svd(a)?;
    let kept: Vec<f64> = svd
        .singular_values
        .iter()
        .map(|&s| (s - tau).max(0.0))
        .collect();
    let live = kept.iter().take_while(|&&s| s > 0.0).count();
    if live == 0 {
        return Ok(DenseMatrix::zeros(m, n));
    }
    Ok(svd
        .left
        .leading_columns(live)
        .scale_columns(&kept[..live])
        .matmul_t(&svd.right.leading_columns(live)))
}

/// Splits `a = shrunk + clipped`, where `shrunk = svt(a, tau)` and `clipped`
/// keeps the singular vectors with values `min(sigma, tau)`. Building
/// `clipped` from the spectrum keeps its spectral norm at most `tau` up to
/// rounding, which a subtraction `a - shrunk` would not.
pub fn svt_split(a: &DenseMatrix, tau: f64) -> Result<(DenseMatrix, DenseMatrix)> {
    let (m, n) = a.shape();
    if m == 0 || n == 0 {
        return Ok((a.clone(), a.clone()));
    }
    let svd = full_thin_svd(a)?;
    let k = svd.singular_values.len();
    let kept: Vec<f64> = svd
        .singular_values
        .iter()
        .map(|&s| (s - tau).max(0.0))
        .collect();
    let cut: Vec<f64> = svd.singular_values.iter().map(|&s| s.min(tau)).collect();
    let left = svd.left.leading_columns(k);
    let right = svd.right.leading_columns(k);
    Ok((
        left.scale_columns(&kept).matmul_t(&right),
        left.scale_columns(&cut).matmul_t(&right),
    ))
}

/// Location of the jump in the half-thresholding operator.
#[inline]
pub fn half_threshold_level(gamma: f64) -> f64 {
    (54.0 * gamma * gamma).cbrt() / 4.0
}

/// Location of the jump in the two-thirds-thresholding operator.
#[inline]
pub fn two_thirds_threshold_level(gamma: f64) -> f64 {
    2.0 * (3.0 * gamma.powi(3)).powf(0.25) / 3.0
}

/// Global minimizer of `(x - a)^2 + gamma * |x|^(1/2)`.
#[inline]
pub fn half_threshold(a: f64, gamma: f64) -> f64 {
    debug_assert!(gamma > 0.0);
    let mag = a.abs();
    if mag <= half_threshold_level(gamma) {
        return 0.0;
    }
    let arg = (gamma / 8.0) * (mag / 3.0).powf(-1.5);
    let phi = arg.clamp(-1.0, 1.0).acos();
    (2.0 / 3.0) * a * (1.0 + ((2.0 * PI - 2.0 * phi) / 3.0).cos())
}

/// Global minimizer of `(x - c)^2 + gamma * |x|^(2/3)`.
#[inline]
pub fn two_thirds_threshold(c: f64, gamma: f64) -> f64 {
    debug_assert!(gamma > 0.0);
    let mag = c.abs();
    if mag <= two_thirds_threshold_level(gamma) {
        return 0.0;
    }
    let arg = (27.0 * c * c / 16.0) * gamma.powf(-1.5);
    let theta = arg.max(1.0).acosh();
    let psi = (2.0 / 3f64.sqrt()) * (gamma.sqrt() * (theta / 3.0).cosh()).sqrt();
    let root = (2.0 * mag / psi - psi * psi).max(0.0).sqrt();
    c.signum() * (psi + root).powi(3) / 8.0
}

pub fn half_threshold_matrix(a: &DenseMatrix, gamma: f64) -> DenseMatrix {
    a.map(|v| half_threshold(v, gamma))
}

pub fn two_thirds_threshold_matrix(c: &DenseMatrix, gamma: f64) -> DenseMatrix {
    c.map(|v| two_thirds_threshold(v, gamma))
}

pub fn soft_threshold_matrix(a: &DenseMatrix, tau: f64) -> DenseMatrix {
    a.map(|v| soft_threshold(v, tau))
}
