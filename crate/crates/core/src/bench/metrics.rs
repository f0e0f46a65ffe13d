use crate::dense::{DenseMatrix, ObservationMask};
use crate::error::{dim_err, Error, Result};

/// Support threshold used by [`f_measure`].
pub const SUPPORT_TOL: f64 = 1e-3;

/// `||L - L_ref||_F / ||L_ref||_F`
pub fn rse(l: &DenseMatrix, reference: &DenseMatrix) -> Result<f64> {
    if l.shape() != reference.shape() {
        return dim_err("rse: shapes differ");
    }
    let den = reference.frobenius_norm();
    if den == 0.0 {
        return Err(Error::InvalidArgument(
            "rse: reference matrix is zero".into(),
        ));
    }
    Ok(l.distance(reference) / den)
}

/// F-measure of the detected outlier support on the observed set, with
/// support `{|x| > 1e-3}`.
pub fn f_measure(s: &DenseMatrix, s_star: &DenseMatrix, mask: &ObservationMask) -> Result<f64> {
    f_measure_with_tol(s, s_star, mask, SUPPORT_TOL)
}

/// F-measure with a custom detection threshold on the estimate. The true
/// support is always `|s*| > SUPPORT_TOL`.
pub fn f_measure_with_tol(
    s: &DenseMatrix,
    s_star: &DenseMatrix,
    mask: &ObservationMask,
    tol: f64,
) -> Result<f64> {
    if s.shape() != s_star.shape() || s.shape() != mask.shape() {
        return dim_err("f_measure: shapes differ");
    }
    let (est, truth) = (s.as_slice(), s_star.as_slice());
    let (mut tp, mut n_est, mut n_true) = (0usize, 0usize, 0usize);
    for &p in mask.linear_indices() {
        let e = est[p].abs() > tol;
        let t = truth[p].abs() > SUPPORT_TOL;
        n_est += e as usize;
        n_true += t as usize;
        tp += (e && t) as usize;
    }
    let precision = if n_est > 0 {
        tp as f64 / n_est as f64
    } else {
        0.0
    };
    let recall = if n_true > 0 {
        tp as f64 / n_true as f64
    } else {
        0.0
    };
    if precision + recall == 0.0 {
        return Ok(0.0);
    }
    Ok(2.0 * precision * recall / (precision + recall))
}

/// `10 log10(peak^2 / MSE)`; identical inputs give `+inf`.
pub fn psnr(image: &DenseMatrix, reference: &DenseMatrix, peak: f64) -> Result<f64> {
    if image.shape() != reference.shape() || image.is_empty() {
        return dim_err("psnr: shapes differ or are empty");
    }
    let mse = image.distance(reference).powi(2) / image.len() as f64;
    if mse == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(10.0 * (peak * peak / mse).log10())
}
