//! Sparse and low-rank penalties, including the two factored penalties
//! that equal the Schatten-1/2 and Schatten-2/3 quasi-norms at their optimal
//! factorizations.

use crate::dense::{full_thin_svd, singular_values, DenseMatrix};
use crate::error::{dim_err, Error, Result};

/// A nonnegative, finite penalty value.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd)]
pub struct PenaltyValue(f64);

impl PenaltyValue {
    fn new(v: f64) -> Result<Self> {
        if v >= 0.0 && v.is_finite() {
            Ok(Self(v))
        } else {
            Err(Error::Numerical(format!("penalty evaluated to {v}")))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

impl From<PenaltyValue> for f64 {
    fn from(p: PenaltyValue) -> f64 {
        p.0
    }
}

fn check_exponent(p: f64) -> Result<()> {
    if p > 0.0 && p <= 2.0 {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!(
            "exponent must lie in (0, 2], got {p}"
        )))
    }
}

#[inline]
pub(crate) fn abs_pow(x: f64, p: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        x.abs().powf(p)
    }
}

/// `sum_ij |s_ij|^p`
pub fn lp_quasi_norm_p(s: &DenseMatrix, p: f64) -> Result<PenaltyValue> {
    check_exponent(p)?;
    PenaltyValue::new(s.as_slice().iter().map(|&v| abs_pow(v, p)).sum())
}

/// `sum_i sigma_i(X)^q`
pub fn schatten_quasi_norm_q(x: &DenseMatrix, q: f64) -> Result<PenaltyValue> {
    check_exponent(q)?;
    PenaltyValue::new(singular_values(x)?.iter().map(|&s| abs_pow(s, q)).sum())
}

pub fn nuclear_norm(x: &DenseMatrix) -> Result<f64> {
    Ok(singular_values(x)?.iter().sum())
}

fn check_factors(u: &DenseMatrix, v: &DenseMatrix) -> Result<()> {
    if u.cols() != v.cols() {
        return dim_err(format!(
            "factor column counts differ: U has {}, V has {}",
            u.cols(),
            v.cols()
        ));
    }
    Ok(())
}

/// Double nuclear norm penalty `(||U||_* + ||V||_*)^2 / 4`.
pub fn dn_penalty(u: &DenseMatrix, v: &DenseMatrix) -> Result<PenaltyValue> {
    check_factors(u, v)?;
    let s = nuclear_norm(u)? + nuclear_norm(v)?;
    PenaltyValue::new(s * s / 4.0)
}

/// Frobenius/nuclear hybrid penalty `((||U||_F^2 + 2 ||V||_*) / 3)^(3/2)`.
pub fn fn_penalty(u: &DenseMatrix, v: &DenseMatrix) -> Result<PenaltyValue> {
    check_factors(u, v)?;
    let inner = (u.frobenius_norm_sq() + 2.0 * nuclear_norm(v)?) / 3.0;
    PenaltyValue::new(inner.powf(1.5))
}

/// Which factored penalty a factorization should attain.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FactorKind {
    /// `U = L sqrt(S)`, `V = R sqrt(S)`
    DoubleNuclear,
    /// `U = L S^(1/3)`, `V = R S^(2/3)`
    FrobeniusNuclear,
}

/// Rank-`d` factorization `X = U V^T` built from the SVD of `X`, split so
/// that the chosen penalty equals the matching Schatten quasi-norm.
pub fn spectral_factorization(
    x: &DenseMatrix,
    d: usize,
    kind: FactorKind,
) -> Result<(DenseMatrix, DenseMatrix)> {
    let (m, n) = x.shape();
    let size = m.min(n);
    if d == 0 || d > size {
        return dim_err(format!("factor rank {d} outside 1..={size}"));
    }
    let svd = full_thin_svd(x)?;
    let sv = &svd.singular_values[..d];
    let (pu, pv) = match kind {
        FactorKind::DoubleNuclear => (0.5, 0.5),
        FactorKind::FrobeniusNuclear => (1.0 / 3.0, 2.0 / 3.0),
    };
    let wu: Vec<f64> = sv.iter().map(|&s| abs_pow(s, pu)).collect();
    let wv: Vec<f64> = sv.iter().map(|&s| abs_pow(s, pv)).collect();
    Ok((
        svd.left.leading_columns(d).scale_columns(&wu),
        svd.right.leading_columns(d).scale_columns(&wv),
    ))
}

/// `(sum sigma^(1/2))^2`, the value the double nuclear penalty attains.
pub fn schatten_half(x: &DenseMatrix) -> Result<f64> {
    let s: f64 = singular_values(x)?.iter().map(|v| v.sqrt()).sum();
    Ok(s * s)
}

/// `(sum sigma^(2/3))^(3/2)`, the value the hybrid penalty attains.
pub fn schatten_two_thirds(x: &DenseMatrix) -> Result<f64> {
    let s: f64 = singular_values(x)?
        .iter()
        .map(|v| abs_pow(*v, 2.0 / 3.0))
        .sum();
    Ok(s.powf(1.5))
}

/// Numerical rank: count of `sigma_i > rel_tol * sigma_1`.
pub fn numerical_rank(x: &DenseMatrix, rel_tol: f64) -> Result<usize> {
    let sv = singular_values(x)?;
    let top = sv.first().copied().unwrap_or(0.0);
    if top == 0.0 {
        return Ok(0);
    }
    Ok(sv.iter().filter(|&&s| s > rel_tol * top).count())
}
