use faer::diag::Diag;
use faer::dyn_stack::{MemBuffer, MemStack};
use faer::linalg::svd::{self, ComputeSvdVectors};
use faer::{Mat, Par};

use crate::dense::matrix::clear_upper_simd_state;
use crate::dense::DenseMatrix;
use crate::error::{dim_err, Error, Result};

/// Top-`k` singular triplets `left * diag(singular_values) * right^T`.
#[derive(Clone, Debug, PartialEq)]
pub struct ThinSvd {
    pub left: DenseMatrix,
    pub singular_values: Vec<f64>,
    pub right: DenseMatrix,
}

impl ThinSvd {
    pub fn rank(&self) -> usize {
        self.singular_values.len()
    }

    /// `left * diag(weights) * right^T` for arbitrary per-triplet weights.
    pub fn recompose_with(&self, weights: &[f64]) -> DenseMatrix {
        self.left.scale_columns(weights).matmul_t(&self.right)
    }

    pub fn reconstruct(&self) -> DenseMatrix {
        self.recompose_with(&self.singular_values)
    }
}

/// Top-`k` thin SVD with singular values in nonincreasing order.
///
/// Each left singular vector is signed so that its largest-magnitude entry
/// is nonnegative (first such entry on ties); the right vector is flipped
/// with it. The result is bit-reproducible for identical input.
pub fn thin_svd(a: &DenseMatrix, k: usize) -> Result<ThinSvd> {
    let (m, n) = a.shape();
    let size = m.min(n);
    if k == 0 || k > size {
        return dim_err(format!(
            "thin_svd: k = {k} outside 1..={size} for a {m}x{n} matrix"
        ));
    }
    a.check_finite()?;

    let mut u = Mat::<f64>::zeros(m, size);
    let mut v = Mat::<f64>::zeros(n, size);
    let mut s = Diag::<f64>::zeros(size);
    let par = Par::Seq;
    let mut mem = MemBuffer::new(svd::svd_scratch::<f64>(
        m,
        n,
        ComputeSvdVectors::Thin,
        ComputeSvdVectors::Thin,
        par,
        Default::default(),
    ));
    svd::svd(
        a.view(),
        s.as_mut(),
        Some(u.as_mut()),
        Some(v.as_mut()),
        par,
        MemStack::new(&mut mem),
        Default::default(),
    )
    .map_err(|e| Error::Numerical(format!("SVD did not converge: {e:?}")))?;
    clear_upper_simd_state();

    let sv: Vec<f64> = s.column_vector().iter().copied().collect();
    let mut order: Vec<usize> = (0..size).collect();
    // faer already sorts; keep the contract independent of that detail.
    order.sort_by(|&x, &y| sv[y].total_cmp(&sv[x]));
    order.truncate(k);

    let mut left = DenseMatrix::zeros(m, k);
    let mut right = DenseMatrix::zeros(n, k);
    let mut singular_values = Vec::with_capacity(k);
    for (c, &src) in order.iter().enumerate() {
        let col_u = u.col(src);
        let col_v = v.col(src);
        let mut pivot = 0;
        for i in 1..m {
            if col_u[i].abs() > col_u[pivot].abs() {
                pivot = i;
            }
        }
        let sign = if col_u[pivot] < 0.0 { -1.0 } else { 1.0 };
        for i in 0..m {
            left[(i, c)] = sign * col_u[i];
        }
        for j in 0..n {
            right[(j, c)] = sign * col_v[j];
        }
        singular_values.push(sv[src].max(0.0));
    }
    Ok(ThinSvd {
        left,
        singular_values,
        right,
    })
}

/// Full thin SVD (`k = min(rows, cols)`).
pub fn full_thin_svd(a: &DenseMatrix) -> Result<ThinSvd> {
    thin_svd(a, a.rows().min(a.cols()))
}

/// All `min(rows, cols)` singular values, nonincreasing.
pub fn singular_values(a: &DenseMatrix) -> Result<Vec<f64>> {
    let (m, n) = a.shape();
    let size = m.min(n);
    if size == 0 {
        return Ok(Vec::new());
    }
    a.check_finite()?;
    let mut s = Diag::<f64>::zeros(size);
    let par = Par::Seq;
    let mut mem = MemBuffer::new(svd::svd_scratch::<f64>(
        m,
        n,
        ComputeSvdVectors::No,
        ComputeSvdVectors::No,
        par,
        Default::default(),
    ));
    svd::svd(
        a.view(),
        s.as_mut(),
        None,
        None,
        par,
        MemStack::new(&mut mem),
        Default::default(),
    )
    .map_err(|e| Error::Numerical(format!("SVD did not converge: {e:?}")))?;
    clear_upper_simd_state();
    let mut sv: Vec<f64> = s.column_vector().iter().map(|x| x.max(0.0)).collect();
    sv.sort_by(|x, y| y.total_cmp(x));
    Ok(sv)
}

/// Largest singular value (0 for an empty matrix).
pub fn spectral_norm(a: &DenseMatrix) -> Result<f64> {
    Ok(singular_values(a)?.first().copied().unwrap_or(0.0))
}
