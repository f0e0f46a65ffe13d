use crate::dense::svd::full_thin_svd;
use crate::dense::DenseMatrix;
use crate::error::{dim_err, Error, Result};

/// Lower-triangular Cholesky factor of a symmetric positive definite matrix.
fn cholesky(g: &DenseMatrix) -> Result<DenseMatrix> {
    let n = g.rows();
    let mut l = DenseMatrix::zeros(n, n);
    for j in 0..n {
        let mut diag = g[(j, j)];
        for k in 0..j {
            diag -= l[(j, k)] * l[(j, k)];
        }
        if !(diag > 0.0) || !diag.is_finite() {
            return Err(Error::Numerical(format!(
                "Gram matrix is not positive definite (pivot {j} = {diag:e})"
            )));
        }
        let d = diag.sqrt();
        l[(j, j)] = d;
        for i in j + 1..n {
            let mut s = g[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = s / d;
        }
    }
    Ok(l)
}

/// Returns `B * G^{-1}` for a symmetric positive definite `G`, via Cholesky.
///
/// Each row `x` of the result solves `G x = b` (G is symmetric), so the
/// forward and back substitutions run over contiguous rows of `B`.
pub fn solve_gram(b: &DenseMatrix, g: &DenseMatrix) -> Result<DenseMatrix> {
    let d = g.rows();
    if g.cols() != d {
        return dim_err(format!(
            "Gram matrix must be square, got {}x{}",
            d,
            g.cols()
        ));
    }
    if b.cols() != d {
        return dim_err(format!("B has {} columns but G is {d}x{d}", b.cols()));
    }
    let l = cholesky(g)?;
    let mut x = b.clone();
    for r in 0..x.rows() {
        let row = x.row_mut(r);
        // L y = b
        for i in 0..d {
            let mut s = row[i];
            for k in 0..i {
                s -= l[(i, k)] * row[k];
            }
            row[i] = s / l[(i, i)];
        }
        // L^T x = y
        for i in (0..d).rev() {
            let mut s = row[i];
            for k in i + 1..d {
                s -= l[(k, i)] * row[k];
            }
            row[i] = s / l[(i, i)];
        }
    }
    Ok(x)
}

/// `alpha * I + M^T M`
pub fn regularized_gram(m: &DenseMatrix, alpha: f64) -> DenseMatrix {
    let mut g = m.t_matmul(m);
    for i in 0..g.rows() {
        g[(i, i)] += alpha;
    }
    g
}

/// Moore-Penrose pseudo-inverse through the thin SVD. Singular values at or
/// below `max(m, n) * eps * sigma_max` are treated as zero.
pub fn pseudo_inverse(a: &DenseMatrix) -> Result<DenseMatrix> {
    let (m, n) = a.shape();
    if m == 0 || n == 0 {
        return Ok(DenseMatrix::zeros(n, m));
    }
    let svd = full_thin_svd(a)?;
    let smax = svd.singular_values.first().copied().unwrap_or(0.0);
    let tol = m.max(n) as f64 * f64::EPSILON * smax;
    let inv: Vec<f64> = svd
        .singular_values
        .iter()
        .map(|&s| if s > tol { 1.0 / s } else { 0.0 })
        .collect();
    Ok(svd.right.scale_columns(&inv).matmul_t(&svd.left))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bench::rng::seeded;
    use rand_distr::{Distribution, StandardNormal};

    fn gaussian(rows: usize, cols: usize, seed: u64) -> DenseMatrix {
        let mut rng = seeded(seed, 0);
        DenseMatrix::from_fn(rows, cols, |_, _| StandardNormal.sample(&mut rng))
    }

    #[test]
    fn identity_gram_is_noop() {
        let b = gaussian(4, 3, 1);
        let x = solve_gram(&b, &DenseMatrix::identity(3)).unwrap();
        assert!(x.distance(&b) < 1e-15);
    }

    #[test]
    fn gram_against_itself_gives_identity() {
        let m = gaussian(6, 3, 2);
        let g = regularized_gram(&m, 1.0);
        let x = solve_gram(&g, &g).unwrap();
        assert!(x.distance(&DenseMatrix::identity(3)) < 1e-12);
    }

    #[test]
    fn gram_residual() {
        let b = gaussian(4, 3, 3);
        let g = regularized_gram(&gaussian(5, 3, 4), 1.0);
        let x = solve_gram(&b, &g).unwrap();
        let res = x.matmul(&g).distance(&b) / b.frobenius_norm();
        assert!(res < 1e-10, "residual {res}");
    }

    #[test]
    fn non_spd_rejected() {
        let g = DenseMatrix::from_rows(&[[1.0, 2.0], [2.0, 1.0]]).unwrap();
        assert!(solve_gram(&DenseMatrix::identity(2), &g).is_err());
        assert!(solve_gram(&DenseMatrix::zeros(2, 3), &DenseMatrix::identity(2)).is_err());
    }

    #[test]
    fn pinv_examples() {
        let a = DenseMatrix::from_rows(&[[2.0, 0.0], [0.0, 4.0]]).unwrap();
        let p = pseudo_inverse(&a).unwrap();
        let want = DenseMatrix::from_rows(&[[0.5, 0.0], [0.0, 0.25]]).unwrap();
        assert!(p.distance(&want) < 1e-15);

        let z = pseudo_inverse(&DenseMatrix::zeros(3, 2)).unwrap();
        assert_eq!(z, DenseMatrix::zeros(2, 3));
    }

    #[test]
    fn penrose_conditions_on_rank_deficient_input() {
        for seed in 0..20 {
            // rank 2, 4x3
            let a = gaussian(4, 2, seed).matmul_t(&gaussian(3, 2, seed + 100));
            let p = pseudo_inverse(&a).unwrap();
            let scale = a.frobenius_norm();
            assert!(a.matmul(&p).matmul(&a).distance(&a) < 1e-9 * scale);
            assert!(p.matmul(&a).matmul(&p).distance(&p) < 1e-9 * p.frobenius_norm());
            let ap = a.matmul(&p);
            assert!(ap.distance(&ap.transpose()) < 1e-9);
            let pa = p.matmul(&a);
            assert!(pa.distance(&pa.transpose()) < 1e-9);
        }
    }
}
