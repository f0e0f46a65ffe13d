//! Shared generators and independent reference implementations.
#![allow(dead_code)]

use bifactor::dense::full_thin_svd;
use bifactor::DenseMatrix;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian(m: usize, n: usize, rng: &mut impl Rng) -> DenseMatrix {
    DenseMatrix::from_fn(m, n, |_, _| rng.sample(StandardNormal))
}

/// Product of two Gaussian factors, so rank is exactly `r` almost surely.
pub fn low_rank(m: usize, n: usize, r: usize, rng: &mut impl Rng) -> DenseMatrix {
    gaussian(m, r, rng).matmul_t(&gaussian(n, r, rng))
}

pub fn orthogonal(n: usize, rng: &mut impl Rng) -> DenseMatrix {
    full_thin_svd(&gaussian(n, n, rng)).unwrap().left
}

pub fn rel_err(a: &DenseMatrix, b: &DenseMatrix) -> f64 {
    a.distance(b) / b.frobenius_norm()
}

/// `(x - a)^2 + gamma |x|^p`
pub fn scalar_objective(x: f64, a: f64, gamma: f64, p: f64) -> f64 {
    (x - a).powi(2) + gamma * x.abs().powf(p)
}

/// Global minimizer of `(x - a)^2 + gamma |x|^p` for `0 < p < 1`, found
/// without any closed form.
///
/// The minimizer shares the sign of `a` and lies in `[0, |a|]`. On that
/// interval the derivative `2 (x - |a|) + gamma p x^(p-1)` is decreasing up
/// to the inflection point and increasing after it, so the only interior
/// candidate is the derivative root to the right of the inflection point.
/// That root is refined by bisection, checked against a grid scan of the
/// same branch, then compared against `x = 0`.
///
/// Returns `(argmin, min value, value gap between the two candidates)`.
pub fn scalar_prox_oracle(a: f64, gamma: f64, p: f64) -> (f64, f64, f64) {
    let t = a.abs();
    let f = |x: f64| scalar_objective(x, t, gamma, p);
    let df = |x: f64| 2.0 * (x - t) + gamma * p * x.powf(p - 1.0);
    let zero = f(0.0);
    if t == 0.0 {
        return (0.0, zero, f64::INFINITY);
    }

    // Grid scan of the right branch, where the interior minimizer lives.
    let inflection = (gamma * p * (1.0 - p) / 2.0).powf(1.0 / (2.0 - p));
    const STEPS: usize = 2000;
    let mut best = (t, f(t));
    if inflection < t {
        for k in 0..STEPS {
            let x = inflection + (t - inflection) * k as f64 / STEPS as f64;
            let v = f(x);
            if v < best.1 {
                best = (x, v);
            }
        }
    }
    let mut interior = None;
    if inflection < t && df(inflection) < 0.0 {
        let (mut lo, mut hi) = (inflection, t);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if df(mid) < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let x = 0.5 * (lo + hi);
        interior = Some((x, f(x)));
    }
    // the bisection root must beat every grid point
    if let Some((x, v)) = interior {
        assert!(
            v <= best.1 + 1e-12 * (1.0 + best.1),
            "bisection root {x} worse than grid {best:?}"
        );
    }
    let (x, v, gap) = match interior {
        Some((x, v)) if v < zero => (x, v, zero - v),
        Some((_, v)) => (0.0, zero, v - zero),
        None => (0.0, zero, f64::INFINITY),
    };
    (x.copysign(a), v, gap)
}
