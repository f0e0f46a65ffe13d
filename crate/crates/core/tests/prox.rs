mod common;

use bifactor::dense::full_thin_svd;
use bifactor::prox::{
    half_threshold, half_threshold_level, soft_threshold, svt, svt_split, two_thirds_threshold,
    two_thirds_threshold_level,
};
use bifactor::DenseMatrix;
use common::{gaussian, orthogonal, rng, scalar_objective, scalar_prox_oracle};
use proptest::prelude::*;

const HALF: f64 = 0.5;
const TWO_THIRDS: f64 = 2.0 / 3.0;

type ScalarOp = fn(f64, f64) -> f64;

fn ops() -> [(&'static str, ScalarOp, f64); 2] {
    [
        ("half", half_threshold, HALF),
        ("two-thirds", two_thirds_threshold, TWO_THIRDS),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(2000))]

    #[test]
    fn matches_brute_force_minimizer(a in -10.0f64..10.0, gamma in 1e-6f64..5.0) {
        for (name, op, p) in ops() {
            let x = op(a, gamma);
            let (x_ref, v_ref, gap) = scalar_prox_oracle(a, gamma, p);
            let v = scalar_objective(x, a, gamma, p);
            prop_assert!(v <= v_ref + 1e-8, "{name}: f({x}) = {v} > f({x_ref}) = {v_ref}");
            // near a tie both candidates are acceptable
            if gap > 1e-8 {
                prop_assert!((x - x_ref).abs() <= 1e-4, "{name}: {x} vs {x_ref} (a={a}, gamma={gamma})");
            }
        }
    }

    #[test]
    fn shrinks_toward_zero_keeping_sign(a in -50.0f64..50.0, gamma in 1e-4f64..10.0) {
        for (_, op, _) in ops() {
            let x = op(a, gamma);
            prop_assert!(x.abs() <= a.abs());
            prop_assert!(x == 0.0 || x.signum() == a.signum());
        }
    }

    #[test]
    fn magnitude_is_monotone_in_input(gamma in 1e-3f64..5.0, start in 0.0f64..1.0) {
        for (name, op, _) in ops() {
            let mut last = 0.0;
            for k in 0..400 {
                let a = start + k as f64 * 0.025;
                let x = op(a, gamma).abs();
                prop_assert!(x >= last - 1e-12, "{name}: |op({a})| = {x} < {last}");
                last = x;
            }
        }
    }

    #[test]
    fn soft_threshold_is_l1_prox(a in -10.0f64..10.0, tau in 0.0f64..5.0) {
        // argmin (x - a)^2 / 2 + tau |x|
        let x = soft_threshold(a, tau);
        let f = |y: f64| 0.5 * (y - a).powi(2) + tau * y.abs();
        for probe in [x - 1e-3, x + 1e-3, 0.0, a] {
            prop_assert!(f(x) <= f(probe) + 1e-12);
        }
    }

    #[test]
    fn svt_commutes_with_orthogonal_maps(seed in any::<u64>(), m in 1usize..9, n in 1usize..9, tau in 0.0f64..3.0) {
        let mut g = rng(seed);
        let a = gaussian(m, n, &mut g);
        let (q, p) = (orthogonal(m, &mut g), orthogonal(n, &mut g));
        let lhs = svt(&q.matmul(&a).matmul_t(&p), tau).unwrap();
        let rhs = q.matmul(&svt(&a, tau).unwrap()).matmul_t(&p);
        prop_assert!(lhs.distance(&rhs) <= 1e-9 * (1.0 + rhs.frobenius_norm()));
    }

    #[test]
    fn svt_split_parts(seed in any::<u64>(), m in 1usize..9, n in 1usize..9, tau in 0.0f64..3.0) {
        let a = gaussian(m, n, &mut rng(seed));
        let (shrunk, clipped) = svt_split(&a, tau).unwrap();
        prop_assert!(shrunk.distance(&svt(&a, tau).unwrap()) <= 1e-12 * (1.0 + a.frobenius_norm()));
        prop_assert!(shrunk.add(&clipped).distance(&a) <= 1e-12 * (1.0 + a.frobenius_norm()));
        let top = bifactor::dense::spectral_norm(&clipped).unwrap();
        prop_assert!(top <= tau * (1.0 + 1e-12), "{top} > {tau}");
    }
}

#[test]
fn threshold_levels_separate_zero_from_nonzero() {
    for gamma in [1e-3, 0.1, 1.0, 4.0] {
        for (level, op) in [
            (
                half_threshold_level(gamma),
                half_threshold as fn(f64, f64) -> f64,
            ),
            (two_thirds_threshold_level(gamma), two_thirds_threshold),
        ] {
            assert_eq!(op(level * (1.0 - 1e-9), gamma), 0.0);
            assert!(op(level * (1.0 + 1e-9), gamma) > 0.0);
        }
    }
}

#[test]
fn jump_sizes_at_threshold() {
    // at the tie f(x) = f(0) with f'(x) = 0, so x = 2 t (p - 1) / (p - 2):
    // 2/3 of the level for l_{1/2}, half of it for l_{2/3}
    let gamma = 1.0;
    let t = half_threshold_level(gamma);
    assert!((half_threshold(t * (1.0 + 1e-12), gamma) - 2.0 * t / 3.0).abs() < 1e-5);
    let t = two_thirds_threshold_level(gamma);
    assert!((two_thirds_threshold(t * (1.0 + 1e-12), gamma) - t / 2.0).abs() < 1e-5);
}

#[test]
fn svt_matches_explicit_spectral_shrinkage() {
    let mut g = rng(71);
    for &(m, n) in &[(6, 4), (4, 6), (5, 5)] {
        let a = gaussian(m, n, &mut g);
        let svd = full_thin_svd(&a).unwrap();
        let tau = svd.singular_values[1];
        let shrunk: Vec<f64> = svd
            .singular_values
            .iter()
            .map(|s| (s - tau).max(0.0))
            .collect();
        let k = shrunk.len();
        let expect = svd
            .left
            .leading_columns(k)
            .matmul(&DenseMatrix::from_diag(k, k, &shrunk))
            .matmul_t(&svd.right.leading_columns(k));
        let got = svt(&a, tau).unwrap();
        assert!(got.distance(&expect) < 1e-10);
        // only the leading singular value survives
        assert_eq!(bifactor::norms::numerical_rank(&got, 1e-10).unwrap(), 1);
    }
    assert_eq!(
        svt(&DenseMatrix::identity(3), 1.0)
            .unwrap()
            .frobenius_norm(),
        0.0
    );
}
