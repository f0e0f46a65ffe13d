//! ADMM solvers for the factored robust PCA and completion models, plus the
//! convex nuclear-norm baseline.
//!
//! Multipliers are named after the constraint they enforce:
//!
//! | field | constraint      |
//! |-------|-----------------|
//! | `y_u` | `U_hat = U`     |
//! | `y_v` | `V_hat = V`     |
//! | `y_l` | `L = U V^T`     |
//! | `y_d` | `L + S = D`     |
//!
//! The robust PCA solvers pair every multiplier with `+<Y, lhs - rhs>` in
//! the augmented Lagrangian as written above; the completion solvers use the
//! reversed orientation `+<Y, U - U_hat>`, `+<Y, L - U V^T>`.

mod completion;
mod rpca;

pub use completion::{complete_dn, complete_fn};
pub use rpca::{solve_rpca_nuclear, solve_sl_half, solve_sl_two_thirds};

use crate::dense::{pseudo_inverse, spectral_norm, thin_svd, DenseMatrix, ObservationMask};
use crate::error::{dim_err, Error, Result};

/// User-facing solver settings. `None` fields are resolved per problem.
#[derive(Clone, Debug, PartialEq)]
pub struct SolverOptions {
    /// Factor rank. Ignored by the nuclear-norm baseline.
    pub d: usize,
    pub lambda: Option<f64>,
    pub mu0: Option<f64>,
    pub rho: f64,
    pub mu_max: f64,
    pub epsilon: f64,
    pub max_iters: usize,
}

impl SolverOptions {
    /// Defaults for the robust PCA solvers.
    pub fn rpca(d: usize) -> Self {
        Self {
            d,
            lambda: None,
            mu0: None,
            rho: 1.5,
            mu_max: 1e10,
            epsilon: 1e-5,
            max_iters: 500,
        }
    }

    /// Defaults for the completion solvers.
    pub fn completion(d: usize) -> Self {
        Self {
            d,
            lambda: None,
            mu0: Some(1e-4),
            rho: 1.05,
            mu_max: 1e20,
            epsilon: 1e-5,
            max_iters: 500,
        }
    }

    pub fn with_lambda(mut self, lambda: f64) -> Self {
        self.lambda = Some(lambda);
        self
    }

    pub fn with_epsilon(mut self, epsilon: f64) -> Self {
        self.epsilon = epsilon;
        self
    }

    pub fn with_max_iters(mut self, max_iters: usize) -> Self {
        self.max_iters = max_iters;
        self
    }

    fn validate(&self, needs_rank: bool) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidArgument(msg));
        if needs_rank && self.d == 0 {
            return bad("rank d must be at least 1".into());
        }
        if !(self.rho > 1.0) || !self.rho.is_finite() {
            return bad(format!("rho must exceed 1, got {}", self.rho));
        }
        if !(self.epsilon > 0.0) {
            return bad(format!("epsilon must be positive, got {}", self.epsilon));
        }
        if !(self.mu_max > 0.0) {
            return bad(format!("mu_max must be positive, got {}", self.mu_max));
        }
        if let Some(mu0) = self.mu0 {
            if !(mu0 > 0.0) || !mu0.is_finite() {
                return bad(format!("mu0 must be positive, got {mu0}"));
            }
        }
        if let Some(l) = self.lambda {
            if !(l > 0.0) || !l.is_finite() {
                return bad(format!("lambda must be positive, got {l}"));
            }
        }
        if self.max_iters == 0 {
            return bad("max_iters must be at least 1".into());
        }
        Ok(())
    }
}

/// Fully resolved settings actually used by a run.
#[derive(Clone, Debug, PartialEq)]
pub struct EffectiveOptions {
    pub d: usize,
    pub lambda: f64,
    pub mu0: f64,
    pub rho: f64,
    pub mu_max: f64,
    pub epsilon: f64,
    pub max_iters: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Termination {
    Converged,
    MaxIters,
}

impl Termination {
    pub fn as_str(self) -> &'static str {
        match self {
            Termination::Converged => "converged",
            Termination::MaxIters => "max_iters",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolverReport {
    pub u: DenseMatrix,
    pub v: DenseMatrix,
    pub l: DenseMatrix,
    /// Sparse part restricted to the observed set. Empty (all zero) for the
    /// completion solvers.
    pub s: DenseMatrix,
    pub objective_trace: Vec<f64>,
    /// Largest constraint residual over `||D||_F`, per iteration.
    pub residual_trace: Vec<f64>,
    /// `max(eps1 / ||D||_F, eps2)`, per iteration.
    pub stop_metric_trace: Vec<f64>,
    /// Spectral norms of the multipliers paired with an SVT step, per
    /// iteration (`[||Y_u||_2, ||Y_v||_2]`, missing entries as 0).
    pub multiplier_norm_trace: Vec<[f64; 2]>,
    pub termination: Termination,
    pub iterations: usize,
    pub options: EffectiveOptions,
}

/// Iterates of one factored solver run.
#[derive(Clone, Debug, PartialEq)]
pub struct AdmmState {
    pub u: DenseMatrix,
    pub v: DenseMatrix,
    /// Absent for the hybrid models, which keep `U` unsplit.
    pub u_hat: Option<DenseMatrix>,
    pub v_hat: DenseMatrix,
    pub l: DenseMatrix,
    /// Absent for the completion models.
    pub s: Option<DenseMatrix>,
    pub y_u: Option<DenseMatrix>,
    pub y_v: DenseMatrix,
    pub y_l: DenseMatrix,
    pub y_d: Option<DenseMatrix>,
    pub mu: f64,
    pub iter: usize,
}

fn ratio(num: f64, den: f64) -> f64 {
    if den > 0.0 {
        num / den
    } else if num == 0.0 {
        0.0
    } else {
        f64::INFINITY
    }
}

/// Returns `(eps1 / ||D||_F, eps2)` with
///
/// ```text
/// eps1 = max(||U V^T - L||, ||L + S - D||, ||Y_u V_hat^+ - (U_hat^T)^+ Y_v^T||)
/// eps2 = max(||U_hat - U|| / ||U||, ||V_hat - V|| / ||V||)
/// ```
///
/// Terms whose variables the state does not carry are skipped.
pub fn stopping_metric(state: &AdmmState, d: &DenseMatrix) -> Result<(f64, f64)> {
    let (m, n) = d.shape();
    if state.l.shape() != (m, n) || state.u.rows() != m || state.v.rows() != n {
        return dim_err("state shapes do not match the data");
    }
    let uvt = state.u.matmul_t(&state.v);
    let mut eps1 = uvt.distance(&state.l);
    if let Some(s) = &state.s {
        let mut r = state.l.add(s);
        r.axpy(-1.0, d);
        eps1 = eps1.max(r.frobenius_norm());
    }
    let mut eps2 = ratio(state.v_hat.distance(&state.v), state.v.frobenius_norm());
    if let Some(u_hat) = &state.u_hat {
        eps2 = eps2.max(ratio(u_hat.distance(&state.u), state.u.frobenius_norm()));
        if let Some(y_u) = &state.y_u {
            let left = y_u.matmul(&pseudo_inverse(&state.v_hat)?);
            let right = pseudo_inverse(&u_hat.transpose())?.matmul_t(&state.y_v);
            eps1 = eps1.max(left.distance(&right));
        }
    }
    Ok((ratio(eps1, d.frobenius_norm()), eps2))
}

pub(crate) fn check_problem(d: &DenseMatrix, mask: &ObservationMask) -> Result<DenseMatrix> {
    if mask.shape() != d.shape() {
        return dim_err(format!(
            "mask is {}x{} but data is {}x{}",
            mask.rows(),
            mask.cols(),
            d.rows(),
            d.cols()
        ));
    }
    if mask.is_empty() {
        return Err(Error::InvalidArgument("observation mask is empty".into()));
    }
    d.check_finite()?;
    let observed = mask.project(d)?;
    if observed.frobenius_norm() == 0.0 {
        return Err(Error::InvalidArgument(
            "observed data is identically zero".into(),
        ));
    }
    Ok(observed)
}

/// `sqrt(max(m, n))`
pub fn default_rpca_lambda(rows: usize, cols: usize) -> f64 {
    (rows.max(cols) as f64).sqrt()
}

/// `||P_Omega(D)||_F / sqrt(max(m, n) * |Omega| / (m n))`
pub fn default_completion_lambda(observed: &DenseMatrix, mask: &ObservationMask) -> f64 {
    let (m, n) = observed.shape();
    let frac = mask.count() as f64 / (m * n) as f64;
    observed.frobenius_norm() / (m.max(n) as f64 * frac).sqrt()
}

/// Warm start: `L = P_Omega(D)` and the balanced rank-`d` factorization of
/// its top singular triplets.
pub(crate) fn initial_factors(
    observed: &DenseMatrix,
    d: usize,
) -> Result<(DenseMatrix, DenseMatrix, f64)> {
    let (m, n) = observed.shape();
    if d > m.min(n) {
        return dim_err(format!("rank {d} exceeds min({m}, {n})"));
    }
    let svd = thin_svd(observed, d)?;
    let w: Vec<f64> = svd.singular_values.iter().map(|s| s.sqrt()).collect();
    let sigma1 = svd.singular_values[0];
    Ok((
        svd.left.scale_columns(&w),
        svd.right.scale_columns(&w),
        sigma1,
    ))
}

pub(crate) fn next_mu(mu: f64, opts: &EffectiveOptions) -> f64 {
    (mu * opts.rho).min(opts.mu_max)
}

pub(crate) fn spectral_or_zero(a: Option<&DenseMatrix>) -> Result<f64> {
    match a {
        Some(a) => spectral_norm(a),
        None => Ok(0.0),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bench::rng::seeded;
    use rand_distr::{Distribution, StandardNormal};

    #[test]
    fn mu_schedule_is_monotone_and_capped() {
        let eff = EffectiveOptions {
            d: 1,
            lambda: 1.0,
            mu0: 1e-3,
            rho: 1.5,
            mu_max: 1.0,
            epsilon: 1e-5,
            max_iters: 10,
        };
        let mut mu = eff.mu0;
        for _ in 0..40 {
            let next = next_mu(mu, &eff);
            assert!(next >= mu && next <= eff.mu_max);
            mu = next;
        }
        assert_eq!(mu, 1.0);
    }

    fn gaussian(rows: usize, cols: usize, rng: &mut rand_chacha::ChaCha20Rng) -> DenseMatrix {
        DenseMatrix::from_fn(rows, cols, |_, _| StandardNormal.sample(rng))
    }

    fn feasible_state(seed: u64) -> (AdmmState, DenseMatrix) {
        let mut rng = seeded(seed, 0);
        let u = gaussian(6, 2, &mut rng);
        let v = gaussian(5, 2, &mut rng);
        let l = u.matmul_t(&v);
        let d = gaussian(6, 5, &mut rng);
        let s = d.sub(&l);
        let state = AdmmState {
            u_hat: Some(u.clone()),
            v_hat: v.clone(),
            u,
            v,
            l,
            s: Some(s),
            y_u: Some(DenseMatrix::zeros(6, 2)),
            y_v: DenseMatrix::zeros(5, 2),
            y_l: DenseMatrix::zeros(6, 5),
            y_d: Some(DenseMatrix::zeros(6, 5)),
            mu: 1.0,
            iter: 0,
        };
        (state, d)
    }

    #[test]
    fn feasible_state_scores_zero() {
        let (state, d) = feasible_state(1);
        let (e1, e2) = stopping_metric(&state, &d).unwrap();
        assert!(e1 < 1e-15, "{e1}");
        assert_eq!(e2, 0.0);
    }

    #[test]
    fn perturbed_l_is_detected() {
        let (mut state, d) = feasible_state(2);
        let delta = 0.3;
        let e = DenseMatrix::from_fn(6, 5, |i, j| if (i, j) == (2, 3) { delta } else { 0.0 });
        state.l = state.l.add(&e);
        let (e1, _) = stopping_metric(&state, &d).unwrap();
        assert!(e1 >= delta / d.frobenius_norm() - 1e-15);
    }

    #[test]
    fn random_state_matches_direct_formula() {
        let mut rng = seeded(3, 0);
        let (m, n, k) = (7, 6, 3);
        let state = AdmmState {
            u: gaussian(m, k, &mut rng),
            v: gaussian(n, k, &mut rng),
            u_hat: Some(gaussian(m, k, &mut rng)),
            v_hat: gaussian(n, k, &mut rng),
            l: gaussian(m, n, &mut rng),
            s: Some(gaussian(m, n, &mut rng)),
            y_u: Some(gaussian(m, k, &mut rng)),
            y_v: gaussian(n, k, &mut rng),
            y_l: gaussian(m, n, &mut rng),
            y_d: Some(gaussian(m, n, &mut rng)),
            mu: 1.0,
            iter: 0,
        };
        let d = gaussian(m, n, &mut rng);

        // Direct evaluation with normal-equation pseudo-inverses (full column
        // rank factors), independent of the SVD route.
        let inv = |a: &DenseMatrix| {
            let g = a.t_matmul(a);
            crate::dense::solve_gram(a, &g).unwrap().transpose()
        };
        let u_hat = state.u_hat.as_ref().unwrap();
        let vh_pinv = inv(&state.v_hat);
        let uh_t_pinv = inv(u_hat).transpose();
        let t1 = state.u.matmul_t(&state.v).distance(&state.l);
        let t2 = state.l.add(state.s.as_ref().unwrap()).distance(&d);
        let t3 = state
            .y_u
            .as_ref()
            .unwrap()
            .matmul(&vh_pinv)
            .distance(&uh_t_pinv.matmul_t(&state.y_v));
        let want1 = t1.max(t2).max(t3) / d.frobenius_norm();
        let want2 = (u_hat.distance(&state.u) / state.u.frobenius_norm())
            .max(state.v_hat.distance(&state.v) / state.v.frobenius_norm());
        let (e1, e2) = stopping_metric(&state, &d).unwrap();
        assert!((e1 - want1).abs() < 1e-10 * want1);
        assert!((e2 - want2).abs() < 1e-12 * want2);
    }

    #[test]
    fn zero_factor_ratio_rule() {
        assert_eq!(ratio(0.0, 0.0), 0.0);
        assert_eq!(ratio(1.0, 0.0), f64::INFINITY);
    }

    #[test]
    fn option_validation() {
        assert!(SolverOptions::rpca(3).validate(true).is_ok());
        assert!(SolverOptions::rpca(0).validate(true).is_err());
        let mut o = SolverOptions::rpca(3);
        o.rho = 1.0;
        assert!(o.validate(true).is_err());
        assert!(SolverOptions::rpca(3)
            .with_epsilon(0.0)
            .validate(true)
            .is_err());
        assert!(SolverOptions::rpca(3)
            .with_lambda(-1.0)
            .validate(true)
            .is_err());
    }
}
