use crate::admm::rpca::Traces;
use crate::admm::{
    check_problem, default_completion_lambda, initial_factors, next_mu, AdmmState,
    EffectiveOptions, SolverOptions, SolverReport, Termination,
};
use crate::dense::{regularized_gram, solve_gram, DenseMatrix, ObservationMask};
use crate::error::Result;
use crate::norms::nuclear_norm;
use crate::prox::svt_split;

#[derive(Clone, Copy, PartialEq, Eq)]
enum Model {
    /// `lambda/2 (||U||_* + ||V||_*) + 1/2 ||P(L - D)||_F^2`
    DoubleNuclear,
    /// `lambda/3 (||U||_F^2 + 2 ||V||_*) + 1/2 ||P(L - D)||_F^2`
    Hybrid,
}

/// On the mask `(D + mu U V^T - Y_l) / (1 + mu)`, elsewhere `U V^T - Y_l / mu`.
fn update_l(
    uvt: &DenseMatrix,
    y_l: &DenseMatrix,
    observed: &DenseMatrix,
    mask: &ObservationMask,
    mu: f64,
) -> DenseMatrix {
    let mut l = uvt.clone();
    l.axpy(-1.0 / mu, y_l);
    let scale = mu / (1.0 + mu);
    mask.apply_split(&mut l, |x| x * scale, |x| x);
    l.axpy(1.0 / (1.0 + mu), observed);
    l
}

fn solve(
    model: Model,
    d: &DenseMatrix,
    mask: &ObservationMask,
    opts: &SolverOptions,
) -> Result<SolverReport> {
    opts.validate(true)?;
    let observed = check_problem(d, mask)?;
    let (m, n) = observed.shape();
    let (u0, v0, _) = initial_factors(&observed, opts.d)?;
    let eff = EffectiveOptions {
        d: opts.d,
        lambda: opts
            .lambda
            .unwrap_or_else(|| default_completion_lambda(&observed, mask)),
        mu0: opts.mu0.unwrap_or(1e-4),
        rho: opts.rho,
        mu_max: opts.mu_max,
        epsilon: opts.epsilon,
        max_iters: opts.max_iters,
    };
    let lambda = eff.lambda;
    let k = opts.d;
    let dn = model == Model::DoubleNuclear;

    let mut st = AdmmState {
        u_hat: dn.then(|| u0.clone()),
        v_hat: v0.clone(),
        u: u0,
        v: v0,
        l: observed.clone(),
        s: None,
        y_u: dn.then(|| DenseMatrix::zeros(m, k)),
        y_v: DenseMatrix::zeros(n, k),
        y_l: DenseMatrix::zeros(m, n),
        y_d: None,
        mu: eff.mu0,
        iter: 0,
    };
    let mut traces = Traces::default();
    let mut termination = Termination::MaxIters;

    for _ in 0..eff.max_iters {
        let mu = st.mu;
        let inv_mu = 1.0 / mu;

        // Q = L + Y_l / mu
        let mut q = st.l.clone();
        q.axpy(inv_mu, &st.y_l);

        if dn {
            let mut rhs = q.matmul(&st.v);
            rhs.axpy(1.0, st.u_hat.as_ref().expect("D-N model carries U_hat"));
            rhs.axpy(-inv_mu, st.y_u.as_ref().expect("D-N model carries Y_u"));
            st.u = solve_gram(&rhs, &regularized_gram(&st.v, 1.0))?;
        } else {
            // [(mu L + Y_l) V] (mu V^T V + (2 lambda / 3) I)^{-1}
            let rhs = q.matmul(&st.v);
            st.u = solve_gram(&rhs, &regularized_gram(&st.v, 2.0 * lambda / (3.0 * mu)))?;
        }

        let mut rhs = q.t_matmul(&st.u);
        rhs.axpy(1.0, &st.v_hat);
        rhs.axpy(-inv_mu, &st.y_v);
        st.v = solve_gram(&rhs, &regularized_gram(&st.u, 1.0))?;

        let tau = if dn {
            lambda / (2.0 * mu)
        } else {
            2.0 * lambda / (3.0 * mu)
        };
        // Y + mu (X - X_hat) equals mu times the clipped part of the SVT
        // argument; forming it that way avoids cancellation at large mu.
        let mut clipped_u = None;
        if let (Some(u_hat), Some(y_u)) = (st.u_hat.as_mut(), st.y_u.as_ref()) {
            let mut arg = st.u.clone();
            arg.axpy(inv_mu, y_u);
            let (shrunk, clipped) = svt_split(&arg, tau)?;
            *u_hat = shrunk;
            clipped_u = Some(clipped);
        }
        let mut arg = st.v.clone();
        arg.axpy(inv_mu, &st.y_v);
        let (shrunk, clipped_v) = svt_split(&arg, tau)?;
        st.v_hat = shrunk;

        let uvt = st.u.matmul_t(&st.v);
        st.l = update_l(&uvt, &st.y_l, &observed, mask, mu);

        if let (Some(clipped), Some(y_u)) = (clipped_u, st.y_u.as_mut()) {
            *y_u = clipped.scale(mu);
        }
        st.y_v = clipped_v.scale(mu);
        st.y_l.axpy(mu, &st.l);
        st.y_l.axpy(-mu, &uvt);

        let fit = 0.5 * mask.project(&uvt.sub(&observed))?.frobenius_norm_sq();
        let objective = if dn {
            0.5 * lambda * (nuclear_norm(&st.u)? + nuclear_norm(&st.v)?) + fit
        } else {
            lambda / 3.0 * (st.u.frobenius_norm_sq() + 2.0 * nuclear_norm(&st.v)?) + fit
        };
        st.iter += 1;
        let metric = traces.record(&st, &observed, objective)?;
        st.mu = next_mu(mu, &eff);
        if metric < eff.epsilon {
            termination = Termination::Converged;
            break;
        }
    }

    let l = st.u.matmul_t(&st.v);
    Ok(SolverReport {
        iterations: traces.stop.len(),
        u: st.u,
        v: st.v,
        l,
        s: DenseMatrix::zeros(m, n),
        objective_trace: traces.objective,
        residual_trace: traces.residual,
        stop_metric_trace: traces.stop,
        multiplier_norm_trace: traces.multipliers,
        termination,
        options: eff,
    })
}

/// Matrix completion with the double nuclear norm penalty. The returned
/// `L` is `U V^T`.
pub fn complete_dn(
    d: &DenseMatrix,
    mask: &ObservationMask,
    opts: &SolverOptions,
) -> Result<SolverReport> {
    solve(Model::DoubleNuclear, d, mask, opts)
}

/// Matrix completion with the Frobenius/nuclear hybrid penalty.
pub fn complete_fn(
    d: &DenseMatrix,
    mask: &ObservationMask,
    opts: &SolverOptions,
) -> Result<SolverReport> {
    solve(Model::Hybrid, d, mask, opts)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pseudo(rows: usize, cols: usize, salt: f64) -> DenseMatrix {
        DenseMatrix::from_fn(rows, cols, |i, j| {
            ((i * 31 + j * 17) as f64 * 0.37 + salt).sin()
        })
    }

    #[test]
    fn l_update_interpolates_on_and_off_the_mask() {
        let (m, n) = (7, 5);
        let mask =
            ObservationMask::from_flags(m, n, &(0..m * n).map(|p| p % 3 != 1).collect::<Vec<_>>())
                .unwrap();
        let observed = mask.project(&pseudo(m, n, 0.1)).unwrap();
        let (uvt, y) = (pseudo(m, n, 1.3), pseudo(m, n, 2.9));
        for mu in [1e-4, 0.7, 3.0, 1e6] {
            let l = update_l(&uvt, &y, &observed, &mask, mu);
            for i in 0..m {
                for j in 0..n {
                    let (lv, a, yv, dv) = (l[(i, j)], uvt[(i, j)], y[(i, j)], observed[(i, j)]);
                    if mask.contains(i, j) {
                        let lhs = (1.0 + mu) * lv;
                        let rhs = dv + mu * a - yv;
                        assert!(
                            (lhs - rhs).abs() <= 1e-12 * (1.0 + rhs.abs()),
                            "{lhs} vs {rhs}"
                        );
                    } else {
                        assert!((lv - (a - yv / mu)).abs() <= 1e-12 * (1.0 + lv.abs()));
                    }
                }
            }
        }
    }

    #[test]
    fn multiplier_bounds_after_svt() {
        let d = pseudo(12, 9, 0.4);
        let mask =
            ObservationMask::from_flags(12, 9, &(0..108).map(|p| p % 2 == 0).collect::<Vec<_>>())
                .unwrap();
        let opts = SolverOptions::completion(3)
            .with_lambda(0.5)
            .with_max_iters(60);
        let dn = complete_dn(&d, &mask, &opts).unwrap();
        for [y1, y2] in &dn.multiplier_norm_trace {
            assert!(*y1 <= 0.25 + 1e-6 && *y2 <= 0.25 + 1e-6, "{y1} {y2}");
        }
        let hybrid = complete_fn(&d, &mask, &opts).unwrap();
        for [_, y2] in &hybrid.multiplier_norm_trace {
            assert!(*y2 <= 2.0 * 0.5 / 3.0 + 1e-6, "{y2}");
        }
    }
}
