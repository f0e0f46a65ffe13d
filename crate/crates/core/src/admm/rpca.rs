use crate::admm::{
    check_problem, default_rpca_lambda, initial_factors, next_mu, spectral_or_zero,
    stopping_metric, AdmmState, EffectiveOptions, SolverOptions, SolverReport, Termination,
};
use crate::dense::{full_thin_svd, regularized_gram, solve_gram, DenseMatrix, ObservationMask};
use crate::error::Result;
use crate::norms::{abs_pow, nuclear_norm};
use crate::prox::{half_threshold, soft_threshold, svt, svt_split, two_thirds_threshold};

#[derive(Clone, Copy, PartialEq, Eq)]
enum Model {
    /// `lambda/2 (||U||_* + ||V||_*) + ||P(S)||_{1/2}^{1/2}`
    Half,
    /// `lambda/3 (||U||_F^2 + 2 ||V||_*) + ||P(S)||_{2/3}^{2/3}`
    TwoThirds,
}

fn resolve(opts: &SolverOptions, observed: &DenseMatrix, sigma1: f64) -> EffectiveOptions {
    let (m, n) = observed.shape();
    EffectiveOptions {
        d: opts.d,
        lambda: opts.lambda.unwrap_or_else(|| default_rpca_lambda(m, n)),
        mu0: opts.mu0.unwrap_or(1.0 / sigma1),
        rho: opts.rho,
        mu_max: opts.mu_max,
        epsilon: opts.epsilon,
        max_iters: opts.max_iters,
    }
}

/// Initial dual for `L + S = D`: `-D / max(||D||_2, max|D| / lambda)`.
fn initial_dual(observed: &DenseMatrix, sigma1: f64, lambda: f64) -> DenseMatrix {
    let j = sigma1.max(observed.max_abs() / lambda);
    observed.scale(-1.0 / j)
}

/// `D - L - Y/mu`, the point the sparse update thresholds.
fn sparse_target(observed: &DenseMatrix, l: &DenseMatrix, y: &DenseMatrix, mu: f64) -> DenseMatrix {
    let mut a = observed.sub(l);
    a.axpy(-1.0 / mu, y);
    a
}

fn sparse_penalty(s: &DenseMatrix, mask: &ObservationMask, p: f64) -> f64 {
    let sl = s.as_slice();
    mask.linear_indices()
        .iter()
        .map(|&i| abs_pow(sl[i], p))
        .sum()
}

fn finish(
    state: AdmmState,
    mask: &ObservationMask,
    traces: Traces,
    termination: Termination,
    options: EffectiveOptions,
) -> Result<SolverReport> {
    let s = mask.project(state.s.as_ref().expect("robust PCA state carries S"))?;
    Ok(SolverReport {
        iterations: traces.stop.len(),
        u: state.u,
        v: state.v,
        l: state.l,
        s,
        objective_trace: traces.objective,
        residual_trace: traces.residual,
        stop_metric_trace: traces.stop,
        multiplier_norm_trace: traces.multipliers,
        termination,
        options,
    })
}

#[derive(Default)]
pub(crate) struct Traces {
    pub objective: Vec<f64>,
    pub residual: Vec<f64>,
    pub stop: Vec<f64>,
    pub multipliers: Vec<[f64; 2]>,
}

impl Traces {
    /// Records one iteration; returns the stopping metric.
    pub(crate) fn record(
        &mut self,
        state: &AdmmState,
        observed: &DenseMatrix,
        objective: f64,
    ) -> Result<f64> {
        let (e1, e2) = stopping_metric(state, observed)?;
        let norm_d = observed.frobenius_norm();
        let mut res = state.u.matmul_t(&state.v).distance(&state.l);
        if let Some(s) = &state.s {
            res = res.max(state.l.add(s).distance(observed));
        }
        let metric = e1.max(e2);
        self.objective.push(objective);
        self.residual.push(res / norm_d);
        self.stop.push(metric);
        self.multipliers.push([
            spectral_or_zero(state.y_u.as_ref())?,
            crate::dense::spectral_norm(&state.y_v)?,
        ]);
        Ok(metric)
    }
}

fn solve_factored(
    model: Model,
    d: &DenseMatrix,
    mask: &ObservationMask,
    opts: &SolverOptions,
) -> Result<SolverReport> {
    opts.validate(true)?;
    let observed = check_problem(d, mask)?;
    let (m, n) = observed.shape();
    let (u0, v0, sigma1) = initial_factors(&observed, opts.d)?;
    let eff = resolve(opts, &observed, sigma1);
    let lambda = eff.lambda;
    let k = opts.d;

    let mut st = AdmmState {
        u_hat: (model == Model::Half).then(|| u0.clone()),
        v_hat: v0.clone(),
        u: u0,
        v: v0,
        l: observed.clone(),
        s: Some(DenseMatrix::zeros(m, n)),
        y_u: (model == Model::Half).then(|| DenseMatrix::zeros(m, k)),
        y_v: DenseMatrix::zeros(n, k),
        y_l: DenseMatrix::zeros(m, n),
        y_d: Some(initial_dual(&observed, sigma1, lambda)),
        mu: eff.mu0,
        iter: 0,
    };
    let mut traces = Traces::default();

    for _ in 0..eff.max_iters {
        let mu = st.mu;
        let inv_mu = 1.0 / mu;
        let y_d = st.y_d.as_mut().expect("state carries Y_d");
        let s = st.s.as_mut().expect("state carries S");

        // P = L - Y_l / mu
        let mut p = st.l.clone();
        p.axpy(-inv_mu, &st.y_l);

        match model {
            Model::Half => {
                let u_hat = st.u_hat.as_ref().expect("half model carries U_hat");
                let y_u = st.y_u.as_ref().expect("half model carries Y_u");
                let mut rhs = p.matmul(&st.v);
                rhs.axpy(1.0, u_hat);
                rhs.axpy(inv_mu, y_u);
                st.u = solve_gram(&rhs, &regularized_gram(&st.v, 1.0))?;
            }
            Model::TwoThirds => {
                // U = mu P V ((2 lambda / 3) I + mu V^T V)^{-1}
                let rhs = p.matmul(&st.v);
                let gram = regularized_gram(&st.v, 2.0 * lambda / (3.0 * mu));
                st.u = solve_gram(&rhs, &gram)?;
            }
        }

        let mut rhs = p.t_matmul(&st.u);
        rhs.axpy(1.0, &st.v_hat);
        rhs.axpy(inv_mu, &st.y_v);
        st.v = solve_gram(&rhs, &regularized_gram(&st.u, 1.0))?;

        let tau = match model {
            Model::Half => lambda / (2.0 * mu),
            Model::TwoThirds => 2.0 * lambda / (3.0 * mu),
        };
        // Y + mu (X_hat - X) equals -mu times the clipped part of the SVT
        // argument; forming it that way avoids cancellation at large mu.
        let mut clipped_u = None;
        if let (Some(u_hat), Some(y_u)) = (st.u_hat.as_mut(), st.y_u.as_ref()) {
            let mut arg = st.u.clone();
            arg.axpy(-inv_mu, y_u);
            let (shrunk, clipped) = svt_split(&arg, tau)?;
            *u_hat = shrunk;
            clipped_u = Some(clipped);
        }
        let mut arg = st.v.clone();
        arg.axpy(-inv_mu, &st.y_v);
        let (shrunk, clipped_v) = svt_split(&arg, tau)?;
        st.v_hat = shrunk;

        // L = (U V^T + Y_l/mu - S + D - Y_d/mu) / 2
        let uvt = st.u.matmul_t(&st.v);
        let mut l = uvt.clone();
        l.axpy(inv_mu, &st.y_l);
        l.axpy(-1.0, s);
        l.axpy(1.0, &observed);
        l.axpy(-inv_mu, y_d);
        l.scale_in_place(0.5);
        st.l = l;

        let mut next_s = sparse_target(&observed, &st.l, y_d, mu);
        let gamma = 2.0 * inv_mu;
        match model {
            Model::Half => mask.apply_split(&mut next_s, |a| half_threshold(a, gamma), |a| a),
            Model::TwoThirds => {
                mask.apply_split(&mut next_s, |a| two_thirds_threshold(a, gamma), |a| a)
            }
        }
        *s = next_s;

        if let (Some(clipped), Some(y_u)) = (clipped_u, st.y_u.as_mut()) {
            *y_u = clipped.scale(-mu);
        }
        st.y_v = clipped_v.scale(-mu);
        st.y_l.axpy(mu, &uvt);
        st.y_l.axpy(-mu, &st.l);
        y_d.axpy(mu, &st.l);
        y_d.axpy(mu, s);
        y_d.axpy(-mu, &observed);

        let objective = match model {
            Model::Half => {
                0.5 * lambda * (nuclear_norm(&st.u)? + nuclear_norm(&st.v)?)
                    + sparse_penalty(s, mask, 0.5)
            }
            Model::TwoThirds => {
                lambda / 3.0 * (st.u.frobenius_norm_sq() + 2.0 * nuclear_norm(&st.v)?)
                    + sparse_penalty(s, mask, 2.0 / 3.0)
            }
        };
        st.iter += 1;
        let metric = traces.record(&st, &observed, objective)?;
        st.mu = next_mu(mu, &eff);
        if metric < eff.epsilon {
            return finish(st, mask, traces, Termination::Converged, eff);
        }
    }
    finish(st, mask, traces, Termination::MaxIters, eff)
}

/// Robust PCA with the double nuclear norm penalty on `L = U V^T` and the
/// `l_{1/2}` quasi-norm on the observed part of `S`.
///
/// Unobserved entries of `d` are ignored. The returned `S` is zero off the
/// mask.
pub fn solve_sl_half(
    d: &DenseMatrix,
    mask: &ObservationMask,
    opts: &SolverOptions,
) -> Result<SolverReport> {
    solve_factored(Model::Half, d, mask, opts)
}

/// Robust PCA with the Frobenius/nuclear hybrid penalty and the `l_{2/3}`
/// quasi-norm on the observed part of `S`.
pub fn solve_sl_two_thirds(
    d: &DenseMatrix,
    mask: &ObservationMask,
    opts: &SolverOptions,
) -> Result<SolverReport> {
    solve_factored(Model::TwoThirds, d, mask, opts)
}

/// Convex baseline `min lambda ||L||_* + ||P(S)||_1  s.t.  L + S = D` by the
/// inexact augmented Lagrangian method. Every iteration takes a full SVD.
///
/// `opts.d` is unused; the returned factors are the balanced split of the
/// final `L`'s nonzero singular triplets.
pub fn solve_rpca_nuclear(
    d: &DenseMatrix,
    mask: &ObservationMask,
    opts: &SolverOptions,
) -> Result<SolverReport> {
    opts.validate(false)?;
    let observed = check_problem(d, mask)?;
    let (m, n) = observed.shape();
    let sigma1 = crate::dense::spectral_norm(&observed)?;
    let mut eff = resolve(opts, &observed, sigma1);
    let lambda = eff.lambda;
    let norm_d = observed.frobenius_norm();

    let mut y = initial_dual(&observed, sigma1, lambda);
    let mut s = DenseMatrix::zeros(m, n);
    let mut l = DenseMatrix::zeros(m, n);
    let mut mu = eff.mu0;
    let mut traces = Traces::default();
    let mut termination = Termination::MaxIters;

    for _ in 0..eff.max_iters {
        let inv_mu = 1.0 / mu;
        let mut arg = observed.sub(&s);
        arg.axpy(-inv_mu, &y);
        l = svt(&arg, lambda * inv_mu)?;

        let mut next_s = sparse_target(&observed, &l, &y, mu);
        mask.apply_split(&mut next_s, |a| soft_threshold(a, inv_mu), |a| a);
        s = next_s;

        let mut r = l.add(&s);
        r.axpy(-1.0, &observed);
        y.axpy(mu, &r);

        // Primal feasibility only, as in the usual inexact ALM loop.
        let metric = r.frobenius_norm() / norm_d;
        let objective = lambda * crate::norms::nuclear_norm(&l)? + sparse_penalty(&s, mask, 1.0);
        traces.objective.push(objective);
        traces.residual.push(metric);
        traces.stop.push(metric);
        traces.multipliers.push([0.0, 0.0]);
        mu = next_mu(mu, &eff);
        if metric < eff.epsilon {
            termination = Termination::Converged;
            break;
        }
    }

    let svd = full_thin_svd(&l)?;
    let live = svd
        .singular_values
        .iter()
        .take_while(|&&s| s > 0.0)
        .count()
        .max(1);
    let w: Vec<f64> = svd.singular_values[..live]
        .iter()
        .map(|s| s.sqrt())
        .collect();
    eff.d = live;
    Ok(SolverReport {
        iterations: traces.stop.len(),
        u: svd.left.leading_columns(live).scale_columns(&w),
        v: svd.right.leading_columns(live).scale_columns(&w),
        s: mask.project(&s)?,
        l,
        objective_trace: traces.objective,
        residual_trace: traces.residual,
        stop_metric_trace: traces.stop,
        multiplier_norm_trace: traces.multipliers,
        termination,
        options: eff,
    })
}
