use crate::error::{Result, TomoError};
use crate::fidelity::{fit_conj_prox, DataGrid, FidelityKind};
use crate::forward::ForwardModel;
use crate::qre::{qkl_prox, QreContext};

use super::{GapCheck, Monitor, SolverConfig, SolverReport};

/// Step-size contraction `(1 + 2 mu tau)^{-1/2}`.
pub fn cp_beta(mu: f64, tau: f64) -> f64 {
    (1.0 + 2.0 * mu * tau).sqrt().recip()
}

/// Accelerated primal-dual iteration; works for both fidelities.
pub fn cp_solve<M: ForwardModel + ?Sized>(
    model: &M,
    g_obs: &DataGrid,
    ctx: &QreContext,
    kind: FidelityKind,
    cfg: &SolverConfig,
) -> Result<SolverReport> {
    cp_solve_observed(model, g_obs, ctx, kind, cfg, |_| {})
}

/// [`cp_solve`] with a callback at every gap check.
pub fn cp_solve_observed<M: ForwardModel + ?Sized>(
    model: &M,
    g_obs: &DataGrid,
    ctx: &QreContext,
    kind: FidelityKind,
    cfg: &SolverConfig,
    observer: impl FnMut(&GapCheck<'_>),
) -> Result<SolverReport> {
    cfg.validate_common()?;
    let norm = cfg.resolve_norm(model)?;
    let default_step = norm.sqrt().recip();
    let mut tau = cfg.tau0.unwrap_or(default_step);
    let mut nu = cfg.nu0.unwrap_or(default_step);
    if !(tau > 0.0 && nu > 0.0) {
        return Err(TomoError::InvalidParameter(format!(
            "steps must be positive, got tau {tau}, nu {nu}"
        )));
    }
    if tau * nu * norm > 1.0 + 1e-12 {
        return Err(TomoError::InvalidParameter(format!(
            "steps violate tau * nu * ||T*T|| <= 1 ({tau} * {nu} * {norm})"
        )));
    }
    if kind == FidelityKind::Kl && g_obs.as_slice().iter().any(|&v| v < 0.0) {
        return Err(TomoError::InvalidParameter("KL fidelity needs nonnegative data".into()));
    }
    let mut monitor = Monitor::new(model, g_obs, ctx, kind, cfg, observer)?;
    let mu = cfg.alpha * cfg.mu;

    let mut rho = ctx.prior().clone();
    let mut rho_tilde = rho.clone();
    let (n_theta, n_l) = model.data_shape();
    let mut g = DataGrid::zeros(n_theta, n_l);
    if cfg.max_iters == 0 {
        let gap = monitor.check(0, &rho)?;
        return Ok(monitor.finish(rho, 0, gap));
    }
    let mut gap = f64::INFINITY;
    let mut done = 0;
    while done < cfg.max_iters {
        let g_tilde = g.add_scaled(nu, &model.apply(&rho_tilde)?)?;
        g = fit_conj_prox(kind, &g_tilde, nu, g_obs)?;
        let sigma = rho.add_scaled(-tau, &model.adjoint(&g)?)?;
        let rho_next = qkl_prox(&sigma, tau * cfg.alpha, ctx)?;
        let beta = cp_beta(mu, tau);
        tau *= beta;
        nu /= beta;
        rho_tilde = rho_next.add_scaled(beta, &(&rho_next - &rho))?;
        rho = rho_next;
        done += 1;
        if monitor.due(done) {
            gap = monitor.check(done, &rho)?;
            if gap <= cfg.gap_threshold {
                break;
            }
        }
    }
    Ok(monitor.finish(rho, done, gap))
}
