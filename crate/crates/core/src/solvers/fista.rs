use crate::error::{Result, TomoError};
use crate::fidelity::{DataGrid, FidelityKind};
use crate::forward::ForwardModel;
use crate::qre::{qkl_prox, QreContext};

use super::{GapCheck, Monitor, SolverConfig, SolverReport};

/// One step of the momentum recurrence: from `t_l` to `(t_{l+1}, beta_l)`
/// for modulus `mu` and step `tau`.
pub fn fista_momentum(t: f64, tau: f64, mu: f64) -> (f64, f64) {
    let q = tau * mu / (1.0 + tau * mu);
    let next = 0.5 * (1.0 - q * t * t + ((1.0 - q * t).powi(2) + 4.0 * t * t).sqrt());
    let beta = (t - 1.0) / next * (1.0 + (1.0 - next) * tau * mu);
    (next, beta)
}

/// Accelerated forward-backward splitting for the L2 fidelity.
pub fn fista_solve<M: ForwardModel + ?Sized>(
    model: &M,
    g_obs: &DataGrid,
    ctx: &QreContext,
    cfg: &SolverConfig,
) -> Result<SolverReport> {
    fista_solve_observed(model, g_obs, ctx, cfg, |_| {})
}

/// [`fista_solve`] with a callback at every gap check.
pub fn fista_solve_observed<M: ForwardModel + ?Sized>(
    model: &M,
    g_obs: &DataGrid,
    ctx: &QreContext,
    cfg: &SolverConfig,
    observer: impl FnMut(&GapCheck<'_>),
) -> Result<SolverReport> {
    cfg.validate_common()?;
    let norm = cfg.resolve_norm(model)?;
    let tau = cfg.tau0.unwrap_or(0.9 / norm);
    if !(tau > 0.0 && tau * norm < 1.0) {
        return Err(TomoError::InvalidParameter(format!(
            "FISTA step {tau} must lie in (0, 1/{norm})"
        )));
    }
    let mut monitor = Monitor::new(model, g_obs, ctx, FidelityKind::L2, cfg, observer)?;
    let mu = cfg.alpha * cfg.mu;

    let mut rho = ctx.prior().clone();
    let mut rho_prev = rho.clone();
    let mut t = 0.0;
    if cfg.max_iters == 0 {
        let gap = monitor.check(0, &rho)?;
        return Ok(monitor.finish(rho, 0, gap));
    }
    let mut gap = f64::INFINITY;
    let mut done = 0;
    while done < cfg.max_iters {
        let (t_next, beta) = fista_momentum(t, tau, mu);
        let rho_tilde = rho.add_scaled(beta, &(&rho - &rho_prev))?;
        let residual = model.apply(&rho_tilde)?.add_scaled(-1.0, g_obs)?;
        let sigma = rho_tilde.add_scaled(-tau, &model.adjoint(&residual)?)?;
        let rho_next = qkl_prox(&sigma, cfg.alpha * tau, ctx)?;
        rho_prev = std::mem::replace(&mut rho, rho_next);
        t = t_next;
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
