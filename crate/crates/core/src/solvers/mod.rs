//! Accelerated first-order solvers for
//! `min_rho (1/alpha) S_{g_obs}(T rho) + QKL(rho, rho0)`
//! with a duality-gap stopping rule.

mod cp;
mod fista;

use std::fmt;
use std::str::FromStr;

use crate::error::{Result, TomoError};
use crate::fidelity::{dual_point, fit_conjugate, fit_value, DataGrid, FidelityKind};
use crate::forward::{norm_estimate, ForwardModel};
use crate::hermitian::HermitianMatrix;
use crate::qre::{qkl_conjugate, qkl_value, QreContext, DEFAULT_FLOOR_EPS};

pub use cp::{cp_beta, cp_solve, cp_solve_observed};
pub use fista::{fista_momentum, fista_solve, fista_solve_observed};

/// Power iterations used when the configuration carries no norm bound.
pub const NORM_ESTIMATE_ITERS: usize = 100;

/// Solver parameters. `mu` is the convexity parameter of `QKL(., rho0)`; the
/// regularizer actually handled by the proximal steps is `alpha QKL`, so the
/// recurrences use the modulus `alpha * mu`.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub alpha: f64,
    pub mu: f64,
    pub gap_threshold: f64,
    pub max_iters: usize,
    /// FISTA step, or the initial primal step for Chambolle-Pock.
    pub tau0: Option<f64>,
    /// Initial dual step (Chambolle-Pock only).
    pub nu0: Option<f64>,
    pub gap_check_stride: usize,
    pub floor_eps: f64,
    /// Upper bound on `||T*T||`; estimated by power iteration when absent.
    pub norm_bound: Option<f64>,
}

impl SolverConfig {
    pub fn new(alpha: f64) -> Self {
        Self {
            alpha,
            mu: 0.5,
            gap_threshold: 1e-6,
            max_iters: 2_000_000,
            tau0: None,
            nu0: None,
            gap_check_stride: 50,
            floor_eps: DEFAULT_FLOOR_EPS,
            norm_bound: None,
        }
    }

    pub fn with_gap_threshold(mut self, gap: f64) -> Self {
        self.gap_threshold = gap;
        self
    }

    pub fn with_max_iters(mut self, iters: usize) -> Self {
        self.max_iters = iters;
        self
    }

    pub fn with_mu(mut self, mu: f64) -> Self {
        self.mu = mu;
        self
    }

    fn validate_common(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(TomoError::InvalidParameter(format!(
                    "{name} must be positive and finite, got {v}"
                )))
            }
        };
        positive("alpha", self.alpha)?;
        positive("gap_threshold", self.gap_threshold)?;
        if !(self.mu >= 0.0 && self.mu.is_finite()) {
            return Err(TomoError::InvalidParameter(format!(
                "mu must be nonnegative, got {}",
                self.mu
            )));
        }
        if !(self.floor_eps >= 0.0 && self.floor_eps.is_finite()) {
            return Err(TomoError::InvalidParameter(format!(
                "floor_eps must be nonnegative, got {}",
                self.floor_eps
            )));
        }
        if self.gap_check_stride == 0 {
            return Err(TomoError::InvalidParameter(
                "gap_check_stride must be at least 1".into(),
            ));
        }
        if let Some(n) = self.norm_bound {
            positive("norm_bound", n)?;
        }
        Ok(())
    }

    fn resolve_norm<M: ForwardModel + ?Sized>(&self, model: &M) -> Result<f64> {
        match self.norm_bound {
            Some(n) => Ok(n),
            None => norm_estimate(model, NORM_ESTIMATE_ITERS),
        }
    }
}

/// Why an iteration ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum StopReason {
    Gap,
    MaxIters,
}

impl StopReason {
    pub fn name(self) -> &'static str {
        match self {
            StopReason::Gap => "gap",
            StopReason::MaxIters => "max_iters",
        }
    }
}

impl fmt::Display for StopReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone)]
pub struct SolverReport {
    pub solution: HermitianMatrix,
    pub iterations: usize,
    pub final_gap: f64,
    /// `(1/alpha) S(T rho) + QKL(rho, rho0)` sampled at every gap check.
    pub objective_history: Vec<f64>,
    /// `(iteration, gap)` at every gap check.
    pub gap_history: Vec<(usize, f64)>,
    pub stop_reason: StopReason,
    pub wall_time: f64,
}

/// What an observer sees at each gap check.
#[derive(Debug)]
pub struct GapCheck<'a> {
    pub iteration: usize,
    pub gap: f64,
    pub objective: f64,
    pub rho: &'a HermitianMatrix,
}

/// The two algorithms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    Fista,
    ChambollePock,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Fista => "fista",
            Method::ChambollePock => "cp",
        }
    }

    /// FISTA for the smooth L2 fidelity, Chambolle-Pock for KL.
    pub fn default_for(kind: FidelityKind) -> Self {
        match kind {
            FidelityKind::L2 => Method::Fista,
            FidelityKind::Kl => Method::ChambollePock,
        }
    }
}

impl FromStr for Method {
    type Err = TomoError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "fista" => Ok(Method::Fista),
            "cp" | "chambolle-pock" => Ok(Method::ChambollePock),
            other => Err(TomoError::InvalidParameter(format!(
                "unknown solver '{other}' (expected fista or cp)"
            ))),
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Runs `method`; FISTA rejects the KL fidelity.
pub fn solve<M: ForwardModel + ?Sized>(
    method: Method,
    model: &M,
    g_obs: &DataGrid,
    ctx: &QreContext,
    kind: FidelityKind,
    cfg: &SolverConfig,
) -> Result<SolverReport> {
    match method {
        Method::Fista => {
            if kind != FidelityKind::L2 {
                return Err(TomoError::InvalidParameter(
                    "FISTA needs a smooth fidelity; use cp for KL".into(),
                ));
            }
            fista_solve(model, g_obs, ctx, cfg)
        }
        Method::ChambollePock => cp_solve(model, g_obs, ctx, kind, cfg),
    }
}

/// Objective `(1/alpha) S(T rho) + QKL(rho, rho0)`.
pub fn objective<M: ForwardModel + ?Sized>(
    rho: &HermitianMatrix,
    model: &M,
    g_obs: &DataGrid,
    ctx: &QreContext,
    kind: FidelityKind,
    alpha: f64,
) -> Result<f64> {
    let f = model.apply(rho)?;
    Ok(fit_value(kind, g_obs, &f)? / alpha + qkl_value(rho, ctx)?)
}

/// Upper bound on `QKL(rho, rho_alpha)` for the exact minimizer `rho_alpha`.
///
/// The iterate is shifted by `floor_eps * I` first. Domain violations of the
/// conjugates give `+inf` rather than an error.
pub fn duality_gap<M: ForwardModel + ?Sized>(
    rho: &HermitianMatrix,
    model: &M,
    g_obs: &DataGrid,
    ctx: &QreContext,
    kind: FidelityKind,
    alpha: f64,
) -> Result<f64> {
    Ok(gap_parts(rho, model, g_obs, ctx, kind, alpha)?.0)
}

/// `(gap, objective)` at the floored iterate.
pub(crate) fn gap_parts<M: ForwardModel + ?Sized>(
    rho: &HermitianMatrix,
    model: &M,
    g_obs: &DataGrid,
    ctx: &QreContext,
    kind: FidelityKind,
    alpha: f64,
) -> Result<(f64, f64)> {
    if !(alpha > 0.0) {
        return Err(TomoError::InvalidParameter(format!(
            "alpha must be positive, got {alpha}"
        )));
    }
    let rho_f = rho.shift(ctx.floor_eps());
    let f = model.apply(&rho_f)?;
    let primal = fit_value(kind, g_obs, &f)? / alpha + qkl_value(&rho_f, ctx)?;
    if !primal.is_finite() {
        return Ok((f64::INFINITY, primal));
    }
    let g_hat = match dual_point(kind, g_obs, &f, alpha) {
        Ok(g) => g,
        Err(TomoError::KlDomain { .. }) => return Ok((f64::INFINITY, primal)),
        Err(e) => return Err(e),
    };
    let fit_conj = fit_conjugate(kind, &g_hat.scale(-alpha), g_obs)? / alpha;
    let qkl_conj = match qkl_conjugate(&model.adjoint(&g_hat)?, ctx) {
        Ok(v) => v,
        Err(TomoError::ExpOverflow { .. }) => return Ok((f64::INFINITY, primal)),
        Err(e) => return Err(e),
    };
    let gap = primal + fit_conj + qkl_conj;
    Ok((if gap.is_nan() { f64::INFINITY } else { gap }, primal))
}

/// Shared bookkeeping for the gap checks of both solvers.
pub(crate) struct Monitor<'a, M: ?Sized, F> {
    pub model: &'a M,
    pub g_obs: &'a DataGrid,
    pub ctx: &'a QreContext,
    pub kind: FidelityKind,
    pub cfg: &'a SolverConfig,
    pub observer: F,
    pub objective_history: Vec<f64>,
    pub gap_history: Vec<(usize, f64)>,
    pub start: std::time::Instant,
}

impl<'a, M: ForwardModel + ?Sized, F: FnMut(&GapCheck<'_>)> Monitor<'a, M, F> {
    pub fn new(
        model: &'a M,
        g_obs: &'a DataGrid,
        ctx: &'a QreContext,
        kind: FidelityKind,
        cfg: &'a SolverConfig,
        observer: F,
    ) -> Result<Self> {
        if ctx.dim() != model.dim() {
            return Err(TomoError::DimensionMismatch {
                expected: model.dim(),
                found: ctx.dim(),
            });
        }
        if g_obs.shape() != model.data_shape() {
            return Err(TomoError::ShapeMismatch {
                expected: model.data_shape(),
                found: g_obs.shape(),
            });
        }
        Ok(Self {
            model,
            g_obs,
            ctx,
            kind,
            cfg,
            observer,
            objective_history: Vec::new(),
            gap_history: Vec::new(),
            start: std::time::Instant::now(),
        })
    }

    /// Whether iteration `done` (1-based count of completed steps) is a check point.
    pub fn due(&self, done: usize) -> bool {
        done.is_multiple_of(self.cfg.gap_check_stride) || done == self.cfg.max_iters
    }

    /// Evaluates the gap, notifies the observer, and returns the gap.
    pub fn check(&mut self, done: usize, rho: &HermitianMatrix) -> Result<f64> {
        let (gap, objective) = gap_parts(rho, self.model, self.g_obs, self.ctx, self.kind, self.cfg.alpha)?;
        self.objective_history.push(objective);
        self.gap_history.push((done, gap));
        (self.observer)(&GapCheck {
            iteration: done,
            gap,
            objective,
            rho,
        });
        Ok(gap)
    }

    pub fn finish(self, solution: HermitianMatrix, iterations: usize, final_gap: f64) -> SolverReport {
        let stop_reason = if final_gap <= self.cfg.gap_threshold {
            StopReason::Gap
        } else {
            StopReason::MaxIters
        };
        SolverReport {
            solution,
            iterations,
            final_gap,
            objective_history: self.objective_history,
            gap_history: self.gap_history,
            stop_reason,
            wall_time: self.start.elapsed().as_secs_f64(),
        }
    }
}
