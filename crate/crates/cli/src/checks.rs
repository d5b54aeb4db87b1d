//! The property suite behind the `check` subcommand.
//!
//! Each measurement returns the worst value seen over a seeded random sweep;
//! [`run_checks`] compares them with fixed tolerances.

use std::time::Instant;

use qkl_tomo::fidelity::{DataGrid, FidelityKind};
use qkl_tomo::forward::quadrature::gauss_legendre_on;
use qkl_tomo::forward::{homodyne_build, pinem_build, ForwardModel, HomodyneVariant, PinemModel};
use qkl_tomo::qre::{qkl_conj_grad, qkl_conj_prox, qkl_conjugate, qkl_prox, qkl_subgrad, qkl_value};
use qkl_tomo::random::{random_density, random_hermitian, random_psd};
use qkl_tomo::solvers::{cp_solve, fista_solve, fista_solve_observed, GapCheck, SolverConfig};
use qkl_tomo::special::{bessel_half_width_for, bessel_j_row, g_forward, g_inverse, hermite_row};
use qkl_tomo::{trace_inner, trace_norm, HermitianMatrix, QreContext};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub const STEP_SIZES: [f64; 3] = [0.1, 1.0, 10.0];

/// `(H, rho0)` pairs of 8x8 matrices: random Hermitian and full-rank PSD.
///
/// The prox argument is `sigma = tau H`, so `sigma / tau` stays of order one
/// and `P` is well enough conditioned for `ln P` to be evaluated from its own
/// eigendecomposition.
fn prox_sweep(trials: usize, seed: u64) -> impl Iterator<Item = (HermitianMatrix, QreContext)> {
    let mut r = rng(seed);
    (0..trials).map(move |_| {
        let h = random_hermitian(&mut r, 8);
        let prior = random_psd(&mut r, 8, 0.05).scale(0.125);
        (h, QreContext::new(prior).expect("positive definite prior"))
    })
}

/// `max ||(sigma - P)/tau - (ln P - ln rho0)||_F` with `P = prox(sigma, tau)`.
pub fn prox_optimality(trials: usize, seed: u64) -> Result<f64> {
    let mut worst = 0.0f64;
    for (h, ctx) in prox_sweep(trials, seed) {
        for tau in STEP_SIZES {
            let sigma = h.scale(tau);
            let p = qkl_prox(&sigma, tau, &ctx)?;
            let lhs = sigma.add_scaled(-1.0, &p)?.scale(1.0 / tau);
            let res = lhs.add_scaled(-1.0, &qkl_subgrad(&p, &ctx)?)?.frobenius_norm();
            worst = worst.max(res);
        }
    }
    Ok(worst)
}

/// `max ||conj_prox(sigma, tau) - (sigma - tau prox(sigma/tau, 1/tau))||_F`.
pub fn moreau_residual(trials: usize, seed: u64) -> Result<f64> {
    let mut worst = 0.0f64;
    for (h, ctx) in prox_sweep(trials, seed) {
        for tau in STEP_SIZES {
            let sigma = h.scale(tau);
            let direct = qkl_conj_prox(&sigma, tau, &ctx)?;
            let via = sigma.add_scaled(-tau, &qkl_prox(&sigma.scale(1.0 / tau), 1.0 / tau, &ctx)?)?;
            worst = worst.max(direct.add_scaled(-1.0, &via)?.frobenius_norm());
        }
    }
    Ok(worst)
}

/// `max |QKL(nu) + QKL*(sigma) - <sigma, nu>| / (1 + |<sigma, nu>|)` at `nu = exp(sigma + ln rho0)`.
pub fn young_equality(trials: usize, seed: u64) -> Result<f64> {
    let mut worst = 0.0f64;
    for (sigma, ctx) in prox_sweep(trials, seed) {
        let nu = qkl_conj_grad(&sigma, &ctx)?;
        let pairing = trace_inner(&sigma, &nu)?;
        let res = (qkl_value(&nu, &ctx)? + qkl_conjugate(&sigma, &ctx)? - pairing).abs();
        worst = worst.max(res / (1.0 + pairing.abs()));
    }
    Ok(worst)
}

/// `max |QKL(s,r0) - QKL(r,r0) - <ln r - ln r0, s - r> - QKL(s,r)|` over PD `r`, PSD `s`.
pub fn bregman_identity(trials: usize, seed: u64) -> Result<f64> {
    let mut r = rng(seed);
    let mut worst = 0.0f64;
    for i in 0..trials {
        let dim = 2 + i % 6;
        let ctx0 = QreContext::new(random_psd(&mut r, dim, 0.1))?;
        let rho = random_psd(&mut r, dim, 0.05).scale(0.5);
        let sigma = random_density(&mut r, dim, 1 + i % dim).scale(r.random_range(0.5..3.0));
        let ctx_rho = QreContext::new(rho.clone())?;
        let grad = qkl_subgrad(&rho, &ctx0)?;
        let lhs =
            qkl_value(&sigma, &ctx0)? - qkl_value(&rho, &ctx0)? - trace_inner(&grad, &sigma.add_scaled(-1.0, &rho)?)?;
        worst = worst.max((lhs - qkl_value(&sigma, &ctx_rho)?).abs());
    }
    Ok(worst)
}

/// Largest violation of `||r - s||_1^2 <= (2/3 ||r||_1 + 4/3 ||s||_1) QKL(r, s)`.
pub fn trace_norm_bound(trials: usize, seed: u64) -> Result<f64> {
    let mut r = rng(seed);
    let mut worst = f64::NEG_INFINITY;
    for i in 0..trials {
        let dim = 2 + i % 7;
        let sigma = random_psd(&mut r, dim, 1e-3).scale(r.random_range(0.1..2.0));
        let rho = random_density(&mut r, dim, 1 + i % dim).scale(r.random_range(0.1..3.0));
        let ctx = QreContext::new(sigma.clone())?;
        let lhs = trace_norm(&rho.add_scaled(-1.0, &sigma)?)?.powi(2);
        let rhs = (2.0 / 3.0 * rho.trace() + 4.0 / 3.0 * sigma.trace()) * qkl_value(&rho, &ctx)?;
        worst = worst.max(lhs - rhs);
    }
    Ok(worst)
}

/// Largest violation of `QKL(r, r0) >= tr r + (1 - e) tr r0`.
pub fn trace_lower_bound(trials: usize, seed: u64) -> Result<f64> {
    let mut r = rng(seed);
    let mut worst = f64::NEG_INFINITY;
    for i in 0..trials {
        let dim = 2 + i % 7;
        let rho0 = random_psd(&mut r, dim, 1e-3).scale(r.random_range(0.1..2.0));
        let rho = random_density(&mut r, dim, 1 + i % dim).scale(r.random_range(0.1..3.0));
        let ctx = QreContext::new(rho0.clone())?;
        let bound = rho.trace() + (1.0 - std::f64::consts::E) * rho0.trace();
        worst = worst.max(bound - qkl_value(&rho, &ctx)?);
    }
    Ok(worst)
}

/// `max |<T rho, g> - <rho, T* g>| / max(|<T rho, g>|, |<rho, T* g>|)`.
pub fn adjoint_pairing<M: ForwardModel + ?Sized>(model: &M, trials: usize, seed: u64) -> Result<f64> {
    let mut r = rng(seed);
    let (n_theta, n_l) = model.data_shape();
    let mut worst = 0.0f64;
    for _ in 0..trials {
        let rho = random_hermitian(&mut r, model.dim());
        let g = DataGrid::from_vec(
            n_theta,
            n_l,
            (0..n_theta * n_l).map(|_| r.random_range(-1.0..1.0)).collect(),
        )?;
        let a = model.apply(&rho)?.dot(&g)?;
        let b = trace_inner(&rho, &model.adjoint(&g)?)?;
        worst = worst.max((a - b).abs() / a.abs().max(b.abs()));
    }
    Ok(worst)
}

/// `max_theta |sum_l (T rho)(theta, l) - tr rho|` for random density matrices.
pub fn pinem_conservation(model: &PinemModel, trials: usize, seed: u64) -> Result<f64> {
    let mut r = rng(seed);
    let mut worst = 0.0f64;
    for i in 0..trials {
        let rho = random_density(&mut r, model.dim(), 1 + i % 4);
        let tr = rho.trace();
        for s in model.apply(&rho)?.row_sums() {
            worst = worst.max((s - tr).abs());
        }
    }
    Ok(worst)
}

/// `max |ln s + s - t| / max(1, |t|)` with `s = g_inverse(t)` on a grid over `[-700, 700]`.
pub fn g_inverse_residual(points: usize) -> Result<f64> {
    let mut worst = 0.0f64;
    for i in 0..=points {
        let t = -700.0 + 1400.0 * i as f64 / points as f64;
        let s = g_inverse(t)?;
        worst = worst.max((g_forward(s) - t).abs() / t.abs().max(1.0));
    }
    Ok(worst)
}

/// `max |sum_k J_k(x)^2 - 1|` over a spread of arguments.
pub fn bessel_normalization() -> Result<f64> {
    let mut worst = 0.0f64;
    for x in [0.0, 1e-3, 0.5, 1.6, 3.46, 10.38, 25.0, 60.0] {
        let table = bessel_j_row(x, bessel_half_width_for(x))?;
        worst = worst.max((table.sum_of_squares() - 1.0).abs());
    }
    Ok(worst)
}

/// `max |int u_m u_n - delta_mn|` for `m, n <= m_max`, by composite Gauss-Legendre on `[-20, 20]`.
pub fn hermite_orthonormality(m_max: usize) -> f64 {
    let mut gram = vec![0.0; (m_max + 1) * (m_max + 1)];
    let mut row = vec![0.0; m_max + 1];
    let panels = 80;
    for p in 0..panels {
        let a = -20.0 + 40.0 * p as f64 / panels as f64;
        let (xs, ws) = gauss_legendre_on(30, a, a + 40.0 / panels as f64);
        for (x, w) in xs.into_iter().zip(ws) {
            hermite_row(x, &mut row);
            for i in 0..=m_max {
                for j in 0..=m_max {
                    gram[i * (m_max + 1) + j] += w * row[i] * row[j];
                }
            }
        }
    }
    let mut worst = 0.0f64;
    for i in 0..=m_max {
        for j in 0..=m_max {
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((gram[i * (m_max + 1) + j] - target).abs());
        }
    }
    worst
}

/// The 5x5 PINEM problem used for solver checks.
#[derive(Debug, Clone)]
pub struct ToyProblem {
    pub model: PinemModel,
    pub truth: HermitianMatrix,
    pub data: DataGrid,
    pub prior: QreContext,
    pub alpha: f64,
}

impl ToyProblem {
    pub fn new() -> Result<Self> {
        let model = pinem_build(5, 0.8, 6)?;
        let truth = random_density(&mut rng(42), 5, 2);
        let clean = model.apply(&truth)?;
        let (n_theta, n_l) = clean.shape();
        let perturbed = clean
            .as_slice()
            .iter()
            .enumerate()
            .map(|(i, v)| v * (1.0 + 0.05 * (3.0 * i as f64).cos()));
        Ok(Self {
            data: DataGrid::from_vec(n_theta, n_l, perturbed.collect())?,
            model,
            truth,
            prior: QreContext::maximally_mixed(5)?,
            alpha: 0.1,
        })
    }
}

/// Outcome of the gap-guarantee run on the toy problem.
#[derive(Debug, Clone, Copy)]
pub struct GapGuarantee {
    /// `max (QKL(rho, rho_ref) - gap(rho))` over the checked iterates.
    pub worst_excess: f64,
    pub checks: usize,
}

/// Solves the toy problem to gap 1e-10 for a reference, then re-runs FISTA
/// and compares `QKL(rho, rho_ref)` with the reported gap at every check.
pub fn gap_guarantee(toy: &ToyProblem) -> Result<GapGuarantee> {
    let reference = fista_solve(
        &toy.model,
        &toy.data,
        &toy.prior,
        &SolverConfig::new(toy.alpha).with_gap_threshold(1e-10),
    )?;
    let ref_ctx = QreContext::new(reference.solution)?;
    let mut cfg = SolverConfig::new(toy.alpha).with_gap_threshold(1e-9);
    cfg.gap_check_stride = 5;
    let mut out = GapGuarantee {
        worst_excess: f64::NEG_INFINITY,
        checks: 0,
    };
    let mut failure = None;
    let mut observer = |c: &GapCheck<'_>| {
        let eval = qkl_value(&c.rho.shift(toy.prior.floor_eps()), &ref_ctx);
        match eval {
            Ok(d) => out.worst_excess = out.worst_excess.max(d - c.gap),
            Err(e) => failure = Some(e),
        }
        out.checks += 1;
    };
    fista_solve_observed(&toy.model, &toy.data, &toy.prior, &cfg, &mut observer)?;
    if let Some(e) = failure {
        return Err(e.into());
    }
    Ok(out)
}

/// Trace-norm distance between the FISTA and L2 Chambolle-Pock solutions at gap 1e-9.
pub fn solver_agreement(toy: &ToyProblem) -> Result<f64> {
    let cfg = SolverConfig::new(toy.alpha).with_gap_threshold(1e-9);
    let a = fista_solve(&toy.model, &toy.data, &toy.prior, &cfg)?;
    let b = cp_solve(&toy.model, &toy.data, &toy.prior, FidelityKind::L2, &cfg)?;
    Ok(trace_norm(&a.solution.add_scaled(-1.0, &b.solution)?)?)
}

#[derive(Debug, Clone)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub value: f64,
    pub tolerance: f64,
    pub seconds: f64,
}

impl CheckOutcome {
    pub fn passed(&self) -> bool {
        self.value <= self.tolerance
    }
}

fn timed(name: &'static str, tolerance: f64, f: impl FnOnce() -> Result<f64>) -> Result<CheckOutcome> {
    let start = Instant::now();
    let value = f()?;
    Ok(CheckOutcome {
        name,
        value,
        tolerance,
        seconds: start.elapsed().as_secs_f64(),
    })
}

/// Runs the whole suite. An `Err` means a check could not be evaluated at all.
pub fn run_checks(seed: u64) -> Result<Vec<CheckOutcome>> {
    let pinem = pinem_build(41, 5.19, 100)?;
    let homodyne = homodyne_build(21, 60, -5.0, 5.0, 120, qkl_tomo::forward::DEFAULT_QUAD_ORDER)?;
    let toy = ToyProblem::new()?;
    Ok(vec![
        timed("prox optimality", 1e-9, || prox_optimality(100, seed))?,
        timed("Moreau identity", 1e-9, || moreau_residual(100, seed))?,
        timed("Young equality", 1e-8, || young_equality(100, seed.wrapping_add(1)))?,
        timed("Bregman identity", 1e-8, || bregman_identity(100, seed.wrapping_add(2)))?,
        timed("trace-norm bound", 1e-10, || {
            trace_norm_bound(200, seed.wrapping_add(3))
        })?,
        timed("trace lower bound", 1e-10, || {
            trace_lower_bound(200, seed.wrapping_add(4))
        })?,
        timed("gap bounds distance to reference", 1e-9, || {
            Ok(gap_guarantee(&toy)?.worst_excess)
        })?,
        timed("FISTA / Chambolle-Pock agreement", 1e-5, || solver_agreement(&toy))?,
        timed("PINEM adjoint pairing", 1e-10, || {
            adjoint_pairing(&pinem, 50, seed.wrapping_add(5))
        })?,
        timed("homodyne semi adjoint pairing", 1e-10, || {
            adjoint_pairing(&homodyne.operator(HomodyneVariant::Semi), 50, seed.wrapping_add(6))
        })?,
        timed("homodyne basis adjoint pairing", 1e-10, || {
            adjoint_pairing(&homodyne.operator(HomodyneVariant::Basis), 50, seed.wrapping_add(7))
        })?,
        timed("PINEM probability conservation", 1e-8, || {
            pinem_conservation(&pinem, 20, seed.wrapping_add(8))
        })?,
        timed("g_inverse residual", 1e-12, || g_inverse_residual(20_000))?,
        timed("Bessel normalization", 1e-10, bessel_normalization)?,
        timed("Hermite orthonormality", 1e-8, || Ok(hermite_orthonormality(40)))?,
    ])
}
