use qkl_tomo::fidelity::{fit_grad, DataGrid, FidelityKind};
use qkl_tomo::forward::{pinem_build, ForwardModel, PinemModel};
use qkl_tomo::qre::{qkl_value, QreContext};
use qkl_tomo::random::random_density;
use qkl_tomo::solvers::{
    cp_beta, cp_solve, cp_solve_observed, duality_gap, fista_momentum, fista_solve, fista_solve_observed, objective,
    solve, Method, SolverConfig, StopReason,
};
use qkl_tomo::{apply_spectral, eig_hermitian, trace_norm, HermitianMatrix, TomoError};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

struct Toy {
    model: PinemModel,
    truth: HermitianMatrix,
    data: DataGrid,
    ctx: QreContext,
}

fn toy() -> Toy {
    let model = pinem_build(5, 0.8, 6).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let truth = random_density(&mut rng, 5, 2);
    let clean = model.apply(&truth).unwrap();
    // A deterministic multiplicative perturbation so the data are not exactly attainable.
    let (n_theta, n_l) = clean.shape();
    let perturbed = clean
        .as_slice()
        .iter()
        .enumerate()
        .map(|(i, v)| v * (1.0 + 0.05 * (3.0 * i as f64).cos()));
    let data = DataGrid::from_vec(n_theta, n_l, perturbed.collect()).unwrap();
    Toy {
        model,
        truth,
        data,
        ctx: QreContext::maximally_mixed(5).unwrap(),
    }
}

/// Minimizes `(1/alpha) S(T e^H) + QKL(e^H, rho0)` over Hermitian `H` by damped
/// fixed-point descent `H <- H - eta * grad`, stopping on a vanishing gradient.
fn exp_descent_oracle(t: &Toy, kind: FidelityKind, alpha: f64) -> HermitianMatrix {
    let log_prior = apply_spectral(t.ctx.prior(), |x| Some(x.ln())).unwrap();
    let mut h = log_prior.clone();
    let eta = 0.05;
    for _ in 0..200_000 {
        let rho = apply_spectral(&h, |x| Some(x.exp())).unwrap();
        let fit = fit_grad(kind, &t.data, &t.model.apply(&rho).unwrap()).unwrap();
        let grad = t
            .model
            .adjoint(&fit)
            .unwrap()
            .scale(1.0 / alpha)
            .add_scaled(1.0, &h)
            .unwrap()
            .add_scaled(-1.0, &log_prior)
            .unwrap();
        if grad.frobenius_norm() < 1e-13 {
            return rho;
        }
        h = h.add_scaled(-eta, &grad).unwrap();
    }
    panic!("oracle did not converge");
}

#[test]
fn momentum_and_step_recurrences() {
    let (t1, beta0) = fista_momentum(0.0, 0.3, 0.5);
    assert_eq!(t1, 1.0);
    // With rho^(-1) = rho^(0) the first extrapolation is a no-op whatever beta_0 is.
    assert!(beta0.is_finite());
    let (t2, beta1) = fista_momentum(t1, 0.3, 0.0);
    assert!((t2 - 0.5 * (1.0 + 5f64.sqrt())).abs() < 1e-15);
    assert_eq!(beta1, 0.0);
    assert!((cp_beta(0.5, 1.0) - 0.5f64.sqrt()).abs() < 1e-15);
    assert_eq!(cp_beta(0.0, 3.0), 1.0);
}

#[test]
fn huge_alpha_returns_the_prior() {
    let t = toy();
    let cfg = SolverConfig::new(1e6).with_gap_threshold(1e-10);
    let fista = fista_solve(&t.model, &t.data, &t.ctx, &cfg).unwrap();
    assert!(trace_norm(&(&fista.solution - t.ctx.prior())).unwrap() < 1e-4);
    for kind in [FidelityKind::L2, FidelityKind::Kl] {
        let cp = cp_solve(&t.model, &t.data, &t.ctx, kind, &cfg).unwrap();
        assert!(trace_norm(&(&cp.solution - t.ctx.prior())).unwrap() < 1e-4, "{kind}");
        assert_eq!(cp.stop_reason, StopReason::Gap);
    }
}

#[test]
fn fista_matches_descent_oracle() {
    let t = toy();
    let alpha = 0.2;
    let oracle = exp_descent_oracle(&t, FidelityKind::L2, alpha);
    let cfg = SolverConfig::new(alpha).with_gap_threshold(1e-12);
    let report = fista_solve(&t.model, &t.data, &t.ctx, &cfg).unwrap();
    assert_eq!(report.stop_reason, StopReason::Gap);
    assert!(report.final_gap <= 1e-12);
    let err = trace_norm(&(&report.solution - &oracle)).unwrap();
    assert!(err < 1e-5, "trace-norm error {err}");
    assert!(eig_hermitian(&report.solution).unwrap().min_eigenvalue() > 0.0);
}

#[test]
fn cp_kl_matches_descent_oracle() {
    let t = toy();
    let alpha = 0.2;
    let oracle = exp_descent_oracle(&t, FidelityKind::Kl, alpha);
    let cfg = SolverConfig::new(alpha).with_gap_threshold(1e-12);
    let report = cp_solve(&t.model, &t.data, &t.ctx, FidelityKind::Kl, &cfg).unwrap();
    assert_eq!(report.stop_reason, StopReason::Gap);
    let err = trace_norm(&(&report.solution - &oracle)).unwrap();
    assert!(err < 1e-5, "trace-norm error {err}");
}

#[test]
fn cp_and_fista_agree_for_l2() {
    let t = toy();
    let cfg = SolverConfig::new(0.1).with_gap_threshold(1e-9);
    let a = fista_solve(&t.model, &t.data, &t.ctx, &cfg).unwrap();
    let b = cp_solve(&t.model, &t.data, &t.ctx, FidelityKind::L2, &cfg).unwrap();
    let err = trace_norm(&(&a.solution - &b.solution)).unwrap();
    assert!(err < 1e-5, "trace-norm difference {err}");
}

#[test]
fn gap_bounds_distance_to_reference_at_every_check() {
    let t = toy();
    let alpha = 0.1;
    for (kind, method) in [
        (FidelityKind::L2, Method::Fista),
        (FidelityKind::Kl, Method::ChambollePock),
    ] {
        let reference = solve(
            method,
            &t.model,
            &t.data,
            &t.ctx,
            kind,
            &SolverConfig::new(alpha).with_gap_threshold(1e-11),
        )
        .unwrap()
        .solution;
        let ref_ctx = QreContext::new(reference.clone()).unwrap();
        let mut cfg = SolverConfig::new(alpha).with_gap_threshold(1e-8);
        cfg.gap_check_stride = 5;
        let mut checks = 0;
        let mut observer = |c: &qkl_tomo::solvers::GapCheck<'_>| {
            checks += 1;
            assert!(c.gap >= -1e-12, "negative gap {}", c.gap);
            let dist = qkl_value(&c.rho.shift(t.ctx.floor_eps()), &ref_ctx).unwrap();
            assert!(dist <= c.gap + 1e-9, "QKL to reference {dist} exceeds gap {}", c.gap);
        };
        let report = match method {
            Method::Fista => fista_solve_observed(&t.model, &t.data, &t.ctx, &cfg, &mut observer).unwrap(),
            Method::ChambollePock => cp_solve_observed(&t.model, &t.data, &t.ctx, kind, &cfg, &mut observer).unwrap(),
        };
        assert!(checks >= 2);
        let hist = &report.objective_history;
        assert!(hist.last().unwrap() <= hist.first().unwrap());
        assert!(report.final_gap <= 1e-8);
        let at_ref = duality_gap(&reference, &t.model, &t.data, &t.ctx, kind, alpha).unwrap();
        assert!(at_ref <= 1e-10, "{kind}: gap at reference {at_ref}");
    }
}

#[test]
fn objective_fidelity_term_scales_with_alpha() {
    let t = toy();
    let rho = &t.truth.scale(0.9) + &t.ctx.prior().scale(0.1);
    let q = qkl_value(&rho, &t.ctx).unwrap();
    let a = objective(&rho, &t.model, &t.data, &t.ctx, FidelityKind::L2, 0.3).unwrap() - q;
    let b = objective(&rho, &t.model, &t.data, &t.ctx, FidelityKind::L2, 0.6).unwrap() - q;
    assert!((a - 2.0 * b).abs() < 1e-13 * a.abs().max(1.0));
}

#[test]
fn iteration_cap_is_reported() {
    let t = toy();
    let cfg = SolverConfig::new(0.01).with_gap_threshold(1e-14).with_max_iters(7);
    let report = fista_solve(&t.model, &t.data, &t.ctx, &cfg).unwrap();
    assert_eq!(report.iterations, 7);
    assert_eq!(report.stop_reason, StopReason::MaxIters);
    assert_eq!(report.gap_history.last().unwrap().0, 7);
    let zero = cp_solve(
        &t.model,
        &t.data,
        &t.ctx,
        FidelityKind::Kl,
        &cfg.clone().with_max_iters(0),
    )
    .unwrap();
    assert_eq!(zero.iterations, 0);
    assert_eq!(&zero.solution, t.ctx.prior());
}

#[test]
fn invalid_configurations_are_rejected() {
    let t = toy();
    let bad_alpha = SolverConfig::new(0.0);
    assert!(fista_solve(&t.model, &t.data, &t.ctx, &bad_alpha).is_err());
    let mut big_step = SolverConfig::new(1.0);
    big_step.norm_bound = Some(2.0);
    big_step.tau0 = Some(0.6);
    assert!(matches!(
        fista_solve(&t.model, &t.data, &t.ctx, &big_step),
        Err(TomoError::InvalidParameter(_))
    ));
    big_step.nu0 = Some(1.0);
    assert!(cp_solve(&t.model, &t.data, &t.ctx, FidelityKind::L2, &big_step).is_err());
    assert!(solve(
        Method::Fista,
        &t.model,
        &t.data,
        &t.ctx,
        FidelityKind::Kl,
        &SolverConfig::new(1.0)
    )
    .is_err());
    let wrong_shape = DataGrid::zeros(2, 2);
    assert!(fista_solve(&t.model, &wrong_shape, &t.ctx, &SolverConfig::new(1.0)).is_err());
    let mut stride = SolverConfig::new(1.0);
    stride.gap_check_stride = 0;
    assert!(cp_solve(&t.model, &t.data, &t.ctx, FidelityKind::Kl, &stride).is_err());
}
