//! Quantum relative entropy `QKL(rho, rho0) = tr(rho0 - rho + rho ln rho - rho ln rho0)`
//! as a convex functional of `rho` on `Herm(N)`: value, subgradient,
//! conjugate, proximal maps and the strong-convexity region.

use crate::error::{Result, TomoError};
use crate::hermitian::{check_dims, trace_inner, HermitianMatrix};
use crate::special::g_inverse;
use crate::spectral::{eig_hermitian, ln_checked};

/// Smallest admissible prior eigenvalue.
pub const PRIOR_MIN_EIGENVALUE: f64 = 1e-14;
/// Default eigenvalue offset applied before taking logarithms of solver iterates.
pub const DEFAULT_FLOOR_EPS: f64 = 1e-10;
/// Largest exponent accepted by the matrix exponential.
pub const MAX_EXPONENT: f64 = 700.0;

/// The prior `rho0` with its precomputed logarithm.
#[derive(Debug, Clone)]
pub struct QreContext {
    prior: HermitianMatrix,
    log_prior: HermitianMatrix,
    prior_trace: f64,
    floor_eps: f64,
}

impl QreContext {
    pub fn new(prior: HermitianMatrix) -> Result<Self> {
        Self::with_floor(prior, DEFAULT_FLOOR_EPS)
    }

    /// Fails unless every eigenvalue of `prior` is at least [`PRIOR_MIN_EIGENVALUE`].
    pub fn with_floor(prior: HermitianMatrix, floor_eps: f64) -> Result<Self> {
        if !(floor_eps >= 0.0) {
            return Err(TomoError::InvalidParameter(format!(
                "floor_eps must be >= 0, got {floor_eps}"
            )));
        }
        let es = eig_hermitian(&prior)?;
        let min = es.min_eigenvalue();
        if !(min >= PRIOR_MIN_EIGENVALUE) {
            return Err(TomoError::PriorNotFullRank { min_eigenvalue: min });
        }
        let log_prior = es.map(ln_checked)?;
        let prior_trace = prior.trace();
        Ok(Self {
            prior,
            log_prior,
            prior_trace,
            floor_eps,
        })
    }

    /// The maximally mixed prior `I / N`.
    pub fn maximally_mixed(dim: usize) -> Result<Self> {
        Self::new(HermitianMatrix::identity(dim).scale(1.0 / dim as f64))
    }

    pub fn prior(&self) -> &HermitianMatrix {
        &self.prior
    }

    pub fn log_prior(&self) -> &HermitianMatrix {
        &self.log_prior
    }

    pub fn floor_eps(&self) -> f64 {
        self.floor_eps
    }

    pub fn dim(&self) -> usize {
        self.prior.dim()
    }
}

fn eta(t: f64) -> f64 {
    if t == 0.0 {
        0.0
    } else {
        t * t.ln()
    }
}

/// `QKL(rho, rho0)`, or `+inf` when `rho` has an eigenvalue below
/// `-1e-12 ||rho||_F`. Eigenvalues in that tolerance band are treated as 0.
pub fn qkl_value(rho: &HermitianMatrix, ctx: &QreContext) -> Result<f64> {
    check_dims(rho, &ctx.prior)?;
    let es = eig_hermitian(rho)?;
    let tol_neg = 1e-12 * rho.frobenius_norm();
    if es.min_eigenvalue() < -tol_neg {
        return Ok(f64::INFINITY);
    }
    let entropy: f64 = es.eigenvalues.iter().map(|&l| eta(l.max(0.0))).sum();
    let cross = trace_inner(rho, &ctx.log_prior)?;
    Ok(ctx.prior_trace - rho.trace() + entropy - cross)
}

/// The unique subgradient `ln rho - ln rho0`; the subdifferential is empty
/// when `rho` is singular.
pub fn qkl_subgrad(rho: &HermitianMatrix, ctx: &QreContext) -> Result<HermitianMatrix> {
    check_dims(rho, &ctx.prior)?;
    let es = eig_hermitian(rho)?;
    let min = es.min_eigenvalue();
    if !(min > 0.0) {
        return Err(TomoError::Singular { min_eigenvalue: min });
    }
    let log_rho = es.map(ln_checked)?;
    Ok(&log_rho - &ctx.log_prior)
}

fn exp_checked(x: f64) -> Result<f64> {
    if x > MAX_EXPONENT {
        Err(TomoError::ExpOverflow { exponent: x })
    } else {
        Ok(x.exp())
    }
}

/// The conjugate functional `tr(exp(sigma + ln rho0) - rho0)`.
pub fn qkl_conjugate(sigma: &HermitianMatrix, ctx: &QreContext) -> Result<f64> {
    check_dims(sigma, &ctx.prior)?;
    let shifted = &ctx.log_prior + sigma;
    let es = eig_hermitian(&shifted)?;
    let mut total = 0.0;
    for &l in &es.eigenvalues {
        total += exp_checked(l)?;
    }
    Ok(total - ctx.prior_trace)
}

/// Gradient of the conjugate, `exp(sigma + ln rho0)`.
pub fn qkl_conj_grad(sigma: &HermitianMatrix, ctx: &QreContext) -> Result<HermitianMatrix> {
    check_dims(sigma, &ctx.prior)?;
    let shifted = &ctx.log_prior + sigma;
    let es = eig_hermitian(&shifted)?;
    let values = es
        .eigenvalues
        .iter()
        .map(|&l| exp_checked(l))
        .collect::<Result<Vec<_>>>()?;
    Ok(es.reconstruct_with(&values))
}

/// `prox_{tau QKL}(sigma) = tau g^{-1}(sigma / tau + ln rho0 - ln(tau) I)`.
///
/// The output is positive definite because `g^{-1}` maps into `(0, inf)`.
pub fn qkl_prox(sigma: &HermitianMatrix, tau: f64, ctx: &QreContext) -> Result<HermitianMatrix> {
    check_dims(sigma, &ctx.prior)?;
    check_step(tau)?;
    let arg = ctx.log_prior.add_scaled(1.0 / tau, sigma)?.shift(-tau.ln());
    let es = eig_hermitian(&arg)?;
    let values = es
        .eigenvalues
        .iter()
        .map(|&l| g_inverse(l).map(|s| tau * s))
        .collect::<Result<Vec<_>>>()?;
    Ok(es.reconstruct_with(&values))
}

/// `prox_{tau QKL*}(sigma) = sigma - g^{-1}(sigma + ln rho0 + ln(tau) I)`.
pub fn qkl_conj_prox(sigma: &HermitianMatrix, tau: f64, ctx: &QreContext) -> Result<HermitianMatrix> {
    check_dims(sigma, &ctx.prior)?;
    check_step(tau)?;
    let arg = (&ctx.log_prior + sigma).shift(tau.ln());
    let es = eig_hermitian(&arg)?;
    let values = es
        .eigenvalues
        .iter()
        .map(|&l| g_inverse(l))
        .collect::<Result<Vec<_>>>()?;
    Ok(sigma - &es.reconstruct_with(&values))
}

/// Whether `rho` lies in the set where `QKL(., rho0)` is `mu`-strongly convex,
/// i.e. all eigenvalues are at most `1 / mu`.
pub fn convexity_region_check(rho: &HermitianMatrix, mu: f64) -> Result<bool> {
    if !(mu > 0.0) {
        return Err(TomoError::InvalidParameter(format!("mu must be positive, got {mu}")));
    }
    let es = eig_hermitian(rho)?;
    Ok(es.max_eigenvalue() <= 1.0 / mu + 1e-12)
}

fn check_step(tau: f64) -> Result<()> {
    if tau > 0.0 && tau.is_finite() {
        Ok(())
    } else {
        Err(TomoError::InvalidParameter(format!(
            "step size must be positive, got {tau}"
        )))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random::{random_density, random_hermitian, random_psd};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    const OMEGA: f64 = 0.567_143_290_409_783_8;

    fn identity_ctx(n: usize) -> QreContext {
        QreContext::new(HermitianMatrix::identity(n)).unwrap()
    }

    #[test]
    fn value_vanishes_at_prior() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let prior = random_psd(&mut rng, 5, 0.1);
        let ctx = QreContext::new(prior.clone()).unwrap();
        assert!(qkl_value(&prior, &ctx).unwrap().abs() < 1e-12);
    }

    #[test]
    fn scalar_value() {
        let ctx = identity_ctx(1);
        let v = qkl_value(&HermitianMatrix::from_diagonal(&[0.5]), &ctx).unwrap();
        assert!((v - 0.1534264097200273).abs() < 1e-15);
    }

    #[test]
    fn value_outside_cone_is_infinite() {
        let ctx = identity_ctx(2);
        let v = qkl_value(&HermitianMatrix::from_diagonal(&[-0.1, 0.5]), &ctx).unwrap();
        assert_eq!(v, f64::INFINITY);
        // Rounding-level negatives are clipped to zero.
        let v = qkl_value(&HermitianMatrix::from_diagonal(&[-1e-14, 0.5]), &ctx).unwrap();
        assert!(v.is_finite());
    }

    #[test]
    fn prior_must_be_full_rank() {
        let err = QreContext::new(HermitianMatrix::from_diagonal(&[1.0, 0.0])).unwrap_err();
        assert!(matches!(err, TomoError::PriorNotFullRank { .. }));
    }

    #[test]
    fn log_prior_round_trips() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let prior = random_psd(&mut rng, 6, 0.05);
        let ctx = QreContext::new(prior.clone()).unwrap();
        let back = eig_hermitian(ctx.log_prior()).unwrap().map(|x| Some(x.exp())).unwrap();
        assert!((&back - &prior).frobenius_norm() < 1e-9);
    }

    #[test]
    fn subgradient_cases() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let prior = random_psd(&mut rng, 4, 0.1);
        let ctx = QreContext::new(prior.clone()).unwrap();
        assert!(qkl_subgrad(&prior, &ctx).unwrap().frobenius_norm() < 1e-12);
        let scaled = prior.scale(std::f64::consts::E);
        let g = qkl_subgrad(&scaled, &ctx).unwrap();
        assert!((&g - &HermitianMatrix::identity(4)).frobenius_norm() < 1e-12);
        let singular = HermitianMatrix::from_diagonal(&[0.0, 1.0, 1.0, 1.0]);
        assert!(matches!(qkl_subgrad(&singular, &ctx), Err(TomoError::Singular { .. })));
    }

    #[test]
    fn subgradient_inequality_sweep() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let ctx = QreContext::new(random_psd(&mut rng, 6, 0.1)).unwrap();
        let rho = random_psd(&mut rng, 6, 0.05);
        let g = qkl_subgrad(&rho, &ctx).unwrap();
        let base = qkl_value(&rho, &ctx).unwrap();
        for _ in 0..100 {
            let sigma = random_density(&mut rng, 6, 3).scale(3.0);
            let lhs = qkl_value(&sigma, &ctx).unwrap();
            let rhs = base + trace_inner(&g, &(&sigma - &rho)).unwrap();
            assert!(lhs >= rhs - 1e-10);
        }
    }

    #[test]
    fn conjugate_cases() {
        let ctx = QreContext::new(HermitianMatrix::identity(2).scale(0.5)).unwrap();
        assert!(qkl_conjugate(&HermitianMatrix::zeros(2), &ctx).unwrap().abs() < 1e-15);
        let v = qkl_conjugate(&HermitianMatrix::identity(2), &ctx).unwrap();
        assert!((v - (std::f64::consts::E - 1.0)).abs() < 1e-14);
        let grad = qkl_conj_grad(&HermitianMatrix::identity(2), &ctx).unwrap();
        let expected = HermitianMatrix::identity(2).scale(std::f64::consts::E / 2.0);
        assert!((&grad - &expected).frobenius_norm() < 1e-14);
        let big = HermitianMatrix::identity(2).scale(800.0);
        assert!(matches!(qkl_conjugate(&big, &ctx), Err(TomoError::ExpOverflow { .. })));
    }

    #[test]
    fn conjugate_gradient_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let ctx = QreContext::new(random_psd(&mut rng, 5, 0.1)).unwrap();
        let sigma = random_hermitian(&mut rng, 5);
        let dir = random_hermitian(&mut rng, 5);
        let h = 1e-5;
        let plus = qkl_conjugate(&sigma.add_scaled(h, &dir).unwrap(), &ctx).unwrap();
        let minus = qkl_conjugate(&sigma.add_scaled(-h, &dir).unwrap(), &ctx).unwrap();
        let fd = (plus - minus) / (2.0 * h);
        let grad = qkl_conj_grad(&sigma, &ctx).unwrap();
        let analytic = trace_inner(&grad, &dir).unwrap();
        assert!((fd - analytic).abs() < 1e-6, "{fd} vs {analytic}");
        let zero_grad = qkl_conj_grad(&HermitianMatrix::zeros(5), &ctx).unwrap();
        assert!((&zero_grad - ctx.prior()).frobenius_norm() < 1e-12);
    }

    #[test]
    fn prox_scalar_reductions() {
        let ctx = identity_ctx(3);
        let p = qkl_prox(&HermitianMatrix::zeros(3), 1.0, &ctx).unwrap();
        assert!((&p - &HermitianMatrix::identity(3).scale(OMEGA)).frobenius_norm() < 1e-14);
        let p = qkl_prox(&HermitianMatrix::identity(3), 1.0, &ctx).unwrap();
        assert!((&p - &HermitianMatrix::identity(3)).frobenius_norm() < 1e-14);
        assert!(qkl_prox(&HermitianMatrix::zeros(3), 0.0, &ctx).is_err());
    }

    #[test]
    fn conj_prox_scalar_reductions() {
        let ctx = identity_ctx(2);
        let p = qkl_conj_prox(&HermitianMatrix::zeros(2), 1.0, &ctx).unwrap();
        assert!((&p + &HermitianMatrix::identity(2).scale(OMEGA)).frobenius_norm() < 1e-14);
        // sigma + ln rho0 + ln tau = I with rho0 = I, tau = 2: sigma = (1 - ln 2) I.
        let sigma = HermitianMatrix::identity(2).scale(1.0 - 2f64.ln());
        let p = qkl_conj_prox(&sigma, 2.0, &ctx).unwrap();
        assert!((&p - &sigma.shift(-1.0)).frobenius_norm() < 1e-14);
    }

    #[test]
    fn prox_matches_descent_oracle() {
        // Gradient descent on QKL(X) + ||X - sigma||^2 / (2 tau) from the prior,
        // halving the step whenever it would leave the PD cone.
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let ctx = QreContext::new(random_psd(&mut rng, 8, 0.3).scale(0.2)).unwrap();
        let sigma = random_hermitian(&mut rng, 8).scale(0.5);
        let tau = 0.7;
        let mut x = ctx.prior().clone();
        let step = 0.05;
        for _ in 0..20000 {
            let grad = qkl_subgrad(&x, &ctx)
                .unwrap()
                .add_scaled(1.0 / tau, &(&x - &sigma))
                .unwrap();
            let mut t = step;
            loop {
                let cand = x.add_scaled(-t, &grad).unwrap();
                if eig_hermitian(&cand).unwrap().min_eigenvalue() > 0.0 {
                    x = cand;
                    break;
                }
                t *= 0.5;
            }
        }
        let p = qkl_prox(&sigma, tau, &ctx).unwrap();
        assert!((&p - &x).frobenius_norm() < 1e-6, "{}", (&p - &x).frobenius_norm());
    }

    #[test]
    fn convexity_region() {
        let ctx_rho = HermitianMatrix::from_diagonal(&[0.2, 0.8]);
        assert!(convexity_region_check(&ctx_rho, 0.5).unwrap());
        assert!(!convexity_region_check(&HermitianMatrix::identity(2).scale(3.0), 0.5).unwrap());
        assert!(convexity_region_check(&HermitianMatrix::identity(2).scale(2.0), 0.5).unwrap());
    }
}
