//! Discrete forward operators `rho -> (theta, l) -> <e_l, U_theta rho U_theta* e_l>`
//! and their adjoints.

mod homodyne;
mod kernel;
mod pinem;
pub mod quadrature;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Result, TomoError};
use crate::fidelity::DataGrid;
use crate::hermitian::{trace_inner, HermitianMatrix};
use crate::random::random_hermitian;

pub use homodyne::{
    homodyne_adjoint, homodyne_apply_basis, homodyne_apply_semi, homodyne_build, HomodyneModel, HomodyneOperator,
    HomodyneVariant, DEFAULT_QUAD_ORDER, QUADRATURE_TOLERANCE,
};
pub use pinem::{
    pinem_adjoint, pinem_apply, pinem_build, pinem_build_with_halfwidth, pinem_halfwidth_for, PinemModel,
    UNITARITY_TOLERANCE,
};

/// A linear map from `Herm(N)` to a real data grid together with its adjoint
/// with respect to `tr(AB)` and the Euclidean grid inner product.
pub trait ForwardModel {
    fn dim(&self) -> usize;

    /// `(n_theta, n_l)` of the data grid.
    fn data_shape(&self) -> (usize, usize);

    fn apply(&self, rho: &HermitianMatrix) -> Result<DataGrid>;

    fn adjoint(&self, g: &DataGrid) -> Result<HermitianMatrix>;
}

impl<M: ForwardModel + ?Sized> ForwardModel for &M {
    fn dim(&self) -> usize {
        (**self).dim()
    }

    fn data_shape(&self) -> (usize, usize) {
        (**self).data_shape()
    }

    fn apply(&self, rho: &HermitianMatrix) -> Result<DataGrid> {
        (**self).apply(rho)
    }

    fn adjoint(&self, g: &DataGrid) -> Result<HermitianMatrix> {
        (**self).adjoint(g)
    }
}

pub(crate) fn equally_spaced(start: f64, end: f64, n: usize) -> Vec<f64> {
    let step = (end - start) / n as f64;
    (0..n).map(|j| start + j as f64 * step).collect()
}

const NORM_ESTIMATE_SEED: u64 = 0x6e6f_726d;
/// Safety factor applied to the power-iteration estimate of `||T*T||`.
pub const NORM_INFLATION: f64 = 1.05;

/// Upper estimate of `||T*T||` by power iteration from a seeded random start.
pub fn norm_estimate<M: ForwardModel + ?Sized>(model: &M, iters: usize) -> Result<f64> {
    if iters < 20 {
        return Err(TomoError::InvalidParameter(format!(
            "norm estimation needs at least 20 iterations, got {iters}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(NORM_ESTIMATE_SEED);
    let mut x = random_hermitian(&mut rng, model.dim());
    let mut rayleigh = 0.0;
    for _ in 0..iters {
        let norm = x.frobenius_norm();
        if norm == 0.0 {
            return Ok(0.0);
        }
        x = x.scale(norm.recip());
        let y = model.adjoint(&model.apply(&x)?)?;
        rayleigh = trace_inner(&x, &y)?;
        x = y;
    }
    Ok(rayleigh * NORM_INFLATION)
}
