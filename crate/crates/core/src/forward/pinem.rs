use crate::error::{Result, TomoError};
use crate::fidelity::DataGrid;
use crate::hermitian::HermitianMatrix;
use crate::special::bessel_j_row;

use super::kernel::PhaseKernel;
use super::{equally_spaced, ForwardModel};

/// Largest tolerated `|sum_k J_{k-l}(2g)^2 - 1|` over the output window.
pub const UNITARITY_TOLERANCE: f64 = 1e-8;

/// PINEM measurement geometry.
///
/// The state lives on energy indices `l = -(N-1)/2 ..= (N-1)/2`; the coupling
/// `U_theta e_l = sum_k e^{i(k-l) theta} J_{k-l}(2g) e_k` spreads it over an
/// output window `k = -(N-1)/2 - K ..= (N-1)/2 + K`, with `K` large enough that
/// the lost probability is below [`UNITARITY_TOLERANCE`].
#[derive(Debug, Clone)]
pub struct PinemModel {
    coupling: f64,
    bessel_halfwidth: usize,
    kernel: PhaseKernel,
}

/// The default output margin `ceil(2g) + 20`.
pub fn pinem_halfwidth_for(g: f64) -> usize {
    (2.0 * g).ceil() as usize + 20
}

/// Builds the PINEM model with `n_theta` phases equally spaced over `[-pi, pi)`.
pub fn pinem_build(dim: usize, g: f64, n_theta: usize) -> Result<PinemModel> {
    if !g.is_finite() || g < 0.0 {
        return Err(TomoError::InvalidParameter(format!(
            "coupling must be finite and nonnegative, got {g}"
        )));
    }
    pinem_build_with_halfwidth(dim, g, n_theta, pinem_halfwidth_for(g))
}

/// As [`pinem_build`] with an explicit output margin `K`.
pub fn pinem_build_with_halfwidth(dim: usize, g: f64, n_theta: usize, halfwidth: usize) -> Result<PinemModel> {
    if dim.is_multiple_of(2) {
        return Err(TomoError::InvalidParameter(format!(
            "PINEM dimension must be odd, got {dim}"
        )));
    }
    if n_theta == 0 {
        return Err(TomoError::InvalidParameter("at least one phase is required".into()));
    }
    if !g.is_finite() || g < 0.0 {
        return Err(TomoError::InvalidParameter(format!(
            "coupling must be finite and nonnegative, got {g}"
        )));
    }
    let n_out = dim + 2 * halfwidth;
    // Orders k - K - m range over [-(K + N - 1), K + N - 1].
    let table = bessel_j_row(
        2.0 * g,
        (halfwidth + dim).max(crate::special::bessel_half_width_for(2.0 * g)),
    )?;
    let bessel = |k: usize, m: usize| table.get(k as i64 - halfwidth as i64 - m as i64);

    let mut defect = 0.0f64;
    for m in 0..dim {
        let mass: f64 = (0..n_out).map(|k| bessel(k, m).powi(2)).sum();
        defect = defect.max((mass - 1.0).abs());
    }
    if defect > UNITARITY_TOLERANCE {
        return Err(TomoError::UnitarityDefect { defect });
    }

    let mut kernels = Vec::with_capacity(n_out * dim * dim);
    let mut column = vec![0.0; dim];
    for k in 0..n_out {
        for (m, c) in column.iter_mut().enumerate() {
            *c = bessel(k, m);
        }
        for m in 0..dim {
            for n in 0..dim {
                kernels.push(column[m] * column[n]);
            }
        }
    }
    let thetas = equally_spaced(-std::f64::consts::PI, std::f64::consts::PI, n_theta);
    Ok(PinemModel {
        coupling: g,
        bessel_halfwidth: halfwidth,
        kernel: PhaseKernel::new(dim, thetas, n_out, kernels),
    })
}

impl PinemModel {
    pub fn coupling(&self) -> f64 {
        self.coupling
    }

    /// The output margin `K`.
    pub fn bessel_halfwidth(&self) -> usize {
        self.bessel_halfwidth
    }

    pub fn thetas(&self) -> &[f64] {
        self.kernel.thetas()
    }

    /// Physical energy index of state row `m`.
    pub fn input_index(&self, m: usize) -> i64 {
        m as i64 - (self.kernel.dim() as i64 - 1) / 2
    }

    /// Physical energy index of output column `k`.
    pub fn output_index(&self, k: usize) -> i64 {
        k as i64 - (self.kernel.dim() as i64 - 1) / 2 - self.bessel_halfwidth as i64
    }
}

impl ForwardModel for PinemModel {
    fn dim(&self) -> usize {
        self.kernel.dim()
    }

    fn data_shape(&self) -> (usize, usize) {
        self.kernel.shape()
    }

    fn apply(&self, rho: &HermitianMatrix) -> Result<DataGrid> {
        self.kernel.apply(rho)
    }

    fn adjoint(&self, g: &DataGrid) -> Result<HermitianMatrix> {
        self.kernel.adjoint(g)
    }
}

pub fn pinem_apply(model: &PinemModel, rho: &HermitianMatrix) -> Result<DataGrid> {
    model.apply(rho)
}

pub fn pinem_adjoint(model: &PinemModel, g: &DataGrid) -> Result<HermitianMatrix> {
    model.adjoint(g)
}
