use std::fmt;
use std::str::FromStr;

use crate::error::{Result, TomoError};
use crate::fidelity::DataGrid;
use crate::hermitian::HermitianMatrix;
use crate::special::hermite_row;

use super::kernel::PhaseKernel;
use super::quadrature::gauss_legendre_on;
use super::{equally_spaced, ForwardModel};

/// Default Gauss-Legendre nodes per bin.
pub const DEFAULT_QUAD_ORDER: usize = 40;
/// Largest tolerated change of any overlap entry when the quadrature order doubles.
pub const QUADRATURE_TOLERANCE: f64 = 1e-10;

/// Which discretization of the homodyne operator to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum HomodyneVariant {
    /// Bin probabilities `int_bin <x|U rho U*|x> dx`.
    Semi,
    /// Pairings `<v_l, U rho U* v_l>` with the normalized bin indicators
    /// `v_l = h^{-1/2} 1_bin`; these are already on the scale of bin masses.
    Basis,
}

impl HomodyneVariant {
    pub fn name(self) -> &'static str {
        match self {
            HomodyneVariant::Semi => "semi",
            HomodyneVariant::Basis => "basis",
        }
    }
}

impl FromStr for HomodyneVariant {
    type Err = TomoError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "semi" => Ok(HomodyneVariant::Semi),
            "basis" => Ok(HomodyneVariant::Basis),
            other => Err(TomoError::InvalidParameter(format!(
                "unknown operator variant '{other}' (expected semi or basis)"
            ))),
        }
    }
}

impl fmt::Display for HomodyneVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Homodyne geometry: phases on `[0, pi)` and equal bins on `[x_min, x_max]`.
#[derive(Debug, Clone)]
pub struct HomodyneModel {
    edges: Vec<f64>,
    /// `int_bin u_m dx`, bin-major.
    bin_integrals: Vec<f64>,
    semi: PhaseKernel,
    basis: PhaseKernel,
}

struct Overlaps {
    products: Vec<f64>,
    integrals: Vec<f64>,
}

fn bin_overlaps(dim: usize, a: f64, b: f64, order: usize) -> Overlaps {
    let (xs, ws) = gauss_legendre_on(order, a, b);
    let mut products = vec![0.0; dim * dim];
    let mut integrals = vec![0.0; dim];
    let mut u = vec![0.0; dim];
    for (&x, &w) in xs.iter().zip(&ws) {
        hermite_row(x, &mut u);
        for m in 0..dim {
            let wu = w * u[m];
            integrals[m] += wu;
            for n in m..dim {
                products[m * dim + n] += wu * u[n];
            }
        }
    }
    for m in 0..dim {
        for n in 0..m {
            products[m * dim + n] = products[n * dim + m];
        }
    }
    Overlaps { products, integrals }
}

pub fn homodyne_build(
    dim: usize,
    n_theta: usize,
    x_min: f64,
    x_max: f64,
    n_bins: usize,
    quad_order: usize,
) -> Result<HomodyneModel> {
    if dim == 0 {
        return Err(TomoError::InvalidParameter("dimension must be positive".into()));
    }
    if n_theta == 0 {
        return Err(TomoError::InvalidParameter("at least one phase is required".into()));
    }
    if !(x_min.is_finite() && x_max.is_finite() && x_min < x_max) {
        return Err(TomoError::InvalidParameter(format!(
            "invalid bin range [{x_min}, {x_max}]"
        )));
    }
    if n_bins == 0 {
        return Err(TomoError::InvalidParameter("at least one bin is required".into()));
    }
    if quad_order < 8 {
        return Err(TomoError::InvalidParameter(format!(
            "quadrature order must be at least 8, got {quad_order}"
        )));
    }
    let h = (x_max - x_min) / n_bins as f64;
    let edges: Vec<f64> = (0..=n_bins).map(|l| x_min + l as f64 * h).collect();

    let mut semi_kernels = Vec::with_capacity(n_bins * dim * dim);
    let mut basis_kernels = Vec::with_capacity(n_bins * dim * dim);
    let mut bin_integrals = Vec::with_capacity(n_bins * dim);
    let mut worst = 0.0f64;
    for l in 0..n_bins {
        let coarse = bin_overlaps(dim, edges[l], edges[l + 1], quad_order);
        let fine = bin_overlaps(dim, edges[l], edges[l + 1], 2 * quad_order);
        let change = coarse
            .products
            .iter()
            .zip(&fine.products)
            .chain(coarse.integrals.iter().zip(&fine.integrals))
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        worst = worst.max(change);
        semi_kernels.extend_from_slice(&coarse.products);
        // <v_l, u_m><u_n, v_l> = c_m c_n with c = h^{-1/2} int_bin u.
        for m in 0..dim {
            for n in 0..dim {
                basis_kernels.push(coarse.integrals[m] * coarse.integrals[n] / h);
            }
        }
        bin_integrals.extend_from_slice(&coarse.integrals);
    }
    if worst > QUADRATURE_TOLERANCE {
        return Err(TomoError::QuadratureInconsistent {
            order: quad_order,
            change: worst,
        });
    }
    let thetas = equally_spaced(0.0, std::f64::consts::PI, n_theta);
    Ok(HomodyneModel {
        edges,
        bin_integrals,
        semi: PhaseKernel::new(dim, thetas.clone(), n_bins, semi_kernels),
        basis: PhaseKernel::new(dim, thetas, n_bins, basis_kernels),
    })
}

impl HomodyneModel {
    pub fn dim(&self) -> usize {
        self.semi.dim()
    }

    pub fn thetas(&self) -> &[f64] {
        self.semi.thetas()
    }

    pub fn bin_edges(&self) -> &[f64] {
        &self.edges
    }

    pub fn n_bins(&self) -> usize {
        self.edges.len() - 1
    }

    pub fn bin_width(&self) -> f64 {
        self.edges[1] - self.edges[0]
    }

    /// `B^(l)_{mn} = int_{bin l} u_m u_n dx`, row-major.
    pub fn overlap(&self, l: usize) -> &[f64] {
        self.semi.block(l)
    }

    /// `c^(l)_m = h^{-1/2} int_{bin l} u_m dx`.
    pub fn basis_coefficients(&self, l: usize) -> Vec<f64> {
        let dim = self.dim();
        let s = self.bin_width().sqrt().recip();
        self.bin_integrals[l * dim..(l + 1) * dim]
            .iter()
            .map(|v| v * s)
            .collect()
    }

    /// The forward operator for one discretization.
    pub fn operator(&self, variant: HomodyneVariant) -> HomodyneOperator<'_> {
        HomodyneOperator { model: self, variant }
    }

    fn kernel(&self, variant: HomodyneVariant) -> &PhaseKernel {
        match variant {
            HomodyneVariant::Semi => &self.semi,
            HomodyneVariant::Basis => &self.basis,
        }
    }
}

/// A [`HomodyneModel`] paired with a discretization choice.
#[derive(Debug, Clone, Copy)]
pub struct HomodyneOperator<'a> {
    model: &'a HomodyneModel,
    variant: HomodyneVariant,
}

impl HomodyneOperator<'_> {
    pub fn variant(&self) -> HomodyneVariant {
        self.variant
    }
}

impl ForwardModel for HomodyneOperator<'_> {
    fn dim(&self) -> usize {
        self.model.dim()
    }

    fn data_shape(&self) -> (usize, usize) {
        self.model.semi.shape()
    }

    fn apply(&self, rho: &HermitianMatrix) -> Result<DataGrid> {
        self.model.kernel(self.variant).apply(rho)
    }

    fn adjoint(&self, g: &DataGrid) -> Result<HermitianMatrix> {
        self.model.kernel(self.variant).adjoint(g)
    }
}

pub fn homodyne_apply_semi(model: &HomodyneModel, rho: &HermitianMatrix) -> Result<DataGrid> {
    model.semi.apply(rho)
}

pub fn homodyne_apply_basis(model: &HomodyneModel, rho: &HermitianMatrix) -> Result<DataGrid> {
    model.basis.apply(rho)
}

pub fn homodyne_adjoint(model: &HomodyneModel, g: &DataGrid, variant: HomodyneVariant) -> Result<HermitianMatrix> {
    model.kernel(variant).adjoint(g)
}
