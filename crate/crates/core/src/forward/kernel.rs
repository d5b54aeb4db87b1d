use num_complex::Complex64;

use crate::error::{Result, TomoError};
use crate::fidelity::DataGrid;
use crate::hermitian::HermitianMatrix;

/// A measurement map of the form
/// `(T rho)(theta, l) = sum_{m,n} rho_mn e^{i(n-m) theta} K_l[m][n]`
/// with every `K_l` real symmetric.
///
/// Both PINEM and the homodyne operators reduce to this shape once the
/// phase dependence of `U_theta` is pulled out of the kernel, which makes
/// apply and adjoint cost `O(n_out N^2 + n_theta n_out N)`.
#[derive(Debug, Clone)]
pub(crate) struct PhaseKernel {
    dim: usize,
    n_out: usize,
    thetas: Vec<f64>,
    /// `n_out` blocks of `dim * dim` row-major reals.
    kernels: Vec<f64>,
    /// `e^{i d theta_j}` for `d` in `0..dim`, phase-major.
    phases: Vec<Complex64>,
}

impl PhaseKernel {
    pub(crate) fn new(dim: usize, thetas: Vec<f64>, n_out: usize, kernels: Vec<f64>) -> Self {
        assert_eq!(kernels.len(), n_out * dim * dim);
        let phases = thetas
            .iter()
            .flat_map(|&t| (0..dim).map(move |d| Complex64::from_polar(1.0, d as f64 * t)))
            .collect();
        Self {
            dim,
            n_out,
            thetas,
            kernels,
            phases,
        }
    }

    pub(crate) fn dim(&self) -> usize {
        self.dim
    }

    pub(crate) fn thetas(&self) -> &[f64] {
        &self.thetas
    }

    pub(crate) fn shape(&self) -> (usize, usize) {
        (self.thetas.len(), self.n_out)
    }

    pub(crate) fn block(&self, l: usize) -> &[f64] {
        let n2 = self.dim * self.dim;
        &self.kernels[l * n2..(l + 1) * n2]
    }

    pub(crate) fn apply(&self, rho: &HermitianMatrix) -> Result<DataGrid> {
        let n = self.dim;
        if rho.dim() != n {
            return Err(TomoError::DimensionMismatch {
                expected: n,
                found: rho.dim(),
            });
        }
        let r = rho.as_slice();
        let (n_theta, n_out) = self.shape();
        let mut out = DataGrid::zeros(n_theta, n_out);
        let mut diag_sums = vec![Complex64::new(0.0, 0.0); n];
        for l in 0..n_out {
            let k = self.block(l);
            // A_d = sum_m K[m][m+d] rho[m][m+d]
            for (d, a) in diag_sums.iter_mut().enumerate() {
                let mut acc = Complex64::new(0.0, 0.0);
                for m in 0..n - d {
                    acc += r[m * n + m + d] * k[m * n + m + d];
                }
                *a = acc;
            }
            for t in 0..n_theta {
                let ph = &self.phases[t * n..(t + 1) * n];
                let mut v = 0.0;
                for d in 1..n {
                    let z = ph[d] * diag_sums[d];
                    v += z.re;
                }
                out.set(t, l, diag_sums[0].re + 2.0 * v);
            }
        }
        Ok(out)
    }

    pub(crate) fn adjoint(&self, g: &DataGrid) -> Result<HermitianMatrix> {
        let n = self.dim;
        let (n_theta, n_out) = self.shape();
        if g.shape() != (n_theta, n_out) {
            return Err(TomoError::ShapeMismatch {
                expected: (n_theta, n_out),
                found: g.shape(),
            });
        }
        let mut x = vec![Complex64::new(0.0, 0.0); n * n];
        let mut gd = vec![Complex64::new(0.0, 0.0); n];
        for l in 0..n_out {
            // G_d(l) = sum_theta g(theta, l) e^{i d theta}
            gd.iter_mut().for_each(|z| *z = Complex64::new(0.0, 0.0));
            for t in 0..n_theta {
                let w = g.get(t, l);
                if w == 0.0 {
                    continue;
                }
                let ph = &self.phases[t * n..(t + 1) * n];
                for (acc, p) in gd.iter_mut().zip(ph) {
                    *acc += p * w;
                }
            }
            let k = self.block(l);
            for d in 0..n {
                let gdl = gd[d];
                for m in 0..n - d {
                    x[(m + d) * n + m] += gdl * k[m * n + m + d];
                }
            }
        }
        for i in 0..n {
            x[i * n + i].im = 0.0;
            for j in (i + 1)..n {
                x[i * n + j] = x[j * n + i].conj();
            }
        }
        Ok(HermitianMatrix::symmetrized(n, x))
    }
}
