//! Complex Hermitian matrices viewed as a real inner-product space.
//!
//! `Herm(N)` carries the real inner product `<A, B> = tr(AB)`. Every matrix
//! built through the public constructors is exactly self-adjoint: the input
//! is checked against a tolerance and then replaced by `(A + A*) / 2`.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64;

use crate::error::{Result, TomoError};

/// Largest tolerated asymmetry `|A_ij - conj(A_ji)|` relative to `max(1, max |A_ij|)`.
pub const HERMITIAN_TOLERANCE: f64 = 1e-12;

/// An `N x N` complex self-adjoint matrix stored row-major.
#[derive(Clone, PartialEq)]
pub struct HermitianMatrix {
    dim: usize,
    data: Vec<Complex64>,
}

impl HermitianMatrix {
    /// Checks self-adjointness and symmetrizes.
    pub fn new(dim: usize, entries: Vec<Complex64>) -> Result<Self> {
        if entries.len() != dim * dim {
            return Err(TomoError::DimensionMismatch {
                expected: dim * dim,
                found: entries.len(),
            });
        }
        if entries.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(TomoError::NonFiniteMatrix);
        }
        let scale = entries.iter().map(|z| z.norm()).fold(1.0, f64::max);
        let mut asymmetry = 0.0f64;
        for i in 0..dim {
            for j in i..dim {
                let d = (entries[i * dim + j] - entries[j * dim + i].conj()).norm();
                asymmetry = asymmetry.max(d);
            }
        }
        if asymmetry > HERMITIAN_TOLERANCE * scale {
            return Err(TomoError::NotHermitian { asymmetry });
        }
        Ok(Self::symmetrized(dim, entries))
    }

    /// Builds `(A + A*) / 2` without any tolerance check.
    ///
    /// Used internally where the input is Hermitian up to rounding by construction.
    pub(crate) fn symmetrized(dim: usize, mut data: Vec<Complex64>) -> Self {
        for i in 0..dim {
            data[i * dim + i].im = 0.0;
            for j in (i + 1)..dim {
                let upper = data[i * dim + j];
                let lower = data[j * dim + i];
                let avg = (upper + lower.conj()) * 0.5;
                data[i * dim + j] = avg;
                data[j * dim + i] = avg.conj();
            }
        }
        Self { dim, data }
    }

    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Result<Self> {
        let mut entries = Vec::with_capacity(dim * dim);
        for i in 0..dim {
            for j in 0..dim {
                entries.push(f(i, j));
            }
        }
        Self::new(dim, entries)
    }

    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            data: vec![Complex64::new(0.0, 0.0); dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self::from_diagonal(&vec![1.0; dim])
    }

    pub fn from_diagonal(diag: &[f64]) -> Self {
        let dim = diag.len();
        let mut m = Self::zeros(dim);
        for (i, &d) in diag.iter().enumerate() {
            m.data[i * dim + i] = Complex64::new(d, 0.0);
        }
        m
    }

    /// The rank-one projector `|psi><psi|` (not normalized).
    pub fn outer(psi: &[Complex64]) -> Self {
        let dim = psi.len();
        let mut data = Vec::with_capacity(dim * dim);
        for a in psi {
            for b in psi {
                data.push(a * b.conj());
            }
        }
        Self::symmetrized(dim, data)
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.data[i * self.dim + j]
    }

    /// Row-major entries.
    #[inline]
    pub fn as_slice(&self) -> &[Complex64] {
        &self.data
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.dim).map(|i| self.data[i * self.dim + i].re).collect()
    }

    pub fn trace(&self) -> f64 {
        self.diagonal().iter().sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn scale(&self, s: f64) -> Self {
        Self {
            dim: self.dim,
            data: self.data.iter().map(|z| z * s).collect(),
        }
    }

    /// `self + s * other`.
    pub fn add_scaled(&self, s: f64, other: &Self) -> Result<Self> {
        check_dims(self, other)?;
        Ok(Self {
            dim: self.dim,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a + b * s).collect(),
        })
    }

    /// `self + c * I`.
    pub fn shift(&self, c: f64) -> Self {
        let mut out = self.clone();
        for i in 0..self.dim {
            out.data[i * self.dim + i].re += c;
        }
        out
    }

    /// Plain complex matrix product. The result is generally not Hermitian,
    /// so it is returned as raw row-major entries.
    pub fn matmul(&self, other: &Self) -> Result<Vec<Complex64>> {
        check_dims(self, other)?;
        Ok(matmul(self.dim, &self.data, &other.data))
    }
}

pub(crate) fn check_dims(a: &HermitianMatrix, b: &HermitianMatrix) -> Result<()> {
    if a.dim != b.dim {
        return Err(TomoError::DimensionMismatch {
            expected: a.dim,
            found: b.dim,
        });
    }
    Ok(())
}

pub(crate) fn matmul(n: usize, a: &[Complex64], b: &[Complex64]) -> Vec<Complex64> {
    let mut out = vec![Complex64::new(0.0, 0.0); n * n];
    for i in 0..n {
        for k in 0..n {
            let aik = a[i * n + k];
            if aik.re == 0.0 && aik.im == 0.0 {
                continue;
            }
            let row = &b[k * n..(k + 1) * n];
            for (o, bkj) in out[i * n..(i + 1) * n].iter_mut().zip(row) {
                *o += aik * bkj;
            }
        }
    }
    out
}

/// The real inner product `tr(AB)` on `Herm(N)`.
pub fn trace_inner(a: &HermitianMatrix, b: &HermitianMatrix) -> Result<f64> {
    check_dims(a, b)?;
    // tr(AB) = sum_ij A_ij B_ji = sum_ij A_ij conj(B_ij); the imaginary parts cancel pairwise.
    Ok(a.data.iter().zip(&b.data).map(|(x, y)| x.re * y.re + x.im * y.im).sum())
}

impl fmt::Debug for HermitianMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "HermitianMatrix({}x{}) [", self.dim, self.dim)?;
        for i in 0..self.dim {
            write!(f, "  ")?;
            for j in 0..self.dim {
                let z = self.get(i, j);
                write!(f, "{:+.4e}{:+.4e}i ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

impl Add for &HermitianMatrix {
    type Output = HermitianMatrix;

    fn add(self, rhs: Self) -> HermitianMatrix {
        self.add_scaled(1.0, rhs)
            .expect("dimension mismatch in matrix addition")
    }
}

impl Sub for &HermitianMatrix {
    type Output = HermitianMatrix;

    fn sub(self, rhs: Self) -> HermitianMatrix {
        self.add_scaled(-1.0, rhs)
            .expect("dimension mismatch in matrix subtraction")
    }
}

impl Mul<f64> for &HermitianMatrix {
    type Output = HermitianMatrix;

    fn mul(self, rhs: f64) -> HermitianMatrix {
        self.scale(rhs)
    }
}

impl Neg for &HermitianMatrix {
    type Output = HermitianMatrix;

    fn neg(self) -> HermitianMatrix {
        self.scale(-1.0)
    }
}
