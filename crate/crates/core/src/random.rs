//! Seeded random matrices for property checks and power iteration starts.

use num_complex::Complex64;
use rand::Rng;

use crate::hermitian::{matmul, HermitianMatrix};

/// Entries with independent standard-ish real and imaginary parts in [-1, 1].
pub fn random_hermitian<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> HermitianMatrix {
    let data = (0..dim * dim)
        .map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
        .collect();
    HermitianMatrix::symmetrized(dim, data)
}

/// `G G* + floor I` with a random complex `G`; positive definite when `floor > 0`.
pub fn random_psd<R: Rng + ?Sized>(rng: &mut R, dim: usize, floor: f64) -> HermitianMatrix {
    let g: Vec<Complex64> = (0..dim * dim)
        .map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
        .collect();
    let mut gh = vec![Complex64::new(0.0, 0.0); dim * dim];
    for i in 0..dim {
        for j in 0..dim {
            gh[j * dim + i] = g[i * dim + j].conj();
        }
    }
    HermitianMatrix::symmetrized(dim, matmul(dim, &g, &gh)).shift(floor)
}

/// A random density matrix (PSD, unit trace) of the given rank.
pub fn random_density<R: Rng + ?Sized>(rng: &mut R, dim: usize, rank: usize) -> HermitianMatrix {
    let mut acc = HermitianMatrix::zeros(dim);
    for _ in 0..rank.max(1) {
        let psi: Vec<Complex64> = (0..dim)
            .map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
            .collect();
        acc = &acc + &HermitianMatrix::outer(&psi);
    }
    let tr = acc.trace();
    acc.scale(1.0 / tr)
}
