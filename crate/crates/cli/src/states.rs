//! Ground-truth density matrices for the two experiments.

use num_complex::Complex64;
use qkl_tomo::special::bessel_j_row;
use qkl_tomo::{HermitianMatrix, TomoError};
use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::error::Result;

/// Smallest fraction of the cat-state norm the truncation may keep.
pub const CAT_MIN_RETAINED: f64 = 0.999;
/// Largest probability the PINEM state may lose outside the index window.
pub const PINEM_MAX_LOSS: f64 = 1e-6;

/// The even cat state `|a> + |-a>` in the first `dim` Fock levels, normalized.
pub fn make_cat_state(a: f64, dim: usize) -> Result<HermitianMatrix> {
    if dim == 0 || !a.is_finite() {
        return Err(TomoError::InvalidParameter(format!("invalid cat state parameters a = {a}, N = {dim}")).into());
    }
    // |<n|a>|^2 = e^{-a^2} a^{2n} / n!, evaluated in log space.
    let a2 = a * a;
    let total = 2.0 * (1.0 + (-2.0 * a2).exp());
    let mut psi = vec![Complex64::new(0.0, 0.0); dim];
    let mut retained = 0.0;
    let mut log_fact = 0.0;
    for (n, slot) in psi.iter_mut().enumerate() {
        if n > 0 {
            log_fact += (n as f64).ln();
        }
        if n % 2 == 1 {
            continue;
        }
        let coeff = if a == 0.0 {
            if n == 0 {
                2.0
            } else {
                0.0
            }
        } else {
            2.0 * (-0.5 * a2 + n as f64 * a.abs().ln() - 0.5 * log_fact).exp()
        };
        retained += coeff * coeff / total;
        *slot = Complex64::new(coeff, 0.0);
    }
    if retained < CAT_MIN_RETAINED {
        return Err(TomoError::InvalidParameter(format!(
            "truncation to {dim} levels keeps only {retained:.6} of the cat state norm; increase dim"
        ))
        .into());
    }
    Ok(normalized_projector(&psi))
}

fn normalized_projector(psi: &[Complex64]) -> HermitianMatrix {
    let norm2: f64 = psi.iter().map(|z| z.norm_sqr()).sum();
    let scaled: Vec<Complex64> = psi.iter().map(|z| z / norm2.sqrt()).collect();
    HermitianMatrix::outer(&scaled)
}

/// A mixture of pump-interaction states `psi_k = e^{i k phi} J_k(2 g_pump)` on the
/// symmetric window `k = -(N-1)/2 ..= (N-1)/2`, with Gaussian phase jitter `phi`.
pub fn make_pinem_state<R: Rng + ?Sized>(
    g_pump: f64,
    dim: usize,
    jitter_sigma: f64,
    jitter_samples: usize,
    rng: &mut R,
) -> Result<HermitianMatrix> {
    if dim.is_multiple_of(2) {
        return Err(TomoError::InvalidParameter(format!("PINEM dimension must be odd, got {dim}")).into());
    }
    if jitter_samples == 0 {
        return Err(TomoError::InvalidParameter("jitter_samples must be at least 1".into()).into());
    }
    if !(g_pump >= 0.0 && g_pump.is_finite()) {
        return Err(TomoError::InvalidParameter(format!("g_pump must be nonnegative, got {g_pump}")).into());
    }
    let normal =
        Normal::new(0.0, jitter_sigma).map_err(|e| TomoError::InvalidParameter(format!("jitter_sigma: {e}")))?;
    let half = (dim as i64 - 1) / 2;
    let x = 2.0 * g_pump;
    let table = bessel_j_row(x, qkl_tomo::special::bessel_half_width_for(x).max(half as usize))?;
    let amplitudes: Vec<f64> = (-half..=half).map(|k| table.get(k)).collect();
    let kept: f64 = amplitudes.iter().map(|v| v * v).sum();
    if 1.0 - kept > PINEM_MAX_LOSS {
        return Err(TomoError::InvalidParameter(format!(
            "window of {dim} levels loses {:.3e} of the pump state; increase dim",
            1.0 - kept
        ))
        .into());
    }

    let mut acc = vec![Complex64::new(0.0, 0.0); dim * dim];
    for _ in 0..jitter_samples {
        let phi: f64 = normal.sample(rng);
        let psi: Vec<Complex64> = (-half..=half)
            .zip(&amplitudes)
            .map(|(k, &amp)| Complex64::from_polar(amp, k as f64 * phi))
            .collect();
        for (m, pm) in psi.iter().enumerate() {
            for (n, pn) in psi.iter().enumerate() {
                acc[m * dim + n] += pm * pn.conj();
            }
        }
    }
    let trace: f64 = (0..dim).map(|i| acc[i * dim + i].re).sum();
    let entries = acc.into_iter().map(|z| z / trace).collect();
    Ok(HermitianMatrix::new(dim, entries)?)
}
