//! Seeded Poisson observations.

use qkl_tomo::fidelity::{fit_value, DataGrid, FidelityKind};
use qkl_tomo::TomoError;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};

use crate::error::Result;

/// Stream reserved for the ground-truth phase jitter.
pub const STATE_STREAM: u64 = 0;

/// The generator for one independent purpose: same `(seed, stream)`, same draws,
/// regardless of what other streams were used.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// The stream used for the data of study row `row`.
pub fn data_stream(row: usize) -> u64 {
    1 + row as u64
}

/// `Poisson(intensity * g_exact) / intensity`, entrywise; negative inputs are clipped to 0.
pub fn poisson_sample<R: Rng + ?Sized>(g_exact: &DataGrid, intensity: f64, rng: &mut R) -> Result<DataGrid> {
    if !(intensity > 0.0 && intensity.is_finite()) {
        return Err(TomoError::InvalidParameter(format!("intensity must be positive, got {intensity}")).into());
    }
    let mut out = DataGrid::zeros(g_exact.n_theta(), g_exact.n_l());
    for (o, &g) in out.as_mut_slice().iter_mut().zip(g_exact.as_slice()) {
        let lambda = intensity * g.max(0.0);
        *o = if lambda > 0.0 {
            let dist =
                Poisson::new(lambda).map_err(|e| TomoError::InvalidParameter(format!("Poisson mean {lambda}: {e}")))?;
            dist.sample(rng) / intensity
        } else {
            0.0
        };
    }
    Ok(out)
}

/// Noisy data and its noise level `delta = S_{g_obs}(g_exact)`.
#[derive(Debug, Clone)]
pub struct Observation {
    pub g_obs: DataGrid,
    pub delta: f64,
}

pub fn poisson_observe<R: Rng + ?Sized>(
    g_exact: &DataGrid,
    intensity: f64,
    kind: FidelityKind,
    rng: &mut R,
) -> Result<Observation> {
    let g_obs = poisson_sample(g_exact, intensity, rng)?;
    let clipped = g_exact.map(|v| v.max(0.0));
    let delta = fit_value(kind, &g_obs, &clipped)?;
    Ok(Observation { g_obs, delta })
}
