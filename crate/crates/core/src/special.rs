//! Scalar special functions: Bessel functions of the first kind, normalized
//! Hermite functions and the inverse of `g(t) = ln t + t`.

use crate::error::{Result, TomoError};

/// `J_n(x)` for integer orders `n` in `[-K, K]` at a fixed argument.
#[derive(Debug, Clone)]
pub struct BesselTable {
    half_width: usize,
    x: f64,
    /// `values[n + K] = J_n(x)`.
    values: Vec<f64>,
}

impl BesselTable {
    pub fn half_width(&self) -> usize {
        self.half_width
    }

    pub fn argument(&self) -> f64 {
        self.x
    }

    /// `J_n(x)`, zero outside the tabulated window.
    pub fn get(&self, n: i64) -> f64 {
        let k = self.half_width as i64;
        if n < -k || n > k {
            0.0
        } else {
            self.values[(n + k) as usize]
        }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn sum_of_squares(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum()
    }
}

/// Tabulates `J_n(x)` for `n` in `[-half_width, half_width]` by Miller's
/// backward recurrence, normalized with `J_0 + 2 sum_k J_2k = 1`.
pub fn bessel_j_row(x: f64, half_width: usize) -> Result<BesselTable> {
    if !x.is_finite() || x < 0.0 {
        return Err(TomoError::InvalidParameter(format!(
            "Bessel argument must be finite and nonnegative, got {x}"
        )));
    }
    if half_width == 0 {
        return Err(TomoError::InvalidParameter(
            "Bessel half-width must be at least 1".into(),
        ));
    }
    let k = half_width;
    let mut positive = vec![0.0; k + 1];
    if x == 0.0 {
        positive[0] = 1.0;
    } else {
        let start = k + (1.5 * x).ceil() as usize + 20;
        // Backward recurrence J_{n-1} = (2n/x) J_n - J_{n+1} from an arbitrary seed.
        let mut next = 0.0f64; // J_{n+1}
        let mut cur = 1e-300f64; // J_n
        let mut even_sum = 0.0f64;
        for n in (1..=start).rev() {
            let prev = (2.0 * n as f64 / x) * cur - next;
            next = cur;
            cur = prev;
            // cur now holds J_{n-1}
            let order = n - 1;
            if order <= k {
                positive[order] = cur;
            }
            if order > 0 && order % 2 == 0 {
                even_sum += cur;
            }
            if cur.abs() > 1e250 {
                let scale = 1e-250;
                cur *= scale;
                next *= scale;
                even_sum *= scale;
                for v in positive.iter_mut() {
                    *v *= scale;
                }
            }
        }
        let norm = cur + 2.0 * even_sum;
        for v in positive.iter_mut() {
            *v /= norm;
        }
    }
    let mut values = vec![0.0; 2 * k + 1];
    for n in 0..=k {
        values[k + n] = positive[n];
        values[k - n] = if n % 2 == 0 { positive[n] } else { -positive[n] };
    }
    let table = BesselTable {
        half_width: k,
        x,
        values,
    };
    let sum = table.sum_of_squares();
    if sum < 1.0 - 1e-10 {
        return Err(TomoError::BesselTruncation { x, half_width: k, sum });
    }
    Ok(table)
}

/// Half-width such that `|J_n(x)|` is negligible (far below 1e-16) beyond it.
pub fn bessel_half_width_for(x: f64) -> usize {
    x.ceil() as usize + 20
}

/// The L2-normalized Hermite function
/// `u_m(x) = (sqrt(pi) m! 2^m)^{-1/2} H_m(x) exp(-x^2 / 2)`.
pub fn hermite_fn(m: usize, x: f64) -> f64 {
    let mut row = vec![0.0; m + 1];
    hermite_row(x, &mut row);
    row[m]
}

/// Fills `out[m] = u_m(x)` for `m < out.len()` by the normalized three-term recurrence
/// `u_{m+1} = x sqrt(2/(m+1)) u_m - sqrt(m/(m+1)) u_{m-1}`.
pub fn hermite_row(x: f64, out: &mut [f64]) {
    if out.is_empty() {
        return;
    }
    let u0 = std::f64::consts::PI.powf(-0.25) * (-0.5 * x * x).exp();
    out[0] = u0;
    if out.len() == 1 {
        return;
    }
    out[1] = std::f64::consts::SQRT_2 * x * u0;
    for m in 1..out.len() - 1 {
        let mf = m as f64;
        out[m + 1] = x * (2.0 / (mf + 1.0)).sqrt() * out[m] - (mf / (mf + 1.0)).sqrt() * out[m - 1];
    }
}

const G_INVERSE_MAX_ITERS: usize = 100;

/// Solves `ln s + s = t` for `s > 0`; equivalently `W(e^t)`.
///
/// Newton's method on `f(s) = ln s + s - t`, falling back to bisection if an
/// iterate leaves `(0, inf)`. For `t` so negative that `e^t` underflows the
/// smallest normal double is returned.
pub fn g_inverse(t: f64) -> Result<f64> {
    if !t.is_finite() {
        return Err(TomoError::NonFiniteInput(t));
    }
    if t < -708.0 {
        // s = e^{t - s} with s < 1e-300, so s = e^t to full precision (or underflow).
        return Ok(t.exp().max(f64::MIN_POSITIVE));
    }
    let tol = 1e-12 * t.abs().max(1.0);
    let mut s = if t <= 0.0 { t.exp() } else { t - t.max(1.0).ln() + 0.5 };
    for _ in 0..G_INVERSE_MAX_ITERS {
        let f = s.ln() + s - t;
        let step = f * s / (1.0 + s);
        let next = s - step;
        if !(next > 0.0) || !next.is_finite() {
            return Ok(g_inverse_bisect(t));
        }
        if (next - s).abs() <= 4.0 * f64::EPSILON * next {
            s = next;
            break;
        }
        s = next;
    }
    if (s.ln() + s - t).abs() > tol {
        return Ok(g_inverse_bisect(t));
    }
    Ok(s)
}

fn g_inverse_bisect(t: f64) -> f64 {
    // Bisect in log space: h(u) = u + e^u - t is increasing in u = ln s.
    let (mut lo, mut hi) = (-700.0f64, 700.0f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid + mid.exp() < t {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    (0.5 * (lo + hi)).exp()
}

/// `g(s) = ln s + s`.
pub fn g_forward(s: f64) -> f64 {
    s.ln() + s
}
