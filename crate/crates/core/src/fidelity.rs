//! Data grids and the two data-fidelity functionals (squared L2 and
//! Kullback-Leibler) with gradients, conjugates and dual proximal maps.

use std::fmt;

use crate::error::{Result, TomoError};

/// Real data indexed by (phase index, outcome index), stored phase-major.
#[derive(Clone, PartialEq)]
pub struct DataGrid {
    n_theta: usize,
    n_l: usize,
    values: Vec<f64>,
}

impl DataGrid {
    pub fn zeros(n_theta: usize, n_l: usize) -> Self {
        Self {
            n_theta,
            n_l,
            values: vec![0.0; n_theta * n_l],
        }
    }

    pub fn filled(n_theta: usize, n_l: usize, value: f64) -> Self {
        Self {
            n_theta,
            n_l,
            values: vec![value; n_theta * n_l],
        }
    }

    pub fn from_vec(n_theta: usize, n_l: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != n_theta * n_l {
            return Err(TomoError::DimensionMismatch {
                expected: n_theta * n_l,
                found: values.len(),
            });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(TomoError::InvalidParameter(
                "data grid contains non-finite values".into(),
            ));
        }
        Ok(Self { n_theta, n_l, values })
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.n_theta, self.n_l)
    }

    pub fn n_theta(&self) -> usize {
        self.n_theta
    }

    pub fn n_l(&self) -> usize {
        self.n_l
    }

    #[inline]
    pub fn get(&self, theta: usize, l: usize) -> f64 {
        self.values[theta * self.n_l + l]
    }

    #[inline]
    pub fn set(&mut self, theta: usize, l: usize, v: f64) {
        self.values[theta * self.n_l + l] = v;
    }

    pub fn row(&self, theta: usize) -> &[f64] {
        &self.values[theta * self.n_l..(theta + 1) * self.n_l]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            n_theta: self.n_theta,
            n_l: self.n_l,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn scale(&self, s: f64) -> Self {
        self.map(|v| v * s)
    }

    /// `self + s * other`.
    pub fn add_scaled(&self, s: f64, other: &Self) -> Result<Self> {
        check_shapes(self, other)?;
        Ok(Self {
            n_theta: self.n_theta,
            n_l: self.n_l,
            values: self.values.iter().zip(&other.values).map(|(a, b)| a + s * b).collect(),
        })
    }

    pub fn dot(&self, other: &Self) -> Result<f64> {
        check_shapes(self, other)?;
        Ok(self.values.iter().zip(&other.values).map(|(a, b)| a * b).sum())
    }

    pub fn norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn max_abs_diff(&self, other: &Self) -> Result<f64> {
        check_shapes(self, other)?;
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max))
    }

    pub fn row_sums(&self) -> Vec<f64> {
        (0..self.n_theta).map(|t| self.row(t).iter().sum()).collect()
    }
}

impl fmt::Debug for DataGrid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "DataGrid({}x{})", self.n_theta, self.n_l)
    }
}

pub(crate) fn check_shapes(a: &DataGrid, b: &DataGrid) -> Result<()> {
    if a.shape() != b.shape() {
        return Err(TomoError::ShapeMismatch {
            expected: a.shape(),
            found: b.shape(),
        });
    }
    Ok(())
}

/// Which data-fidelity functional is in use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FidelityKind {
    /// `S(f) = 1/2 ||f - g_obs||^2`.
    L2,
    /// `S(f) = sum f - g + g ln(g / f)`, the Poisson log-likelihood up to constants.
    Kl,
}

impl FidelityKind {
    pub fn name(self) -> &'static str {
        match self {
            FidelityKind::L2 => "l2",
            FidelityKind::Kl => "kl",
        }
    }
}

impl std::str::FromStr for FidelityKind {
    type Err = TomoError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "l2" => Ok(FidelityKind::L2),
            "kl" => Ok(FidelityKind::Kl),
            other => Err(TomoError::InvalidParameter(format!(
                "unknown fidelity '{other}' (expected l2 or kl)"
            ))),
        }
    }
}

impl fmt::Display for FidelityKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Pointwise KL term `s(x, y)` for observation `x` and model value `y`.
pub fn kl_term(x: f64, y: f64) -> f64 {
    if x < 0.0 || y < 0.0 || (x > 0.0 && y == 0.0) {
        f64::INFINITY
    } else if x == 0.0 {
        y
    } else {
        y - x + x * (x / y).ln()
    }
}

/// `S_{g_obs}(f)`; may be `+inf` for KL.
pub fn fit_value(kind: FidelityKind, g_obs: &DataGrid, f: &DataGrid) -> Result<f64> {
    check_shapes(g_obs, f)?;
    let pairs = g_obs.values.iter().zip(&f.values);
    Ok(match kind {
        FidelityKind::L2 => 0.5 * pairs.map(|(x, y)| (y - x) * (y - x)).sum::<f64>(),
        FidelityKind::Kl => pairs.map(|(&x, &y)| kl_term(x, y)).sum(),
    })
}

/// Gradient of `f -> S_{g_obs}(f)`.
pub fn fit_grad(kind: FidelityKind, g_obs: &DataGrid, f: &DataGrid) -> Result<DataGrid> {
    check_shapes(g_obs, f)?;
    let values = match kind {
        FidelityKind::L2 => g_obs.values.iter().zip(&f.values).map(|(x, y)| y - x).collect(),
        FidelityKind::Kl => g_obs
            .values
            .iter()
            .zip(&f.values)
            .map(|(&x, &y)| {
                if x == 0.0 {
                    Ok(1.0)
                } else if y > 0.0 {
                    Ok(1.0 - x / y)
                } else {
                    Err(TomoError::KlDomain { observed: x, model: y })
                }
            })
            .collect::<Result<Vec<_>>>()?,
    };
    Ok(DataGrid {
        n_theta: f.n_theta,
        n_l: f.n_l,
        values,
    })
}

/// Conjugate `S*_{g_obs}(p)`; `+inf` outside the dual domain.
///
/// For KL the entrywise conjugate of `y -> y - x + x ln(x/y)` is `-x ln(1 - p)` on `p < 1`
/// (and `0` on `p <= 1` when `x = 0`).
pub fn fit_conjugate(kind: FidelityKind, p: &DataGrid, g_obs: &DataGrid) -> Result<f64> {
    check_shapes(p, g_obs)?;
    let pairs = p.values.iter().zip(&g_obs.values);
    Ok(match kind {
        FidelityKind::L2 => pairs.map(|(p, x)| p * x + 0.5 * p * p).sum(),
        FidelityKind::Kl => pairs
            .map(|(&p, &x)| {
                if x > 0.0 {
                    if p < 1.0 {
                        -x * (-p).ln_1p()
                    } else {
                        f64::INFINITY
                    }
                } else if p <= 1.0 {
                    0.0
                } else {
                    f64::INFINITY
                }
            })
            .sum(),
    })
}

/// `prox_{nu S*}(g_tilde)`.
///
/// KL uses the closed form `(1 + g~)/2 - sqrt(((1 + g~)/2)^2 - g~ + nu g_obs)`, evaluated
/// without cancellation; L2 uses `(g~ - nu g_obs) / (1 + nu)`.
pub fn fit_conj_prox(kind: FidelityKind, g_tilde: &DataGrid, nu: f64, g_obs: &DataGrid) -> Result<DataGrid> {
    check_shapes(g_tilde, g_obs)?;
    if !(nu > 0.0) {
        return Err(TomoError::InvalidParameter(format!(
            "dual step must be positive, got {nu}"
        )));
    }
    let pairs = g_tilde.values.iter().zip(&g_obs.values);
    let values = match kind {
        FidelityKind::L2 => pairs.map(|(gt, x)| (gt - nu * x) / (1.0 + nu)).collect(),
        FidelityKind::Kl => pairs
            .map(|(&gt, &x)| {
                let a = 0.5 * (1.0 + gt);
                // a^2 - g~ + nu x, rewritten as ((1 - g~)/2)^2 + nu x.
                let half_gap = 0.5 * (1.0 - gt);
                let rad = half_gap * half_gap + nu * x;
                if rad < -1e-14 {
                    return Err(TomoError::NegativeRadicand(rad));
                }
                let root = rad.max(0.0).sqrt();
                Ok(if a > 0.0 { (gt - nu * x) / (a + root) } else { a - root })
            })
            .collect::<Result<Vec<_>>>()?,
    };
    Ok(DataGrid {
        n_theta: g_tilde.n_theta,
        n_l: g_tilde.n_l,
        values,
    })
}

/// The dual point `-(1/alpha) grad S_{g_obs}(f)` used in the duality gap.
pub fn dual_point(kind: FidelityKind, g_obs: &DataGrid, f: &DataGrid, alpha: f64) -> Result<DataGrid> {
    if !(alpha > 0.0) {
        return Err(TomoError::InvalidParameter(format!(
            "alpha must be positive, got {alpha}"
        )));
    }
    Ok(fit_grad(kind, g_obs, f)?.scale(-1.0 / alpha))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn single(v: f64) -> DataGrid {
        DataGrid::from_vec(1, 1, vec![v]).unwrap()
    }

    fn random_positive(rng: &mut ChaCha8Rng, n: usize) -> DataGrid {
        DataGrid::from_vec(1, n, (0..n).map(|_| rng.random_range(0.1..3.0)).collect()).unwrap()
    }

    /// sup_y (p y - s(x, y)) over a fine grid of y > 0.
    fn conjugate_by_grid(p: f64, x: f64) -> f64 {
        let mut best = f64::NEG_INFINITY;
        let n = 400_000;
        for i in 1..=n {
            let y = 60.0 * i as f64 / n as f64;
            best = best.max(p * y - kl_term(x, y));
        }
        best.max(-kl_term(x, 0.0))
    }

    /// Root of an increasing scalar function by bisection.
    fn bisect_root(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
        for _ in 0..200 {
            let m = 0.5 * (a + b);
            if f(m) > 0.0 {
                b = m;
            } else {
                a = m;
            }
        }
        0.5 * (a + b)
    }

    #[test]
    fn values() {
        let g = DataGrid::from_vec(2, 2, vec![0.0, 1.0, 2.0, 3.0]).unwrap();
        assert_eq!(fit_value(FidelityKind::L2, &g, &g).unwrap(), 0.0);
        assert_eq!(fit_value(FidelityKind::Kl, &g, &g).unwrap(), 0.0);
        let v = fit_value(FidelityKind::Kl, &single(1.0), &single(std::f64::consts::E)).unwrap();
        assert!((v - (std::f64::consts::E - 2.0)).abs() < 1e-15);
        assert_eq!(
            fit_value(FidelityKind::Kl, &single(1.0), &single(0.0)).unwrap(),
            f64::INFINITY
        );
        assert_eq!(
            fit_value(FidelityKind::Kl, &single(0.0), &single(-1.0)).unwrap(),
            f64::INFINITY
        );
        assert_eq!(fit_value(FidelityKind::Kl, &single(0.0), &single(0.5)).unwrap(), 0.5);
        assert!(fit_value(FidelityKind::L2, &single(0.0), &DataGrid::zeros(1, 2)).is_err());
    }

    #[test]
    fn gradients() {
        let g = single(2.0);
        assert_eq!(fit_grad(FidelityKind::L2, &g, &g).unwrap().get(0, 0), 0.0);
        assert_eq!(fit_grad(FidelityKind::Kl, &g, &single(1.0)).unwrap().get(0, 0), -1.0);
        assert!(matches!(
            fit_grad(FidelityKind::Kl, &g, &single(0.0)),
            Err(TomoError::KlDomain { .. })
        ));
    }

    #[test]
    fn gradients_match_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for kind in [FidelityKind::L2, FidelityKind::Kl] {
            let g = random_positive(&mut rng, 6);
            let f = random_positive(&mut rng, 6);
            let grad = fit_grad(kind, &g, &f).unwrap();
            let h = 1e-6;
            for i in 0..6 {
                let mut plus = f.clone();
                plus.as_mut_slice()[i] += h;
                let mut minus = f.clone();
                minus.as_mut_slice()[i] -= h;
                let fd = (fit_value(kind, &g, &plus).unwrap() - fit_value(kind, &g, &minus).unwrap()) / (2.0 * h);
                assert!((fd - grad.as_slice()[i]).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn kl_conjugate_matches_grid_supremum() {
        for &(p, x) in &[(0.3, 1.0), (-2.0, 0.5), (0.9, 2.0), (-0.5, 0.0), (0.0, 1.5)] {
            let closed = fit_conjugate(FidelityKind::Kl, &single(p), &single(x)).unwrap();
            let oracle = conjugate_by_grid(p, x);
            assert!((closed - oracle).abs() < 1e-6, "p={p} x={x}: {closed} vs {oracle}");
        }
        assert_eq!(
            fit_conjugate(FidelityKind::Kl, &single(1.0), &single(1.0)).unwrap(),
            f64::INFINITY
        );
        assert_eq!(
            fit_conjugate(FidelityKind::Kl, &single(1.0), &single(0.0)).unwrap(),
            0.0
        );
        assert_eq!(
            fit_conjugate(FidelityKind::Kl, &single(1.5), &single(0.0)).unwrap(),
            f64::INFINITY
        );
        assert_eq!(
            fit_conjugate(FidelityKind::L2, &single(0.0), &single(3.0)).unwrap(),
            0.0
        );
        assert_eq!(
            fit_conjugate(FidelityKind::Kl, &single(0.0), &single(3.0)).unwrap(),
            0.0
        );
    }

    #[test]
    fn fenchel_young() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for kind in [FidelityKind::L2, FidelityKind::Kl] {
            for _ in 0..50 {
                let g = random_positive(&mut rng, 5);
                let f = random_positive(&mut rng, 5);
                let p = DataGrid::from_vec(1, 5, (0..5).map(|_| rng.random_range(-2.0..0.95)).collect()).unwrap();
                let lhs = fit_value(kind, &g, &f).unwrap() + fit_conjugate(kind, &p, &g).unwrap();
                assert!(lhs >= p.dot(&f).unwrap() - 1e-12);
                let q = fit_grad(kind, &g, &f).unwrap();
                let eq = fit_value(kind, &g, &f).unwrap() + fit_conjugate(kind, &q, &g).unwrap();
                assert!((eq - q.dot(&f).unwrap()).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn conj_prox_closed_forms() {
        let out = fit_conj_prox(FidelityKind::Kl, &single(1.0), 1.0, &single(1.0)).unwrap();
        assert!(out.get(0, 0).abs() < 1e-15);
        let out = fit_conj_prox(FidelityKind::L2, &single(0.6), 0.3, &single(2.0)).unwrap();
        assert!(out.get(0, 0).abs() < 1e-15);
        assert!(fit_conj_prox(FidelityKind::L2, &single(0.6), 0.0, &single(2.0)).is_err());
    }

    #[test]
    fn conj_prox_minimizes_scalar_objective() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for kind in [FidelityKind::L2, FidelityKind::Kl] {
            for _ in 0..30 {
                let gt = rng.random_range(-5.0..5.0);
                let nu = rng.random_range(0.05..5.0);
                let x = if rng.random_bool(0.2) {
                    0.0
                } else {
                    rng.random_range(0.0..4.0)
                };
                let out = fit_conj_prox(kind, &single(gt), nu, &single(x)).unwrap().get(0, 0);
                // Optimality: d/dp S*(p) + (p - gt) / nu = 0.
                let oracle = match kind {
                    FidelityKind::L2 => bisect_root(|p| x + p + (p - gt) / nu, -50.0, 50.0),
                    FidelityKind::Kl if x > 0.0 => bisect_root(|p| x / (1.0 - p) + (p - gt) / nu, -50.0, 1.0),
                    FidelityKind::Kl => gt.min(1.0),
                };
                assert!(
                    (out - oracle).abs() < 1e-8,
                    "{kind} gt={gt} nu={nu} x={x}: {out} vs {oracle}"
                );
                if kind == FidelityKind::Kl && x > 0.0 {
                    assert!(out < 1.0);
                }
            }
        }
    }

    #[test]
    fn dual_points() {
        let g = single(2.0);
        assert_eq!(dual_point(FidelityKind::L2, &g, &g, 1.0).unwrap().get(0, 0), 0.0);
        assert_eq!(
            dual_point(FidelityKind::Kl, &g, &single(1.0), 1.0).unwrap().get(0, 0),
            1.0
        );
        let a = dual_point(FidelityKind::Kl, &g, &single(0.7), 0.3).unwrap().get(0, 0);
        let b = dual_point(FidelityKind::Kl, &g, &single(0.7), 0.6).unwrap().get(0, 0);
        assert!((a - 2.0 * b).abs() < 1e-15);
    }

    #[test]
    fn kl_value_is_midpoint_convex() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        for _ in 0..100 {
            let g = random_positive(&mut rng, 8);
            let a = random_positive(&mut rng, 8);
            let b = random_positive(&mut rng, 8);
            let mid = a.add_scaled(1.0, &b).unwrap().scale(0.5);
            let lhs = fit_value(FidelityKind::Kl, &g, &mid).unwrap();
            let rhs =
                0.5 * (fit_value(FidelityKind::Kl, &g, &a).unwrap() + fit_value(FidelityKind::Kl, &g, &b).unwrap());
            assert!(lhs <= rhs + 1e-12);
            assert!(fit_value(FidelityKind::Kl, &g, &a).unwrap() >= 0.0);
        }
    }
}
