//! Experiment configuration: a flat key/value schema shared by config files
//! and command-line flags.
//!
//! A config file holds one `key = value` pair per line; blank lines and lines
//! starting with `#` are ignored. Keys are the snake_case names below. Values
//! that depend on the experiment (dimension, phase count, ...) or on the
//! fidelity (`alpha0`, `gap_threshold`) fall back to the preset when unset.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use qkl_tomo::solvers::Method;
use qkl_tomo::{FidelityKind, HomodyneVariant};

use crate::error::{io_err, CliError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Experiment {
    Pinem,
    Homodyne,
}

impl FromStr for Experiment {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "pinem" => Ok(Experiment::Pinem),
            "homodyne" => Ok(Experiment::Homodyne),
            other => Err(CliError::Config(format!(
                "unknown experiment '{other}' (expected pinem or homodyne)"
            ))),
        }
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Experiment::Pinem => "pinem",
            Experiment::Homodyne => "homodyne",
        })
    }
}

/// Every recognised key, in the order used when the configuration is printed.
pub const KEYS: &[&str] = &[
    "experiment",
    "fidelity",
    "operator_variant",
    "solver",
    "dim",
    "n_theta",
    "g_pump",
    "coupling",
    "x_min",
    "x_max",
    "n_bins",
    "quad_order",
    "cat_amplitude",
    "jitter_sigma",
    "jitter_samples",
    "intensities",
    "alpha0",
    "mu",
    "seed",
    "gap_threshold",
    "gap_check_stride",
    "max_iters",
    "output_dir",
];

/// Log-spaced default intensity ladder, `1e2 ..= 1e10` in 9 steps.
pub fn default_intensities() -> Vec<f64> {
    (2..=10).map(|e| 10f64.powi(e)).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    pub fidelity: FidelityKind,
    pub operator_variant: HomodyneVariant,
    pub solver: Option<Method>,
    pub dim: Option<usize>,
    pub n_theta: Option<usize>,
    pub g_pump: f64,
    /// PINEM probe coupling; defaults to `3 * g_pump`.
    pub coupling: Option<f64>,
    pub x_min: f64,
    pub x_max: f64,
    pub n_bins: usize,
    pub quad_order: usize,
    pub cat_amplitude: f64,
    pub jitter_sigma: f64,
    pub jitter_samples: usize,
    pub intensities: Vec<f64>,
    pub alpha0: Option<f64>,
    pub mu: f64,
    pub seed: u64,
    pub gap_threshold: Option<f64>,
    pub gap_check_stride: usize,
    pub max_iters: usize,
    pub output_dir: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            experiment: Experiment::Pinem,
            fidelity: FidelityKind::L2,
            operator_variant: HomodyneVariant::Semi,
            solver: None,
            dim: None,
            n_theta: None,
            g_pump: 1.73,
            coupling: None,
            x_min: -5.0,
            x_max: 5.0,
            n_bins: 120,
            quad_order: qkl_tomo::forward::DEFAULT_QUAD_ORDER,
            cat_amplitude: 3.0,
            jitter_sigma: 0.1,
            jitter_samples: 50,
            intensities: default_intensities(),
            alpha0: None,
            mu: 0.5,
            seed: 1,
            gap_threshold: None,
            gap_check_stride: 50,
            max_iters: 2_000_000,
            output_dir: PathBuf::from("out"),
        }
    }
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T>
where
    T::Err: fmt::Display,
{
    value
        .trim()
        .parse()
        .map_err(|e| CliError::Config(format!("{key}: cannot parse '{value}': {e}")))
}

impl ExperimentConfig {
    /// Assigns one key. Used for both config-file lines and flags.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let v = value.trim();
        match key {
            "experiment" => self.experiment = v.parse()?,
            "fidelity" => self.fidelity = v.parse()?,
            "operator_variant" => self.operator_variant = v.parse()?,
            "solver" => self.solver = Some(v.parse()?),
            "dim" => self.dim = Some(parse(key, v)?),
            "n_theta" => self.n_theta = Some(parse(key, v)?),
            "g_pump" => self.g_pump = parse(key, v)?,
            "coupling" => self.coupling = Some(parse(key, v)?),
            "x_min" => self.x_min = parse(key, v)?,
            "x_max" => self.x_max = parse(key, v)?,
            "n_bins" => self.n_bins = parse(key, v)?,
            "quad_order" => self.quad_order = parse(key, v)?,
            "cat_amplitude" => self.cat_amplitude = parse(key, v)?,
            "jitter_sigma" => self.jitter_sigma = parse(key, v)?,
            "jitter_samples" => self.jitter_samples = parse(key, v)?,
            "intensities" => {
                self.intensities = v
                    .split(',')
                    .filter(|s| !s.trim().is_empty())
                    .map(|s| parse(key, s))
                    .collect::<Result<_>>()?
            }
            "alpha0" => self.alpha0 = Some(parse(key, v)?),
            "mu" => self.mu = parse(key, v)?,
            "seed" => self.seed = parse(key, v)?,
            "gap_threshold" => self.gap_threshold = Some(parse(key, v)?),
            "gap_check_stride" => self.gap_check_stride = parse(key, v)?,
            "max_iters" => self.max_iters = parse(key, v)?,
            "output_dir" => self.output_dir = PathBuf::from(v),
            other => return Err(CliError::Config(format!("unknown key '{other}'"))),
        }
        Ok(())
    }

    /// Applies every `key = value` line of `text`.
    pub fn apply_text(&mut self, text: &str, origin: &Path) -> Result<()> {
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| CliError::Parse {
                path: origin.to_path_buf(),
                line: i + 1,
                message: format!("expected key = value, found '{line}'"),
            })?;
            self.set(key.trim(), value).map_err(|e| CliError::Parse {
                path: origin.to_path_buf(),
                line: i + 1,
                message: e.to_string(),
            })?;
        }
        Ok(())
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(io_err(path))?;
        let mut cfg = Self::default();
        cfg.apply_text(&text, path)?;
        Ok(cfg)
    }

    pub fn dim(&self) -> usize {
        self.dim.unwrap_or(match self.experiment {
            Experiment::Pinem => 41,
            Experiment::Homodyne => 21,
        })
    }

    pub fn n_theta(&self) -> usize {
        self.n_theta.unwrap_or(match self.experiment {
            Experiment::Pinem => 100,
            Experiment::Homodyne => 60,
        })
    }

    pub fn coupling(&self) -> f64 {
        self.coupling.unwrap_or(3.0 * self.g_pump)
    }

    pub fn alpha0(&self) -> f64 {
        self.alpha0.unwrap_or(match self.fidelity {
            FidelityKind::L2 => 0.3,
            FidelityKind::Kl => 0.1,
        })
    }

    pub fn gap_threshold(&self) -> f64 {
        self.gap_threshold.unwrap_or(match self.fidelity {
            FidelityKind::L2 => 1e-6,
            FidelityKind::Kl => 1e-5,
        })
    }

    pub fn solver(&self) -> Method {
        self.solver.unwrap_or_else(|| Method::default_for(self.fidelity))
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(CliError::Config(m));
        if self.intensities.is_empty() {
            return fail("intensities must not be empty".into());
        }
        if self.intensities.iter().any(|&i| !(i > 0.0 && i.is_finite())) {
            return fail("intensities must be positive and finite".into());
        }
        if self.intensities.windows(2).any(|w| w[0] >= w[1]) {
            return fail("intensities must be strictly increasing".into());
        }
        if self.jitter_samples == 0 {
            return fail("jitter_samples must be at least 1".into());
        }
        if !(self.jitter_sigma >= 0.0 && self.jitter_sigma.is_finite()) {
            return fail(format!("jitter_sigma must be nonnegative, got {}", self.jitter_sigma));
        }
        if self.dim() == 0 || self.n_theta() == 0 {
            return fail("dim and n_theta must be positive".into());
        }
        if self.experiment == Experiment::Pinem && self.dim().is_multiple_of(2) {
            return fail(format!("PINEM dimension must be odd, got {}", self.dim()));
        }
        if !(self.alpha0() > 0.0) {
            return fail(format!("alpha0 must be positive, got {}", self.alpha0()));
        }
        if !(self.gap_threshold() > 0.0) {
            return fail(format!("gap_threshold must be positive, got {}", self.gap_threshold()));
        }
        if self.solver() == Method::Fista && self.fidelity == FidelityKind::Kl {
            return fail("FISTA requires the l2 fidelity".into());
        }
        Ok(())
    }

    /// The resolved value of a key, as it would be written back to a config file.
    pub fn get(&self, key: &str) -> Option<String> {
        Some(match key {
            "experiment" => self.experiment.to_string(),
            "fidelity" => self.fidelity.to_string(),
            "operator_variant" => self.operator_variant.to_string(),
            "solver" => self.solver().to_string(),
            "dim" => self.dim().to_string(),
            "n_theta" => self.n_theta().to_string(),
            "g_pump" => self.g_pump.to_string(),
            "coupling" => self.coupling().to_string(),
            "x_min" => self.x_min.to_string(),
            "x_max" => self.x_max.to_string(),
            "n_bins" => self.n_bins.to_string(),
            "quad_order" => self.quad_order.to_string(),
            "cat_amplitude" => self.cat_amplitude.to_string(),
            "jitter_sigma" => self.jitter_sigma.to_string(),
            "jitter_samples" => self.jitter_samples.to_string(),
            "intensities" => self
                .intensities
                .iter()
                .map(|v| format!("{v:e}"))
                .collect::<Vec<_>>()
                .join(","),
            "alpha0" => self.alpha0().to_string(),
            "mu" => self.mu.to_string(),
            "seed" => self.seed.to_string(),
            "gap_threshold" => format!("{:e}", self.gap_threshold()),
            "gap_check_stride" => self.gap_check_stride.to_string(),
            "max_iters" => self.max_iters.to_string(),
            "output_dir" => self.output_dir.display().to_string(),
            _ => return None,
        })
    }

    /// `key = value` lines for every key, suitable as a config file or provenance header.
    pub fn to_lines(&self) -> Vec<String> {
        KEYS.iter()
            .filter(|k| {
                self.experiment == Experiment::Homodyne
                    || !matches!(
                        **k,
                        "operator_variant" | "x_min" | "x_max" | "n_bins" | "quad_order" | "cat_amplitude"
                    )
            })
            .filter(|k| {
                self.experiment == Experiment::Pinem
                    || !matches!(**k, "g_pump" | "coupling" | "jitter_sigma" | "jitter_samples")
            })
            .map(|k| format!("{k} = {}", self.get(k).unwrap_or_default()))
            .collect()
    }
}
