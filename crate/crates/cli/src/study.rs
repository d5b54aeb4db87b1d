//! The noise-level sweep: synthesize a ground truth, draw Poisson data at each
//! intensity, reconstruct with `alpha = alpha0 * sqrt(delta)` and compare.

use std::path::{Path, PathBuf};

use qkl_tomo::fidelity::fit_value;
use qkl_tomo::forward::{homodyne_build, pinem_build, ForwardModel, HomodyneModel, HomodyneVariant, PinemModel};
use qkl_tomo::qre::qkl_value;
use qkl_tomo::solvers::{solve, SolverConfig, SolverReport};
use qkl_tomo::{floor_eigenvalues, norm_estimate, trace_norm, DataGrid, HermitianMatrix, QreContext};
use rayon::prelude::*;

use crate::config::{Experiment, ExperimentConfig};
use crate::error::Result;
use crate::formats::{fmt_f64, write_csv_with_comments};
use crate::noise::{data_stream, poisson_observe, stream_rng, STATE_STREAM};
use crate::states::{make_cat_state, make_pinem_state};

/// Eigenvalue floor applied to the ground truth when it is used as the second
/// argument of the relative entropy.
pub const TRUTH_FLOOR: f64 = 1e-10;

/// Power iterations for the shared operator-norm estimate.
const NORM_ITERS: usize = 100;

pub const STUDY_COLUMNS: [&str; 7] = [
    "delta",
    "trace_error",
    "qkl_to_truth",
    "qkl_penalty_gap",
    "data_residual",
    "iterations",
    "stop_reason",
];

/// The measurement model of one experiment.
#[derive(Debug, Clone)]
pub enum Instrument {
    Pinem(PinemModel),
    Homodyne(HomodyneModel),
}

impl Instrument {
    pub fn build(cfg: &ExperimentConfig) -> Result<Self> {
        Ok(match cfg.experiment {
            Experiment::Pinem => Instrument::Pinem(pinem_build(cfg.dim(), cfg.coupling(), cfg.n_theta())?),
            Experiment::Homodyne => Instrument::Homodyne(homodyne_build(
                cfg.dim(),
                cfg.n_theta(),
                cfg.x_min,
                cfg.x_max,
                cfg.n_bins,
                cfg.quad_order,
            )?),
        })
    }

    pub fn thetas(&self) -> &[f64] {
        match self {
            Instrument::Pinem(m) => m.thetas(),
            Instrument::Homodyne(m) => m.thetas(),
        }
    }

    /// The operator that produces synthetic data. Homodyne data always come
    /// from the semi-discrete operator.
    pub fn data_operator(&self) -> Box<dyn ForwardModel + '_> {
        self.operator(HomodyneVariant::Semi)
    }

    /// The operator used for reconstruction; `variant` only matters for homodyne.
    pub fn operator(&self, variant: HomodyneVariant) -> Box<dyn ForwardModel + '_> {
        match self {
            Instrument::Pinem(m) => Box::new(m),
            Instrument::Homodyne(m) => Box::new(m.operator(variant)),
        }
    }
}

/// Everything shared by the rows of a study.
#[derive(Debug, Clone)]
pub struct Setup {
    pub cfg: ExperimentConfig,
    pub instrument: Instrument,
    pub truth: HermitianMatrix,
    /// `g_dagger = T rho_dagger` from the data operator.
    pub g_exact: DataGrid,
    /// The regularization prior, the maximally mixed state.
    pub prior: QreContext,
    /// `||T*T||` bound for the reconstruction operator.
    pub norm_bound: f64,
}

pub fn make_truth(cfg: &ExperimentConfig) -> Result<HermitianMatrix> {
    match cfg.experiment {
        Experiment::Pinem => {
            let mut rng = stream_rng(cfg.seed, STATE_STREAM);
            make_pinem_state(cfg.g_pump, cfg.dim(), cfg.jitter_sigma, cfg.jitter_samples, &mut rng)
        }
        Experiment::Homodyne => make_cat_state(cfg.cat_amplitude, cfg.dim()),
    }
}

impl Setup {
    pub fn new(cfg: &ExperimentConfig) -> Result<Self> {
        cfg.validate()?;
        Self::with_truth(cfg, make_truth(cfg)?)
    }

    /// A setup around an externally supplied ground truth.
    pub fn with_truth(cfg: &ExperimentConfig, truth: HermitianMatrix) -> Result<Self> {
        cfg.validate()?;
        if truth.dim() != cfg.dim() {
            return Err(qkl_tomo::TomoError::DimensionMismatch {
                expected: cfg.dim(),
                found: truth.dim(),
            }
            .into());
        }
        let instrument = Instrument::build(cfg)?;
        let g_exact = instrument.data_operator().apply(&truth)?;
        let prior = QreContext::maximally_mixed(cfg.dim())?;
        let norm_bound = norm_estimate(instrument.operator(cfg.operator_variant).as_ref(), NORM_ITERS)?;
        Ok(Self {
            cfg: cfg.clone(),
            instrument,
            truth,
            g_exact,
            prior,
            norm_bound,
        })
    }

    pub fn solver_config(&self, alpha: f64) -> SolverConfig {
        let mut sc = SolverConfig::new(alpha)
            .with_gap_threshold(self.cfg.gap_threshold())
            .with_max_iters(self.cfg.max_iters)
            .with_mu(self.cfg.mu);
        sc.gap_check_stride = self.cfg.gap_check_stride;
        sc.norm_bound = Some(self.norm_bound);
        sc
    }

    /// One reconstruction from `g_obs` with the configured operator and solver.
    pub fn reconstruct(&self, g_obs: &DataGrid, alpha: f64) -> Result<SolverReport> {
        let op = self.instrument.operator(self.cfg.operator_variant);
        Ok(solve(
            self.cfg.solver(),
            op.as_ref(),
            g_obs,
            &self.prior,
            self.cfg.fidelity,
            &self.solver_config(alpha),
        )?)
    }

    /// The four error metrics of `rho` against the ground truth.
    pub fn metrics(&self, rho: &HermitianMatrix) -> Result<Metrics> {
        let truth_ctx = QreContext::new(floor_eigenvalues(&self.truth, TRUTH_FLOOR))?;
        let fit = self.instrument.data_operator().apply(rho)?;
        Ok(Metrics {
            trace_error: trace_norm(&rho.add_scaled(-1.0, &self.truth)?)?,
            qkl_to_truth: qkl_value(rho, &truth_ctx)?,
            qkl_penalty_gap: (qkl_value(rho, &self.prior)? - qkl_value(&self.truth, &self.prior)?).abs(),
            data_residual: fit_value(self.cfg.fidelity, &self.g_exact, &fit)?,
        })
    }

    /// Draws the data of row `row` and reconstructs.
    pub fn run_row(&self, row: usize) -> StudyRow {
        let intensity = self.cfg.intensities[row];
        let mut out = StudyRow {
            intensity,
            delta: f64::NAN,
            alpha: f64::NAN,
            metrics: Metrics::nan(),
            iterations: 0,
            final_gap: f64::NAN,
            status: RowStatus::Failed(String::new()),
        };
        let mut rng = stream_rng(self.cfg.seed, data_stream(row));
        let result = (|| -> Result<()> {
            let obs = poisson_observe(&self.g_exact, intensity, self.cfg.fidelity, &mut rng)?;
            out.delta = obs.delta;
            out.alpha = self.cfg.alpha0() * obs.delta.sqrt();
            let report = self.reconstruct(&obs.g_obs, out.alpha)?;
            out.iterations = report.iterations;
            out.final_gap = report.final_gap;
            out.metrics = self.metrics(&report.solution)?;
            out.status = RowStatus::Done(report.stop_reason.name());
            Ok(())
        })();
        if let Err(e) = result {
            out.status = RowStatus::Failed(e.to_string());
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Metrics {
    /// `||rho - rho_dagger||_1`.
    pub trace_error: f64,
    /// `QKL(rho, rho_dagger)` with the truth floored at [`TRUTH_FLOOR`].
    pub qkl_to_truth: f64,
    /// `|QKL(rho, rho0) - QKL(rho_dagger, rho0)|`.
    pub qkl_penalty_gap: f64,
    /// `S_{g_dagger}(T rho)`.
    pub data_residual: f64,
}

impl Metrics {
    fn nan() -> Self {
        Self {
            trace_error: f64::NAN,
            qkl_to_truth: f64::NAN,
            qkl_penalty_gap: f64::NAN,
            data_residual: f64::NAN,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum RowStatus {
    /// Solver stopped normally; holds the stop reason name.
    Done(&'static str),
    Failed(String),
}

impl RowStatus {
    pub fn label(&self) -> &str {
        match self {
            RowStatus::Done(r) => r,
            RowStatus::Failed(_) => "error",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StudyRow {
    pub intensity: f64,
    pub delta: f64,
    pub alpha: f64,
    pub metrics: Metrics,
    pub iterations: usize,
    pub final_gap: f64,
    pub status: RowStatus,
}

impl StudyRow {
    pub fn is_ok(&self) -> bool {
        matches!(self.status, RowStatus::Done(_))
    }

    fn record(&self) -> Vec<String> {
        let m = &self.metrics;
        vec![
            fmt_f64(self.delta),
            fmt_f64(m.trace_error),
            fmt_f64(m.qkl_to_truth),
            fmt_f64(m.qkl_penalty_gap),
            fmt_f64(m.data_residual),
            self.iterations.to_string(),
            self.status.label().to_string(),
        ]
    }
}

#[derive(Debug, Clone)]
pub struct Study {
    pub setup: Setup,
    pub rows: Vec<StudyRow>,
}

/// Runs every intensity of `cfg`, rows in parallel.
pub fn run_study(cfg: &ExperimentConfig) -> Result<Study> {
    let setup = Setup::new(cfg)?;
    let rows = (0..cfg.intensities.len())
        .into_par_iter()
        .map(|i| setup.run_row(i))
        .collect();
    Ok(Study { setup, rows })
}

impl Study {
    /// Provenance lines: program, configuration, generator layout, per-row extras.
    pub fn provenance(&self) -> Vec<String> {
        let cfg = &self.setup.cfg;
        let mut out = vec![format!(
            "{} {} study",
            env!("CARGO_PKG_NAME"),
            env!("CARGO_PKG_VERSION")
        )];
        out.extend(cfg.to_lines());
        out.push(format!(
            "rng = ChaCha8 seeded with {}; stream 0 ground-truth jitter, stream 1+row Poisson data",
            cfg.seed
        ));
        out.push("prior = maximally mixed state I/N".into());
        out.push(format!("norm_bound = {}", fmt_f64(self.setup.norm_bound)));
        for (i, r) in self.rows.iter().enumerate() {
            let mut line = format!(
                "row {i}: intensity = {}, alpha = {}, final_gap = {}",
                fmt_f64(r.intensity),
                fmt_f64(r.alpha),
                fmt_f64(r.final_gap)
            );
            if let RowStatus::Failed(msg) = &r.status {
                line.push_str(&format!(", error = {msg}"));
            }
            out.push(line);
        }
        out
    }

    /// Writes `study.csv` and `study.svg` into `dir`; returns the CSV path.
    pub fn write(&self, dir: &Path) -> Result<PathBuf> {
        std::fs::create_dir_all(dir).map_err(crate::error::io_err(dir))?;
        let svg = dir.join("study.svg");
        crate::plot::emit_plot(&self.rows, &svg, &self.provenance())
    }
}

/// Writes the study table; the header names exactly [`STUDY_COLUMNS`].
pub fn write_study_csv(path: &Path, rows: &[StudyRow], comments: &[String]) -> Result<()> {
    write_csv_with_comments(path, comments, &STUDY_COLUMNS, rows.iter().map(StudyRow::record))
}
