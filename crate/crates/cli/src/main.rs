use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use qkl_tomo::fidelity::fit_value;
use qkl_tomo_cli::checks::run_checks;
use qkl_tomo_cli::error::{io_err, CliError, Result};
use qkl_tomo_cli::formats::{fmt_f64, read_grid, read_matrix, write_csv_with_comments, write_grid, write_matrix};
use qkl_tomo_cli::noise::{data_stream, poisson_observe, stream_rng};
use qkl_tomo_cli::{run_study, ExperimentConfig, Setup};

/// Quantum state tomography with relative-entropy regularization.
#[derive(Debug, Parser)]
#[command(name = "qkl-tomo", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write the ground truth, exact data and one noisy data set per intensity.
    Simulate(ConfigArgs),
    /// Reconstruct a density matrix from one data file.
    Reconstruct(ReconstructArgs),
    /// Run the noise-level sweep and write study.csv and study.svg.
    Study(ConfigArgs),
    /// Run the numerical property suite.
    Check {
        #[arg(long, default_value_t = 7)]
        seed: u64,
    },
}

#[derive(Debug, Args)]
struct ReconstructArgs {
    #[command(flatten)]
    config: ConfigArgs,
    /// Data grid CSV (as written by `simulate`).
    #[arg(long)]
    data: PathBuf,
    /// Regularization parameter.
    #[arg(long, conflicts_with = "delta", required_unless_present = "delta")]
    alpha: Option<f64>,
    /// Noise level; sets alpha = alpha0 * sqrt(delta).
    #[arg(long)]
    delta: Option<f64>,
    /// Ground-truth matrix file; enables the error metrics.
    #[arg(long)]
    truth: Option<PathBuf>,
}

/// Flags mirroring the configuration keys. Values are parsed by the config
/// schema so a flag and a file line behave identically.
#[derive(Debug, Args)]
struct ConfigArgs {
    /// key = value configuration file; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    /// pinem or homodyne.
    #[arg(long)]
    experiment: Option<String>,
    /// l2 or kl.
    #[arg(long)]
    fidelity: Option<String>,
    /// semi or basis (homodyne reconstruction operator).
    #[arg(long)]
    operator_variant: Option<String>,
    /// fista or cp.
    #[arg(long)]
    solver: Option<String>,
    #[arg(long)]
    dim: Option<String>,
    #[arg(long)]
    n_theta: Option<String>,
    #[arg(long)]
    g_pump: Option<String>,
    /// PINEM probe coupling (default 3 * g_pump).
    #[arg(long)]
    coupling: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    x_min: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    x_max: Option<String>,
    #[arg(long)]
    n_bins: Option<String>,
    #[arg(long)]
    quad_order: Option<String>,
    #[arg(long)]
    cat_amplitude: Option<String>,
    #[arg(long)]
    jitter_sigma: Option<String>,
    #[arg(long)]
    jitter_samples: Option<String>,
    /// Comma-separated, strictly increasing.
    #[arg(long)]
    intensities: Option<String>,
    #[arg(long)]
    alpha0: Option<String>,
    #[arg(long)]
    mu: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    #[arg(long)]
    gap_threshold: Option<String>,
    #[arg(long)]
    gap_check_stride: Option<String>,
    #[arg(long)]
    max_iters: Option<String>,
    #[arg(long)]
    output_dir: Option<String>,
}

impl ConfigArgs {
    fn resolve(&self) -> Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(path) => ExperimentConfig::from_file(path)?,
            None => ExperimentConfig::default(),
        };
        let flags = [
            ("experiment", &self.experiment),
            ("fidelity", &self.fidelity),
            ("operator_variant", &self.operator_variant),
            ("solver", &self.solver),
            ("dim", &self.dim),
            ("n_theta", &self.n_theta),
            ("g_pump", &self.g_pump),
            ("coupling", &self.coupling),
            ("x_min", &self.x_min),
            ("x_max", &self.x_max),
            ("n_bins", &self.n_bins),
            ("quad_order", &self.quad_order),
            ("cat_amplitude", &self.cat_amplitude),
            ("jitter_sigma", &self.jitter_sigma),
            ("jitter_samples", &self.jitter_samples),
            ("intensities", &self.intensities),
            ("alpha0", &self.alpha0),
            ("mu", &self.mu),
            ("seed", &self.seed),
            ("gap_threshold", &self.gap_threshold),
            ("gap_check_stride", &self.gap_check_stride),
            ("max_iters", &self.max_iters),
            ("output_dir", &self.output_dir),
        ];
        for (key, value) in flags {
            if let Some(v) = value {
                cfg.set(key, v)?;
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn header(cfg: &ExperimentConfig, what: &str) -> Vec<String> {
    let mut lines = vec![format!(
        "{} {} {what}",
        env!("CARGO_PKG_NAME"),
        env!("CARGO_PKG_VERSION")
    )];
    lines.extend(cfg.to_lines());
    lines
}

fn output_dir(cfg: &ExperimentConfig) -> Result<&Path> {
    std::fs::create_dir_all(&cfg.output_dir).map_err(io_err(&cfg.output_dir))?;
    Ok(&cfg.output_dir)
}

fn simulate(args: &ConfigArgs) -> Result<()> {
    let cfg = args.resolve()?;
    let setup = Setup::new(&cfg)?;
    let dir = output_dir(&cfg)?;
    let comments = header(&cfg, "simulate");
    let thetas = setup.instrument.thetas();
    write_matrix(&dir.join("truth.txt"), &setup.truth, &comments)?;
    write_grid(&dir.join("exact.csv"), &setup.g_exact, thetas, &comments)?;
    for (row, &intensity) in cfg.intensities.iter().enumerate() {
        let obs = poisson_observe(
            &setup.g_exact,
            intensity,
            cfg.fidelity,
            &mut stream_rng(cfg.seed, data_stream(row)),
        )?;
        let mut c = comments.clone();
        c.push(format!("intensity = {}", fmt_f64(intensity)));
        c.push(format!("delta = {}", fmt_f64(obs.delta)));
        let path = dir.join(format!("data_{row}.csv"));
        write_grid(&path, &obs.g_obs, thetas, &c)?;
        println!("{}  intensity {intensity:e}  delta {:.6e}", path.display(), obs.delta);
    }
    println!("{}", dir.join("truth.txt").display());
    Ok(())
}

fn reconstruct(args: &ReconstructArgs) -> Result<()> {
    let cfg = args.config.resolve()?;
    let data = read_grid(&args.data)?;
    let setup = match &args.truth {
        Some(path) => Setup::with_truth(&cfg, read_matrix(path)?)?,
        None => Setup::with_truth(
            &cfg,
            qkl_tomo::HermitianMatrix::identity(cfg.dim()).scale(1.0 / cfg.dim() as f64),
        )?,
    };
    let expected = setup.g_exact.shape();
    if data.grid.shape() != expected {
        return Err(CliError::Config(format!(
            "{}: data grid is {:?} but the configured instrument produces {:?}",
            args.data.display(),
            data.grid.shape(),
            expected
        )));
    }
    let alpha = match (args.alpha, args.delta) {
        (Some(a), _) => a,
        (None, Some(d)) => cfg.alpha0() * d.sqrt(),
        (None, None) => unreachable!("clap requires --alpha or --delta"),
    };
    let report = setup.reconstruct(&data.grid, alpha)?;
    let dir = output_dir(&cfg)?;
    let mut comments = header(&cfg, "reconstruct");
    comments.push(format!("data = {}", args.data.display()));
    comments.push(format!("alpha = {}", fmt_f64(alpha)));
    comments.push(format!("stop_reason = {}", report.stop_reason));
    comments.push(format!("iterations = {}", report.iterations));
    comments.push(format!("final_gap = {}", fmt_f64(report.final_gap)));
    let matrix_path = dir.join("reconstruction.txt");
    write_matrix(&matrix_path, &report.solution, &comments)?;
    let records = report
        .gap_history
        .iter()
        .zip(&report.objective_history)
        .map(|(&(it, gap), &obj)| vec![it.to_string(), fmt_f64(gap), fmt_f64(obj)]);
    let history_path = dir.join("reconstruction_history.csv");
    write_csv_with_comments(&history_path, &comments, &["iteration", "gap", "objective"], records)?;

    println!(
        "{}: {} after {} iterations, gap {:.3e}, alpha {alpha:.6e}",
        matrix_path.display(),
        report.stop_reason,
        report.iterations,
        report.final_gap
    );
    if args.truth.is_some() {
        let m = setup.metrics(&report.solution)?;
        println!("trace_error      {:.6e}", m.trace_error);
        println!("qkl_to_truth     {:.6e}", m.qkl_to_truth);
        println!("qkl_penalty_gap  {:.6e}", m.qkl_penalty_gap);
        println!("data_residual    {:.6e}", m.data_residual);
        println!(
            "delta            {:.6e}",
            fit_value(cfg.fidelity, &data.grid, &setup.g_exact)?
        );
    }
    Ok(())
}

fn study(args: &ConfigArgs) -> Result<()> {
    let cfg = args.resolve()?;
    let study = run_study(&cfg)?;
    let csv = study.write(output_dir(&cfg)?)?;
    println!(
        "{:>12} {:>12} {:>12} {:>12} {:>10}  stop",
        "intensity", "delta", "alpha", "trace_error", "iterations"
    );
    for r in &study.rows {
        println!(
            "{:>12.3e} {:>12.4e} {:>12.4e} {:>12.4e} {:>10}  {}",
            r.intensity,
            r.delta,
            r.alpha,
            r.metrics.trace_error,
            r.iterations,
            r.status.label()
        );
    }
    println!("{}", csv.display());
    Ok(())
}

fn check(seed: u64) -> Result<bool> {
    let outcomes = run_checks(seed)?;
    let mut all = true;
    for o in &outcomes {
        println!(
            "{:<4} {:<36} {:>11.3e} <= {:<8.1e} ({:.2} s)",
            if o.passed() { "PASS" } else { "FAIL" },
            o.name,
            o.value,
            o.tolerance,
            o.seconds
        );
        all &= o.passed();
    }
    Ok(all)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Simulate(args) => simulate(args).map(|_| true),
        Command::Reconstruct(args) => reconstruct(args).map(|_| true),
        Command::Study(args) => study(args).map(|_| true),
        Command::Check { seed } => check(*seed),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
