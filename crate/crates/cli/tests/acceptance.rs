//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each and
//! exits non-zero if any criterion fails.

use std::process::ExitCode;
use std::time::Instant;

use qkl_tomo::forward::{homodyne_build, pinem_build, HomodyneVariant, DEFAULT_QUAD_ORDER};
use qkl_tomo_cli::checks::{
    adjoint_pairing, bessel_normalization, bregman_identity, g_inverse_residual, gap_guarantee, hermite_orthonormality,
    moreau_residual, pinem_conservation, prox_optimality, solver_agreement, trace_lower_bound, trace_norm_bound,
    young_equality, ToyProblem,
};
use qkl_tomo_cli::{run_study, ExperimentConfig, StudyRow};

const SEED: u64 = 2024;

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        passed,
        detail: detail.into(),
    }
}

fn within(value: f64, tol: f64) -> Outcome {
    outcome(value <= tol, format!("worst {value:.3e} (tolerance {tol:.0e})"))
}

fn prox_optimality_sweep() -> Outcome {
    let start = Instant::now();
    let worst = prox_optimality(100, SEED).expect("prox sweep");
    let secs = start.elapsed().as_secs_f64();
    let mut o = within(worst, 1e-9);
    o.passed &= secs < 5.0;
    o.detail.push_str(&format!(", {secs:.2} s (limit 5 s)"));
    o
}

fn ladder_config(experiment: &str, n_theta: usize) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::default();
    cfg.set("experiment", experiment).unwrap();
    cfg.set("fidelity", "l2").unwrap();
    cfg.set("solver", "fista").unwrap();
    cfg.set("n_theta", &n_theta.to_string()).unwrap();
    cfg.set("intensities", "1e3,1e5,1e7,1e9").unwrap();
    cfg.set("gap_threshold", "1e-6").unwrap();
    cfg
}

fn trace_errors(rows: &[StudyRow]) -> Vec<f64> {
    rows.iter()
        .map(|r| if r.is_ok() { r.metrics.trace_error } else { f64::NAN })
        .collect()
}

fn decreasing_by_a_decade(errors: &[f64]) -> bool {
    errors.iter().all(|e| e.is_finite())
        && errors.windows(2).all(|w| w[1] < w[0])
        && errors[errors.len() - 1] < 0.1 * errors[0]
}

fn fmt_errors(errors: &[f64]) -> String {
    errors
        .iter()
        .map(|e| format!("{e:.3e}"))
        .collect::<Vec<_>>()
        .join(" > ")
}

/// Criteria 10 and 11 share the homodyne semi run.
fn convergence_studies() -> (Outcome, Outcome) {
    let start = Instant::now();
    let pinem = run_study(&ladder_config("pinem", 20)).expect("PINEM study");
    let semi_cfg = ladder_config("homodyne", 30);
    let semi = run_study(&semi_cfg).expect("homodyne study");
    let secs = start.elapsed().as_secs_f64();

    let pe = trace_errors(&pinem.rows);
    let he = trace_errors(&semi.rows);
    let ok10 = decreasing_by_a_decade(&pe) && decreasing_by_a_decade(&he) && secs < 600.0;
    let c10 = outcome(
        ok10,
        format!(
            "PINEM {} (last/first {:.3}); homodyne {} (last/first {:.3}); {secs:.1} s (limit 600 s)",
            fmt_errors(&pe),
            pe[3] / pe[0],
            fmt_errors(&he),
            he[3] / he[0]
        ),
    );

    let mut basis_cfg = semi_cfg.clone();
    basis_cfg.operator_variant = HomodyneVariant::Basis;
    let basis = run_study(&basis_cfg).expect("homodyne basis study");
    let be = trace_errors(&basis.rows);
    let (s, b) = (he[3], be[3]);
    let c11 = outcome(
        b.is_finite() && s.is_finite() && b >= 2.0 * s,
        format!(
            "trace_error at 1e9: basis {b:.3e} vs semi {s:.3e}, ratio {:.2} (required >= 2)",
            b / s
        ),
    );
    (c10, c11)
}

fn main() -> ExitCode {
    let toy = ToyProblem::new().expect("toy problem");
    let pinem = pinem_build(41, 5.19, 100).expect("PINEM model");
    let homodyne = homodyne_build(21, 60, -5.0, 5.0, 120, DEFAULT_QUAD_ORDER).expect("homodyne model");

    let mut results: Vec<(u32, &str, Outcome)> = vec![
        (1, "prox optimality", prox_optimality_sweep()),
        (2, "Moreau identity", within(moreau_residual(100, SEED).unwrap(), 1e-9)),
        (
            3,
            "Young equality",
            within(young_equality(100, SEED + 1).unwrap(), 1e-8),
        ),
        (
            4,
            "Bregman identity",
            within(bregman_identity(100, SEED + 2).unwrap(), 1e-8),
        ),
    ];
    {
        let a = trace_norm_bound(200, SEED + 3).unwrap();
        let b = trace_lower_bound(200, SEED + 4).unwrap();
        results.push((
            5,
            "inequality suite",
            outcome(
                a <= 1e-10 && b <= 1e-10,
                format!("largest violations: trace-norm bound {a:.3e}, trace bound {b:.3e} (slack 1e-10)"),
            ),
        ));
    }
    {
        let start = Instant::now();
        let g = gap_guarantee(&toy).unwrap();
        let secs = start.elapsed().as_secs_f64();
        results.push((
            6,
            "duality-gap guarantee",
            outcome(
                g.worst_excess <= 1e-9 && g.checks >= 2 && secs < 30.0,
                format!(
                    "max QKL(rho, rho_ref) - gap = {:.3e} over {} checks, {secs:.2} s",
                    g.worst_excess, g.checks
                ),
            ),
        ));
    }
    results.push((
        7,
        "FISTA / Chambolle-Pock agreement",
        within(solver_agreement(&toy).unwrap(), 1e-5),
    ));
    {
        let p = adjoint_pairing(&pinem, 50, SEED + 5).unwrap();
        let s = adjoint_pairing(&homodyne.operator(HomodyneVariant::Semi), 50, SEED + 6).unwrap();
        let b = adjoint_pairing(&homodyne.operator(HomodyneVariant::Basis), 50, SEED + 7).unwrap();
        let worst = p.max(s).max(b);
        let mut o = within(worst, 1e-10);
        o.detail = format!("PINEM {p:.2e}, semi {s:.2e}, basis {b:.2e} (tolerance 1e-10)");
        results.push((8, "adjoint pairing", o));
    }
    results.push((
        9,
        "PINEM probability conservation",
        within(pinem_conservation(&pinem, 20, SEED + 8).unwrap(), 1e-8),
    ));
    let (c10, c11) = convergence_studies();
    results.push((10, "convergence-study regression", c10));
    results.push((11, "homodyne operator-variant divergence", c11));
    {
        let g = g_inverse_residual(20_000).unwrap();
        let b = bessel_normalization().unwrap();
        let h = hermite_orthonormality(40);
        results.push((
            12,
            "special-function oracles",
            outcome(
                g <= 1e-12 && b <= 1e-10 && h <= 1e-8,
                format!("g_inverse {g:.2e} (1e-12), Bessel {b:.2e} (1e-10), Hermite {h:.2e} (1e-8)"),
            ),
        ));
    }

    let mut failures = 0;
    for (id, name, o) in &results {
        println!(
            "criterion {id:>2} {}: {name}: {}",
            if o.passed { "PASS" } else { "FAIL" },
            o.detail
        );
        failures += usize::from(!o.passed);
    }
    println!("{} of {} criteria passed", results.len() - failures, results.len());
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
