//! Experiment driver for quantum-relative-entropy tomography: ground-truth
//! states, Poisson data, noise-level sweeps and their CSV/SVG artifacts.

pub mod checks;
pub mod config;
pub mod error;
pub mod formats;
pub mod noise;
pub mod plot;
pub mod states;
pub mod study;

pub use config::{Experiment, ExperimentConfig};
pub use error::{CliError, Result};
pub use study::{run_study, Setup, Study, StudyRow};

#[cfg(doctest)]
#[doc = include_str!("../../../book/src/experiments.md")]
pub struct Guide;
