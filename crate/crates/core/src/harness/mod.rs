//! Scenario sweeps: configuration, dataset generation, training, Monte
//! Carlo evaluation, `results.csv` and plots.

pub mod config;
pub mod experiment;
pub mod plot;
pub mod results;
pub mod selftest;

pub use config::{Estimator, ExperimentConfig, OUTPUT_DIR_ENV};
pub use experiment::{evaluate, evaluate_point, generate, sweep, train, PointEvaluation, PointModels};
pub use results::{read_results, write_results, TrialResult, CSV_HEADER};
