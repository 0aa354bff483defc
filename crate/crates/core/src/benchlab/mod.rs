//! Benchmark signals, noise protocol, baselines, metrics and the Monte Carlo
//! harnesses built on top of them.

pub mod config;
pub mod convergence;
pub mod experiment;
pub mod metrics;
pub mod report;
pub mod signals;

pub use convergence::{run_convergence_experiment, ConvergenceConfig, ConvergenceRow, ConvergenceTable};
pub use experiment::{
    run_denoise_experiment, DenoiseReport, ExperimentConfig, Method, MethodSummary, ReplicationRecord, Snr,
};
pub use metrics::{add_noise_to_coeffs, snr_den, sure_threshold, universal_threshold};
pub use signals::{make_benchmark, Benchmark};
