//! Experiment orchestration: configuration, Monte Carlo sweeps and
//! result emission.
//!
//! The harness works in concrete `f64`; the numeric building blocks it
//! drives stay generic. Every run is keyed off a single seed so that a
//! sweep re-run with a different worker count produces byte-identical
//! output files.

pub mod config;
pub mod emit;
pub mod sweep;

pub use config::{parse_scheme, ExperimentConfig, PhyChoice, StopRule};
pub use emit::{
    emit_results, metrics_csv_string, write_metrics_csv, write_metrics_json, OutputFormat,
    METRICS_HEADER,
};
pub use sweep::{
    default_load_grid, default_snr_grid, peak_throughput, run_point, run_trial, sweep_load,
    sweep_snr, useful_bits_per_slot, MetricsRecord, TrialOutput,
};
