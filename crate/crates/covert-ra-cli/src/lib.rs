//! Benchmark harness for the rotatable-antenna covert communication
//! optimizer: experiment configuration, seeded sweep execution, and CSV
//! output. The `covert-ra` binary in this crate drives everything from the
//! command line.

pub mod config;
pub mod sweep;

pub use config::{load_config, parse_config, ConfigError, ExperimentConfig, SweepKind};
pub use sweep::{derived_seed, emit_csv, parse_csv, run_sweep, ResultRow, SplitMix64, CSV_HEADER};
