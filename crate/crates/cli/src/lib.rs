//! Experiment harness for the poisoning attacks in `gssl_core`: JSON
//! configuration, budget and seed sweeps with CSV/JSON reports, and the
//! trust-region benchmark.

pub mod bench;
pub mod config;
pub mod experiment;
pub mod reference;

pub use config::{AttackKind, ConfigDocument, ConfigError, DatasetSource, ExperimentConfig, Knowledge, SweepConfig};
pub use experiment::{run_experiment, write_report, AttackReport, HarnessError, ReportRow};
