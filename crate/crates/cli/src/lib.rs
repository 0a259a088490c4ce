//! Experiment harness behind the `duelgrad` binary: declarative configs,
//! seeded multi-trial runs, diagnostics suites and tuning tables.

pub mod config;
pub mod diagnose;
mod error;
pub mod experiment;
pub mod tune;

pub use config::{Algorithm, ExperimentConfig, ObjectiveSpec, TuningKind, TuningSpec};
pub use diagnose::{run_diagnostics, DiagnosticsReport, Suite};
pub use error::{HarnessError, HarnessResult};
pub use experiment::{run_experiment, Aggregate, ExperimentOutcome, SummaryRow};
