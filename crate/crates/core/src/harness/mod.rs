//! Config-driven experiment runner: seeded random inputs, LHS/RHS of each
//! weighted inequality, ratio rows and growth summaries across refinements.

pub mod config;
pub mod experiments;
pub mod report;

pub use config::{parse_real, Experiment, ExperimentConfig, RawConfig, WeightSpec};
pub use experiments::{draw_inputs, exponent_set, run_experiment, upsample, InputModel, Inputs};
pub use report::{emit_report, Provenance, Report, Row, Summary};
