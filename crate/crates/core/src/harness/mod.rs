//! Experiment configs, the run loop, and CSV output.

mod config;
mod csv;
mod run;

pub use config::{ExperimentConfig, Mode, PatternKind, PolicyKind};
pub use csv::{emit_csv, format_csv, parse_csv, HEADER, UNDEFINED};
pub use run::{
    build_policy, compute_rsr, merge_buckets, run_experiment, run_online, stream, ExperimentReport,
    OnlineRun, Replication,
};
