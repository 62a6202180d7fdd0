//! Reproducible experiments over grids of `(k, R)` and the verification
//! suite, as driven by the `ellipsoid-entropy` binary.

pub mod commands;
pub mod config;
pub mod rows;
pub mod verify;

pub use commands::{
    cmd_bound, cmd_count, cmd_sweep, BoundOutput, RunOptions, SweepOutput, SweepSummary,
};
pub use config::{ExperimentConfig, Instance, ModeChoice, ProfileSpec, VerifySettings};
pub use rows::{write_json, write_rows, OutputFormat, ResultRow, RowStatus, SCHEMA_VERSION};
pub use verify::{cmd_verify, random_signal, SuiteResult, VerifyReport};
