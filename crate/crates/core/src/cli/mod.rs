//! Configuration and subcommands behind the `carousel-eval` binary.

mod commands;
mod config;

pub use commands::{
    cmd_prepare, cmd_report, cmd_run, cmd_tune, layout, plan, Command, DatasetStats, TuneSummary,
    Workspace,
};
pub use config::{
    AlgorithmConfig, DataConfig, EvaluationConfig, FixedSpec, OutputConfig, Overrides, RunConfig,
    TuningConfig, DATA_DIR_ENV,
};
