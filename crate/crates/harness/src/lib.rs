//! Experiment harness for the bilevel solvers: config files in, CSV
//! trajectories out, plus a two-run comparison mode.

pub mod config;
pub mod run;

pub use config::{load_config, parse_config, Algorithm, ConfigError, ProblemSpec, RunConfig};
pub use run::{
    build_problem, compare_runs, resolve_output, run_experiment, HarnessError, MetricsRow,
    ProblemInstance, SeedRun, CSV_HEADER, OUT_DIR_ENV,
};
