//! Config-driven experiments: parse, run the checks, write reports.

pub mod config;
pub mod run;

pub use config::{DataSpec, Experiment, ExperimentConfig, ForwardSpec, NoiseConfig, OutputFormat, OutputSpec, ProblemSpec};
pub use run::{
    compute_reports, error_exit_code, exit, overall_verdict, run_experiment, verdict_exit_code, verify_manifest,
    CheckSummary, OutputFile, RunManifest, RunOptions, VerifyReport, MANIFEST_FILE,
};
