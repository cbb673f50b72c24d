//! Prover/verifier agent orchestration over a crash-safe run directory.

pub mod agent;
pub mod cli;
pub mod config;
pub mod orchestrator;
pub mod plan_yaml;
pub mod report_file;
pub mod run_state;
pub mod urls;
pub mod verification;
