//! Factorial experiments end to end: plan expansion, concurrent trial
//! execution, durable JSONL transcripts with resume, aggregation and
//! report exports.

mod aggregate;
mod plan;
pub mod reference;
mod report;
mod store;
mod trial;

use thiserror::Error;

pub use aggregate::{aggregate, aggregate_records, ExperimentAggregate, StyleSummary};
pub use plan::{expand_plan, trial_id, trial_seed, ExperimentPlan, GameSettings, TrialSpec};
pub use report::{render_report, report, ReportKind};
pub use store::{
    load_manifest, load_records, records_equivalent, replay_trial, run_experiment, run_with_factory, Manifest,
    RunOptions, RunSummary, MANIFEST_FILE, TRIALS_FILE,
};
pub use trial::{play_trial, simulate, TrialRecord, TrialStatus};

#[derive(Debug, Error)]
pub enum RunError {
    #[error("invalid plan: {0}")]
    InvalidPlan(String),
    #[error("output directory holds a different experiment: {0}")]
    OutputConflict(String),
    #[error("no completed trials")]
    EmptyExperiment,
    #[error("unknown report kind '{0}'")]
    UnknownReport(String),
    #[error("accounting invariant violated in trial {0}")]
    Accounting(String),
    #[error("corrupt transcript file at line {line}: {msg}")]
    Corrupt { line: usize, msg: String },
    #[error("trial {0} not found")]
    TrialNotFound(String),
    #[error(transparent)]
    Agent(#[from] crate::agents::AgentError),
    #[error(transparent)]
    Prompt(#[from] crate::prompt::PromptError),
    #[error(transparent)]
    Stats(#[from] crate::stats::StatsError),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}
