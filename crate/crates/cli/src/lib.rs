//! Command implementations behind the `xltime` binary.
//!
//! Five subcommands drive the pipeline, all steered by one declarative
//! run configuration (see `xltime_core::config`):
//!
//! * [`convert`] — corpus directories (TimeML or CoNLL) into per-document
//!   CoNLL files plus corpus statistics;
//! * [`build`] — the training tasks: one token-labeled primary dataset
//!   and one machine-translated sentence-classification dataset per
//!   source language;
//! * [`train`] — seeded multi-run training with checkpoints, step logs,
//!   score reports, and a reproducibility manifest;
//! * [`evaluate`] — strict-match scoring of checkpoints on the target
//!   test set;
//! * [`report`] — a rendering of the scores a manifest records.
//!
//! Every command is re-runnable from the manifest it wrote: inputs are
//! content-digested, and re-execution in offline mode reproduces the
//! recorded scores bit for bit (the train command verifies this when
//! given a manifest).

pub mod build;
pub mod convert;
pub mod evaluate;
pub mod report;
pub mod run;
pub mod train;

use thiserror::Error;

pub use build::{cmd_build, BuildOutcome};
pub use convert::{cmd_convert, ConvertOutcome, InputFormat};
pub use evaluate::{cmd_evaluate, EvaluateOutcome, ModeChoice};
pub use report::cmd_report;
pub use run::{load_input, LoadedRun, Overrides, RunDirs};
pub use train::{cmd_train, TrainSummary};

/// Command failures, each carrying its process exit code.
///
/// The code space is part of the CLI contract: `0` success, `2` usage,
/// `3` data validation, `4` training failure, `5` evaluation mismatch.
#[derive(Debug, Error)]
pub enum CliError {
    /// The invocation itself is unusable (missing or contradictory
    /// arguments). Exit code 2.
    #[error("{0}")]
    Usage(String),
    /// Inputs failed validation: configuration, corpora, task files,
    /// caches, or paths. Exit code 3.
    #[error("{0}")]
    Data(String),
    /// Training started and failed. Exit code 4.
    #[error("{0}")]
    Training(String),
    /// Scores cannot be computed or disagree with recorded ones.
    /// Exit code 5.
    #[error("{0}")]
    Evaluation(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Data(_) => 3,
            CliError::Training(_) => 4,
            CliError::Evaluation(_) => 5,
        }
    }
}

impl From<xltime_core::config::ConfigError> for CliError {
    fn from(e: xltime_core::config::ConfigError) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<xltime_core::corpus::CorpusError> for CliError {
    fn from(e: xltime_core::corpus::CorpusError) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<xltime_core::taskgen::TaskGenError> for CliError {
    fn from(e: xltime_core::taskgen::TaskGenError) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<xltime_core::taskgen::TranslateError> for CliError {
    fn from(e: xltime_core::taskgen::TranslateError) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<xltime_core::trainer::TrainError> for CliError {
    fn from(e: xltime_core::trainer::TrainError) -> Self {
        CliError::Training(e.to_string())
    }
}

impl From<xltime_core::eval::EvalError> for CliError {
    fn from(e: xltime_core::eval::EvalError) -> Self {
        CliError::Evaluation(e.to_string())
    }
}

/// Artifact-writing failure at `path`, mapped to the data exit code.
fn write_err(path: &std::path::Path, e: std::io::Error) -> CliError {
    CliError::Data(format!("{}: {e}", path.display()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes_follow_the_contract() {
        assert_eq!(CliError::Usage(String::new()).exit_code(), 2);
        assert_eq!(CliError::Data(String::new()).exit_code(), 3);
        assert_eq!(CliError::Training(String::new()).exit_code(), 4);
        assert_eq!(CliError::Evaluation(String::new()).exit_code(), 5);
    }
}
