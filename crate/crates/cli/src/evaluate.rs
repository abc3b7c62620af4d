//! The evaluate command: strict-match scoring of checkpoints on the
//! target-language test set.

use std::fs;
use std::path::PathBuf;

use xltime_core::config::RunManifest;
use xltime_core::corpus::read_conll;
use xltime_core::eval::{aggregate_runs, MatchMode, MeanReport, ScoreReport};
use xltime_core::trainer::{evaluate_model, Checkpoint};

use crate::run::{LoadedRun, RunDirs};
use crate::CliError;

/// Which match modes to score.
#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum ModeChoice {
    /// Span boundaries and expression type must both match.
    WithType,
    /// Span boundaries alone decide a match.
    WithoutType,
    /// Score both ways.
    Both,
}

impl ModeChoice {
    fn modes(self) -> &'static [MatchMode] {
        match self {
            ModeChoice::WithType => &[MatchMode::WithType],
            ModeChoice::WithoutType => &[MatchMode::WithoutType],
            ModeChoice::Both => &[MatchMode::WithoutType, MatchMode::WithType],
        }
    }
}

/// Scores for the evaluated checkpoints.
#[derive(Debug)]
pub struct EvaluateOutcome {
    /// Per checkpoint: the reports in mode order.
    pub per_checkpoint: Vec<(PathBuf, Vec<ScoreReport>)>,
    /// Mean over checkpoints, one per mode, aligned with the reports.
    pub means: Vec<MeanReport>,
    /// Where the JSON report was written.
    pub report_path: PathBuf,
}

/// Loads each checkpoint, tags the target test set, and scores the
/// result in the requested mode(s). With no explicit checkpoint list the
/// run manifest's recorded checkpoints are used. Writes
/// `reports/evaluate.json` under the run directory.
pub fn cmd_evaluate(
    loaded: &LoadedRun,
    checkpoints: &[PathBuf],
    mode: ModeChoice,
) -> Result<EvaluateOutcome, CliError> {
    let config = &loaded.config;
    let test_path = config.datasets[&config.target_language]
        .test
        .as_ref()
        .expect("validated: target has a test dataset");
    let test = read_conll(test_path, &config.target_language)?;

    let dirs = RunDirs::new(&config.output_dir);
    let list: Vec<PathBuf> = if checkpoints.is_empty() {
        let manifest = match &loaded.source_manifest {
            Some(m) => m.clone(),
            None => {
                if !dirs.manifest.exists() {
                    return Err(CliError::Data(format!(
                        "no checkpoints given and no manifest at {}: train first \
                         or pass --checkpoint",
                        dirs.manifest.display()
                    )));
                }
                RunManifest::load(&dirs.manifest)?
            }
        };
        if manifest.runs.is_empty() {
            return Err(CliError::Data(
                "the manifest records no training runs: train first or pass --checkpoint"
                    .to_string(),
            ));
        }
        manifest.runs.iter().map(|r| r.checkpoint.clone()).collect()
    } else {
        checkpoints.to_vec()
    };

    let modes = mode.modes();
    let mut per_checkpoint = Vec::new();
    for dir in &list {
        let checkpoint = Checkpoint::load(dir).map_err(|e| CliError::Data(e.to_string()))?;
        for sequence in &test {
            for label in &sequence.labels {
                if checkpoint.model.vocab.index_of(*label).is_none() {
                    return Err(CliError::Evaluation(format!(
                        "label `{label}` from the test data is not in the vocabulary \
                         of checkpoint {}",
                        dir.display()
                    )));
                }
            }
        }
        let mut reports = Vec::new();
        for m in modes {
            reports
                .push(evaluate_model(&checkpoint.model, &test, *m)
                    .map_err(|e| CliError::Evaluation(e.to_string()))?);
        }
        per_checkpoint.push((dir.clone(), reports));
    }

    let mut means = Vec::new();
    for (i, _) in modes.iter().enumerate() {
        let column: Vec<ScoreReport> = per_checkpoint
            .iter()
            .map(|(_, reports)| reports[i].clone())
            .collect();
        means.push(aggregate_runs(&column)?);
    }

    fs::create_dir_all(&dirs.reports).map_err(|e| crate::write_err(&dirs.reports, e))?;
    let report_path = dirs.reports.join("evaluate.json");
    let value = serde_json::json!({
        "test_set": test_path,
        "checkpoints": per_checkpoint
            .iter()
            .map(|(path, reports)| {
                serde_json::json!({
                    "checkpoint": path,
                    "reports": reports.iter().map(|r| r.to_report_json()).collect::<Vec<_>>(),
                })
            })
            .collect::<Vec<_>>(),
        "means": means.iter().map(|m| m.to_report_json()).collect::<Vec<_>>(),
    });
    let text = serde_json::to_string_pretty(&value).expect("report serializes");
    fs::write(&report_path, text + "\n").map_err(|e| crate::write_err(&report_path, e))?;

    Ok(EvaluateOutcome {
        per_checkpoint,
        means,
        report_path,
    })
}
