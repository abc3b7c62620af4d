//! The train command: seeded multi-run training from built task files,
//! producing checkpoints, step logs, score reports, and a manifest.

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::PathBuf;

use xltime_core::config::{RunManifest, RunRecord};
use xltime_core::corpus::read_conll;
use xltime_core::eval::MeanReport;
use xltime_core::taskgen::{read_secondary_jsonl, TaskDataset, TaskRole};
use xltime_core::trainer::multi_seed_run;

use crate::run::{expected_tasks, LoadedRun, RunDirs};
use crate::CliError;

/// What a training run produced.
#[derive(Debug)]
pub struct TrainSummary {
    /// One record per completed seeded run, in seed order.
    pub records: Vec<RunRecord>,
    /// Best-validation epoch of each run, aligned with `records`.
    pub best_epochs: Vec<usize>,
    pub mean_with_type: Option<MeanReport>,
    pub mean_without_type: Option<MeanReport>,
    pub manifest_path: PathBuf,
    /// When re-executing a manifest that recorded scores: whether the
    /// fresh scores matched bit for bit (`None` when no comparison
    /// applied).
    pub reproduced: Option<bool>,
}

/// Trains `n_runs` seeded models on the task files a previous build
/// wrote, evaluates each on the target test set, and writes
/// `checkpoints/seed_*/`, `logs/seed_*.jsonl`, `reports/`, and
/// `manifest.json` under the run directory.
///
/// Preconditions: the task files exist (run the build step first) and
/// are byte-identical to what the manifest recorded. When the input was
/// itself a manifest with recorded scores and the same hyperparameters,
/// the fresh scores are compared against the recorded ones and any
/// difference is an error — re-execution must reproduce them exactly.
pub fn cmd_train(loaded: &LoadedRun) -> Result<TrainSummary, CliError> {
    let config = &loaded.config;
    if config.backbone != "toy" {
        return Err(CliError::Data(format!(
            "unsupported backbone `{}`; available: toy",
            config.backbone
        )));
    }

    let dirs = RunDirs::new(&config.output_dir);
    let build_manifest: RunManifest = match &loaded.source_manifest {
        Some(m) => m.clone(),
        None => {
            if !dirs.manifest.exists() {
                return Err(CliError::Data(format!(
                    "no manifest at {}: run the build step first",
                    dirs.manifest.display()
                )));
            }
            RunManifest::load(&dirs.manifest)?
        }
    };
    let drift = build_manifest.input_drift()?;
    if !drift.is_empty() {
        return Err(CliError::Data(format!(
            "inputs changed since the manifest was written: {}",
            drift.join(", ")
        )));
    }

    let mut tasks: Vec<TaskDataset> = Vec::new();
    for kind in expected_tasks(config)? {
        let tag = kind.tag();
        let path = build_manifest.task_files.get(&tag).ok_or_else(|| {
            CliError::Data(format!("task `{tag}` is not in the manifest: rebuild first"))
        })?;
        let task = match kind.role {
            TaskRole::Primary => {
                let sequences = read_conll(path, &kind.source_language)?;
                TaskDataset::primary(&kind.source_language, &kind.target_language, sequences)?
            }
            TaskRole::Secondary => {
                read_secondary_jsonl(path, &kind.source_language, &kind.target_language)?
            }
        };
        tasks.push(task);
    }

    let target = &config.datasets[&config.target_language];
    let validation = read_conll(
        target.validation.as_ref().expect("validated: target has validation"),
        &config.target_language,
    )?;
    let test = read_conll(
        target.test.as_ref().expect("validated: target has test"),
        &config.target_language,
    )?;

    dirs.create()?;
    let logs_dir = dirs.logs.clone();
    let mut make_log = |seed: u64| -> std::io::Result<Box<dyn Write>> {
        let file = File::create(logs_dir.join(format!("seed_{seed}.jsonl")))?;
        Ok(Box::new(BufWriter::new(file)) as Box<dyn Write>)
    };

    let outcome = multi_seed_run(
        &config.train,
        &tasks,
        &validation,
        &test,
        config.n_runs,
        Some(&mut make_log),
    )?;

    let mut records = Vec::new();
    let mut best_epochs = Vec::new();
    for run in &outcome.runs {
        let checkpoint_dir = dirs.checkpoints.join(format!("seed_{}", run.seed));
        run.checkpoint.save(&checkpoint_dir)?;
        best_epochs.push(run.checkpoint.epoch);
        records.push(RunRecord {
            seed: run.seed,
            checkpoint: checkpoint_dir,
            with_type: run.with_type.clone(),
            without_type: run.without_type.clone(),
        });
    }
    write_reports(&dirs, &records, &best_epochs, &outcome.mean_with_type, &outcome.mean_without_type)?;

    let mut manifest = RunManifest::for_config(config)?;
    manifest.task_files = build_manifest.task_files.clone();
    manifest.task_digests = build_manifest.task_digests.clone();
    manifest.runs = records.clone();
    manifest.mean_with_type = outcome.mean_with_type.clone();
    manifest.mean_without_type = outcome.mean_without_type.clone();
    manifest.save(&dirs.manifest)?;

    if !outcome.failures.is_empty() {
        let details: Vec<String> = outcome
            .failures
            .iter()
            .map(|f| format!("seed {}: {}", f.seed, f.message))
            .collect();
        return Err(CliError::Training(format!(
            "{} of {} runs failed ({}); completed runs are recorded in {}",
            outcome.failures.len(),
            config.n_runs,
            details.join("; "),
            dirs.manifest.display()
        )));
    }

    let reproduced = match reproduction_target(loaded) {
        Some(original) => {
            let matches = scores_match(original, &manifest);
            if !matches {
                return Err(CliError::Evaluation(format!(
                    "re-execution did not reproduce the recorded scores: \
                     recorded mean without-type F1 {:?}, fresh {:?}",
                    original.mean_without_type.as_ref().map(|m| m.f1),
                    manifest.mean_without_type.as_ref().map(|m| m.f1),
                )));
            }
            Some(true)
        }
        None => None,
    };

    Ok(TrainSummary {
        records,
        best_epochs,
        mean_with_type: outcome.mean_with_type,
        mean_without_type: outcome.mean_without_type,
        manifest_path: dirs.manifest,
        reproduced,
    })
}

/// The manifest to reproduce, when the input was a manifest with
/// recorded runs under the same hyperparameters and run count.
fn reproduction_target(loaded: &LoadedRun) -> Option<&RunManifest> {
    let original = loaded.source_manifest.as_ref()?;
    let comparable = !original.runs.is_empty()
        && original.config.train == loaded.config.train
        && original.config.n_runs == loaded.config.n_runs;
    comparable.then_some(original)
}

/// Bit-exact score equality between the recorded manifest and a fresh
/// one: per-run reports (by seed) and both means.
fn scores_match(original: &RunManifest, fresh: &RunManifest) -> bool {
    let runs_match = original.runs.len() == fresh.runs.len()
        && original.runs.iter().zip(&fresh.runs).all(|(a, b)| {
            a.seed == b.seed && a.with_type == b.with_type && a.without_type == b.without_type
        });
    runs_match
        && original.mean_with_type == fresh.mean_with_type
        && original.mean_without_type == fresh.mean_without_type
}

/// Writes `reports/run_seed_<seed>.json` per run and `reports/mean.json`,
/// in the rounded human-facing report form.
fn write_reports(
    dirs: &RunDirs,
    records: &[RunRecord],
    best_epochs: &[usize],
    mean_with_type: &Option<MeanReport>,
    mean_without_type: &Option<MeanReport>,
) -> Result<(), CliError> {
    let mut report_files: BTreeMap<PathBuf, serde_json::Value> = BTreeMap::new();
    for (record, epoch) in records.iter().zip(best_epochs) {
        report_files.insert(
            dirs.reports.join(format!("run_seed_{}.json", record.seed)),
            serde_json::json!({
                "seed": record.seed,
                "best_epoch": epoch,
                "checkpoint": record.checkpoint,
                "with_type": record.with_type.to_report_json(),
                "without_type": record.without_type.to_report_json(),
            }),
        );
    }
    report_files.insert(
        dirs.reports.join("mean.json"),
        serde_json::json!({
            "runs": records.len(),
            "with_type": mean_with_type.as_ref().map(|m| m.to_report_json()),
            "without_type": mean_without_type.as_ref().map(|m| m.to_report_json()),
        }),
    );
    for (path, value) in report_files {
        let text = serde_json::to_string_pretty(&value).expect("report serializes");
        fs::write(&path, text + "\n").map_err(|e| crate::write_err(&path, e))?;
    }
    Ok(())
}
