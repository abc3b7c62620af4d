//! Shared run plumbing: the artifact directory layout, command-line
//! overrides, and loading a configuration or manifest into an effective
//! run description.

use std::fs;
use std::path::{Path, PathBuf};

use xltime_core::config::{load_run_input, RunConfig, RunInput, RunManifest};
use xltime_core::taskgen::{TaskKind, TaskRole};

use crate::CliError;

/// Values of the global flags, applied on top of the loaded
/// configuration. `offline` can only tighten (force offline mode on).
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub offline: bool,
    pub seed: Option<u64>,
    pub output: Option<PathBuf>,
}

/// A configuration ready to act on, plus — when it came from a manifest
/// — the manifest exactly as stored, for drift checks and score
/// reproduction.
#[derive(Debug)]
pub struct LoadedRun {
    /// File contents with command-line overrides applied and validated.
    pub config: RunConfig,
    /// The unmodified on-disk manifest, when the input was one.
    pub source_manifest: Option<RunManifest>,
}

/// Loads `path` (a configuration or a manifest), applies `overrides`,
/// and validates the resulting configuration.
pub fn load_input(path: &Path, overrides: &Overrides) -> Result<LoadedRun, CliError> {
    let (mut config, source_manifest) = match load_run_input(path)? {
        RunInput::Config(c) => (c, None),
        RunInput::Manifest(m) => (m.config.clone(), Some(m)),
    };
    if overrides.offline {
        config.offline = true;
    }
    if let Some(seed) = overrides.seed {
        config.train.seed = seed;
    }
    if let Some(output) = &overrides.output {
        config.output_dir = std::path::absolute(output)
            .map_err(|e| CliError::Data(format!("{}: {e}", output.display())))?;
    }
    config.validate()?;
    Ok(LoadedRun {
        config,
        source_manifest,
    })
}

/// The layout under one run directory: `tasks/`, `checkpoints/`,
/// `logs/`, `reports/`, and `manifest.json`.
#[derive(Debug, Clone)]
pub struct RunDirs {
    pub root: PathBuf,
    pub tasks: PathBuf,
    pub checkpoints: PathBuf,
    pub logs: PathBuf,
    pub reports: PathBuf,
    pub manifest: PathBuf,
}

impl RunDirs {
    pub fn new(root: &Path) -> Self {
        RunDirs {
            root: root.to_path_buf(),
            tasks: root.join("tasks"),
            checkpoints: root.join("checkpoints"),
            logs: root.join("logs"),
            reports: root.join("reports"),
            manifest: root.join("manifest.json"),
        }
    }

    /// Creates the directory tree (idempotent).
    pub fn create(&self) -> Result<(), CliError> {
        for dir in [
            &self.root,
            &self.tasks,
            &self.checkpoints,
            &self.logs,
            &self.reports,
        ] {
            fs::create_dir_all(dir).map_err(|e| crate::write_err(dir, e))?;
        }
        Ok(())
    }
}

/// The on-disk name of one task file: CoNLL for primary tasks,
/// JSON-lines for secondary.
pub fn task_file(tasks_dir: &Path, kind: &TaskKind) -> PathBuf {
    let ext = match kind.role {
        TaskRole::Primary => "conll",
        TaskRole::Secondary => "jsonl",
    };
    tasks_dir.join(format!("{}.{ext}", kind.tag()))
}

/// The task identities a configuration implies, in training order:
/// primary then secondary for each source language.
pub fn expected_tasks(config: &RunConfig) -> Result<Vec<TaskKind>, CliError> {
    let mut kinds = Vec::new();
    for source in &config.source_languages {
        for role in [TaskRole::Primary, TaskRole::Secondary] {
            kinds.push(
                TaskKind::new(role, source.as_str(), config.target_language.as_str())
                    .map_err(|e| CliError::Data(e.to_string()))?,
            );
        }
    }
    Ok(kinds)
}
