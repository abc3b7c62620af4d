//! The build command: task dataset files from a run configuration.

use std::collections::BTreeMap;
use std::path::PathBuf;

use xltime_core::config::{digest_file, RunConfig, RunManifest, TranslationProvider};
use xltime_core::corpus::read_conll;
use xltime_core::taskgen::{
    build_all_tasks, write_secondary_jsonl, FixtureClient, HttpTranslationClient, TaskItems,
    TranslationCache, TranslationClient, Translator,
};

use crate::run::{task_file, RunDirs};
use crate::CliError;

/// What a build produced.
#[derive(Debug)]
pub struct BuildOutcome {
    /// Task tag → file written under `tasks/`.
    pub task_files: BTreeMap<String, PathBuf>,
    /// Source sentences dropped because their translation failed.
    pub skipped: usize,
    pub manifest_path: PathBuf,
}

/// Builds one primary and one secondary task per source language and
/// writes them under `<output_dir>/tasks/`, plus a manifest recording
/// input digests. With a frozen translation cache the outputs are byte
/// deterministic; rebuilding writes identical files.
///
/// Rebuilding resets the manifest: task files are the ground the
/// recorded scores stood on, so any previous runs are cleared.
pub fn cmd_build(config: &RunConfig) -> Result<BuildOutcome, CliError> {
    let dirs = RunDirs::new(&config.output_dir);
    dirs.create()?;

    let mut sources = Vec::new();
    for language in &config.source_languages {
        let path = config.datasets[language]
            .train
            .as_ref()
            .expect("validated: every source has a train dataset");
        sources.push((language.clone(), read_conll(path, language)?));
    }

    let cache = TranslationCache::open(&config.translation.cache_path)?;
    let client: Option<Box<dyn TranslationClient>> = match config.translation.provider {
        TranslationProvider::Fixture => {
            let path = config
                .translation
                .fixture_path
                .as_ref()
                .expect("validated: fixture provider has a table");
            Some(Box::new(FixtureClient::from_file(path)?))
        }
        TranslationProvider::Http => {
            let endpoint = config
                .translation
                .endpoint
                .as_ref()
                .expect("validated: http provider has an endpoint");
            let key_env = config
                .translation
                .api_key_env
                .as_ref()
                .expect("validated: http provider names a key variable");
            let key = std::env::var(key_env).map_err(|_| {
                CliError::Data(format!(
                    "environment variable `{key_env}` (translation API key) is not set"
                ))
            })?;
            Some(Box::new(HttpTranslationClient::new(endpoint, key)))
        }
        TranslationProvider::None => None,
    };
    // With no client every translation must come from the cache, so
    // misses are configuration errors, not skippable samples.
    let cache_only = config.offline || client.is_none();
    let translator = Translator::new(client.as_deref(), &cache)
        .offline(cache_only)
        .with_concurrency(config.translation.max_concurrency);

    let (tasks, skipped) = build_all_tasks(&sources, &config.target_language, &translator)?;

    let mut task_files = BTreeMap::new();
    let mut task_digests = BTreeMap::new();
    for task in &tasks {
        let path = task_file(&dirs.tasks, task.kind());
        match task.items() {
            TaskItems::Primary(sequences) => xltime_core::corpus::write_conll(&path, sequences)?,
            TaskItems::Secondary(_) => write_secondary_jsonl(&path, task)?,
        }
        task_digests.insert(task.kind().tag(), digest_file(&path)?);
        task_files.insert(task.kind().tag(), path);
    }

    // Digest inputs after translation so the recorded cache state is the
    // one the task files came from.
    let mut manifest = RunManifest::for_config(config)?;
    manifest.task_files = task_files.clone();
    manifest.task_digests = task_digests;
    manifest.save(&dirs.manifest)?;

    Ok(BuildOutcome {
        task_files,
        skipped: skipped.len(),
        manifest_path: dirs.manifest,
    })
}
