//! Declarative run configuration and the reproducibility manifest.
//!
//! One configuration document describes one experiment: the target
//! language, the source languages and their datasets, the translation
//! provider and cache, the training hyperparameters, and where artifacts
//! go. [`RunManifest`] is the durable record written next to a finished
//! run: the resolved configuration, content digests of every input, the
//! checkpoint paths, and the per-run plus mean scores — enough to
//! re-execute the run bit-identically in offline mode and to detect
//! input drift before reuse.
//!
//! Relative paths in a configuration file resolve against the file's own
//! directory, so an experiment directory can be moved as a unit. A
//! manifest stores only resolved paths.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::eval::{MeanReport, ScoreReport};
use crate::trainer::TrainConfig;

/// Errors from configuration loading, validation, and manifest I/O.
#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },
    #[error("config field `{field}`: {message}")]
    Invalid { field: &'static str, message: String },
    #[error("referenced path does not exist: {0}")]
    MissingPath(PathBuf),
}

impl ConfigError {
    fn invalid(field: &'static str, message: impl Into<String>) -> Self {
        ConfigError::Invalid {
            field,
            message: message.into(),
        }
    }
}

/// CoNLL dataset files for one language.
///
/// Source languages supply `train` (token-labeled data the model learns
/// from); the target language supplies `validation` and `test`, whose
/// token labels are used only for scoring, never for gradients.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetPaths {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub train: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub validation: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub test: Option<PathBuf>,
}

impl DatasetPaths {
    /// The paths present, with their role names, in a fixed order.
    fn roles(&self) -> impl Iterator<Item = (&'static str, &PathBuf)> {
        [
            ("train", self.train.as_ref()),
            ("validation", self.validation.as_ref()),
            ("test", self.test.as_ref()),
        ]
        .into_iter()
        .filter_map(|(role, p)| p.map(|p| (role, p)))
    }
}

/// Where translations come from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TranslationProvider {
    /// A lookup table shipped alongside the run (deterministic).
    Fixture,
    /// An HTTP translation endpoint; the API key is read from the
    /// environment variable named in `api_key_env`.
    Http,
    /// No client: every translation must already be in the cache.
    None,
}

/// Translation provider and cache settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TranslationSettings {
    pub provider: TranslationProvider,
    /// JSON-lines cache file; created on first use, append-only.
    pub cache_path: PathBuf,
    /// Lookup table for [`TranslationProvider::Fixture`].
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fixture_path: Option<PathBuf>,
    /// Endpoint URL for [`TranslationProvider::Http`].
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub endpoint: Option<String>,
    /// Environment variable holding the HTTP API key.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub api_key_env: Option<String>,
    /// Upper bound on concurrent translation requests.
    #[serde(default = "default_concurrency")]
    pub max_concurrency: usize,
}

fn default_concurrency() -> usize {
    4
}

fn default_backbone() -> String {
    "toy".to_string()
}

fn default_n_runs() -> usize {
    5
}

/// One experiment: languages, datasets, translation, training, output.
///
/// Load from a JSON file with [`RunConfig::load`], which resolves
/// relative paths against the file's directory and lowercases language
/// codes; then [`RunConfig::validate`] checks the cross-field invariants
/// and that every referenced input exists.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// The low-resource language the run transfers to. Its data is used
    /// for validation and testing only, never for gradient training.
    pub target_language: String,
    /// Languages whose token-labeled data trains the model.
    pub source_languages: Vec<String>,
    /// Language code → dataset files. Every source language needs
    /// `train`; the target language needs `validation` and `test`.
    pub datasets: BTreeMap<String, DatasetPaths>,
    /// Encoder identifier; `"toy"` selects the built-in deterministic
    /// reference encoder.
    #[serde(default = "default_backbone")]
    pub backbone: String,
    /// Training hyperparameters.
    #[serde(default)]
    pub train: TrainConfig,
    pub translation: TranslationSettings,
    /// Run directory: receives `tasks/`, `checkpoints/`, `logs/`,
    /// `reports/`, and `manifest.json`. Created on demand.
    pub output_dir: PathBuf,
    /// Forbid network use; translations must come from the cache.
    #[serde(default)]
    pub offline: bool,
    /// Number of seeded training runs; seeds are `train.seed + 0..n_runs`.
    #[serde(default = "default_n_runs")]
    pub n_runs: usize,
}

impl RunConfig {
    /// Reads a configuration file, resolves its relative paths against
    /// the file's directory, lowercases language codes, and validates.
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let base = path.parent().unwrap_or_else(|| Path::new("."));
        let config = Self::from_json_str(&text, base).map_err(|e| match e {
            ConfigError::Parse { message, .. } => ConfigError::Parse {
                path: path.to_path_buf(),
                message,
            },
            other => other,
        })?;
        config.validate()?;
        Ok(config)
    }

    /// Parses configuration JSON, resolving relative paths against
    /// `base_dir`. Does not validate.
    pub fn from_json_str(text: &str, base_dir: &Path) -> Result<Self, ConfigError> {
        let mut config: RunConfig =
            serde_json::from_str(text).map_err(|e| ConfigError::Parse {
                path: PathBuf::new(),
                message: e.to_string(),
            })?;
        config.normalize_languages();
        config.resolve_paths(base_dir);
        Ok(config)
    }

    fn normalize_languages(&mut self) {
        self.target_language = self.target_language.to_ascii_lowercase();
        for lang in &mut self.source_languages {
            *lang = lang.to_ascii_lowercase();
        }
        let datasets = std::mem::take(&mut self.datasets);
        self.datasets = datasets
            .into_iter()
            .map(|(k, v)| (k.to_ascii_lowercase(), v))
            .collect();
    }

    fn resolve_paths(&mut self, base_dir: &Path) {
        let resolve = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base_dir.join(&p);
            }
        };
        for paths in self.datasets.values_mut() {
            for p in [&mut paths.train, &mut paths.validation, &mut paths.test]
                .into_iter()
                .flatten()
            {
                resolve(p);
            }
        }
        resolve(&mut self.translation.cache_path);
        if let Some(p) = &mut self.translation.fixture_path {
            resolve(p);
        }
        resolve(&mut self.output_dir);
    }

    /// Checks cross-field invariants and input existence:
    ///
    /// * the target language is not a source (its data never trains);
    /// * every source language has a `train` dataset, the target has
    ///   `validation` and `test`, and every referenced file exists;
    /// * the translation settings are complete for their provider, and
    ///   the cache file exists when the run is offline;
    /// * the training hyperparameters pass their own validation.
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.target_language.is_empty() {
            return Err(ConfigError::invalid("target_language", "must not be empty"));
        }
        if self.source_languages.is_empty() {
            return Err(ConfigError::invalid(
                "source_languages",
                "at least one source language is required",
            ));
        }
        let distinct: BTreeSet<&String> = self.source_languages.iter().collect();
        if distinct.len() != self.source_languages.len() {
            return Err(ConfigError::invalid(
                "source_languages",
                format!("duplicate entries in {:?}", self.source_languages),
            ));
        }
        if distinct.contains(&self.target_language) {
            return Err(ConfigError::invalid(
                "source_languages",
                format!(
                    "target language `{}` cannot also be a source: target data \
                     is for validation and testing only",
                    self.target_language
                ),
            ));
        }
        for lang in &self.source_languages {
            let train = self.datasets.get(lang).and_then(|d| d.train.as_ref());
            if train.is_none() {
                return Err(ConfigError::invalid(
                    "datasets",
                    format!("source language `{lang}` needs a `train` dataset"),
                ));
            }
        }
        let target = self.datasets.get(&self.target_language);
        if target.and_then(|d| d.validation.as_ref()).is_none()
            || target.and_then(|d| d.test.as_ref()).is_none()
        {
            return Err(ConfigError::invalid(
                "datasets",
                format!(
                    "target language `{}` needs `validation` and `test` datasets",
                    self.target_language
                ),
            ));
        }
        for paths in self.datasets.values() {
            for (_, p) in paths.roles() {
                if !p.exists() {
                    return Err(ConfigError::MissingPath(p.clone()));
                }
            }
        }

        if self.backbone.is_empty() {
            return Err(ConfigError::invalid("backbone", "must not be empty"));
        }
        if self.n_runs == 0 {
            return Err(ConfigError::invalid("n_runs", "must be at least 1"));
        }
        self.train
            .validate()
            .map_err(|e| ConfigError::invalid("train", e.to_string()))?;

        let t = &self.translation;
        if t.max_concurrency == 0 {
            return Err(ConfigError::invalid(
                "translation.max_concurrency",
                "must be at least 1",
            ));
        }
        match t.provider {
            TranslationProvider::Fixture => match &t.fixture_path {
                None => {
                    return Err(ConfigError::invalid(
                        "translation.fixture_path",
                        "required for the fixture provider",
                    ))
                }
                Some(p) if !p.exists() => return Err(ConfigError::MissingPath(p.clone())),
                Some(_) => {}
            },
            TranslationProvider::Http => {
                if t.endpoint.is_none() {
                    return Err(ConfigError::invalid(
                        "translation.endpoint",
                        "required for the http provider",
                    ));
                }
                if t.api_key_env.is_none() {
                    return Err(ConfigError::invalid(
                        "translation.api_key_env",
                        "required for the http provider",
                    ));
                }
            }
            TranslationProvider::None => {}
        }
        if self.offline && !t.cache_path.exists() {
            return Err(ConfigError::invalid(
                "translation.cache_path",
                format!(
                    "offline mode needs an existing cache, none at {}",
                    t.cache_path.display()
                ),
            ));
        }
        Ok(())
    }

    /// Content digests of every referenced dataset file, keyed
    /// `language/role` (e.g. `en/train`).
    pub fn dataset_digests(&self) -> Result<BTreeMap<String, String>, ConfigError> {
        let mut digests = BTreeMap::new();
        for (lang, paths) in &self.datasets {
            for (role, path) in paths.roles() {
                digests.insert(format!("{lang}/{role}"), digest_file(path)?);
            }
        }
        Ok(digests)
    }

    /// Digest of the translation cache file, or `None` if it does not
    /// exist yet.
    pub fn cache_digest(&self) -> Result<Option<String>, ConfigError> {
        if self.translation.cache_path.exists() {
            digest_file(&self.translation.cache_path).map(Some)
        } else {
            Ok(None)
        }
    }
}

/// SHA-256 of a file's bytes, as lowercase hex.
pub fn digest_file(path: &Path) -> Result<String, ConfigError> {
    let bytes = fs::read(path).map_err(|source| ConfigError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let out = Sha256::digest(&bytes);
    Ok(out.iter().map(|b| format!("{b:02x}")).collect())
}

/// Scores and artifacts of one seeded training run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub seed: u64,
    /// Checkpoint directory of the selected-best epoch.
    pub checkpoint: PathBuf,
    pub with_type: ScoreReport,
    pub without_type: ScoreReport,
}

/// The durable record of a run: resolved configuration, input digests,
/// artifact paths, and scores.
///
/// A manifest is sufficient to re-execute its run bit-identically in
/// offline mode: the embedded configuration says how, and the digests
/// say whether the inputs are still the ones the recorded scores came
/// from ([`RunManifest::input_drift`]).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    /// The configuration with all paths resolved.
    pub config: RunConfig,
    /// `language/role` → SHA-256 of the dataset file.
    pub dataset_digests: BTreeMap<String, String>,
    /// SHA-256 of the translation cache at build time.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cache_digest: Option<String>,
    /// Task files written by the build step, keyed by task tag
    /// (e.g. `primary_en2fr`).
    #[serde(default)]
    pub task_files: BTreeMap<String, PathBuf>,
    /// Task tag → SHA-256 of the task file, for byte-identity checks.
    #[serde(default)]
    pub task_digests: BTreeMap<String, String>,
    /// One record per seeded run, in seed order.
    #[serde(default)]
    pub runs: Vec<RunRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mean_with_type: Option<MeanReport>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mean_without_type: Option<MeanReport>,
}

impl RunManifest {
    /// A manifest holding only the resolved configuration and input
    /// digests; the build and train steps fill in the rest.
    pub fn for_config(config: &RunConfig) -> Result<Self, ConfigError> {
        Ok(RunManifest {
            dataset_digests: config.dataset_digests()?,
            cache_digest: config.cache_digest()?,
            config: config.clone(),
            task_files: BTreeMap::new(),
            task_digests: BTreeMap::new(),
            runs: Vec::new(),
            mean_with_type: None,
            mean_without_type: None,
        })
    }

    /// Writes the manifest as pretty-printed JSON.
    pub fn save(&self, path: &Path) -> Result<(), ConfigError> {
        let text = serde_json::to_string_pretty(self).expect("manifest serializes");
        fs::write(path, text + "\n").map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })
    }

    /// Reads a manifest back. Paths inside are already resolved, so no
    /// base directory is involved.
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        serde_json::from_str(&text).map_err(|e| ConfigError::Parse {
            path: path.to_path_buf(),
            message: e.to_string(),
        })
    }

    /// Compares the recorded input digests against the files on disk.
    ///
    /// Returns the keys whose content changed or went missing — dataset
    /// keys (`en/train`), `translation_cache`, and task tags. Empty
    /// means every recorded input is still byte-identical.
    pub fn input_drift(&self) -> Result<Vec<String>, ConfigError> {
        let mut drifted = Vec::new();
        let current = |path: &Path| -> Result<Option<String>, ConfigError> {
            if path.exists() {
                digest_file(path).map(Some)
            } else {
                Ok(None)
            }
        };

        let mut paths_by_key: BTreeMap<String, &PathBuf> = BTreeMap::new();
        for (lang, paths) in &self.config.datasets {
            for (role, path) in paths.roles() {
                paths_by_key.insert(format!("{lang}/{role}"), path);
            }
        }
        for (key, recorded) in &self.dataset_digests {
            let on_disk = match paths_by_key.get(key) {
                Some(path) => current(path)?,
                None => None,
            };
            if on_disk.as_ref() != Some(recorded) {
                drifted.push(key.clone());
            }
        }
        if let Some(recorded) = &self.cache_digest {
            if current(&self.config.translation.cache_path)?.as_ref() != Some(recorded) {
                drifted.push("translation_cache".to_string());
            }
        }
        for (tag, recorded) in &self.task_digests {
            let on_disk = match self.task_files.get(tag) {
                Some(path) => current(path)?,
                None => None,
            };
            if on_disk.as_ref() != Some(recorded) {
                drifted.push(tag.clone());
            }
        }
        Ok(drifted)
    }
}

/// A command input: either a fresh configuration or a manifest from an
/// earlier run (whose embedded configuration is reused).
#[derive(Debug)]
pub enum RunInput {
    Config(RunConfig),
    Manifest(RunManifest),
}

impl RunInput {
    /// The configuration, whichever form it arrived in.
    pub fn config(&self) -> &RunConfig {
        match self {
            RunInput::Config(c) => c,
            RunInput::Manifest(m) => &m.config,
        }
    }

    /// Mutable access, for command-line overrides.
    pub fn config_mut(&mut self) -> &mut RunConfig {
        match self {
            RunInput::Config(c) => c,
            RunInput::Manifest(m) => &mut m.config,
        }
    }
}

/// Loads either a configuration file or a manifest, telling them apart
/// by shape: a manifest has a top-level `config` object. Configurations
/// are path-resolved and validated; manifests are loaded as stored (the
/// caller validates after applying any overrides).
pub fn load_run_input(path: &Path) -> Result<RunInput, ConfigError> {
    let text = fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let value: serde_json::Value =
        serde_json::from_str(&text).map_err(|e| ConfigError::Parse {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
    if value.get("config").is_some() {
        RunManifest::load(path).map(RunInput::Manifest)
    } else {
        RunConfig::load(path).map(RunInput::Config)
    }
}
