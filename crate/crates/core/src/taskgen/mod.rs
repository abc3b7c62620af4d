//! Construction of the two training task families.
//!
//! For each source language the pipeline produces:
//!
//! * a **primary** task — the source-language IOB2 sequences themselves,
//!   used for token-level tagging; and
//! * a **secondary** task — the same sentences machine-translated into
//!   the target language, each carrying a binary label ("contains a
//!   temporal expression") inferred from the *source* token labels.
//!
//! The secondary task is weakly supervised: it never reads, and by its
//! signature never receives, target-language token labels. Translations
//! flow through [`translate::Translator`], so a frozen cache makes the
//! whole construction deterministic.

mod translate;

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use translate::{
    describe_key, FixtureClient, HttpTranslationClient, TranslateError, TranslationCache,
    TranslationCacheEntry, TranslationClient, Translator,
};

use crate::labels::LabeledSequence;

/// Errors from task construction and task-file I/O.
#[derive(Debug, Error)]
pub enum TaskGenError {
    #[error("cannot build a task from an empty source dataset")]
    EmptySource,
    #[error("expected a single source language, found {0:?}")]
    MixedLanguages(Vec<String>),
    #[error("secondary task needs a target language different from the source `{0}`")]
    SameLanguage(String),
    #[error(
        "translation failed for {skipped} of {total} samples (> 20% threshold); first failures: {}",
        .examples.join("; ")
    )]
    TooManySkips {
        skipped: usize,
        total: usize,
        examples: Vec<String>,
    },
    #[error(transparent)]
    Translate(#[from] TranslateError),
    #[error("binary sample from {doc_id}#{sent_index}: {reason}")]
    BadSample {
        doc_id: String,
        sent_index: usize,
        reason: String,
    },
    #[error("{path} line {line}: {message}")]
    JsonLine {
        path: PathBuf,
        line: usize,
        message: String,
    },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

/// Which loss a task trains.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum TaskRole {
    /// Token-level IOB2 tagging on source-language data.
    Primary,
    /// Binary sentence classification on translated target-language text.
    Secondary,
}

/// Identity of one task: its role and the language pair it serves.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TaskKind {
    pub role: TaskRole,
    pub source_language: String,
    pub target_language: String,
}

impl TaskKind {
    /// Builds and checks a task identity. Secondary tasks must cross
    /// languages; primary tasks may serve any pair (including the
    /// supervised same-language case).
    pub fn new(
        role: TaskRole,
        source_language: impl Into<String>,
        target_language: impl Into<String>,
    ) -> Result<Self, TaskGenError> {
        let source_language = source_language.into().to_ascii_lowercase();
        let target_language = target_language.into().to_ascii_lowercase();
        if role == TaskRole::Secondary && source_language == target_language {
            return Err(TaskGenError::SameLanguage(source_language));
        }
        Ok(TaskKind {
            role,
            source_language,
            target_language,
        })
    }

    /// Short tag for file names and logs, e.g. `primary_en2fr`.
    pub fn tag(&self) -> String {
        let role = match self.role {
            TaskRole::Primary => "primary",
            TaskRole::Secondary => "secondary",
        };
        format!("{role}_{}2{}", self.source_language, self.target_language)
    }
}

/// Where a secondary sample came from, for traceability back to the
/// source corpus.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SampleOrigin {
    pub doc_id: String,
    pub sent_index: usize,
    pub source_language: String,
}

/// One secondary-task training sample: translated sentence text and a
/// binary label, 1 iff the source sentence contained any temporal
/// expression.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BinarySample {
    pub text: String,
    pub label: u8,
    pub origin: SampleOrigin,
}

impl BinarySample {
    pub fn new(text: String, label: u8, origin: SampleOrigin) -> Result<Self, TaskGenError> {
        let reason = if text.trim().is_empty() {
            Some("text is empty")
        } else if label > 1 {
            Some("label outside {0,1}")
        } else {
            None
        };
        if let Some(reason) = reason {
            return Err(TaskGenError::BadSample {
                doc_id: origin.doc_id,
                sent_index: origin.sent_index,
                reason: reason.to_string(),
            });
        }
        Ok(BinarySample {
            text,
            label,
            origin,
        })
    }
}

/// The items of a task, homogeneous with its role.
#[derive(Debug, Clone, PartialEq)]
pub enum TaskItems {
    Primary(Vec<LabeledSequence>),
    Secondary(Vec<BinarySample>),
}

/// One non-empty training task: identity plus items.
///
/// Construct through [`TaskDataset::primary`] / [`TaskDataset::secondary`],
/// which enforce non-emptiness and role/item agreement.
#[derive(Debug, Clone, PartialEq)]
pub struct TaskDataset {
    kind: TaskKind,
    items: TaskItems,
}

impl TaskDataset {
    pub fn primary(
        source_language: &str,
        target_language: &str,
        sequences: Vec<LabeledSequence>,
    ) -> Result<Self, TaskGenError> {
        if sequences.is_empty() {
            return Err(TaskGenError::EmptySource);
        }
        Ok(TaskDataset {
            kind: TaskKind::new(TaskRole::Primary, source_language, target_language)?,
            items: TaskItems::Primary(sequences),
        })
    }

    pub fn secondary(
        source_language: &str,
        target_language: &str,
        samples: Vec<BinarySample>,
    ) -> Result<Self, TaskGenError> {
        if samples.is_empty() {
            return Err(TaskGenError::EmptySource);
        }
        Ok(TaskDataset {
            kind: TaskKind::new(TaskRole::Secondary, source_language, target_language)?,
            items: TaskItems::Secondary(samples),
        })
    }

    pub fn kind(&self) -> &TaskKind {
        &self.kind
    }

    pub fn role(&self) -> TaskRole {
        self.kind.role
    }

    pub fn len(&self) -> usize {
        match &self.items {
            TaskItems::Primary(v) => v.len(),
            TaskItems::Secondary(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn items(&self) -> &TaskItems {
        &self.items
    }

    /// The labeled sequences, when this is a primary task.
    pub fn primary_items(&self) -> Option<&[LabeledSequence]> {
        match &self.items {
            TaskItems::Primary(v) => Some(v),
            TaskItems::Secondary(_) => None,
        }
    }

    /// The binary samples, when this is a secondary task.
    pub fn secondary_items(&self) -> Option<&[BinarySample]> {
        match &self.items {
            TaskItems::Secondary(v) => Some(v),
            TaskItems::Primary(_) => None,
        }
    }
}

/// Sentence-level weak label: 1 iff any token is labeled as part of a
/// temporal expression.
pub fn derive_sentence_label(seq: &LabeledSequence) -> u8 {
    u8::from(seq.contains_expression())
}

/// Checks that every sequence shares one language and returns it.
fn single_language(source_data: &[LabeledSequence]) -> Result<String, TaskGenError> {
    let mut langs: Vec<String> = source_data
        .iter()
        .map(|s| s.language.to_ascii_lowercase())
        .collect::<std::collections::BTreeSet<_>>()
        .into_iter()
        .collect();
    match (langs.len(), source_data.is_empty()) {
        (_, true) => Err(TaskGenError::EmptySource),
        (1, _) => Ok(langs.pop().expect("one language present")),
        _ => Err(TaskGenError::MixedLanguages(langs)),
    }
}

/// Wraps untranslated source-language sequences as one primary task
/// aimed at `target_language`.
pub fn build_primary_dataset(
    source_data: &[LabeledSequence],
    target_language: &str,
) -> Result<TaskDataset, TaskGenError> {
    let source_language = single_language(source_data)?;
    TaskDataset::primary(&source_language, target_language, source_data.to_vec())
}

/// A sample dropped during secondary construction, with the reason.
#[derive(Debug, Clone)]
pub struct SkippedSample {
    pub origin: SampleOrigin,
    pub reason: String,
}

/// The outcome of secondary-task construction: the dataset plus a skip
/// report.
#[derive(Debug)]
pub struct SecondaryBuild {
    pub dataset: TaskDataset,
    pub skipped: Vec<SkippedSample>,
}

/// Builds the secondary task for `source_data` → `target_language`: one
/// [`BinarySample`] per source sentence, text translated, label derived
/// from the source token labels.
///
/// Failed translations are skipped (with a log line) unless they exceed
/// 20% of the input, which aborts the build; in offline mode any cache
/// miss aborts immediately, listing every missing key.
pub fn build_secondary_dataset(
    source_data: &[LabeledSequence],
    target_language: &str,
    translator: &Translator<'_>,
) -> Result<SecondaryBuild, TaskGenError> {
    let source_language = single_language(source_data)?;
    // Fail the language-pair check before any translation work.
    let kind = TaskKind::new(TaskRole::Secondary, &source_language, target_language)?;

    let texts: Vec<String> = source_data.iter().map(|s| s.text()).collect();
    let text_refs: Vec<&str> = texts.iter().map(|s| s.as_str()).collect();
    let outcomes = translator.translate_batch(&text_refs, &source_language, target_language);

    if translator.is_offline() {
        let missing: Vec<String> = outcomes
            .iter()
            .filter_map(|r| match r {
                Err(TranslateError::MissingTranslations { keys }) => {
                    Some(keys.iter().cloned())
                }
                _ => None,
            })
            .flatten()
            .collect();
        if !missing.is_empty() {
            return Err(TranslateError::MissingTranslations { keys: missing }.into());
        }
    }

    let mut samples = Vec::new();
    let mut skipped = Vec::new();
    for (seq, outcome) in source_data.iter().zip(outcomes) {
        let origin = SampleOrigin {
            doc_id: seq.doc_id.clone(),
            sent_index: seq.sent_index,
            source_language: source_language.clone(),
        };
        let sample = outcome
            .map_err(|e| e.to_string())
            .and_then(|text| {
                BinarySample::new(text, derive_sentence_label(seq), origin.clone())
                    .map_err(|e| e.to_string())
            });
        match sample {
            Ok(s) => samples.push(s),
            Err(reason) => {
                log::warn!(
                    "skipping secondary sample {}#{}: {reason}",
                    origin.doc_id,
                    origin.sent_index
                );
                skipped.push(SkippedSample { origin, reason });
            }
        }
    }

    let total = source_data.len();
    if skipped.len() * 5 > total {
        return Err(TaskGenError::TooManySkips {
            skipped: skipped.len(),
            total,
            examples: skipped
                .iter()
                .take(5)
                .map(|s| format!("{}#{}: {}", s.origin.doc_id, s.origin.sent_index, s.reason))
                .collect(),
        });
    }

    Ok(SecondaryBuild {
        dataset: TaskDataset {
            kind,
            items: TaskItems::Secondary(samples),
        },
        skipped,
    })
}

/// Builds the full task layout for a multi-source run: for each source
/// language, one primary and one secondary task toward the target —
/// sources are never pooled.
pub fn build_all_tasks(
    sources: &[(String, Vec<LabeledSequence>)],
    target_language: &str,
    translator: &Translator<'_>,
) -> Result<(Vec<TaskDataset>, Vec<SkippedSample>), TaskGenError> {
    let mut tasks = Vec::new();
    let mut all_skipped = Vec::new();
    for (language, data) in sources {
        let primary = build_primary_dataset(data, target_language)?;
        if primary.kind().source_language != *language.to_ascii_lowercase() {
            return Err(TaskGenError::MixedLanguages(vec![
                language.clone(),
                primary.kind().source_language.clone(),
            ]));
        }
        tasks.push(primary);
        let secondary = build_secondary_dataset(data, target_language, translator)?;
        all_skipped.extend(secondary.skipped);
        tasks.push(secondary.dataset);
    }
    Ok((tasks, all_skipped))
}

/// Writes a secondary task to JSON-lines: one `{text, label, origin}`
/// object per line, in dataset order.
pub fn write_secondary_jsonl(path: &Path, dataset: &TaskDataset) -> Result<(), TaskGenError> {
    let samples = dataset
        .secondary_items()
        .ok_or(TaskGenError::EmptySource)?;
    let file = File::create(path).map_err(|source| TaskGenError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut w = BufWriter::new(file);
    for sample in samples {
        let line = serde_json::to_string(sample).expect("sample serializes");
        writeln!(w, "{line}").map_err(|source| TaskGenError::Io {
            path: path.to_path_buf(),
            source,
        })?;
    }
    w.flush().map_err(|source| TaskGenError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Reads a secondary task back from JSON-lines. The language pair is
/// supplied by the caller (it is run configuration, not file content).
pub fn read_secondary_jsonl(
    path: &Path,
    source_language: &str,
    target_language: &str,
) -> Result<TaskDataset, TaskGenError> {
    let file = File::open(path).map_err(|source| TaskGenError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut samples = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|source| TaskGenError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let sample: BinarySample =
            serde_json::from_str(&line).map_err(|e| TaskGenError::JsonLine {
                path: path.to_path_buf(),
                line: i + 1,
                message: e.to_string(),
            })?;
        if sample.label > 1 {
            return Err(TaskGenError::JsonLine {
                path: path.to_path_buf(),
                line: i + 1,
                message: format!("label {} outside {{0,1}}", sample.label),
            });
        }
        samples.push(sample);
    }
    TaskDataset::secondary(source_language, target_language, samples)
}
