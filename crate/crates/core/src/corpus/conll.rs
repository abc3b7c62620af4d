//! Two-column CoNLL I/O: `token<TAB>label`, one token per line, blank
//! line between sentences, UTF-8 throughout.
//!
//! The writer prefixes each sentence with comment lines (`# doc_id = …`,
//! `# sent_index = …`, `# language = …`) so that reading a written file
//! reproduces the sequence list exactly, metadata included. The reader
//! also accepts plain two-column files with no comments, synthesizing
//! `doc_id` from the file name, taking the language from the caller, and
//! numbering sentences in file order. Comment lines never contain a TAB,
//! token lines always do, so `#`-initial tokens stay unambiguous.

use std::fs;
use std::path::Path;

use super::CorpusError;
use crate::labels::{IOLabel, LabeledSequence};

/// Serializes sequences to the CoNLL text format.
pub fn to_conll_string(sequences: &[LabeledSequence]) -> Result<String, CorpusError> {
    let mut out = String::new();
    for seq in sequences {
        for (field, value) in [("doc_id", &seq.doc_id), ("language", &seq.language)] {
            if value.contains(['\t', '\n', '\r']) {
                return Err(CorpusError::Unwritable(format!(
                    "{field} {value:?} contains a TAB or line break"
                )));
            }
        }
        out.push_str(&format!(
            "# doc_id = {}\n# sent_index = {}\n# language = {}\n",
            seq.doc_id, seq.sent_index, seq.language
        ));
        for (token, label) in seq.tokens.iter().zip(&seq.labels) {
            if token.is_empty() || token.contains(['\t', '\n', '\r']) {
                return Err(CorpusError::Unwritable(format!(
                    "token {token:?} in {}#{} is empty or contains a TAB or line break",
                    seq.doc_id, seq.sent_index
                )));
            }
            out.push_str(token);
            out.push('\t');
            out.push_str(&label.to_string());
            out.push('\n');
        }
        out.push('\n');
    }
    Ok(out)
}

/// Writes sequences to `path` in CoNLL format.
pub fn write_conll(path: &Path, sequences: &[LabeledSequence]) -> Result<(), CorpusError> {
    let text = to_conll_string(sequences)?;
    fs::write(path, text).map_err(|source| CorpusError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Reads a CoNLL file. `default_language` applies to sentences without a
/// `# language` comment; the default document id is the file stem.
pub fn read_conll(path: &Path, default_language: &str) -> Result<Vec<LabeledSequence>, CorpusError> {
    let text = fs::read_to_string(path).map_err(|source| CorpusError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let default_doc = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "conll".to_string());
    parse_conll_str(&text, &default_doc, default_language)
}

/// Per-sentence metadata accumulated from comment lines.
#[derive(Default)]
struct PendingMeta {
    doc_id: Option<String>,
    sent_index: Option<usize>,
    language: Option<String>,
}

/// Parses CoNLL text. Sentences without explicit metadata get
/// `default_doc` / `default_language` and consecutive indices per
/// document.
pub fn parse_conll_str(
    text: &str,
    default_doc: &str,
    default_language: &str,
) -> Result<Vec<LabeledSequence>, CorpusError> {
    let mut sequences: Vec<LabeledSequence> = Vec::new();
    let mut meta = PendingMeta::default();
    let mut tokens: Vec<String> = Vec::new();
    let mut labels: Vec<IOLabel> = Vec::new();
    // Fallback sentence numbering: next index per document id.
    let mut next_index: std::collections::HashMap<String, usize> =
        std::collections::HashMap::new();

    let flush = |meta: &mut PendingMeta,
                     tokens: &mut Vec<String>,
                     labels: &mut Vec<IOLabel>,
                     sequences: &mut Vec<LabeledSequence>,
                     next_index: &mut std::collections::HashMap<String, usize>|
     -> Result<(), CorpusError> {
        if tokens.is_empty() {
            *meta = PendingMeta::default();
            return Ok(());
        }
        let doc_id = meta.doc_id.take().unwrap_or_else(|| default_doc.to_string());
        let language = meta
            .language
            .take()
            .unwrap_or_else(|| default_language.to_string());
        let counter = next_index.entry(doc_id.clone()).or_insert(0);
        let sent_index = meta.sent_index.take().unwrap_or(*counter);
        *counter = sent_index + 1;
        sequences.push(LabeledSequence::new(
            doc_id,
            sent_index,
            language,
            std::mem::take(tokens),
            std::mem::take(labels),
        )?);
        *meta = PendingMeta::default();
        Ok(())
    };

    for (i, line) in text.lines().enumerate() {
        let lineno = i + 1;
        if line.trim().is_empty() {
            flush(&mut meta, &mut tokens, &mut labels, &mut sequences, &mut next_index)?;
            continue;
        }
        if let Some((token, rest)) = line.split_once('\t') {
            if rest.contains('\t') {
                return Err(CorpusError::Conll {
                    line: lineno,
                    message: format!("expected 2 TAB-separated columns, got more: {line:?}"),
                });
            }
            if token.is_empty() {
                return Err(CorpusError::Conll {
                    line: lineno,
                    message: "empty token".into(),
                });
            }
            let label: IOLabel = rest.trim_end().parse().map_err(|e| CorpusError::Conll {
                line: lineno,
                message: format!("{e}"),
            })?;
            tokens.push(token.to_string());
            labels.push(label);
        } else if let Some(comment) = line.strip_prefix('#') {
            if !tokens.is_empty() {
                return Err(CorpusError::Conll {
                    line: lineno,
                    message: "metadata comment in the middle of a sentence".into(),
                });
            }
            if let Some((key, value)) = comment.split_once('=') {
                let value = value.trim();
                match key.trim() {
                    "doc_id" => meta.doc_id = Some(value.to_string()),
                    "language" => meta.language = Some(value.to_string()),
                    "sent_index" => {
                        meta.sent_index =
                            Some(value.parse().map_err(|_| CorpusError::Conll {
                                line: lineno,
                                message: format!("sent_index is not an integer: {value:?}"),
                            })?)
                    }
                    _ => {} // unknown comments pass through silently
                }
            }
        } else {
            return Err(CorpusError::Conll {
                line: lineno,
                message: format!("expected `token<TAB>label`, got {line:?}"),
            });
        }
    }
    flush(&mut meta, &mut tokens, &mut labels, &mut sequences, &mut next_index)?;
    Ok(sequences)
}
