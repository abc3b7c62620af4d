//! The convert command: corpus directories into CoNLL files plus
//! statistics.

use std::fs;
use std::path::{Path, PathBuf};

use xltime_core::corpus::{
    corpus_stats, parse_timeml, read_conll, to_iob2, write_conll, CorpusStats,
};
use xltime_core::labels::LabeledSequence;

use crate::CliError;

/// Recognized corpus input formats.
#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum InputFormat {
    /// XML documents with inline temporal annotations
    /// (`.tml`, `.xml`, `.timeml`).
    Timeml,
    /// Two-column token/label files (`.conll`).
    Conll,
}

impl InputFormat {
    fn extensions(self) -> &'static [&'static str] {
        match self {
            InputFormat::Timeml => &["tml", "xml", "timeml"],
            InputFormat::Conll => &["conll"],
        }
    }

    fn name(self) -> &'static str {
        match self {
            InputFormat::Timeml => "timeml",
            InputFormat::Conll => "conll",
        }
    }
}

/// What a conversion produced.
#[derive(Debug)]
pub struct ConvertOutcome {
    /// Number of input documents converted.
    pub files: usize,
    /// Statistics over everything converted (also written to
    /// `stats.json` in the output directory).
    pub stats: CorpusStats,
}

/// Converts every `format` file under `input` (recursively, in sorted
/// order) into a CoNLL file under `output`, mirroring the directory
/// structure, and writes aggregate statistics to `output/stats.json`.
///
/// Converting a directory of CoNLL files is idempotent: converting the
/// output again reproduces it byte for byte.
pub fn cmd_convert(
    input: &Path,
    format: InputFormat,
    language: &str,
    output: &Path,
) -> Result<ConvertOutcome, CliError> {
    if !input.is_dir() {
        return Err(CliError::Data(format!(
            "input directory not found: {}",
            input.display()
        )));
    }
    let mut files: Vec<PathBuf> = Vec::new();
    for entry in walkdir::WalkDir::new(input).sort_by_file_name() {
        let entry = entry.map_err(|e| CliError::Data(e.to_string()))?;
        if !entry.file_type().is_file() {
            continue;
        }
        let matches = entry
            .path()
            .extension()
            .and_then(|e| e.to_str())
            .is_some_and(|e| {
                let e = e.to_ascii_lowercase();
                format.extensions().contains(&e.as_str())
            });
        if matches {
            files.push(entry.into_path());
        }
    }
    if files.is_empty() {
        return Err(CliError::Data(format!(
            "no {} files under {}",
            format.name(),
            input.display()
        )));
    }

    fs::create_dir_all(output).map_err(|e| crate::write_err(output, e))?;
    let mut all: Vec<LabeledSequence> = Vec::new();
    for file in &files {
        let sequences = load_document(file, format, language)?;
        let relative = file.strip_prefix(input).expect("walked under input");
        let out_path = output.join(relative).with_extension("conll");
        if let Some(parent) = out_path.parent() {
            fs::create_dir_all(parent).map_err(|e| crate::write_err(parent, e))?;
        }
        write_conll(&out_path, &sequences)?;
        all.extend(sequences);
    }

    let stats = corpus_stats(&all);
    let stats_path = output.join("stats.json");
    let text = serde_json::to_string_pretty(&stats).expect("stats serialize");
    fs::write(&stats_path, text + "\n").map_err(|e| crate::write_err(&stats_path, e))?;

    Ok(ConvertOutcome {
        files: files.len(),
        stats,
    })
}

/// Parses one input file into labeled sequences.
fn load_document(
    path: &Path,
    format: InputFormat,
    language: &str,
) -> Result<Vec<LabeledSequence>, CliError> {
    match format {
        InputFormat::Conll => Ok(read_conll(path, language)?),
        InputFormat::Timeml => {
            let text = fs::read_to_string(path)
                .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
            let doc_id = path
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| "document".to_string());
            let doc = parse_timeml(&text, language, &doc_id)?;
            let converted = to_iob2(&doc)?;
            for warning in &converted.warnings {
                log::warn!("{}: {warning}", path.display());
            }
            Ok(converted.sequences)
        }
    }
}
