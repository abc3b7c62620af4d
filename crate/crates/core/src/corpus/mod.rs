//! Corpus ingestion and conversion.
//!
//! The pipeline in this module turns TIMEX3-annotated XML benchmarks (or
//! already-converted two-column CoNLL files) into [`LabeledSequence`]s,
//! splits target-language data into validation and test partitions by
//! document, and reports per-type expression statistics.
//!
//! All functions here are pure and deterministic; anything random
//! (splitting) is driven by an explicit seed.

mod conll;
mod iob2;
mod split;
mod stats;
mod timeml;
mod tokenize;

use std::path::PathBuf;

use thiserror::Error;

pub use crate::labels::{AnnotatedSpan, Document, IOLabel, LabeledSequence, TimexType};
pub use conll::{parse_conll_str, read_conll, to_conll_string, write_conll};
pub use iob2::{to_iob2, Iob2Output};
pub use split::{split_target, SplitSpec};
pub use stats::{corpus_stats, CorpusStats};
pub use timeml::parse_timeml;
pub use tokenize::{segment_sentences, tokenize_with_offsets, Token};

/// Errors from corpus parsing, conversion, and splitting.
#[derive(Debug, Error)]
pub enum CorpusError {
    /// The XML itself is malformed; `position` is the byte offset the
    /// reader had reached.
    #[error("malformed XML at byte {position}: {message}")]
    Xml { position: u64, message: String },
    /// A TIMEX3 element without the mandatory `type` attribute.
    #[error("TIMEX3 element at byte {position} has no type attribute")]
    MissingTimexType { position: u64 },
    /// A TIMEX3 element whose `type` is not one of the four categories.
    #[error("TIMEX3 element at byte {position}: {source}")]
    BadTimexType {
        position: u64,
        source: crate::labels::LabelError,
    },
    /// TIMEX3 elements may not contain each other.
    #[error("nested TIMEX3 element at byte {position}")]
    NestedTimex { position: u64 },
    /// An annotation with no text content cannot be aligned to tokens.
    #[error("TIMEX3 element at byte {position} has empty text content")]
    EmptyTimex { position: u64 },
    /// Domain-type validation failures (span bounds, sequence shape).
    #[error(transparent)]
    Label(#[from] crate::labels::LabelError),
    /// A CoNLL line that does not fit the two-column grammar.
    #[error("line {line}: {message}")]
    Conll { line: usize, message: String },
    /// Metadata that cannot survive the line-oriented CoNLL format.
    #[error("cannot write CoNLL: {0}")]
    Unwritable(String),
    #[error("cannot split: corpus has {found} document(s), need at least 2")]
    TooFewDocuments { found: usize },
    #[error("validation fraction must lie strictly between 0 and 1, got {0}")]
    BadFraction(f64),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}
