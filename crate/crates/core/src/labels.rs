//! Core domain types: temporal expression categories, IOB2 token labels,
//! annotated documents, and token-labeled sentences.
//!
//! Everything downstream (task generation, training, scoring) speaks in
//! these types. Labels serialize as their surface form (`O`, `B-DATE`,
//! `I-DURATION`, ...) so data files stay readable and diffable.

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

/// Errors produced while constructing or parsing the core label types.
#[derive(Debug, Error, PartialEq, Eq)]
pub enum LabelError {
    /// A temporal expression category outside the supported set.
    #[error("unknown temporal expression type `{0}` (expected DATE, TIME, DURATION, or SET)")]
    UnknownType(String),
    /// A token label that is not `O`, `B-<TYPE>`, or `I-<TYPE>`.
    #[error("malformed IOB2 label `{0}` (expected O, B-<TYPE>, or I-<TYPE>)")]
    MalformedLabel(String),
    /// A labeled sequence whose token and label counts disagree.
    #[error("sequence {doc_id}#{sent_index}: {tokens} tokens but {labels} labels")]
    LengthMismatch {
        doc_id: String,
        sent_index: usize,
        tokens: usize,
        labels: usize,
    },
    /// A labeled sequence with no tokens at all.
    #[error("sequence {doc_id}#{sent_index} is empty")]
    EmptySequence { doc_id: String, sent_index: usize },
    /// An annotated document whose span offsets are inconsistent.
    #[error("document {doc_id}: {reason}")]
    InvalidSpan { doc_id: String, reason: String },
}

/// The four temporal expression categories used throughout the pipeline.
///
/// These mirror the TIMEX3 `type` attribute values found in TimeML
/// corpora: calendar dates, times of day, durations, and recurring sets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum TimexType {
    Date,
    Time,
    Duration,
    Set,
}

impl TimexType {
    /// All categories, in canonical order.
    pub const ALL: [TimexType; 4] = [
        TimexType::Date,
        TimexType::Time,
        TimexType::Duration,
        TimexType::Set,
    ];

    /// Canonical upper-case surface form (`DATE`, `TIME`, ...).
    pub fn as_str(self) -> &'static str {
        match self {
            TimexType::Date => "DATE",
            TimexType::Time => "TIME",
            TimexType::Duration => "DURATION",
            TimexType::Set => "SET",
        }
    }
}

impl fmt::Display for TimexType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for TimexType {
    type Err = LabelError;

    /// Case-insensitive parse, so `Date`, `DATE`, and `date` all work.
    fn from_str(s: &str) -> Result<Self, LabelError> {
        match s.to_ascii_uppercase().as_str() {
            "DATE" => Ok(TimexType::Date),
            "TIME" => Ok(TimexType::Time),
            "DURATION" => Ok(TimexType::Duration),
            "SET" => Ok(TimexType::Set),
            _ => Err(LabelError::UnknownType(s.to_string())),
        }
    }
}

/// A token-level IOB2 label: outside any expression, beginning one, or
/// continuing one.
///
/// The `B-`/`I-` prefixes are case-sensitive; the type part is parsed
/// case-insensitively (annotation tools disagree about `B-Date` vs
/// `B-DATE`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum IOLabel {
    Outside,
    Begin(TimexType),
    Inside(TimexType),
}

impl IOLabel {
    /// The expression type this label carries, if any.
    pub fn timex_type(self) -> Option<TimexType> {
        match self {
            IOLabel::Outside => None,
            IOLabel::Begin(t) | IOLabel::Inside(t) => Some(t),
        }
    }

    /// True for `B-*` and `I-*` labels.
    pub fn is_inside_expression(self) -> bool {
        !matches!(self, IOLabel::Outside)
    }

    /// The full label scheme: `O` plus `B-`/`I-` for every category, in
    /// canonical order. With four categories this yields nine labels.
    pub fn full_scheme() -> Vec<IOLabel> {
        let mut scheme = vec![IOLabel::Outside];
        for t in TimexType::ALL {
            scheme.push(IOLabel::Begin(t));
            scheme.push(IOLabel::Inside(t));
        }
        scheme
    }
}

impl fmt::Display for IOLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            IOLabel::Outside => f.write_str("O"),
            IOLabel::Begin(t) => write!(f, "B-{t}"),
            IOLabel::Inside(t) => write!(f, "I-{t}"),
        }
    }
}

impl FromStr for IOLabel {
    type Err = LabelError;

    fn from_str(s: &str) -> Result<Self, LabelError> {
        if s == "O" {
            return Ok(IOLabel::Outside);
        }
        match s.split_once('-') {
            Some(("B", t)) => Ok(IOLabel::Begin(t.parse()?)),
            Some(("I", t)) => Ok(IOLabel::Inside(t.parse()?)),
            _ => Err(LabelError::MalformedLabel(s.to_string())),
        }
    }
}

impl Serialize for IOLabel {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for IOLabel {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(D::Error::custom)
    }
}

/// A contiguous annotated region of a document's raw text.
///
/// Offsets are byte positions into [`Document::text`] (UTF-8), with
/// `start` inclusive and `end` exclusive, and must land on character
/// boundaries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnnotatedSpan {
    pub start: usize,
    pub end: usize,
    pub timex_type: TimexType,
}

/// A raw document with character-offset temporal annotations, as produced
/// by TimeML ingestion and consumed by IOB2 conversion.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Document {
    /// Stable identifier, typically the source file stem.
    pub doc_id: String,
    /// Lower-case language code (`en`, `fr`, ...).
    pub language: String,
    /// The running text the spans index into.
    pub text: String,
    /// Annotations sorted by start offset, pairwise disjoint.
    pub spans: Vec<AnnotatedSpan>,
    /// Non-fatal notes recorded during ingestion.
    pub warnings: Vec<String>,
}

impl Document {
    /// Checks the span invariants: within bounds, non-empty, on character
    /// boundaries, sorted by start, and pairwise disjoint.
    pub fn validate(&self) -> Result<(), LabelError> {
        let fail = |reason: String| LabelError::InvalidSpan {
            doc_id: self.doc_id.clone(),
            reason,
        };
        let mut prev_end = 0usize;
        for (i, span) in self.spans.iter().enumerate() {
            if span.start >= span.end {
                return Err(fail(format!(
                    "span {i} is empty or inverted ({}..{})",
                    span.start, span.end
                )));
            }
            if span.end > self.text.len() {
                return Err(fail(format!(
                    "span {i} ends at byte {} but the text has {} bytes",
                    span.end,
                    self.text.len()
                )));
            }
            if !self.text.is_char_boundary(span.start) || !self.text.is_char_boundary(span.end) {
                return Err(fail(format!(
                    "span {i} ({}..{}) does not fall on character boundaries",
                    span.start, span.end
                )));
            }
            if i > 0 && span.start < prev_end {
                return Err(fail(format!(
                    "span {i} starting at byte {} overlaps or precedes the span ending at byte {}",
                    span.start, prev_end
                )));
            }
            prev_end = span.end;
        }
        Ok(())
    }
}

/// A tokenized sentence with one IOB2 label per token.
///
/// Construct through [`LabeledSequence::new`], which enforces that the
/// sequence is non-empty and that token and label counts match.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabeledSequence {
    pub doc_id: String,
    /// Zero-based sentence position within the document.
    pub sent_index: usize,
    /// Lower-case language code (`en`, `fr`, ...).
    pub language: String,
    pub tokens: Vec<String>,
    pub labels: Vec<IOLabel>,
}

impl LabeledSequence {
    pub fn new(
        doc_id: impl Into<String>,
        sent_index: usize,
        language: impl Into<String>,
        tokens: Vec<String>,
        labels: Vec<IOLabel>,
    ) -> Result<Self, LabelError> {
        let doc_id = doc_id.into();
        if tokens.is_empty() {
            return Err(LabelError::EmptySequence { doc_id, sent_index });
        }
        if tokens.len() != labels.len() {
            return Err(LabelError::LengthMismatch {
                doc_id,
                sent_index,
                tokens: tokens.len(),
                labels: labels.len(),
            });
        }
        Ok(LabeledSequence {
            doc_id,
            sent_index,
            language: language.into(),
            tokens,
            labels,
        })
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    /// The sentence as plain text: tokens joined by single spaces. This is
    /// the form sent to machine translation.
    pub fn text(&self) -> String {
        self.tokens.join(" ")
    }

    /// True if any token is labeled as part of a temporal expression.
    pub fn contains_expression(&self) -> bool {
        self.labels.iter().any(|l| l.is_inside_expression())
    }
}

/// Counts the distinct document ids across `sequences`, preserving no
/// particular order.
pub fn distinct_doc_ids(sequences: &[LabeledSequence]) -> usize {
    sequences
        .iter()
        .map(|s| s.doc_id.as_str())
        .collect::<HashSet<_>>()
        .len()
}
