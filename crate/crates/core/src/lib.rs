//! Cross-lingual temporal expression extraction via multi-task training.
//!
//! This crate implements a complete pipeline for training token-level
//! temporal expression taggers on one or more source languages and
//! transferring them to a low-resource target language:
//!
//! * [`corpus`] — TimeML ingestion, IOB2 conversion, two-column CoNLL I/O,
//!   document-level validation/test splitting, and corpus statistics.
//! * [`taskgen`] — construction of the training tasks: token-labeled
//!   primary datasets in the source languages, and machine-translated
//!   sentence-classification datasets in the target language whose binary
//!   labels ("contains a temporal expression") are inferred from the
//!   source token labels.
//! * [`model`] — a shared encoder backbone with two linear heads (token
//!   tagging and sentence classification), subword/label alignment, and
//!   the cross-entropy losses for both heads. Ships a small trainable
//!   reference encoder with exact hand-derived gradients.
//! * [`trainer`] — task-tagged mini-batch pooling, AdamW with decoupled
//!   weight decay, a linear warmup/decay schedule, best-checkpoint
//!   selection on validation score, and multi-seed aggregation.
//! * [`eval`] — IOB2 span decoding and strict-match precision / recall /
//!   F1, with and without expression-type credit.
//! * [`synthetic`] — a deterministic generator for paired synthetic
//!   languages, used to exercise the full transfer pipeline end to end.
//! * [`config`] — run configuration and the reproducibility manifest.
//!
//! All floating-point work is `f64`, and every random choice flows from an
//! explicit seed, so identical configurations reproduce identical results
//! bit for bit.

pub mod config;
pub mod corpus;
pub mod eval;
pub mod labels;
pub mod model;
pub mod synthetic;
pub mod taskgen;
pub mod trainer;

pub use labels::{AnnotatedSpan, Document, IOLabel, LabeledSequence, TimexType};
