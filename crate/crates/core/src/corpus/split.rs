//! Document-level validation/test splitting of target-language data.
//!
//! The split is by document — every sentence of a document lands in the
//! same partition — so no document context leaks between validation and
//! test. Given the same seed, the partition is identical no matter how
//! the input sequences are ordered.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;

use super::CorpusError;
use crate::labels::LabeledSequence;

/// How to cut validation data out of a target-language corpus.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitSpec {
    /// Fraction of documents assigned to validation, strictly between 0
    /// and 1. The complement becomes test data.
    pub validation_fraction: f64,
    pub seed: u64,
}

impl Default for SplitSpec {
    /// One document in ten goes to validation.
    fn default() -> Self {
        SplitSpec {
            validation_fraction: 0.10,
            seed: 0,
        }
    }
}

/// Number of validation documents: ⌈fraction · n⌉, computed with a tiny
/// epsilon so that products that are mathematically integral (0.1 × 110)
/// do not get bumped up by floating-point residue, then clamped so both
/// partitions stay non-empty.
fn validation_count(fraction: f64, n_docs: usize) -> usize {
    let x = fraction * n_docs as f64;
    let nearest = x.round();
    let ceiled = if (x - nearest).abs() < 1e-9 { nearest } else { x.ceil() };
    (ceiled as usize).clamp(1, n_docs - 1)
}

/// Splits target-language sequences into (validation, test) by document.
///
/// Document ids are sorted, shuffled with a seeded generator, and the
/// first ⌈fraction·#docs⌉ become validation. Within each partition the
/// input sequence order is preserved.
pub fn split_target(
    sequences: &[LabeledSequence],
    spec: &SplitSpec,
) -> Result<(Vec<LabeledSequence>, Vec<LabeledSequence>), CorpusError> {
    if !(spec.validation_fraction > 0.0 && spec.validation_fraction < 1.0) {
        return Err(CorpusError::BadFraction(spec.validation_fraction));
    }
    // Sorting before the seeded shuffle makes the outcome a function of
    // the document *set*, not of input order.
    let mut docs: Vec<&str> = sequences
        .iter()
        .map(|s| s.doc_id.as_str())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    if docs.len() < 2 {
        return Err(CorpusError::TooFewDocuments { found: docs.len() });
    }

    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    docs.shuffle(&mut rng);
    let n_val = validation_count(spec.validation_fraction, docs.len());
    let val_docs: BTreeSet<&str> = docs[..n_val].iter().copied().collect();

    let mut validation = Vec::new();
    let mut test = Vec::new();
    for seq in sequences {
        if val_docs.contains(seq.doc_id.as_str()) {
            validation.push(seq.clone());
        } else {
            test.push(seq.clone());
        }
    }
    Ok((validation, test))
}
