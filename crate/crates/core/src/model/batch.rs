//! Subword/token alignment and padded batch assembly.
//!
//! Token labels live at token granularity; the encoder consumes subword
//! positions. Alignment gives each token's FIRST subword that token's
//! class index and marks every other position [`IGNORE`], so losses and
//! predictions count each token exactly once.

use ndarray::Array2;

use crate::labels::LabeledSequence;
use crate::model::encoder::{Backbone, PAD_ID};
use crate::model::vocab::LabelVocab;
use crate::model::ModelError;

/// Target sentinel for positions that carry no supervision: padding,
/// and every subword of a token after the first.
pub const IGNORE: i64 = -1;

/// One aligned sequence: subword ids with per-position targets.
#[derive(Debug, Clone, PartialEq)]
pub struct AlignedRow {
    /// Subword ids, already truncated to the batch's maximum length.
    pub ids: Vec<usize>,
    /// Class index at each token's first subword, [`IGNORE`] elsewhere.
    /// Same length as `ids`.
    pub targets: Vec<i64>,
    /// Position of each surviving token's first subword; tokens whose
    /// first subword fell beyond the length cap are absent.
    pub first_subword: Vec<usize>,
    /// Number of tokens in the original sequence (before truncation).
    pub n_tokens: usize,
}

impl AlignedRow {
    pub fn truncated(&self) -> bool {
        self.first_subword.len() < self.n_tokens
    }
}

/// Maps tokens to subword ids, recording each token's first subword.
/// Truncation to `max_len` drops whole trailing subwords; a token whose
/// first subword does not fit is dropped from `first_subword`.
fn align_tokens(
    tokens: &[String],
    backbone: &dyn Backbone,
    max_len: usize,
) -> (Vec<usize>, Vec<usize>) {
    assert!(max_len >= 1, "length cap must admit at least one position");
    let mut ids = Vec::new();
    let mut first_subword = Vec::new();
    for token in tokens {
        let subwords = backbone.token_subword_ids(token);
        debug_assert!(!subwords.is_empty(), "tokens always yield a subword");
        if ids.len() < max_len {
            first_subword.push(ids.len());
        }
        ids.extend(subwords);
        if ids.len() >= max_len {
            ids.truncate(max_len);
            break;
        }
    }
    (ids, first_subword)
}

/// Aligns one labeled sequence: every token's label index sits at its
/// first subword, all other positions are [`IGNORE`].
pub fn align_labels_to_subwords(
    seq: &LabeledSequence,
    backbone: &dyn Backbone,
    vocab: &LabelVocab,
    max_len: usize,
) -> Result<AlignedRow, ModelError> {
    let (ids, first_subword) = align_tokens(&seq.tokens, backbone, max_len);
    let mut targets = vec![IGNORE; ids.len()];
    for (token_idx, &pos) in first_subword.iter().enumerate() {
        targets[pos] = vocab.require_index(seq.labels[token_idx])? as i64;
    }
    let row = AlignedRow {
        ids,
        targets,
        first_subword,
        n_tokens: seq.tokens.len(),
    };
    if row.truncated() {
        log::warn!(
            "sequence {}#{} exceeds {max_len} subwords; {} of {} tokens kept",
            seq.doc_id,
            seq.sent_index,
            row.first_subword.len(),
            row.n_tokens
        );
    }
    Ok(row)
}

/// Aligns a bare token sequence (no labels) for inference; all targets
/// are [`IGNORE`].
pub fn align_token_row(tokens: &[String], backbone: &dyn Backbone, max_len: usize) -> AlignedRow {
    if tokens.is_empty() {
        return AlignedRow {
            ids: vec![crate::model::encoder::UNK_ID],
            targets: vec![IGNORE],
            first_subword: vec![0],
            n_tokens: 1,
        };
    }
    let (ids, first_subword) = align_tokens(tokens, backbone, max_len);
    let targets = vec![IGNORE; ids.len()];
    AlignedRow {
        ids,
        targets,
        first_subword,
        n_tokens: tokens.len(),
    }
}

/// Aligns unlabeled text (whitespace tokens) for inference or the
/// sentence-classification task; all targets are [`IGNORE`].
pub fn align_text(text: &str, backbone: &dyn Backbone, max_len: usize) -> AlignedRow {
    let tokens: Vec<String> = text.split_whitespace().map(str::to_string).collect();
    let row = align_token_row(&tokens, backbone, max_len);
    if row.truncated() {
        log::warn!(
            "text of {} tokens exceeds {max_len} subwords; truncated",
            row.n_tokens
        );
    }
    row
}

/// A padded batch of aligned sequences.
///
/// Matrix layout (rows = sequences, columns = positions, padded with
/// [`PAD_ID`] / [`IGNORE`]) plus the ragged per-row views the encoder
/// and losses actually consume.
#[derive(Debug, Clone, PartialEq)]
pub struct AlignedBatch {
    pub rows: Vec<AlignedRow>,
    /// Subword ids, n×L, `PAD_ID` beyond each row's length.
    pub ids: Array2<usize>,
    /// 1 at real positions, 0 at padding.
    pub mask: Array2<u8>,
    /// Targets, n×L, `IGNORE` at padding.
    pub targets: Array2<i64>,
    /// Real length of each row.
    pub lengths: Vec<usize>,
}

impl AlignedBatch {
    pub fn from_rows(rows: Vec<AlignedRow>) -> Self {
        let width = rows.iter().map(|r| r.ids.len()).max().unwrap_or(0);
        let n = rows.len();
        let mut ids = Array2::from_elem((n, width), PAD_ID);
        let mut mask = Array2::zeros((n, width));
        let mut targets = Array2::from_elem((n, width), IGNORE);
        let mut lengths = Vec::with_capacity(n);
        for (i, row) in rows.iter().enumerate() {
            lengths.push(row.ids.len());
            for (j, (&id, &t)) in row.ids.iter().zip(&row.targets).enumerate() {
                ids[[i, j]] = id;
                mask[[i, j]] = 1;
                targets[[i, j]] = t;
            }
        }
        AlignedBatch {
            rows,
            ids,
            mask,
            targets,
            lengths,
        }
    }

    /// Aligns and batches labeled sequences for the tagging task.
    pub fn from_sequences(
        seqs: &[LabeledSequence],
        backbone: &dyn Backbone,
        vocab: &LabelVocab,
        max_len: usize,
    ) -> Result<Self, ModelError> {
        let rows = seqs
            .iter()
            .map(|s| align_labels_to_subwords(s, backbone, vocab, max_len))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self::from_rows(rows))
    }

    /// Aligns and batches raw texts for the sentence task.
    pub fn from_texts(texts: &[&str], backbone: &dyn Backbone, max_len: usize) -> Self {
        Self::from_rows(
            texts
                .iter()
                .map(|t| align_text(t, backbone, max_len))
                .collect(),
        )
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Total supervised (non-IGNORE) positions across the batch.
    pub fn supervised_positions(&self) -> usize {
        self.rows
            .iter()
            .map(|r| r.targets.iter().filter(|&&t| t != IGNORE).count())
            .sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::labels::{IOLabel, TimexType};
    use crate::model::encoder::{ToyEncoder, DEFAULT_MAX_LEN, UNK_ID};
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn seq(words: &[&str], labels: &str) -> LabeledSequence {
        LabeledSequence::new(
            "d",
            0,
            "en",
            words.iter().map(|w| w.to_string()).collect(),
            labels
                .split_whitespace()
                .map(|l| l.parse().unwrap())
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn multi_subword_token_carries_label_then_ignore() {
        let enc = ToyEncoder::new(0);
        let vocab = LabelVocab::full();
        let s = seq(&["tomorrow"], "B-DATE"); // 2 subwords
        let row = align_labels_to_subwords(&s, &enc, &vocab, DEFAULT_MAX_LEN).unwrap();
        let b_date = vocab.index_of(IOLabel::Begin(TimexType::Date)).unwrap() as i64;
        assert_eq!(row.targets, vec![b_date, IGNORE]);
        assert_eq!(row.first_subword, vec![0]);
    }

    #[test]
    fn single_subword_tokens_align_as_identity() {
        let enc = ToyEncoder::new(0);
        let vocab = LabelVocab::full();
        let s = seq(&["see", "you", "soon"], "O O B-DATE");
        let row = align_labels_to_subwords(&s, &enc, &vocab, DEFAULT_MAX_LEN).unwrap();
        assert_eq!(row.ids.len(), 3);
        assert_eq!(row.first_subword, vec![0, 1, 2]);
        assert!(row.targets.iter().all(|&t| t != IGNORE));
    }

    #[test]
    fn supervised_position_count_equals_token_count() {
        let enc = ToyEncoder::new(0);
        let vocab = LabelVocab::full();
        let alphabet = IOLabel::full_scheme();
        let words = ["a", "tomorrow", "internationalization", "x1", "..."];
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..200 {
            let len = rng.random_range(1..=8usize);
            let tokens: Vec<&str> = (0..len)
                .map(|_| *words.choose(&mut rng).unwrap())
                .collect();
            let labels: Vec<String> = (0..len)
                .map(|_| alphabet.choose(&mut rng).unwrap().to_string())
                .collect();
            let s = seq(&tokens, &labels.join(" "));
            let row = align_labels_to_subwords(&s, &enc, &vocab, DEFAULT_MAX_LEN).unwrap();
            let supervised = row.targets.iter().filter(|&&t| t != IGNORE).count();
            assert_eq!(supervised, len, "one supervised position per token");
        }
    }

    #[test]
    fn content_free_token_becomes_unknown_with_label_kept() {
        let enc = ToyEncoder::new(0);
        let vocab = LabelVocab::full();
        let s = seq(&["—"], "B-TIME");
        let row = align_labels_to_subwords(&s, &enc, &vocab, DEFAULT_MAX_LEN).unwrap();
        assert_eq!(row.ids, vec![UNK_ID]);
        let b_time = vocab.index_of(IOLabel::Begin(TimexType::Time)).unwrap() as i64;
        assert_eq!(row.targets, vec![b_time]);
    }

    #[test]
    fn label_outside_vocab_is_reported() {
        let enc = ToyEncoder::new(0);
        let date_only = LabelVocab::from_labels([IOLabel::Begin(TimexType::Date)].iter());
        let s = seq(&["daily"], "B-SET");
        let err = align_labels_to_subwords(&s, &enc, &date_only, DEFAULT_MAX_LEN).unwrap_err();
        assert!(err.to_string().contains("B-SET"));
    }

    #[test]
    fn long_sequences_truncate_to_the_cap() {
        let enc = ToyEncoder::new(0);
        let vocab = LabelVocab::full();
        // 200 single-subword tokens, cap at 16.
        let tokens: Vec<String> = (0..200).map(|i| format!("t{i}")).collect();
        let labels = vec![IOLabel::Outside; 200];
        let s = LabeledSequence::new("d", 0, "en", tokens, labels).unwrap();
        let row = align_labels_to_subwords(&s, &enc, &vocab, 16).unwrap();
        assert_eq!(row.ids.len(), 16);
        assert!(row.truncated());
        assert!(row.first_subword.len() <= 16);
        assert_eq!(row.n_tokens, 200);
    }

    #[test]
    fn batch_matrices_pad_consistently() {
        let enc = ToyEncoder::new(0);
        let vocab = LabelVocab::full();
        let seqs = vec![
            seq(&["see", "you", "tomorrow"], "O O B-DATE"),
            seq(&["hi"], "O"),
        ];
        let batch = AlignedBatch::from_sequences(&seqs, &enc, &vocab, DEFAULT_MAX_LEN).unwrap();
        assert_eq!(batch.len(), 2);
        let width = batch.ids.ncols();
        assert_eq!(batch.lengths, vec![4, 1]); // tomorrow → 2 subwords
        for (i, &len) in batch.lengths.iter().enumerate() {
            for j in 0..width {
                if j < len {
                    assert_eq!(batch.mask[[i, j]], 1);
                } else {
                    assert_eq!(batch.mask[[i, j]], 0);
                    assert_eq!(batch.ids[[i, j]], PAD_ID);
                    assert_eq!(batch.targets[[i, j]], IGNORE);
                }
            }
        }
        assert_eq!(batch.supervised_positions(), 4);
    }

    #[test]
    fn text_alignment_never_produces_an_empty_row() {
        let enc = ToyEncoder::new(0);
        let batch = AlignedBatch::from_texts(&["hier matin", " "], &enc, DEFAULT_MAX_LEN);
        assert_eq!(batch.len(), 2);
        assert!(batch.lengths.iter().all(|&l| l >= 1));
        assert_eq!(batch.supervised_positions(), 0);
    }
}
