//! Conversion of annotated documents to IOB2 labeled sequences.
//!
//! Sentences are segmented (never through an annotation), tokenized, and
//! each token labeled: the first token overlapping a span gets
//! `B-<TYPE>`, subsequent overlapping tokens `I-<TYPE>`, everything else
//! `O`. A token that only partially overlaps a span is included in it
//! (greedy inclusion) and a warning is recorded — gold annotations are
//! never silently dropped.

use super::tokenize::{segment_sentences, tokenize_with_offsets, Token};
use super::CorpusError;
use crate::labels::{AnnotatedSpan, Document, IOLabel, LabeledSequence};

/// The outcome of IOB2 conversion: the sequences plus any alignment
/// warnings (boundary straddles, spans that matched no token).
#[derive(Debug, Clone, PartialEq)]
pub struct Iob2Output {
    pub sequences: Vec<LabeledSequence>,
    pub warnings: Vec<String>,
}

/// Converts a validated [`Document`] into one [`LabeledSequence`] per
/// sentence.
pub fn to_iob2(doc: &Document) -> Result<Iob2Output, CorpusError> {
    doc.validate()?;

    let mut sequences = Vec::new();
    let mut warnings = Vec::new();
    let mut covered = vec![false; doc.spans.len()];

    for (start, end) in segment_sentences(&doc.text, &doc.spans) {
        let tokens = tokenize_with_offsets(&doc.text[start..end], start);
        if tokens.is_empty() {
            continue;
        }
        let labels = label_tokens(doc, &tokens, &mut covered, &mut warnings);
        let surfaces = tokens.into_iter().map(|t| t.text).collect();
        sequences.push(LabeledSequence::new(
            &doc.doc_id,
            sequences.len(),
            &doc.language,
            surfaces,
            labels,
        )?);
    }

    for (i, span) in doc.spans.iter().enumerate() {
        if !covered[i] {
            let w = format!(
                "document {}: annotation {}..{} ({}) overlaps no token and was lost",
                doc.doc_id, span.start, span.end, span.timex_type
            );
            log::warn!("{w}");
            warnings.push(w);
        }
    }

    Ok(Iob2Output {
        sequences,
        warnings,
    })
}

/// Labels one sentence's tokens against the document's (sorted,
/// disjoint) spans. `covered` tracks which spans received at least one
/// token; warnings record partial overlaps.
fn label_tokens(
    doc: &Document,
    tokens: &[Token],
    covered: &mut [bool],
    warnings: &mut Vec<String>,
) -> Vec<IOLabel> {
    let overlaps =
        |t: &Token, s: &AnnotatedSpan| t.start < s.end && t.end > s.start;

    let mut labels = Vec::with_capacity(tokens.len());
    let mut current: Option<usize> = None; // span index the open expression belongs to
    for token in tokens {
        // Spans are sorted and disjoint, so the first overlapping one is
        // the only candidate for B/I assignment.
        let hit = doc
            .spans
            .iter()
            .enumerate()
            .find(|(_, s)| overlaps(token, s));
        match hit {
            None => {
                labels.push(IOLabel::Outside);
                current = None;
            }
            Some((idx, span)) => {
                if !(token.start >= span.start && token.end <= span.end) {
                    let w = format!(
                        "document {}: token `{}` ({}..{}) straddles the {} annotation {}..{}; included in it",
                        doc.doc_id,
                        token.text,
                        token.start,
                        token.end,
                        span.timex_type,
                        span.start,
                        span.end
                    );
                    log::warn!("{w}");
                    warnings.push(w);
                }
                if current == Some(idx) {
                    labels.push(IOLabel::Inside(span.timex_type));
                } else {
                    labels.push(IOLabel::Begin(span.timex_type));
                    current = Some(idx);
                }
                covered[idx] = true;
            }
        }
    }
    labels
}
