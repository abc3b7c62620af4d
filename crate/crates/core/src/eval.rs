//! Strict-match evaluation of predicted IOB2 sequences against gold.
//!
//! An expression counts as correctly extracted only when every one of its
//! tokens is recognized: a predicted span is a true positive iff a gold
//! span exists in the same sentence with exactly the same token
//! boundaries — and the same expression type when scoring
//! [`MatchMode::WithType`]. There is no partial credit and no relaxed
//! overlap mode.
//!
//! Malformed predictions (a continuation label with no span open) are
//! repaired by the usual sequence-labeling convention: a stray `I-X`
//! opens a new span of type X. The repair policy is part of the scoring
//! contract so that reported numbers are reproducible.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::labels::{IOLabel, LabeledSequence, TimexType};

/// Errors raised while pairing predictions with gold or averaging runs.
#[derive(Debug, Error, PartialEq, Eq)]
pub enum EvalError {
    #[error("duplicate {side} sequence for {doc_id}#{sent_index}")]
    DuplicateKey {
        side: &'static str,
        doc_id: String,
        sent_index: usize,
    },
    #[error("predicted sequence {doc_id}#{sent_index} has no gold counterpart")]
    MissingGold { doc_id: String, sent_index: usize },
    #[error("gold sequence {doc_id}#{sent_index} has no prediction")]
    MissingPrediction { doc_id: String, sent_index: usize },
    #[error(
        "sequence {doc_id}#{sent_index}: prediction has {pred} labels but gold has {gold}"
    )]
    LengthMismatch {
        doc_id: String,
        sent_index: usize,
        pred: usize,
        gold: usize,
    },
    #[error("cannot aggregate zero score reports")]
    EmptyAggregate,
    #[error("cannot aggregate score reports with mixed match modes")]
    MixedModes,
}

/// A decoded expression span: token indices within one sentence,
/// `start` inclusive, `end` exclusive.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Span {
    pub start: usize,
    pub end: usize,
    pub timex_type: TimexType,
}

/// A span tagged with the sentence it belongs to, for cross-document
/// bookkeeping.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct KeyedSpan {
    pub doc_id: String,
    pub sent_index: usize,
    pub span: Span,
}

/// Whether matching demands the expression type in addition to exact
/// token boundaries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum MatchMode {
    WithType,
    WithoutType,
}

impl MatchMode {
    pub fn as_str(self) -> &'static str {
        match self {
            MatchMode::WithType => "WITH_TYPE",
            MatchMode::WithoutType => "WITHOUT_TYPE",
        }
    }
}

/// Precision/recall/F1 with raw counts for one expression type.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TypeScore {
    pub true_positives: u64,
    pub false_positives: u64,
    pub false_negatives: u64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

/// The result of scoring one corpus of predictions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreReport {
    pub mode: MatchMode,
    pub true_positives: u64,
    pub false_positives: u64,
    pub false_negatives: u64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    /// Per-type counts; populated only in [`MatchMode::WithType`], where
    /// type identity is part of a match.
    pub per_type: Option<BTreeMap<TimexType, TypeScore>>,
}

/// Arithmetic mean of several [`ScoreReport`]s, one per training run.
///
/// Ratios are averaged directly (mean of per-run precision, recall, F1)
/// rather than recomputed from pooled counts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeanReport {
    pub mode: MatchMode,
    pub runs: usize,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub mean_true_positives: f64,
    pub mean_false_positives: f64,
    pub mean_false_negatives: f64,
}

/// Precision, recall, and F1 from raw counts, with the 0/0 → 0 rule.
fn prf(tp: u64, fp: u64, fn_: u64) -> (f64, f64, f64) {
    let ratio = |num: u64, denom: u64| {
        if denom == 0 {
            0.0
        } else {
            num as f64 / denom as f64
        }
    };
    let p = ratio(tp, tp + fp);
    let r = ratio(tp, tp + fn_);
    let f1 = if p + r > 0.0 { 2.0 * p * r / (p + r) } else { 0.0 };
    (p, r, f1)
}

/// Decodes an IOB2 label sequence into expression spans.
///
/// `B-X` starts a span; a following `I-X` of the same type extends it; a
/// stray `I-X` (at the start, after `O`, or after a span of a different
/// type) starts a new span. Spans close at `O`, at a type change, at any
/// `B-`, and at the end of the sequence. Total on all inputs, including
/// malformed predictions; the output is ordered and pairwise disjoint.
pub fn decode_spans(labels: &[IOLabel]) -> Vec<Span> {
    let mut spans = Vec::new();
    let mut open: Option<(usize, TimexType)> = None;
    for (i, &label) in labels.iter().enumerate() {
        let continues = match (label, open) {
            (IOLabel::Inside(t), Some((_, open_t))) => t == open_t,
            _ => false,
        };
        if !continues {
            if let Some((start, t)) = open.take() {
                spans.push(Span {
                    start,
                    end: i,
                    timex_type: t,
                });
            }
            match label {
                IOLabel::Begin(t) | IOLabel::Inside(t) => open = Some((i, t)),
                IOLabel::Outside => {}
            }
        }
    }
    if let Some((start, t)) = open {
        spans.push(Span {
            start,
            end: labels.len(),
            timex_type: t,
        });
    }
    spans
}

/// Decodes one labeled sentence into spans tagged with its sentence key.
pub fn decode_keyed_spans(seq: &LabeledSequence) -> Vec<KeyedSpan> {
    decode_spans(&seq.labels)
        .into_iter()
        .map(|span| KeyedSpan {
            doc_id: seq.doc_id.clone(),
            sent_index: seq.sent_index,
            span,
        })
        .collect()
}

/// The comparable identity of a span under a match mode.
type MatchKey = (usize, usize, Option<TimexType>);

fn match_key(span: &Span, mode: MatchMode) -> MatchKey {
    match mode {
        MatchMode::WithType => (span.start, span.end, Some(span.timex_type)),
        MatchMode::WithoutType => (span.start, span.end, None),
    }
}

/// Scores predictions against gold under strict matching.
///
/// `pred` and `gold` must cover exactly the same sequence keys
/// (`doc_id`, `sent_index`) with equal lengths; corpus order is
/// irrelevant. Every predicted span either matches exactly one gold span
/// (true positive) or none (false positive); gold spans left unmatched
/// are false negatives.
pub fn strict_match_score(
    pred: &[LabeledSequence],
    gold: &[LabeledSequence],
    mode: MatchMode,
) -> Result<ScoreReport, EvalError> {
    let mut gold_by_key: BTreeMap<(&str, usize), &LabeledSequence> = BTreeMap::new();
    for g in gold {
        if gold_by_key.insert((g.doc_id.as_str(), g.sent_index), g).is_some() {
            return Err(EvalError::DuplicateKey {
                side: "gold",
                doc_id: g.doc_id.clone(),
                sent_index: g.sent_index,
            });
        }
    }

    let mut tp = 0u64;
    let mut fp = 0u64;
    let mut fn_ = 0u64;
    let mut by_type: BTreeMap<TimexType, (u64, u64, u64)> = BTreeMap::new();
    let mut seen: BTreeSet<(&str, usize)> = BTreeSet::new();

    for p in pred {
        let key = (p.doc_id.as_str(), p.sent_index);
        if !seen.insert(key) {
            return Err(EvalError::DuplicateKey {
                side: "predicted",
                doc_id: p.doc_id.clone(),
                sent_index: p.sent_index,
            });
        }
        let g = gold_by_key.get(&key).ok_or_else(|| EvalError::MissingGold {
            doc_id: p.doc_id.clone(),
            sent_index: p.sent_index,
        })?;
        if p.labels.len() != g.labels.len() {
            return Err(EvalError::LengthMismatch {
                doc_id: p.doc_id.clone(),
                sent_index: p.sent_index,
                pred: p.labels.len(),
                gold: g.labels.len(),
            });
        }

        let pred_spans = decode_spans(&p.labels);
        let gold_spans = decode_spans(&g.labels);
        // Spans within one sentence are disjoint, so their match keys are
        // unique and set intersection realizes one-to-one matching.
        let gold_keys: BTreeSet<MatchKey> =
            gold_spans.iter().map(|s| match_key(s, mode)).collect();
        let pred_keys: BTreeSet<MatchKey> =
            pred_spans.iter().map(|s| match_key(s, mode)).collect();

        for span in &pred_spans {
            let entry = by_type.entry(span.timex_type).or_default();
            if gold_keys.contains(&match_key(span, mode)) {
                tp += 1;
                entry.0 += 1;
            } else {
                fp += 1;
                entry.1 += 1;
            }
        }
        for span in &gold_spans {
            if !pred_keys.contains(&match_key(span, mode)) {
                fn_ += 1;
                by_type.entry(span.timex_type).or_default().2 += 1;
            }
        }
    }

    if let Some((doc_id, sent_index)) = gold_by_key
        .keys()
        .find(|key| !seen.contains(*key))
        .copied()
    {
        return Err(EvalError::MissingPrediction {
            doc_id: doc_id.to_string(),
            sent_index,
        });
    }

    let (precision, recall, f1) = prf(tp, fp, fn_);
    // A per-type table only makes sense when type identity participates
    // in matching; without it, a DATE prediction can "match" a TIME gold
    // span and per-type counts would be ill-defined.
    let per_type = match mode {
        MatchMode::WithType => Some(
            by_type
                .into_iter()
                .map(|(t, (tp, fp, fn_))| {
                    let (precision, recall, f1) = prf(tp, fp, fn_);
                    (
                        t,
                        TypeScore {
                            true_positives: tp,
                            false_positives: fp,
                            false_negatives: fn_,
                            precision,
                            recall,
                            f1,
                        },
                    )
                })
                .collect(),
        ),
        MatchMode::WithoutType => None,
    };

    Ok(ScoreReport {
        mode,
        true_positives: tp,
        false_positives: fp,
        false_negatives: fn_,
        precision,
        recall,
        f1,
        per_type,
    })
}

/// Averages per-run reports into a mean report.
///
/// All reports must share one match mode. Precision, recall, and F1 are
/// averaged as ratios — the mean of the per-run values — rather than
/// recomputed from pooled counts, matching how multi-seed results are
/// reported.
pub fn aggregate_runs(reports: &[ScoreReport]) -> Result<MeanReport, EvalError> {
    let first = reports.first().ok_or(EvalError::EmptyAggregate)?;
    if reports.iter().any(|r| r.mode != first.mode) {
        return Err(EvalError::MixedModes);
    }
    let n = reports.len() as f64;
    let mean = |f: &dyn Fn(&ScoreReport) -> f64| reports.iter().map(f).sum::<f64>() / n;
    Ok(MeanReport {
        mode: first.mode,
        runs: reports.len(),
        precision: mean(&|r| r.precision),
        recall: mean(&|r| r.recall),
        f1: mean(&|r| r.f1),
        mean_true_positives: mean(&|r| r.true_positives as f64),
        mean_false_positives: mean(&|r| r.false_positives as f64),
        mean_false_negatives: mean(&|r| r.false_negatives as f64),
    })
}

/// Rounds to four decimal places for report files.
fn round4(x: f64) -> f64 {
    (x * 10_000.0).round() / 10_000.0
}

impl ScoreReport {
    /// JSON form for report files: counts verbatim, ratios rounded to
    /// four decimal places.
    pub fn to_report_json(&self) -> serde_json::Value {
        let mut obj = serde_json::json!({
            "mode": self.mode.as_str(),
            "true_positives": self.true_positives,
            "false_positives": self.false_positives,
            "false_negatives": self.false_negatives,
            "precision": round4(self.precision),
            "recall": round4(self.recall),
            "f1": round4(self.f1),
        });
        if let Some(per_type) = &self.per_type {
            let table: serde_json::Map<String, serde_json::Value> = per_type
                .iter()
                .map(|(t, s)| {
                    (
                        t.to_string(),
                        serde_json::json!({
                            "true_positives": s.true_positives,
                            "false_positives": s.false_positives,
                            "false_negatives": s.false_negatives,
                            "precision": round4(s.precision),
                            "recall": round4(s.recall),
                            "f1": round4(s.f1),
                        }),
                    )
                })
                .collect();
            obj["per_type"] = serde_json::Value::Object(table);
        }
        obj
    }

    /// Plain-text table: one row overall plus one per type when present,
    /// columns F1 | Pr. | Re.
    pub fn text_table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "mode: {}", self.mode.as_str());
        let _ = writeln!(out, "{:<10} {:>8} {:>8} {:>8}", "", "F1", "Pr.", "Re.");
        let _ = writeln!(
            out,
            "{:<10} {:>8.4} {:>8.4} {:>8.4}",
            "overall", self.f1, self.precision, self.recall
        );
        if let Some(per_type) = &self.per_type {
            for (t, s) in per_type {
                let _ = writeln!(
                    out,
                    "{:<10} {:>8.4} {:>8.4} {:>8.4}",
                    t.to_string(),
                    s.f1,
                    s.precision,
                    s.recall
                );
            }
        }
        out
    }
}

impl MeanReport {
    /// JSON form for report files, ratios rounded to four decimal places.
    pub fn to_report_json(&self) -> serde_json::Value {
        serde_json::json!({
            "mode": self.mode.as_str(),
            "runs": self.runs,
            "precision": round4(self.precision),
            "recall": round4(self.recall),
            "f1": round4(self.f1),
            "mean_true_positives": self.mean_true_positives,
            "mean_false_positives": self.mean_false_positives,
            "mean_false_negatives": self.mean_false_negatives,
        })
    }
}
