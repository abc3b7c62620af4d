//! Corpus statistics: document/sentence/token counts and per-type
//! expression counts, in the layout benchmark papers tabulate
//! (#Docs, #Exprs, #Dates, #Times, #Durations, #Sets).

use serde::{Deserialize, Serialize};

use crate::labels::{distinct_doc_ids, IOLabel, LabeledSequence, TimexType};

/// Aggregate counts over one corpus.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct CorpusStats {
    pub documents: usize,
    pub sequences: usize,
    pub tokens: usize,
    /// Total expressions = sum of the four per-type counts.
    pub expressions: usize,
    pub dates: usize,
    pub times: usize,
    pub durations: usize,
    pub sets: usize,
}

impl CorpusStats {
    pub fn count_for(&self, t: TimexType) -> usize {
        match t {
            TimexType::Date => self.dates,
            TimexType::Time => self.times,
            TimexType::Duration => self.durations,
            TimexType::Set => self.sets,
        }
    }
}

/// Counts expressions by their `B-` labels: in well-formed IOB2 every
/// expression has exactly one `B`.
pub fn corpus_stats(sequences: &[LabeledSequence]) -> CorpusStats {
    let mut stats = CorpusStats {
        documents: distinct_doc_ids(sequences),
        sequences: sequences.len(),
        ..CorpusStats::default()
    };
    for seq in sequences {
        stats.tokens += seq.tokens.len();
        for label in &seq.labels {
            if let IOLabel::Begin(t) = label {
                stats.expressions += 1;
                match t {
                    TimexType::Date => stats.dates += 1,
                    TimexType::Time => stats.times += 1,
                    TimexType::Duration => stats.durations += 1,
                    TimexType::Set => stats.sets += 1,
                }
            }
        }
    }
    stats
}
