//! Paired synthetic languages for end-to-end transfer experiments.
//!
//! The generator produces a source language (`aa`) and a target language
//! (`tt`) with deterministic grammars: sentences are runs of filler words,
//! and half of them carry exactly one single-token temporal marker labeled
//! `B-DATE`. The two languages share part of their marker inventory
//! verbatim (cognates) while the rest is language-specific, and a fixture
//! translation table maps any source sentence word-for-word into the
//! target language.
//!
//! That layout reproduces the conditions a cross-lingual tagger faces:
//!
//! * Shared markers are learnable from source token labels alone.
//! * Target-only markers never appear in source training data, so a
//!   tagger trained purely on the source misses them. They do appear in
//!   translated sentence-classification data, where only sentence-level
//!   labels are available — exactly the signal the secondary task feeds
//!   through the shared encoder.
//! * Target fillers are suffixed forms of source fillers ("bola" →
//!   "bolata"), so both share a leading subword. That stands in for what
//!   a pretrained multilingual backbone provides in the real setting — a
//!   subword space where the target language's ordinary vocabulary is
//!   not out-of-distribution. The genuinely novel target words are the
//!   target-only markers, and sentence-level supervision is the only
//!   path to learning them.
//! * Training sentences come in minimal pairs (the same filler run with
//!   and without a marker), so a sentence's binary label carries no
//!   information about anything except the marker.
//!
//! Everything is a pure function of [`SyntheticOptions`], so corpora,
//! translations, and downstream training runs are reproducible bit for
//! bit.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::labels::{IOLabel, LabeledSequence, TimexType};
use crate::taskgen::{
    build_all_tasks, SkippedSample, TaskDataset, TaskGenError, TranslationCache,
    TranslationCacheEntry, Translator,
};

/// Language code of the synthetic source language.
pub const SOURCE_LANGUAGE: &str = "aa";
/// Language code of the synthetic target language.
pub const TARGET_LANGUAGE: &str = "tt";

/// Non-temporal vocabulary, paired index-for-index across languages.
/// Source fillers are exactly one subword chunk long; each target filler
/// is its source counterpart plus a suffix, so the pair shares its first
/// subword and the target filler's labeled position is covered by source
/// supervision.
const SOURCE_FILLERS: [&str; 6] = ["bola", "rinu", "suvo", "klam", "deru", "ponk"];
const TARGET_FILLERS: [&str; 6] = ["bolata", "rinuta", "suvota", "klamta", "deruta", "ponkta"];

/// Temporal markers spelled identically in both languages.
const SHARED_MARKERS: [&str; 2] = ["zita", "qepo"];
/// Markers that exist only in one language, paired by translation.
/// Target-only markers share no subword with any source word.
const SOURCE_ONLY_MARKERS: [&str; 2] = ["avre", "ilbo"];
const TARGET_ONLY_MARKERS: [&str; 2] = ["tyre", "umbr"];

/// Sentence counts and the seed that fixes every random choice.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticOptions {
    /// Labeled source-language training sentences.
    pub train_sentences: usize,
    /// Labeled target-language validation sentences.
    pub validation_sentences: usize,
    /// Labeled target-language test sentences.
    pub test_sentences: usize,
    pub seed: u64,
}

impl Default for SyntheticOptions {
    fn default() -> Self {
        SyntheticOptions {
            train_sentences: 120,
            validation_sentences: 40,
            test_sentences: 80,
            seed: 17,
        }
    }
}

/// A generated language pair: labeled corpora plus the translation table.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticCorpus {
    /// Source-language training data with token labels.
    pub source_train: Vec<LabeledSequence>,
    /// Target-language validation data (model selection only).
    pub validation: Vec<LabeledSequence>,
    /// Target-language test data.
    pub test: Vec<LabeledSequence>,
    /// Word-for-word translations of every distinct training sentence,
    /// ready to preload a [`TranslationCache`].
    pub cache_entries: Vec<TranslationCacheEntry>,
}

/// Translates one source-language word; words outside the synthetic
/// source vocabulary (shared markers included) pass through unchanged.
pub fn translate_word(word: &str) -> String {
    if let Some(i) = SOURCE_FILLERS.iter().position(|w| *w == word) {
        return TARGET_FILLERS[i].to_string();
    }
    if let Some(i) = SOURCE_ONLY_MARKERS.iter().position(|w| *w == word) {
        return TARGET_ONLY_MARKERS[i].to_string();
    }
    word.to_string()
}

/// Word-for-word translation of a whitespace-tokenized sentence.
pub fn translate_sentence(text: &str) -> String {
    text.split_whitespace()
        .map(translate_word)
        .collect::<Vec<_>>()
        .join(" ")
}

/// The marker inventory visible in source-language text.
fn source_markers() -> Vec<&'static str> {
    let mut v = SHARED_MARKERS.to_vec();
    v.extend_from_slice(&SOURCE_ONLY_MARKERS);
    v
}

/// The marker inventory visible in target-language text.
fn target_markers() -> Vec<&'static str> {
    let mut v = SHARED_MARKERS.to_vec();
    v.extend_from_slice(&TARGET_ONLY_MARKERS);
    v
}

/// One sentence: 3–6 fillers, with one labeled marker inserted into
/// every second sentence.
fn sentence(
    rng: &mut ChaCha8Rng,
    fillers: &[&str],
    markers: &[&str],
    language: &str,
    doc_id: &str,
    index: usize,
) -> LabeledSequence {
    let n = rng.random_range(3..=6);
    let mut tokens: Vec<String> = (0..n)
        .map(|_| fillers[rng.random_range(0..fillers.len())].to_string())
        .collect();
    let mut labels = vec![IOLabel::Outside; n];
    if index % 2 == 0 {
        let marker = markers[rng.random_range(0..markers.len())];
        let at = rng.random_range(0..=n);
        tokens.insert(at, marker.to_string());
        labels.insert(at, IOLabel::Begin(TimexType::Date));
    }
    LabeledSequence::new(doc_id, index, language, tokens, labels)
        .expect("generated sentence is well-formed")
}

/// A minimal pair: a marker-bearing sentence at `positive_index` and its
/// marker-free twin right after it. Identical filler runs on both sides
/// mean the marker is the only feature separating "has an expression"
/// from "has none" — non-temporal words carry zero sentence-level signal
/// by construction, mirroring how real temporal cues behave against a
/// large balanced background vocabulary.
fn sentence_pair(
    rng: &mut ChaCha8Rng,
    fillers: &[&str],
    marker: &str,
    language: &str,
    doc_id: &str,
    positive_index: usize,
) -> (LabeledSequence, LabeledSequence) {
    let n = rng.random_range(3..=6);
    let run: Vec<String> = (0..n)
        .map(|_| fillers[rng.random_range(0..fillers.len())].to_string())
        .collect();
    let negative = LabeledSequence::new(
        doc_id,
        positive_index + 1,
        language,
        run.clone(),
        vec![IOLabel::Outside; n],
    )
    .expect("generated sentence is well-formed");
    let mut tokens = run;
    let mut labels = vec![IOLabel::Outside; n];
    let at = rng.random_range(0..=n);
    tokens.insert(at, marker.to_string());
    labels.insert(at, IOLabel::Begin(TimexType::Date));
    let positive = LabeledSequence::new(doc_id, positive_index, language, tokens, labels)
        .expect("generated sentence is well-formed");
    (positive, negative)
}

/// Generates the language pair for `options`.
pub fn generate(options: &SyntheticOptions) -> SyntheticCorpus {
    let mut rng = ChaCha8Rng::seed_from_u64(options.seed);
    let src_fillers = SOURCE_FILLERS.to_vec();
    let tgt_fillers = TARGET_FILLERS.to_vec();
    let src_markers = source_markers();
    let tgt_markers = target_markers();

    // Training data is minimal pairs, with the marker inventory cycled
    // so every source marker gets equal exposure.
    let mut source_train = Vec::with_capacity(options.train_sentences);
    let mut pair_index = 0;
    while source_train.len() < options.train_sentences {
        let marker = src_markers[pair_index % src_markers.len()];
        let (positive, negative) = sentence_pair(
            &mut rng,
            &src_fillers,
            marker,
            SOURCE_LANGUAGE,
            "train",
            source_train.len(),
        );
        source_train.push(positive);
        if source_train.len() < options.train_sentences {
            source_train.push(negative);
        }
        pair_index += 1;
    }
    let validation: Vec<LabeledSequence> = (0..options.validation_sentences)
        .map(|i| sentence(&mut rng, &tgt_fillers, &tgt_markers, TARGET_LANGUAGE, "val", i))
        .collect();
    let test: Vec<LabeledSequence> = (0..options.test_sentences)
        .map(|i| sentence(&mut rng, &tgt_fillers, &tgt_markers, TARGET_LANGUAGE, "test", i))
        .collect();

    let mut seen = std::collections::BTreeSet::new();
    let cache_entries: Vec<TranslationCacheEntry> = source_train
        .iter()
        .map(|seq| seq.text())
        .filter(|text| seen.insert(text.clone()))
        .map(|text| TranslationCacheEntry {
            text: translate_sentence(&text),
            src: text,
            src_lang: SOURCE_LANGUAGE.to_string(),
            tgt_lang: TARGET_LANGUAGE.to_string(),
            provider: "fixture".to_string(),
            ts: 0,
        })
        .collect();

    SyntheticCorpus {
        source_train,
        validation,
        test,
        cache_entries,
    }
}

/// Builds the standard task pair (token tagging on the source, sentence
/// classification on translated target text) from a generated corpus.
pub fn build_tasks(
    corpus: &SyntheticCorpus,
) -> Result<(Vec<TaskDataset>, Vec<SkippedSample>), TaskGenError> {
    let cache = TranslationCache::in_memory();
    for entry in &corpus.cache_entries {
        cache.insert(entry.clone())?;
    }
    let translator = Translator::new(None, &cache).offline(true);
    build_all_tasks(
        &[(SOURCE_LANGUAGE.to_string(), corpus.source_train.clone())],
        TARGET_LANGUAGE,
        &translator,
    )
}
