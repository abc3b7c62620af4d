//! Python bindings for the temporal-expression toolkit.
//!
//! The module mirrors the library's main types and operations: labeled
//! sequences, TimeML and CoNLL conversion, span decoding, strict-match
//! scoring, corpus statistics, weak sentence labels, and seeded
//! multi-run training on the built-in synthetic language pair. Build it
//! with `cargo build -p xltime-python` and load the resulting shared
//! library as `xltime_py` (see `python/smoke_test.py`).

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::{PyDict, PyList};

use xltime_core::corpus::{
    corpus_stats as core_corpus_stats, parse_conll_str, parse_timeml as core_parse_timeml,
    to_conll_string, to_iob2,
};
use xltime_core::eval::{
    decode_spans as core_decode_spans, strict_match_score as core_strict_match_score, MatchMode,
    MeanReport, ScoreReport,
};
use xltime_core::labels::{IOLabel, LabeledSequence};
use xltime_core::synthetic::{
    build_tasks, generate, translate_sentence as core_translate_sentence, SyntheticOptions,
    SOURCE_LANGUAGE, TARGET_LANGUAGE,
};
use xltime_core::taskgen::{derive_sentence_label as core_derive_sentence_label, TaskRole};
use xltime_core::trainer::{multi_seed_run, TrainConfig, ValidationMetric};

fn value_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn parse_labels(labels: &[String]) -> PyResult<Vec<IOLabel>> {
    labels.iter().map(|l| l.parse().map_err(value_err)).collect()
}

/// One tokenized sentence with an IOB2 label per token.
#[pyclass(name = "LabeledSequence", from_py_object)]
#[derive(Clone)]
struct PyLabeledSequence {
    inner: LabeledSequence,
}

impl From<LabeledSequence> for PyLabeledSequence {
    fn from(inner: LabeledSequence) -> Self {
        PyLabeledSequence { inner }
    }
}

#[pymethods]
impl PyLabeledSequence {
    #[new]
    fn new(
        doc_id: &str,
        sent_index: usize,
        language: &str,
        tokens: Vec<String>,
        labels: Vec<String>,
    ) -> PyResult<Self> {
        let labels = parse_labels(&labels)?;
        let inner = LabeledSequence::new(doc_id, sent_index, language, tokens, labels)
            .map_err(value_err)?;
        Ok(PyLabeledSequence { inner })
    }

    #[getter]
    fn doc_id(&self) -> &str {
        &self.inner.doc_id
    }

    #[getter]
    fn sent_index(&self) -> usize {
        self.inner.sent_index
    }

    #[getter]
    fn language(&self) -> &str {
        &self.inner.language
    }

    #[getter]
    fn tokens(&self) -> Vec<String> {
        self.inner.tokens.clone()
    }

    #[getter]
    fn labels(&self) -> Vec<String> {
        self.inner.labels.iter().map(|l| l.to_string()).collect()
    }

    /// The sentence as whitespace-joined tokens.
    fn text(&self) -> String {
        self.inner.text()
    }

    /// Whether any token belongs to a temporal expression.
    fn contains_expression(&self) -> bool {
        self.inner.contains_expression()
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn __eq__(&self, other: &Self) -> bool {
        self.inner == other.inner
    }

    fn __repr__(&self) -> String {
        format!(
            "LabeledSequence(doc_id={:?}, sent_index={}, language={:?}, tokens={})",
            self.inner.doc_id,
            self.inner.sent_index,
            self.inner.language,
            self.inner.len()
        )
    }
}

fn unwrap_sequences(seqs: Vec<PyLabeledSequence>) -> Vec<LabeledSequence> {
    seqs.into_iter().map(|s| s.inner).collect()
}

fn wrap_sequences(seqs: Vec<LabeledSequence>) -> Vec<PyLabeledSequence> {
    seqs.into_iter().map(PyLabeledSequence::from).collect()
}

fn score_dict<'py>(py: Python<'py>, r: &ScoreReport) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("mode", r.mode.as_str())?;
    d.set_item("true_positives", r.true_positives)?;
    d.set_item("false_positives", r.false_positives)?;
    d.set_item("false_negatives", r.false_negatives)?;
    d.set_item("precision", r.precision)?;
    d.set_item("recall", r.recall)?;
    d.set_item("f1", r.f1)?;
    if let Some(per_type) = &r.per_type {
        let table = PyDict::new(py);
        for (ty, s) in per_type {
            let e = PyDict::new(py);
            e.set_item("true_positives", s.true_positives)?;
            e.set_item("false_positives", s.false_positives)?;
            e.set_item("false_negatives", s.false_negatives)?;
            e.set_item("precision", s.precision)?;
            e.set_item("recall", s.recall)?;
            e.set_item("f1", s.f1)?;
            table.set_item(ty.as_str(), e)?;
        }
        d.set_item("per_type", table)?;
    }
    Ok(d)
}

fn mean_dict<'py>(py: Python<'py>, m: &MeanReport) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("mode", m.mode.as_str())?;
    d.set_item("runs", m.runs)?;
    d.set_item("precision", m.precision)?;
    d.set_item("recall", m.recall)?;
    d.set_item("f1", m.f1)?;
    d.set_item("mean_true_positives", m.mean_true_positives)?;
    d.set_item("mean_false_positives", m.mean_false_positives)?;
    d.set_item("mean_false_negatives", m.mean_false_negatives)?;
    Ok(d)
}

/// Parses a TimeML document and converts its annotations to IOB2.
/// Returns `{"sequences": [LabeledSequence], "warnings": [str]}`.
#[pyfunction]
#[pyo3(signature = (xml, language = "en", doc_id = "document"))]
fn parse_timeml(py: Python<'_>, xml: &str, language: &str, doc_id: &str) -> PyResult<Py<PyDict>> {
    let doc = core_parse_timeml(xml, language, doc_id).map_err(value_err)?;
    let converted = to_iob2(&doc).map_err(value_err)?;
    let d = PyDict::new(py);
    d.set_item("sequences", wrap_sequences(converted.sequences))?;
    d.set_item("warnings", converted.warnings)?;
    Ok(d.unbind())
}

/// Parses CoNLL text (token TAB label, blank line between sentences)
/// into labeled sequences. `default_doc` and `default_language` fill in
/// when the text carries no metadata comments.
#[pyfunction]
#[pyo3(signature = (text, default_doc = "document", default_language = "und"))]
fn parse_conll(
    text: &str,
    default_doc: &str,
    default_language: &str,
) -> PyResult<Vec<PyLabeledSequence>> {
    let seqs = parse_conll_str(text, default_doc, default_language).map_err(value_err)?;
    Ok(wrap_sequences(seqs))
}

/// Serializes labeled sequences to CoNLL text; `parse_conll` reads it
/// back exactly.
#[pyfunction]
fn to_conll(sequences: Vec<PyLabeledSequence>) -> PyResult<String> {
    to_conll_string(&unwrap_sequences(sequences)).map_err(value_err)
}

/// Aggregate corpus statistics over the given sequences.
#[pyfunction]
fn corpus_stats(py: Python<'_>, sequences: Vec<PyLabeledSequence>) -> PyResult<Py<PyDict>> {
    let stats = core_corpus_stats(&unwrap_sequences(sequences));
    let d = PyDict::new(py);
    d.set_item("documents", stats.documents)?;
    d.set_item("sequences", stats.sequences)?;
    d.set_item("tokens", stats.tokens)?;
    d.set_item("expressions", stats.expressions)?;
    d.set_item("dates", stats.dates)?;
    d.set_item("times", stats.times)?;
    d.set_item("durations", stats.durations)?;
    d.set_item("sets", stats.sets)?;
    Ok(d.unbind())
}

/// Decodes an IOB2 label list into `(start, end, type)` spans, `end`
/// exclusive. Total on malformed input: a stray `I-` opens a span.
#[pyfunction]
fn decode_spans(labels: Vec<String>) -> PyResult<Vec<(usize, usize, String)>> {
    let labels = parse_labels(&labels)?;
    Ok(core_decode_spans(&labels)
        .into_iter()
        .map(|s| (s.start, s.end, s.timex_type.as_str().to_string()))
        .collect())
}

/// The weak sentence label: 1 iff the sequence contains any expression.
#[pyfunction]
fn derive_sentence_label(sequence: PyRef<'_, PyLabeledSequence>) -> u8 {
    core_derive_sentence_label(&sequence.inner)
}

/// Scores predictions against gold under strict span matching. Both
/// corpora must cover the same (doc_id, sent_index) keys with equal
/// sequence lengths.
#[pyfunction]
#[pyo3(signature = (pred, gold, with_type = false))]
fn strict_match_score(
    py: Python<'_>,
    pred: Vec<PyLabeledSequence>,
    gold: Vec<PyLabeledSequence>,
    with_type: bool,
) -> PyResult<Py<PyDict>> {
    let mode = if with_type {
        MatchMode::WithType
    } else {
        MatchMode::WithoutType
    };
    let report = core_strict_match_score(&unwrap_sequences(pred), &unwrap_sequences(gold), mode)
        .map_err(value_err)?;
    Ok(score_dict(py, &report)?.unbind())
}

/// Word-for-word translation between the built-in synthetic languages.
#[pyfunction]
fn translate_sentence(text: &str) -> String {
    core_translate_sentence(text)
}

/// Hyperparameters of one training run.
#[pyclass(name = "TrainConfig", skip_from_py_object)]
#[derive(Clone)]
struct PyTrainConfig {
    inner: TrainConfig,
}

#[pymethods]
impl PyTrainConfig {
    #[new]
    #[pyo3(signature = (
        learning_rate = 7e-6,
        warmup_proportion = 0.1,
        epochs = 50,
        batch_size = 32,
        seed = 42,
        weight_decay = 0.01,
        max_grad_norm = 1.0,
        validation_metric = "without_type_f1",
        head_bias = true,
        max_len = 128,
    ))]
    #[allow(clippy::too_many_arguments)]
    fn new(
        learning_rate: f64,
        warmup_proportion: f64,
        epochs: usize,
        batch_size: usize,
        seed: u64,
        weight_decay: f64,
        max_grad_norm: f64,
        validation_metric: &str,
        head_bias: bool,
        max_len: usize,
    ) -> PyResult<Self> {
        let validation_metric = match validation_metric {
            "without_type_f1" => ValidationMetric::WithoutTypeF1,
            "with_type_f1" => ValidationMetric::WithTypeF1,
            other => {
                return Err(PyValueError::new_err(format!(
                    "unknown validation metric `{other}`; \
                     expected `without_type_f1` or `with_type_f1`"
                )))
            }
        };
        let inner = TrainConfig {
            learning_rate,
            warmup_proportion,
            epochs,
            batch_size,
            seed,
            validation_metric,
            weight_decay,
            max_grad_norm,
            head_bias,
            max_len,
        };
        inner.validate().map_err(value_err)?;
        Ok(PyTrainConfig { inner })
    }

    #[getter]
    fn learning_rate(&self) -> f64 {
        self.inner.learning_rate
    }

    #[getter]
    fn warmup_proportion(&self) -> f64 {
        self.inner.warmup_proportion
    }

    #[getter]
    fn epochs(&self) -> usize {
        self.inner.epochs
    }

    #[getter]
    fn batch_size(&self) -> usize {
        self.inner.batch_size
    }

    #[getter]
    fn seed(&self) -> u64 {
        self.inner.seed
    }

    #[getter]
    fn validation_metric(&self) -> &'static str {
        match self.inner.validation_metric {
            ValidationMetric::WithoutTypeF1 => "without_type_f1",
            ValidationMetric::WithTypeF1 => "with_type_f1",
        }
    }

    #[getter]
    fn weight_decay(&self) -> f64 {
        self.inner.weight_decay
    }

    #[getter]
    fn max_grad_norm(&self) -> f64 {
        self.inner.max_grad_norm
    }

    #[getter]
    fn head_bias(&self) -> bool {
        self.inner.head_bias
    }

    #[getter]
    fn max_len(&self) -> usize {
        self.inner.max_len
    }

    /// SHA-256 digest of the canonical form; equal exactly when every
    /// field agrees.
    fn digest(&self) -> String {
        self.inner.digest()
    }

    fn __repr__(&self) -> String {
        format!(
            "TrainConfig(learning_rate={}, epochs={}, batch_size={}, seed={})",
            self.inner.learning_rate, self.inner.epochs, self.inner.batch_size, self.inner.seed
        )
    }
}

/// Generates the paired synthetic languages: labeled source training
/// data, labeled target validation/test splits, and the word-for-word
/// translations that seed a translation cache. Returns
/// `{"source_train", "validation", "test": [LabeledSequence],
///   "translations": [dict]}`.
#[pyfunction]
#[pyo3(signature = (train_sentences = 120, validation_sentences = 40, test_sentences = 80, seed = 17))]
fn generate_synthetic(
    py: Python<'_>,
    train_sentences: usize,
    validation_sentences: usize,
    test_sentences: usize,
    seed: u64,
) -> PyResult<Py<PyDict>> {
    let corpus = generate(&SyntheticOptions {
        train_sentences,
        validation_sentences,
        test_sentences,
        seed,
    });
    let d = PyDict::new(py);
    d.set_item("source_train", wrap_sequences(corpus.source_train))?;
    d.set_item("validation", wrap_sequences(corpus.validation))?;
    d.set_item("test", wrap_sequences(corpus.test))?;
    let translations = PyList::empty(py);
    for entry in &corpus.cache_entries {
        let e = PyDict::new(py);
        e.set_item("src", &entry.src)?;
        e.set_item("src_lang", &entry.src_lang)?;
        e.set_item("tgt_lang", &entry.tgt_lang)?;
        e.set_item("text", &entry.text)?;
        translations.append(e)?;
    }
    d.set_item("translations", translations)?;
    Ok(d.unbind())
}

/// Trains on the synthetic language pair once per seed and scores each
/// best checkpoint on the target test split. With `multi_task=False`
/// only the token-tagging task trains; otherwise the translated
/// sentence-classification task joins it. Returns
/// `{"runs": [dict], "failures": [str],
///   "mean_with_type": dict | None, "mean_without_type": dict | None}`.
#[pyfunction]
#[pyo3(signature = (
    config,
    n_runs = 1,
    multi_task = true,
    train_sentences = 120,
    validation_sentences = 40,
    test_sentences = 80,
    corpus_seed = 17,
))]
fn train_synthetic(
    py: Python<'_>,
    config: PyRef<'_, PyTrainConfig>,
    n_runs: usize,
    multi_task: bool,
    train_sentences: usize,
    validation_sentences: usize,
    test_sentences: usize,
    corpus_seed: u64,
) -> PyResult<Py<PyDict>> {
    let corpus = generate(&SyntheticOptions {
        train_sentences,
        validation_sentences,
        test_sentences,
        seed: corpus_seed,
    });
    let (mut tasks, _) = build_tasks(&corpus).map_err(value_err)?;
    if !multi_task {
        tasks.retain(|t| t.role() == TaskRole::Primary);
    }
    let outcome = multi_seed_run(
        &config.inner,
        &tasks,
        &corpus.validation,
        &corpus.test,
        n_runs,
        None,
    )
    .map_err(value_err)?;

    let d = PyDict::new(py);
    let runs = PyList::empty(py);
    for run in &outcome.runs {
        let r = PyDict::new(py);
        r.set_item("seed", run.seed)?;
        r.set_item("best_epoch", run.checkpoint.epoch)?;
        r.set_item("with_type", score_dict(py, &run.with_type)?)?;
        r.set_item("without_type", score_dict(py, &run.without_type)?)?;
        runs.append(r)?;
    }
    d.set_item("runs", runs)?;
    let failures: Vec<String> = outcome
        .failures
        .iter()
        .map(|f| format!("seed {}: {}", f.seed, f.message))
        .collect();
    d.set_item("failures", failures)?;
    match &outcome.mean_with_type {
        Some(m) => d.set_item("mean_with_type", mean_dict(py, m)?)?,
        None => d.set_item("mean_with_type", py.None())?,
    }
    match &outcome.mean_without_type {
        Some(m) => d.set_item("mean_without_type", mean_dict(py, m)?)?,
        None => d.set_item("mean_without_type", py.None())?,
    }
    Ok(d.unbind())
}

#[pymodule]
fn xltime_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    m.add("SYNTHETIC_SOURCE_LANGUAGE", SOURCE_LANGUAGE)?;
    m.add("SYNTHETIC_TARGET_LANGUAGE", TARGET_LANGUAGE)?;
    m.add_class::<PyLabeledSequence>()?;
    m.add_class::<PyTrainConfig>()?;
    m.add_function(wrap_pyfunction!(parse_timeml, m)?)?;
    m.add_function(wrap_pyfunction!(parse_conll, m)?)?;
    m.add_function(wrap_pyfunction!(to_conll, m)?)?;
    m.add_function(wrap_pyfunction!(corpus_stats, m)?)?;
    m.add_function(wrap_pyfunction!(decode_spans, m)?)?;
    m.add_function(wrap_pyfunction!(derive_sentence_label, m)?)?;
    m.add_function(wrap_pyfunction!(strict_match_score, m)?)?;
    m.add_function(wrap_pyfunction!(translate_sentence, m)?)?;
    m.add_function(wrap_pyfunction!(generate_synthetic, m)?)?;
    m.add_function(wrap_pyfunction!(train_synthetic, m)?)?;
    Ok(())
}
