//! The tagging model: a shared encoder with two task heads.
//!
//! One backbone feeds both classifiers. The tagging head scores every
//! subword position over the label classes; the sentence head scores
//! the pooled vector over {no expression, has expression}. Training a
//! batch of one task touches the backbone and that task's head only —
//! the other head's parameters receive no gradient and are never
//! stepped, which multi-task interleaving relies on.

mod batch;
mod encoder;
mod head;
mod loss;
mod params;
mod vocab;

use ndarray::{Array2, ArrayViewD, ArrayViewMutD};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use batch::{
    align_labels_to_subwords, align_text, align_token_row, AlignedBatch, AlignedRow, IGNORE,
};
pub use encoder::{
    subword_ids, Backbone, EncoderOutput, ToyEncoder, TrainableBackbone, DEFAULT_MAX_LEN,
    PAD_ID, SUBWORD_VOCAB, TOY_DIM, UNK_ID,
};
pub use head::{argmax_lowest, predict_labels, LinearHead};
pub use loss::{
    primary_loss, primary_loss_with_grad, secondary_loss, secondary_loss_with_grad,
    PrimaryLossGrad, SecondaryLossGrad,
};
pub use params::{Gradients, ParamVisitor};
pub use vocab::LabelVocab;

use crate::labels::{IOLabel, LabeledSequence};

/// Errors from model construction, alignment, and loss computation.
#[derive(Debug, Error)]
pub enum ModelError {
    #[error("label `{label}` is not in the model's label vocabulary")]
    LabelNotInVocab { label: String },
    #[error("class index {index} out of range for {classes} classes")]
    ClassOutOfRange { index: usize, classes: usize },
    #[error("tagging loss needs at least one supervised (non-ignored) position")]
    AllPositionsIgnored,
    #[error("sentence loss needs a non-empty batch")]
    EmptyBatch,
    #[error("{what}: expected {expected}, found {found}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("non-finite values in {what}")]
    NonFinite { what: String },
}

/// The full two-head model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(
    serialize = "B: Serialize",
    deserialize = "B: serde::de::DeserializeOwned"
))]
pub struct TaggingModel<B: TrainableBackbone> {
    pub backbone: B,
    /// |c| × d tagging classifier.
    pub primary_head: LinearHead,
    /// 2 × d sentence classifier.
    pub secondary_head: LinearHead,
    pub vocab: LabelVocab,
    /// Subword cap per sequence.
    pub max_len: usize,
}

impl TaggingModel<ToyEncoder> {
    /// A freshly initialized toy model. The encoder and each head draw
    /// from their own seeded stream so components stay independent.
    pub fn toy(vocab: LabelVocab, seed: u64) -> Self {
        Self::toy_with_options(vocab, seed, true)
    }

    /// Toy model with the bias terms switched on or off.
    pub fn toy_with_options(vocab: LabelVocab, seed: u64, with_bias: bool) -> Self {
        let backbone = ToyEncoder::new(seed);
        let d = backbone.hidden_dim();
        TaggingModel {
            backbone,
            primary_head: LinearHead::init(
                "primary_head",
                vocab.len(),
                d,
                with_bias,
                seed.wrapping_add(1),
            ),
            secondary_head: LinearHead::init(
                "secondary_head",
                2,
                d,
                with_bias,
                seed.wrapping_add(2),
            ),
            vocab,
            max_len: DEFAULT_MAX_LEN,
        }
    }
}

impl<B: TrainableBackbone> TaggingModel<B> {
    /// Shape consistency across backbone, heads, and vocabulary —
    /// checked after deserializing a checkpoint.
    pub fn validate(&self) -> Result<(), ModelError> {
        let d = self.backbone.hidden_dim();
        self.primary_head.validate(self.vocab.len(), d)?;
        self.secondary_head.validate(2, d)?;
        if self.max_len == 0 {
            return Err(ModelError::DimensionMismatch {
                what: "maximum sequence length",
                expected: 1,
                found: 0,
            });
        }
        Ok(())
    }

    /// Aligns labeled sequences into a padded batch.
    pub fn align(&self, seqs: &[LabeledSequence]) -> Result<AlignedBatch, ModelError> {
        AlignedBatch::from_sequences(seqs, &self.backbone, &self.vocab, self.max_len)
    }

    /// Aligns raw sentence texts (no labels) into a padded batch.
    pub fn align_texts(&self, texts: &[&str]) -> AlignedBatch {
        AlignedBatch::from_texts(texts, &self.backbone, self.max_len)
    }

    fn encode_rows(&self, batch: &AlignedBatch) -> Vec<EncoderOutput> {
        batch
            .rows
            .iter()
            .map(|row| self.backbone.encode_ids(&row.ids))
            .collect()
    }

    /// Tagging loss on an aligned batch (no gradients).
    pub fn primary_batch_loss(&self, batch: &AlignedBatch) -> Result<f64, ModelError> {
        let outputs = self.encode_rows(batch);
        let targets: Vec<&[i64]> = batch.rows.iter().map(|r| r.targets.as_slice()).collect();
        primary_loss(&outputs, &targets, &self.primary_head)
    }

    /// Tagging loss plus gradients for the backbone and tagging head.
    pub fn primary_batch_loss_with_grad(
        &self,
        batch: &AlignedBatch,
        grads: &mut Gradients,
    ) -> Result<f64, ModelError> {
        let mut outputs = Vec::with_capacity(batch.len());
        let mut caches = Vec::with_capacity(batch.len());
        for row in &batch.rows {
            let (out, cache) = self.backbone.forward(&row.ids);
            outputs.push(out);
            caches.push(cache);
        }
        let targets: Vec<&[i64]> = batch.rows.iter().map(|r| r.targets.as_slice()).collect();
        let result = primary_loss_with_grad(&outputs, &targets, &self.primary_head, grads)?;
        let zero_pooled = ndarray::Array1::zeros(self.backbone.hidden_dim());
        for ((row, cache), d_hidden) in batch.rows.iter().zip(&caches).zip(&result.d_hidden) {
            self.backbone
                .backward(&row.ids, cache, d_hidden, &zero_pooled, grads);
        }
        Ok(result.loss)
    }

    /// Sentence loss on an aligned batch of texts (no gradients).
    pub fn secondary_batch_loss(
        &self,
        batch: &AlignedBatch,
        labels: &[u8],
    ) -> Result<f64, ModelError> {
        let pooled = self.pooled_matrix(batch, labels.len())?;
        secondary_loss(&pooled, labels, &self.secondary_head)
    }

    /// Sentence loss plus gradients for the backbone and sentence head.
    pub fn secondary_batch_loss_with_grad(
        &self,
        batch: &AlignedBatch,
        labels: &[u8],
        grads: &mut Gradients,
    ) -> Result<f64, ModelError> {
        if batch.is_empty() || labels.is_empty() {
            return Err(ModelError::EmptyBatch);
        }
        let d = self.backbone.hidden_dim();
        let mut pooled = Array2::zeros((batch.len(), d));
        let mut caches = Vec::with_capacity(batch.len());
        for (i, row) in batch.rows.iter().enumerate() {
            let (out, cache) = self.backbone.forward(&row.ids);
            pooled.row_mut(i).assign(&out.pooled);
            caches.push(cache);
        }
        let result = secondary_loss_with_grad(&pooled, labels, &self.secondary_head, grads)?;
        for (i, (row, cache)) in batch.rows.iter().zip(&caches).enumerate() {
            let zero_hidden = Array2::zeros((row.ids.len(), d));
            self.backbone.backward(
                &row.ids,
                cache,
                &zero_hidden,
                &result.d_pooled.row(i).to_owned(),
                grads,
            );
        }
        Ok(result.loss)
    }

    fn pooled_matrix(
        &self,
        batch: &AlignedBatch,
        expected: usize,
    ) -> Result<Array2<f64>, ModelError> {
        if batch.is_empty() || expected == 0 {
            return Err(ModelError::EmptyBatch);
        }
        assert_eq!(batch.len(), expected, "one label per batch row");
        let mut pooled = Array2::zeros((batch.len(), self.backbone.hidden_dim()));
        for (i, row) in batch.rows.iter().enumerate() {
            pooled
                .row_mut(i)
                .assign(&self.backbone.encode_ids(&row.ids).pooled);
        }
        Ok(pooled)
    }

    /// Predicted labels for one token sequence, from tokens alone. A
    /// token whose first subword fell beyond the length cap predicts
    /// `O`, keeping the output 1:1 with the input tokens.
    pub fn predict_tokens(&self, tokens: &[String]) -> Vec<IOLabel> {
        let row = align_token_row(tokens, &self.backbone, self.max_len);
        let out = self.backbone.encode_ids(&row.ids);
        let logits = self.primary_head.logits_rows(&out.token_vectors);
        let mut labels = Vec::with_capacity(tokens.len());
        for &pos in &row.first_subword {
            let class = argmax_lowest(&logits.row(pos));
            labels.push(self.vocab.label_at(class).expect("class in vocab"));
        }
        labels.resize(tokens.len(), IOLabel::Outside);
        labels
    }

    /// Predicted labels for every sequence (gold labels unused).
    pub fn predict_sequences(&self, seqs: &[LabeledSequence]) -> Vec<Vec<IOLabel>> {
        seqs.iter().map(|s| self.predict_tokens(&s.tokens)).collect()
    }
}

impl<B: TrainableBackbone> ParamVisitor for TaggingModel<B> {
    fn for_each_param(&self, f: &mut dyn FnMut(&str, ArrayViewD<'_, f64>)) {
        self.backbone.for_each_param(f);
        self.primary_head.for_each_param(f);
        self.secondary_head.for_each_param(f);
    }

    fn for_each_param_mut(&mut self, f: &mut dyn FnMut(&str, ArrayViewMutD<'_, f64>)) {
        self.backbone.for_each_param_mut(f);
        self.primary_head.for_each_param_mut(f);
        self.secondary_head.for_each_param_mut(f);
    }
}
