//! Task losses: token-level and sentence-level cross-entropy.
//!
//! The tagging loss is the mean, over every supervised position in the
//! batch, of the negative log softmax probability of the gold class.
//! The sentence loss is the mean two-class cross-entropy over the
//! batch. Both use max-subtracted log-sum-exp for stability, and both
//! have closed-form gradients: softmax minus one-hot, scaled by the
//! averaging factor.

use ndarray::{Array1, Array2, ArrayView1};

use crate::model::batch::IGNORE;
use crate::model::encoder::EncoderOutput;
use crate::model::head::LinearHead;
use crate::model::params::Gradients;
use crate::model::ModelError;

/// Numerically stable `(log Σ exp(z), softmax(z))`.
fn log_sum_exp_softmax(z: &ArrayView1<'_, f64>) -> (f64, Array1<f64>) {
    let max = z.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let shifted = z.mapv(|v| (v - max).exp());
    let total: f64 = shifted.sum();
    (max + total.ln(), shifted / total)
}

/// Negative log softmax probability of class `y` under logits `z`.
fn nll(z: &ArrayView1<'_, f64>, y: usize) -> f64 {
    let (lse, _) = log_sum_exp_softmax(z);
    lse - z[y]
}

fn check_class(index: usize, classes: usize) -> Result<(), ModelError> {
    if index >= classes {
        return Err(ModelError::ClassOutOfRange { index, classes });
    }
    Ok(())
}

/// Tagging loss over a batch: mean negative log-likelihood of the gold
/// class across all non-[`IGNORE`] positions.
///
/// `outputs[i]` and `targets[i]` describe the same sequence; targets
/// must be position-aligned with the encoder output rows.
pub fn primary_loss(
    outputs: &[EncoderOutput],
    targets: &[&[i64]],
    head: &LinearHead,
) -> Result<f64, ModelError> {
    assert_eq!(outputs.len(), targets.len(), "one target row per output");
    let mut total = 0.0;
    let mut count = 0usize;
    for (out, row) in outputs.iter().zip(targets) {
        debug_assert_eq!(out.positions(), row.len());
        let logits = head.logits_rows(&out.token_vectors);
        for (j, &t) in row.iter().enumerate() {
            if t == IGNORE {
                continue;
            }
            let y = t as usize;
            check_class(y, head.out_dim())?;
            total += nll(&logits.row(j), y);
            count += 1;
        }
    }
    if count == 0 {
        return Err(ModelError::AllPositionsIgnored);
    }
    Ok(total / count as f64)
}

/// Per-sequence loss gradients for the tagging task.
pub struct PrimaryLossGrad {
    pub loss: f64,
    /// One m×d gradient per input sequence, w.r.t. that sequence's
    /// position vectors (zero rows at ignored positions).
    pub d_hidden: Vec<Array2<f64>>,
}

/// [`primary_loss`] plus gradients: head gradients are accumulated into
/// `grads`, encoder-side gradients are returned for the caller to push
/// through the backbone.
pub fn primary_loss_with_grad(
    outputs: &[EncoderOutput],
    targets: &[&[i64]],
    head: &LinearHead,
    grads: &mut Gradients,
) -> Result<PrimaryLossGrad, ModelError> {
    assert_eq!(outputs.len(), targets.len(), "one target row per output");
    let count: usize = targets
        .iter()
        .map(|row| row.iter().filter(|&&t| t != IGNORE).count())
        .sum();
    if count == 0 {
        return Err(ModelError::AllPositionsIgnored);
    }
    let scale = 1.0 / count as f64;

    let mut total = 0.0;
    let mut d_hidden = Vec::with_capacity(outputs.len());
    for (out, row) in outputs.iter().zip(targets) {
        debug_assert_eq!(out.positions(), row.len());
        let logits = head.logits_rows(&out.token_vectors);
        let mut d_logits = Array2::<f64>::zeros(logits.dim());
        for (j, &t) in row.iter().enumerate() {
            if t == IGNORE {
                continue;
            }
            let y = t as usize;
            check_class(y, head.out_dim())?;
            let (lse, softmax) = log_sum_exp_softmax(&logits.row(j));
            total += lse - logits[[j, y]];
            let mut d_row = d_logits.row_mut(j);
            d_row.assign(&(&softmax * scale));
            d_row[y] -= scale;
        }
        d_hidden.push(head.backward_rows(&out.token_vectors, &d_logits, grads));
    }
    Ok(PrimaryLossGrad {
        loss: total * scale,
        d_hidden,
    })
}

/// Sentence-classification loss: mean two-class cross-entropy over the
/// batch. `pooled` is n×d (one row per sentence), labels in {0, 1}.
pub fn secondary_loss(
    pooled: &Array2<f64>,
    labels: &[u8],
    head: &LinearHead,
) -> Result<f64, ModelError> {
    validate_secondary(pooled, labels, head)?;
    let logits = head.logits_rows(pooled);
    let total: f64 = labels
        .iter()
        .enumerate()
        .map(|(i, &y)| nll(&logits.row(i), y as usize))
        .sum();
    Ok(total / labels.len() as f64)
}

/// Loss gradients for the sentence task.
pub struct SecondaryLossGrad {
    pub loss: f64,
    /// n×d gradient w.r.t. the pooled vectors.
    pub d_pooled: Array2<f64>,
}

/// [`secondary_loss`] plus gradients, mirroring
/// [`primary_loss_with_grad`].
pub fn secondary_loss_with_grad(
    pooled: &Array2<f64>,
    labels: &[u8],
    head: &LinearHead,
    grads: &mut Gradients,
) -> Result<SecondaryLossGrad, ModelError> {
    validate_secondary(pooled, labels, head)?;
    let scale = 1.0 / labels.len() as f64;
    let logits = head.logits_rows(pooled);
    let mut d_logits = Array2::<f64>::zeros(logits.dim());
    let mut total = 0.0;
    for (i, &y) in labels.iter().enumerate() {
        let y = y as usize;
        let (lse, softmax) = log_sum_exp_softmax(&logits.row(i));
        total += lse - logits[[i, y]];
        let mut d_row = d_logits.row_mut(i);
        d_row.assign(&(&softmax * scale));
        d_row[y] -= scale;
    }
    let d_pooled = head.backward_rows(pooled, &d_logits, grads);
    Ok(SecondaryLossGrad {
        loss: total * scale,
        d_pooled,
    })
}

fn validate_secondary(
    pooled: &Array2<f64>,
    labels: &[u8],
    head: &LinearHead,
) -> Result<(), ModelError> {
    if labels.is_empty() || pooled.nrows() == 0 {
        return Err(ModelError::EmptyBatch);
    }
    assert_eq!(pooled.nrows(), labels.len(), "one label per pooled row");
    if head.out_dim() != 2 {
        return Err(ModelError::DimensionMismatch {
            what: "sentence head classes",
            expected: 2,
            found: head.out_dim(),
        });
    }
    for &y in labels {
        check_class(y as usize, 2)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::encoder::{Backbone, ToyEncoder, TOY_DIM};
    use ndarray::arr2;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn toy_outputs(enc: &ToyEncoder, rows: &[&[usize]]) -> Vec<EncoderOutput> {
        rows.iter().map(|ids| enc.encode_ids(ids)).collect()
    }

    #[test]
    fn uniform_logits_cost_log_of_class_count() {
        let enc = ToyEncoder::new(1);
        let outputs = toy_outputs(&enc, &[&[2, 3, 4], &[5, 6]]);
        let targets: Vec<&[i64]> = vec![&[0, IGNORE, 3], &[8, 1]];
        let head = LinearHead::zeros("primary_head", 9, TOY_DIM, true);
        let loss = primary_loss(&outputs, &targets, &head).unwrap();
        assert!((loss - 9f64.ln()).abs() < 1e-9);
    }

    #[test]
    fn uniform_sentence_logits_cost_log_two() {
        let head = LinearHead::zeros("secondary_head", 2, TOY_DIM, true);
        let pooled = Array2::zeros((3, TOY_DIM));
        let loss = secondary_loss(&pooled, &[0, 1, 1], &head).unwrap();
        assert!((loss - 2f64.ln()).abs() < 1e-9);
    }

    #[test]
    fn confident_correct_sentence_costs_almost_nothing() {
        // One sample, label 1, logits (0, 10): loss = ln(1 + e^{-10}).
        let head = LinearHead::from_parts(
            "secondary_head",
            arr2(&[[0.0, 0.0], [10.0, 0.0]]),
            None,
        );
        let pooled = arr2(&[[1.0, 0.0]]);
        let loss = secondary_loss(&pooled, &[1], &head).unwrap();
        let oracle = (1.0 + (-10.0f64).exp()).ln();
        assert!((loss - oracle).abs() < 1e-12);
        assert!((loss - 4.54e-5).abs() < 1e-7);
    }

    #[test]
    fn loss_vanishes_in_the_perfect_confidence_limit() {
        let loss_at_margin = |m: f64| {
            let head = LinearHead::from_parts(
                "secondary_head",
                arr2(&[[0.0, 0.0], [m, 0.0]]),
                None,
            );
            secondary_loss(&arr2(&[[1.0, 0.0]]), &[1], &head).unwrap()
        };
        // Strictly positive and shrinking while representable…
        let at_10 = loss_at_margin(10.0);
        let at_30 = loss_at_margin(30.0);
        assert!(at_30 > 0.0 && at_30 < at_10 && at_30 < 1e-12);
        // …and indistinguishable from zero once e^{-margin} underflows
        // below f64 resolution around 1.
        let at_100 = loss_at_margin(100.0);
        assert!((0.0..1e-40).contains(&at_100));
    }

    #[test]
    fn random_case_matches_hand_rolled_cross_entropy() {
        // Independent oracle: naive softmax + NLL with no shared code.
        let enc = ToyEncoder::new(17);
        let head = LinearHead::init("primary_head", 9, TOY_DIM, true, 23);
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        for _ in 0..50 {
            let ids: Vec<usize> = (0..3).map(|_| rng.random_range(2..64)).collect();
            let targets: Vec<i64> = (0..3).map(|_| rng.random_range(0..9i64)).collect();
            let outputs = toy_outputs(&enc, &[&ids]);
            let got = primary_loss(&outputs, &[&targets], &head).unwrap();

            let mut expected = 0.0;
            for (j, &t) in targets.iter().enumerate() {
                let z = head.logits(&outputs[0].token_vectors.row(j));
                let denom: f64 = z.iter().map(|v| v.exp()).sum();
                expected += -(z[t as usize].exp() / denom).ln();
            }
            expected /= 3.0;
            let rel = (got - expected).abs() / expected.abs().max(1e-12);
            assert!(rel < 1e-6, "relative disagreement {rel}");
        }
    }

    #[test]
    fn sentence_loss_is_order_invariant() {
        let enc = ToyEncoder::new(2);
        let head = LinearHead::init("secondary_head", 2, TOY_DIM, true, 3);
        let rows: Vec<Vec<usize>> = (0..6).map(|i| vec![2 + i, 3 + i, 4]).collect();
        let mut pooled = Array2::zeros((6, TOY_DIM));
        for (i, ids) in rows.iter().enumerate() {
            pooled.row_mut(i).assign(&enc.encode_ids(ids).pooled);
        }
        let labels = [1u8, 0, 1, 1, 0, 0];
        let forward = secondary_loss(&pooled, &labels, &head).unwrap();

        let perm = [3usize, 0, 5, 1, 4, 2];
        let mut pooled_p = Array2::zeros((6, TOY_DIM));
        let mut labels_p = [0u8; 6];
        for (to, &from) in perm.iter().enumerate() {
            pooled_p.row_mut(to).assign(&pooled.row(from));
            labels_p[to] = labels[from];
        }
        let shuffled = secondary_loss(&pooled_p, &labels_p, &head).unwrap();
        assert!((forward - shuffled).abs() < 1e-12);
    }

    #[test]
    fn degenerate_batches_are_rejected() {
        let head9 = LinearHead::zeros("primary_head", 9, TOY_DIM, true);
        let head2 = LinearHead::zeros("secondary_head", 2, TOY_DIM, true);
        let enc = ToyEncoder::new(0);
        let outputs = toy_outputs(&enc, &[&[2, 3]]);

        let all_ignored: Vec<&[i64]> = vec![&[IGNORE, IGNORE]];
        assert!(matches!(
            primary_loss(&outputs, &all_ignored, &head9),
            Err(ModelError::AllPositionsIgnored)
        ));

        let empty = Array2::zeros((0, TOY_DIM));
        assert!(matches!(
            secondary_loss(&empty, &[], &head2),
            Err(ModelError::EmptyBatch)
        ));

        let pooled = Array2::zeros((1, TOY_DIM));
        assert!(matches!(
            secondary_loss(&pooled, &[2], &head2),
            Err(ModelError::ClassOutOfRange { .. })
        ));
        assert!(matches!(
            secondary_loss(&pooled, &[0], &head9),
            Err(ModelError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn gradient_form_is_softmax_minus_one_hot() {
        // Single position, hand-checkable: d_logits = (p − e_y)/count.
        let enc = ToyEncoder::new(4);
        let head = LinearHead::init("primary_head", 9, TOY_DIM, true, 5);
        let outputs = toy_outputs(&enc, &[&[7]]);
        let targets: Vec<&[i64]> = vec![&[2]];
        let mut grads = Gradients::new();
        let result = primary_loss_with_grad(&outputs, &targets, &head, &mut grads).unwrap();

        let z = head.logits(&outputs[0].token_vectors.row(0));
        let (_, p) = log_sum_exp_softmax(&z.view());
        let mut expected_d = p.clone();
        expected_d[2] -= 1.0;
        // db = d_logits summed over positions = expected_d here.
        let db = grads.get("primary_head.bias").unwrap();
        for (a, b) in db.iter().zip(expected_d.iter()) {
            assert!((a - b).abs() < 1e-12);
        }
        assert_eq!(result.d_hidden.len(), 1);
        assert_eq!(result.d_hidden[0].dim(), (1, TOY_DIM));
    }
}
