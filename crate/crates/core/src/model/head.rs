//! Linear task heads and label prediction.
//!
//! Both task classifiers are affine maps from the encoder dimension:
//! the tagging head has one output per label class, the sentence head
//! exactly two. The bias is optional so the literal bias-free form can
//! be configured.

use ndarray::{Array1, Array2, ArrayView1, ArrayViewD, ArrayViewMutD, Axis};
use rand::distr::{Distribution, Uniform};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::model::encoder::EncoderOutput;
use crate::model::params::{Gradients, ParamVisitor};
use crate::model::batch::IGNORE;
use crate::model::ModelError;

/// An affine classifier head: logits = W·x (+ bias).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearHead {
    /// Parameter-name prefix, e.g. `primary_head`.
    name: String,
    /// out × d.
    weight: Array2<f64>,
    bias: Option<Array1<f64>>,
}

impl LinearHead {
    /// Random initialization: zero-mean uniform in ±1/√d, seeded.
    pub fn init(name: &str, out_dim: usize, in_dim: usize, with_bias: bool, seed: u64) -> Self {
        assert!(out_dim >= 1 && in_dim >= 1, "head dimensions must be positive");
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let scale = 1.0 / (in_dim as f64).sqrt();
        let dist = Uniform::new_inclusive(-scale, scale).expect("valid uniform bounds");
        let weight = Array2::from_shape_fn((out_dim, in_dim), |_| dist.sample(&mut rng));
        let bias =
            with_bias.then(|| Array1::from_shape_fn(out_dim, |_| dist.sample(&mut rng)));
        LinearHead {
            name: name.to_string(),
            weight,
            bias,
        }
    }

    /// All-zero parameters (uniform logits), for tests and probes.
    pub fn zeros(name: &str, out_dim: usize, in_dim: usize, with_bias: bool) -> Self {
        LinearHead {
            name: name.to_string(),
            weight: Array2::zeros((out_dim, in_dim)),
            bias: with_bias.then(|| Array1::zeros(out_dim)),
        }
    }

    /// A head with explicit parameters.
    pub fn from_parts(name: &str, weight: Array2<f64>, bias: Option<Array1<f64>>) -> Self {
        if let Some(b) = &bias {
            assert_eq!(b.len(), weight.nrows(), "bias length must match classes");
        }
        LinearHead {
            name: name.to_string(),
            weight,
            bias,
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn out_dim(&self) -> usize {
        self.weight.nrows()
    }

    pub fn in_dim(&self) -> usize {
        self.weight.ncols()
    }

    pub fn has_bias(&self) -> bool {
        self.bias.is_some()
    }

    /// Logits for one vector.
    pub fn logits(&self, x: &ArrayView1<'_, f64>) -> Array1<f64> {
        let mut z = self.weight.dot(x);
        if let Some(b) = &self.bias {
            z += b;
        }
        z
    }

    /// Logits for a stack of vectors (rows), one row of logits each.
    pub fn logits_rows(&self, xs: &Array2<f64>) -> Array2<f64> {
        let mut z = xs.dot(&self.weight.t());
        if let Some(b) = &self.bias {
            z += b;
        }
        z
    }

    /// Accumulates head gradients for a stack of inputs: `d_logits` is
    /// rows × out, `xs` is rows × d. Returns the gradient w.r.t. `xs`.
    pub(crate) fn backward_rows(
        &self,
        xs: &Array2<f64>,
        d_logits: &Array2<f64>,
        grads: &mut Gradients,
    ) -> Array2<f64> {
        grads.add(
            &format!("{}.weight", self.name),
            d_logits.t().dot(xs).into_dyn(),
        );
        if self.bias.is_some() {
            grads.add(
                &format!("{}.bias", self.name),
                d_logits.sum_axis(Axis(0)).into_dyn(),
            );
        }
        d_logits.dot(&self.weight)
    }

    /// Shape consistency against an encoder dimension and class count.
    pub fn validate(&self, expected_out: usize, expected_in: usize) -> Result<(), ModelError> {
        if self.out_dim() != expected_out {
            return Err(ModelError::DimensionMismatch {
                what: "head output classes",
                expected: expected_out,
                found: self.out_dim(),
            });
        }
        if self.in_dim() != expected_in {
            return Err(ModelError::DimensionMismatch {
                what: "head input dimension",
                expected: expected_in,
                found: self.in_dim(),
            });
        }
        if let Some(b) = &self.bias {
            if b.len() != expected_out {
                return Err(ModelError::DimensionMismatch {
                    what: "head bias length",
                    expected: expected_out,
                    found: b.len(),
                });
            }
        }
        Ok(())
    }
}

impl ParamVisitor for LinearHead {
    fn for_each_param(&self, f: &mut dyn FnMut(&str, ArrayViewD<'_, f64>)) {
        f(&format!("{}.weight", self.name), self.weight.view().into_dyn());
        if let Some(b) = &self.bias {
            f(&format!("{}.bias", self.name), b.view().into_dyn());
        }
    }

    fn for_each_param_mut(&mut self, f: &mut dyn FnMut(&str, ArrayViewMutD<'_, f64>)) {
        f(
            &format!("{}.weight", self.name),
            self.weight.view_mut().into_dyn(),
        );
        if let Some(b) = &mut self.bias {
            f(&format!("{}.bias", self.name), b.view_mut().into_dyn());
        }
    }
}

/// Argmax with ties broken toward the lowest index.
pub fn argmax_lowest(logits: &ArrayView1<'_, f64>) -> usize {
    let mut best = 0;
    let mut best_value = logits[0];
    for (i, &v) in logits.iter().enumerate().skip(1) {
        if v > best_value {
            best = i;
            best_value = v;
        }
    }
    best
}

/// Predicted class index at every supervised (non-[`IGNORE`]) position,
/// in position order.
pub fn predict_labels(
    out: &EncoderOutput,
    head: &LinearHead,
    targets: &[i64],
) -> Vec<usize> {
    debug_assert_eq!(out.positions(), targets.len());
    let logits = head.logits_rows(&out.token_vectors);
    targets
        .iter()
        .enumerate()
        .filter(|(_, &t)| t != IGNORE)
        .map(|(j, _)| argmax_lowest(&logits.row(j)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::encoder::{Backbone, ToyEncoder, TOY_DIM};
    use ndarray::arr1;
    use rand::prelude::*;

    #[test]
    fn initialization_is_bounded_and_seeded() {
        let a = LinearHead::init("h", 9, TOY_DIM, true, 7);
        let b = LinearHead::init("h", 9, TOY_DIM, true, 7);
        assert_eq!(a, b);
        let bound = 1.0 / (TOY_DIM as f64).sqrt();
        a.for_each_param(&mut |_, view| {
            for &x in view.iter() {
                assert!(x.abs() <= bound + 1e-15);
            }
        });
        assert_ne!(a, LinearHead::init("h", 9, TOY_DIM, true, 8));
    }

    #[test]
    fn zero_head_produces_uniform_logits() {
        let head = LinearHead::zeros("h", 9, 4, true);
        let z = head.logits(&arr1(&[1.0, -2.0, 0.5, 3.0]).view());
        assert!(z.iter().all(|&v| v == 0.0));
        assert_eq!(z.len(), 9);
    }

    #[test]
    fn bias_free_head_exposes_only_the_weight() {
        let head = LinearHead::init("h", 2, 4, false, 0);
        let mut names = Vec::new();
        head.for_each_param(&mut |n, _| names.push(n.to_string()));
        assert_eq!(names, ["h.weight"]);
        assert!(!head.has_bias());
    }

    #[test]
    fn strict_maximum_wins() {
        let z = arr1(&[0.1, 3.0, -2.0, 2.9]);
        assert_eq!(argmax_lowest(&z.view()), 1);
    }

    #[test]
    fn exact_tie_breaks_toward_the_lowest_index() {
        let mut z = arr1(&[0.0; 6]);
        z[2] = 1.5;
        z[5] = 1.5;
        assert_eq!(argmax_lowest(&z.view()), 2);
    }

    #[test]
    fn argmax_matches_linear_scan_on_random_logits() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(13);
        for _ in 0..1000 {
            let n = rng.random_range(1..=12usize);
            let z: Vec<f64> = (0..n).map(|_| rng.random_range(-5.0..5.0)).collect();
            let z = arr1(&z);
            let mut best = 0;
            for i in 0..n {
                if z[i] > z[best] {
                    best = i;
                }
            }
            assert_eq!(argmax_lowest(&z.view()), best);
        }
    }

    #[test]
    fn prediction_is_invariant_to_constant_logit_shifts() {
        // Softmax shift invariance at the argmax level: adding one
        // constant to every class leaves predictions unchanged.
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(29);
        for _ in 0..500 {
            let n = rng.random_range(1..=9usize);
            let z: Vec<f64> = (0..n).map(|_| rng.random_range(-4.0..4.0)).collect();
            let shift = rng.random_range(-10.0..10.0);
            let shifted: Vec<f64> = z.iter().map(|v| v + shift).collect();
            assert_eq!(
                argmax_lowest(&arr1(&z).view()),
                argmax_lowest(&arr1(&shifted).view())
            );
        }
    }

    #[test]
    fn prediction_skips_ignored_positions() {
        let enc = ToyEncoder::new(3);
        let out = enc.encode_ids(&[2, 3, 4, 5]);
        let head = LinearHead::init("h", 9, TOY_DIM, true, 1);
        let targets = vec![0, IGNORE, 4, IGNORE];
        let pred = predict_labels(&out, &head, &targets);
        assert_eq!(pred.len(), 2);
        // Each prediction matches a direct per-position computation.
        let z0 = head.logits(&out.token_vectors.row(0));
        let z2 = head.logits(&out.token_vectors.row(2));
        assert_eq!(pred[0], argmax_lowest(&z0.view()));
        assert_eq!(pred[1], argmax_lowest(&z2.view()));
    }
}
