//! The optimizer and learning-rate schedule.
//!
//! AdamW with decoupled weight decay, stepping ONLY the parameters that
//! received a gradient this batch: a tensor absent from the gradient
//! map keeps its bytes, its moments, and its step count untouched. The
//! schedule is linear warmup to the configured peak over the first
//! fraction of total steps, then linear decay to zero.

use std::collections::BTreeMap;

use ndarray::ArrayD;

use crate::model::{Gradients, ParamVisitor};

/// Per-tensor AdamW state.
#[derive(Debug, Clone)]
struct MomentPair {
    m: ArrayD<f64>,
    v: ArrayD<f64>,
    step: u64,
}

/// AdamW with decoupled weight decay.
#[derive(Debug, Clone)]
pub struct AdamW {
    beta1: f64,
    beta2: f64,
    epsilon: f64,
    weight_decay: f64,
    state: BTreeMap<String, MomentPair>,
}

impl AdamW {
    /// Default moment coefficients (0.9, 0.999, ε=1e-8) with the given
    /// decoupled weight decay.
    pub fn new(weight_decay: f64) -> Self {
        AdamW {
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            weight_decay,
            state: BTreeMap::new(),
        }
    }

    /// Applies one update at learning rate `lr` to every parameter of
    /// `model` that has an entry in `grads`; all other parameters are
    /// left bit-identical.
    pub fn step<M: ParamVisitor>(&mut self, model: &mut M, grads: &Gradients, lr: f64) {
        let beta1 = self.beta1;
        let beta2 = self.beta2;
        let epsilon = self.epsilon;
        let weight_decay = self.weight_decay;
        let state = &mut self.state;
        model.for_each_param_mut(&mut |name, mut param| {
            let Some(grad) = grads.get(name) else {
                return;
            };
            let entry = state.entry(name.to_string()).or_insert_with(|| MomentPair {
                m: ArrayD::zeros(grad.raw_dim()),
                v: ArrayD::zeros(grad.raw_dim()),
                step: 0,
            });
            entry.step += 1;
            let t = entry.step as i32;
            entry.m.zip_mut_with(grad, |m, &g| *m = beta1 * *m + (1.0 - beta1) * g);
            entry.v.zip_mut_with(grad, |v, &g| *v = beta2 * *v + (1.0 - beta2) * g * g);
            let bias1 = 1.0 - beta1.powi(t);
            let bias2 = 1.0 - beta2.powi(t);
            ndarray::Zip::from(&mut param)
                .and(&entry.m)
                .and(&entry.v)
                .for_each(|p, &m, &v| {
                    let m_hat = m / bias1;
                    let v_hat = v / bias2;
                    // Decoupled decay: applied to the parameter directly,
                    // outside the adaptive term.
                    *p -= lr * (m_hat / (v_hat.sqrt() + epsilon) + weight_decay * *p);
                });
        });
    }

    /// Number of optimizer steps a named tensor has received.
    pub fn steps_for(&self, name: &str) -> u64 {
        self.state.get(name).map_or(0, |s| s.step)
    }
}

/// Linear warmup to `peak` over the first `warmup_steps`, then linear
/// decay to zero at `total_steps`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearWarmupDecay {
    peak: f64,
    warmup_steps: usize,
    total_steps: usize,
}

impl LinearWarmupDecay {
    /// `warmup_proportion` of `total_steps` (at least one step) warms
    /// up; the remainder decays.
    pub fn new(peak: f64, warmup_proportion: f64, total_steps: usize) -> Self {
        assert!(total_steps >= 1, "schedule needs at least one step");
        let warmup_steps =
            ((warmup_proportion * total_steps as f64).floor() as usize).clamp(1, total_steps);
        LinearWarmupDecay {
            peak,
            warmup_steps,
            total_steps,
        }
    }

    /// Learning rate for 0-based step `step`.
    pub fn lr_at(&self, step: usize) -> f64 {
        if step >= self.total_steps {
            return 0.0;
        }
        let up = (step + 1) as f64 / self.warmup_steps as f64;
        let down = if self.total_steps == self.warmup_steps {
            1.0
        } else {
            (self.total_steps - step) as f64 / (self.total_steps - self.warmup_steps) as f64
        };
        self.peak * up.min(down).min(1.0)
    }

    pub fn warmup_steps(&self) -> usize {
        self.warmup_steps
    }

    pub fn total_steps(&self) -> usize {
        self.total_steps
    }
}
