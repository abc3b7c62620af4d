//! Named parameters and accumulated gradients.
//!
//! Every trainable tensor in the model has a stable dotted name
//! (`encoder.w1`, `primary_head.weight`, …). Gradients are accumulated
//! into a map keyed by those names; the optimizer later walks the
//! model's parameters and steps exactly the names present in the map.
//! That lookup discipline is what keeps the untouched task head
//! bit-identical when a batch of the other task trains.

use std::collections::btree_map::Entry;
use std::collections::BTreeMap;

use ndarray::{ArrayD, ArrayViewD, ArrayViewMutD};

/// Visits every trainable parameter tensor by name.
///
/// Implementations must visit the same names in the same order on every
/// call; optimizer state is keyed by these names.
pub trait ParamVisitor {
    fn for_each_param(&self, f: &mut dyn FnMut(&str, ArrayViewD<'_, f64>));
    fn for_each_param_mut(&mut self, f: &mut dyn FnMut(&str, ArrayViewMutD<'_, f64>));

    /// Total number of scalar parameters.
    fn param_count(&self) -> usize {
        let mut n = 0;
        self.for_each_param(&mut |_, view| n += view.len());
        n
    }
}

/// Gradient accumulator keyed by parameter name.
///
/// `add` sums into any existing entry, so one batch may contribute to
/// the same tensor several times (e.g. the embedding rows of every
/// position). Names absent from the map received no gradient and must
/// not be stepped.
#[derive(Debug, Default, Clone)]
pub struct Gradients {
    map: BTreeMap<String, ArrayD<f64>>,
}

impl Gradients {
    pub fn new() -> Self {
        Gradients::default()
    }

    /// Accumulates `grad` into the entry for `name`.
    ///
    /// # Panics
    /// If an existing entry has a different shape — gradient shapes are
    /// a structural invariant of the model, not a runtime input.
    pub fn add(&mut self, name: &str, grad: ArrayD<f64>) {
        match self.map.entry(name.to_string()) {
            Entry::Occupied(mut e) => {
                assert_eq!(
                    e.get().shape(),
                    grad.shape(),
                    "gradient shape changed for `{name}`"
                );
                *e.get_mut() += &grad;
            }
            Entry::Vacant(v) => {
                v.insert(grad);
            }
        }
    }

    pub fn get(&self, name: &str) -> Option<&ArrayD<f64>> {
        self.map.get(name)
    }

    pub fn contains(&self, name: &str) -> bool {
        self.map.contains_key(name)
    }

    /// Tensors in name order.
    pub fn iter(&self) -> impl Iterator<Item = (&String, &ArrayD<f64>)> {
        self.map.iter()
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    /// L2 norm over all scalars in all tensors.
    pub fn global_norm(&self) -> f64 {
        self.map
            .values()
            .map(|g| g.iter().map(|x| x * x).sum::<f64>())
            .sum::<f64>()
            .sqrt()
    }

    /// Scales all gradients so the global norm is at most `max_norm`.
    /// Returns the norm before clipping.
    pub fn clip_global_norm(&mut self, max_norm: f64) -> f64 {
        let norm = self.global_norm();
        if norm > max_norm && norm > 0.0 {
            let scale = max_norm / norm;
            for g in self.map.values_mut() {
                *g *= scale;
            }
        }
        norm
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::arr1;

    #[test]
    fn add_accumulates_by_name() {
        let mut g = Gradients::new();
        g.add("w", arr1(&[1.0, 2.0]).into_dyn());
        g.add("w", arr1(&[0.5, -1.0]).into_dyn());
        g.add("b", arr1(&[3.0]).into_dyn());
        assert_eq!(g.len(), 2);
        assert_eq!(g.get("w").unwrap().as_slice().unwrap(), &[1.5, 1.0]);
        assert!(g.contains("b"));
        assert!(!g.contains("missing"));
    }

    #[test]
    fn global_norm_matches_flat_l2() {
        let mut g = Gradients::new();
        g.add("a", arr1(&[3.0]).into_dyn());
        g.add("b", arr1(&[4.0]).into_dyn());
        assert!((g.global_norm() - 5.0).abs() < 1e-12);
    }

    #[test]
    fn clipping_rescales_only_when_above_the_cap() {
        let mut g = Gradients::new();
        g.add("a", arr1(&[3.0, 4.0]).into_dyn());
        let before = g.clip_global_norm(1.0);
        assert!((before - 5.0).abs() < 1e-12);
        assert!((g.global_norm() - 1.0).abs() < 1e-12);
        // Already within the cap: untouched.
        let again = g.clip_global_norm(10.0);
        assert!((again - 1.0).abs() < 1e-12);
        assert!((g.global_norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    #[should_panic(expected = "gradient shape changed")]
    fn shape_mismatch_is_a_bug() {
        let mut g = Gradients::new();
        g.add("w", arr1(&[1.0]).into_dyn());
        g.add("w", arr1(&[1.0, 2.0]).into_dyn());
    }
}
