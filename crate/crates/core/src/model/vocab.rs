//! The label vocabulary: a stable mapping between IOB2 labels and the
//! class indices the tagging head predicts over.

use serde::{Deserialize, Serialize};

use crate::labels::{IOLabel, TimexType};
use crate::model::ModelError;

/// Ordered label set defining the class index space.
///
/// Invariants: `O` is always present (at index 0), and every expression
/// type appears with both its `B-` and `I-` label, so the size is
/// `1 + 2 × (number of types)`. The order is canonical — `O` first,
/// then `B-`/`I-` pairs in fixed type order — so indices survive
/// save/load and do not depend on data order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(transparent)]
pub struct LabelVocab {
    labels: Vec<IOLabel>,
}

impl LabelVocab {
    /// The full scheme over all known expression types (9 labels).
    pub fn full() -> Self {
        LabelVocab {
            labels: IOLabel::full_scheme(),
        }
    }

    /// The scheme covering exactly the expression types observed in
    /// `labels`, in canonical order. Seeing either `B-t` or `I-t`
    /// admits both.
    pub fn from_labels<'a>(labels: impl IntoIterator<Item = &'a IOLabel>) -> Self {
        let mut seen = [false; TimexType::ALL.len()];
        for label in labels {
            if let Some(t) = label.timex_type() {
                let slot = TimexType::ALL
                    .iter()
                    .position(|&u| u == t)
                    .expect("every type is in ALL");
                seen[slot] = true;
            }
        }
        let mut out = vec![IOLabel::Outside];
        for (slot, t) in TimexType::ALL.into_iter().enumerate() {
            if seen[slot] {
                out.push(IOLabel::Begin(t));
                out.push(IOLabel::Inside(t));
            }
        }
        LabelVocab { labels: out }
    }

    /// Number of classes, |c|.
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    /// Never true: `O` is always present.
    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn index_of(&self, label: IOLabel) -> Option<usize> {
        self.labels.iter().position(|&l| l == label)
    }

    /// Like [`index_of`](Self::index_of) but with a typed error naming
    /// the offending label.
    pub fn require_index(&self, label: IOLabel) -> Result<usize, ModelError> {
        self.index_of(label).ok_or(ModelError::LabelNotInVocab {
            label: label.to_string(),
        })
    }

    pub fn label_at(&self, index: usize) -> Option<IOLabel> {
        self.labels.get(index).copied()
    }

    pub fn labels(&self) -> &[IOLabel] {
        &self.labels
    }
}

impl<'de> Deserialize<'de> for LabelVocab {
    fn deserialize<D>(deserializer: D) -> Result<Self, D::Error>
    where
        D: serde::Deserializer<'de>,
    {
        let labels = Vec::<IOLabel>::deserialize(deserializer)?;
        let candidate = LabelVocab { labels };
        // A stored vocabulary must obey the same invariants as a built
        // one, or saved class indices would silently shift.
        let canonical = LabelVocab::from_labels(candidate.labels.iter());
        if candidate != canonical {
            return Err(serde::de::Error::custom(
                "label vocabulary is not in canonical order or is incomplete",
            ));
        }
        Ok(candidate)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn full_scheme_has_nine_classes_with_outside_first() {
        let v = LabelVocab::full();
        assert_eq!(v.len(), 9);
        assert_eq!(v.label_at(0), Some(IOLabel::Outside));
        assert_eq!(v.index_of(IOLabel::Outside), Some(0));
        // 1 + 2·4 for four types.
        assert_eq!(v.len(), 1 + 2 * TimexType::ALL.len());
    }

    #[test]
    fn observed_types_admit_both_halves_of_the_pair() {
        // Only B-DATE observed: the vocabulary still carries I-DATE so
        // |c| = 1 + 2·(#types).
        let labels = vec![IOLabel::Begin(TimexType::Date), IOLabel::Outside];
        let v = LabelVocab::from_labels(labels.iter());
        assert_eq!(v.len(), 3);
        assert_eq!(v.index_of(IOLabel::Inside(TimexType::Date)), Some(2));
        assert_eq!(v.index_of(IOLabel::Begin(TimexType::Time)), None);
    }

    #[test]
    fn indices_do_not_depend_on_observation_order() {
        let a = LabelVocab::from_labels(
            [
                IOLabel::Begin(TimexType::Set),
                IOLabel::Begin(TimexType::Date),
            ]
            .iter(),
        );
        let b = LabelVocab::from_labels(
            [
                IOLabel::Begin(TimexType::Date),
                IOLabel::Begin(TimexType::Set),
            ]
            .iter(),
        );
        assert_eq!(a, b);
        assert_eq!(a.index_of(IOLabel::Begin(TimexType::Date)), Some(1));
        assert_eq!(a.index_of(IOLabel::Begin(TimexType::Set)), Some(3));
    }

    #[test]
    fn index_and_label_are_inverse() {
        let v = LabelVocab::full();
        for i in 0..v.len() {
            let label = v.label_at(i).unwrap();
            assert_eq!(v.index_of(label), Some(i));
        }
        assert_eq!(v.label_at(v.len()), None);
    }

    #[test]
    fn serde_round_trip_preserves_indices() {
        let v = LabelVocab::full();
        let json = serde_json::to_string(&v).unwrap();
        assert!(json.contains("\"B-DATE\""));
        let back: LabelVocab = serde_json::from_str(&json).unwrap();
        assert_eq!(back, v);
    }

    #[test]
    fn deserialize_rejects_non_canonical_vocabularies() {
        // Missing I-DATE.
        let bad = "[\"O\",\"B-DATE\"]";
        assert!(serde_json::from_str::<LabelVocab>(bad).is_err());
        // Missing O.
        let bad = "[\"B-DATE\",\"I-DATE\"]";
        assert!(serde_json::from_str::<LabelVocab>(bad).is_err());
        // Wrong order.
        let bad = "[\"O\",\"I-DATE\",\"B-DATE\"]";
        assert!(serde_json::from_str::<LabelVocab>(bad).is_err());
    }

    #[test]
    fn missing_label_error_names_the_label() {
        let v = LabelVocab::from_labels([IOLabel::Begin(TimexType::Date)].iter());
        let err = v
            .require_index(IOLabel::Begin(TimexType::Time))
            .unwrap_err();
        assert!(err.to_string().contains("B-TIME"));
    }
}
