//! Mini-batch formation and the epoch-shuffled batch pool.
//!
//! Every task's samples are split into mini-batches once, in dataset
//! order; the union of all tasks' batches forms the pool. Epochs never
//! re-form batches — they only draw a fresh random order over the
//! fixed pool, so each underlying sample is consumed exactly once per
//! epoch and always in the company of the same batch-mates.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::taskgen::{TaskDataset, TaskItems, TaskKind};
use crate::trainer::TrainError;

/// One homogeneous mini-batch: all items belong to a single task.
#[derive(Debug, Clone, PartialEq)]
pub struct MiniBatch {
    pub kind: TaskKind,
    pub items: TaskItems,
}

impl MiniBatch {
    pub fn len(&self) -> usize {
        match &self.items {
            TaskItems::Primary(v) => v.len(),
            TaskItems::Secondary(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// The union of all tasks' mini-batches plus the epoch shuffle state.
#[derive(Debug)]
pub struct BatchPool {
    batches: Vec<MiniBatch>,
    rng: ChaCha8Rng,
}

impl BatchPool {
    pub fn batches(&self) -> &[MiniBatch] {
        &self.batches
    }

    pub fn len(&self) -> usize {
        self.batches.len()
    }

    pub fn is_empty(&self) -> bool {
        self.batches.is_empty()
    }

    /// A fresh random visiting order over the pool. Each call advances
    /// the seeded shuffle stream, so successive epochs differ while the
    /// whole schedule stays reproducible from the pool's seed.
    pub fn epoch_order(&mut self) -> Vec<usize> {
        let mut order: Vec<usize> = (0..self.batches.len()).collect();
        order.shuffle(&mut self.rng);
        order
    }
}

/// Splits every task into `⌈n/batch_size⌉` mini-batches (final one may
/// be short) and unions them into one pool.
pub fn make_batch_pool(
    tasks: &[TaskDataset],
    batch_size: usize,
    seed: u64,
) -> Result<BatchPool, TrainError> {
    if batch_size < 1 {
        return Err(TrainError::BadBatchSize(batch_size));
    }
    let mut batches = Vec::new();
    for task in tasks {
        match task.items() {
            TaskItems::Primary(seqs) => {
                for chunk in seqs.chunks(batch_size) {
                    batches.push(MiniBatch {
                        kind: task.kind().clone(),
                        items: TaskItems::Primary(chunk.to_vec()),
                    });
                }
            }
            TaskItems::Secondary(samples) => {
                for chunk in samples.chunks(batch_size) {
                    batches.push(MiniBatch {
                        kind: task.kind().clone(),
                        items: TaskItems::Secondary(chunk.to_vec()),
                    });
                }
            }
        }
    }
    Ok(BatchPool {
        batches,
        rng: ChaCha8Rng::seed_from_u64(seed),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::labels::LabeledSequence;
    use crate::taskgen::{BinarySample, SampleOrigin, TaskDataset};
    use std::collections::BTreeSet;

    fn primary_task(n: usize) -> TaskDataset {
        let seqs: Vec<LabeledSequence> = (0..n)
            .map(|i| {
                LabeledSequence::new(
                    "d",
                    i,
                    "en",
                    vec![format!("w{i}")],
                    vec!["O".parse().unwrap()],
                )
                .unwrap()
            })
            .collect();
        TaskDataset::primary("en", "fr", seqs).unwrap()
    }

    fn secondary_task(n: usize) -> TaskDataset {
        let samples: Vec<BinarySample> = (0..n)
            .map(|i| {
                BinarySample::new(
                    format!("texte {i}"),
                    (i % 2) as u8,
                    SampleOrigin {
                        doc_id: "d".into(),
                        sent_index: i,
                        source_language: "en".into(),
                    },
                )
                .unwrap()
            })
            .collect();
        TaskDataset::secondary("en", "fr", samples).unwrap()
    }

    #[test]
    fn hundred_samples_at_batch_32_make_4_batches() {
        let pool = make_batch_pool(&[primary_task(100)], 32, 0).unwrap();
        let sizes: Vec<usize> = pool.batches().iter().map(MiniBatch::len).collect();
        assert_eq!(sizes, vec![32, 32, 32, 4]);
    }

    #[test]
    fn two_small_tasks_make_one_batch_each() {
        let tasks = [primary_task(10), secondary_task(10)];
        let pool = make_batch_pool(&tasks, 32, 0).unwrap();
        assert_eq!(pool.len(), 2);
        assert!(pool.batches().iter().all(|b| b.len() == 10));
    }

    #[test]
    fn pool_preserves_the_sample_multiset() {
        for (np, ns, bs) in [(100, 37, 32), (5, 5, 2), (1, 1, 1), (64, 0, 32), (33, 32, 7)] {
            let mut tasks = vec![primary_task(np)];
            if ns > 0 {
                tasks.push(secondary_task(ns));
            }
            let pool = make_batch_pool(&tasks, bs, 9).unwrap();

            let mut primary_seen = BTreeSet::new();
            let mut secondary_seen = BTreeSet::new();
            for batch in pool.batches() {
                match &batch.items {
                    TaskItems::Primary(seqs) => {
                        for s in seqs {
                            assert!(primary_seen.insert(s.sent_index), "duplicate sample");
                        }
                    }
                    TaskItems::Secondary(samples) => {
                        for s in samples {
                            assert!(
                                secondary_seen.insert(s.origin.sent_index),
                                "duplicate sample"
                            );
                        }
                    }
                }
            }
            assert_eq!(primary_seen.len(), np, "all primary samples present");
            assert_eq!(secondary_seen.len(), ns, "all secondary samples present");
        }
    }

    #[test]
    fn batches_stay_homogeneous_in_task() {
        let tasks = [primary_task(40), secondary_task(40)];
        let pool = make_batch_pool(&tasks, 16, 0).unwrap();
        for batch in pool.batches() {
            match (&batch.kind.role, &batch.items) {
                (crate::taskgen::TaskRole::Primary, TaskItems::Primary(_)) => {}
                (crate::taskgen::TaskRole::Secondary, TaskItems::Secondary(_)) => {}
                other => panic!("mixed batch: {other:?}"),
            }
        }
    }

    #[test]
    fn zero_batch_size_is_rejected() {
        assert!(matches!(
            make_batch_pool(&[primary_task(4)], 0, 0),
            Err(TrainError::BadBatchSize(0))
        ));
    }

    #[test]
    fn epoch_orders_are_permutations_and_differ_between_epochs() {
        let mut pool = make_batch_pool(&[primary_task(80)], 8, 3).unwrap();
        let first = pool.epoch_order();
        let second = pool.epoch_order();
        let sorted = |mut v: Vec<usize>| {
            v.sort_unstable();
            v
        };
        assert_eq!(sorted(first.clone()), (0..10).collect::<Vec<_>>());
        assert_eq!(sorted(second.clone()), (0..10).collect::<Vec<_>>());
        assert_ne!(first, second, "epochs reshuffle the pool");
    }

    #[test]
    fn same_seed_reproduces_the_same_schedule() {
        let mut a = make_batch_pool(&[primary_task(64)], 8, 11).unwrap();
        let mut b = make_batch_pool(&[primary_task(64)], 8, 11).unwrap();
        for _ in 0..4 {
            assert_eq!(a.epoch_order(), b.epoch_order());
        }
        let mut c = make_batch_pool(&[primary_task(64)], 8, 12).unwrap();
        assert_ne!(a.epoch_order(), c.epoch_order());
    }
}
