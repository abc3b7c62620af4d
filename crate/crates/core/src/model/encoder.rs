//! The shared encoder: subword lexicon, backbone abstraction, and the
//! small trainable encoder used for tests and desk-scale experiments.
//!
//! A backbone turns a sequence of subword ids into one vector per
//! position plus a pooled sequence vector. The pooled vector is the
//! first-position representation when the architecture reserves a
//! dedicated sequence token; the encoder here has none, so it falls
//! back to mean pooling over positions.

use ndarray::{Array1, Array2, ArrayViewD, ArrayViewMutD, Axis};
use rand::distr::{Distribution, Uniform};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::model::params::{Gradients, ParamVisitor};
use crate::model::ModelError;

/// Reserved subword id for padding positions.
pub const PAD_ID: usize = 0;
/// Reserved subword id for tokens that yield no content subwords.
pub const UNK_ID: usize = 1;
/// Size of the hashed subword lexicon.
pub const SUBWORD_VOCAB: usize = 64;
/// Hidden dimension of the small test encoder.
pub const TOY_DIM: usize = 8;
/// Default cap on subword positions per sequence.
pub const DEFAULT_MAX_LEN: usize = 128;

/// 64-bit FNV-1a — a tiny, stable string hash for the subword lexicon.
fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

/// Splits one token into hashed subword ids.
///
/// The token is lowercased and stripped to alphanumeric characters,
/// then chunked four characters at a time; each chunk hashes into the
/// content id range `[2, SUBWORD_VOCAB)`. A token with no content
/// characters maps to a single [`UNK_ID`], so every token produces at
/// least one subword.
pub fn subword_ids(token: &str) -> Vec<usize> {
    let content: Vec<char> = token
        .to_lowercase()
        .chars()
        .filter(|c| c.is_alphanumeric())
        .collect();
    if content.is_empty() {
        return vec![UNK_ID];
    }
    content
        .chunks(4)
        .map(|chunk| {
            let piece: String = chunk.iter().collect();
            2 + (fnv1a(piece.as_bytes()) % (SUBWORD_VOCAB as u64 - 2)) as usize
        })
        .collect()
}

/// Encoder output for one sequence: one row per subword position plus a
/// pooled sequence-level vector.
#[derive(Debug, Clone, PartialEq)]
pub struct EncoderOutput {
    /// m×d — row j is the representation of position j.
    pub token_vectors: Array2<f64>,
    /// d — sequence-level representation.
    pub pooled: Array1<f64>,
}

impl EncoderOutput {
    pub fn positions(&self) -> usize {
        self.token_vectors.nrows()
    }

    pub fn dim(&self) -> usize {
        self.pooled.len()
    }

    /// Enforces the no-NaN/Inf invariant.
    pub fn validate(&self) -> Result<(), ModelError> {
        let finite = self.token_vectors.iter().all(|x| x.is_finite())
            && self.pooled.iter().all(|x| x.is_finite());
        if finite {
            Ok(())
        } else {
            Err(ModelError::NonFinite {
                what: "encoder output".to_string(),
            })
        }
    }
}

/// A frozen encoder: subword lexicon plus the id→vector map.
pub trait Backbone {
    /// Representation width d.
    fn hidden_dim(&self) -> usize;

    /// Subword ids for one surface token (never empty).
    fn token_subword_ids(&self, token: &str) -> Vec<usize>;

    /// Encodes one sequence of subword ids. `ids` must be non-empty.
    fn encode_ids(&self, ids: &[usize]) -> EncoderOutput;

    /// Encodes a batch, one output per sequence.
    fn encode_batch(&self, rows: &[Vec<usize>]) -> Vec<EncoderOutput> {
        rows.iter().map(|ids| self.encode_ids(ids)).collect()
    }
}

/// A backbone that can also run backprop for training.
pub trait TrainableBackbone: Backbone + ParamVisitor {
    /// Intermediate activations kept for the backward pass.
    type Cache;

    /// Forward pass that retains activations.
    fn forward(&self, ids: &[usize]) -> (EncoderOutput, Self::Cache);

    /// Accumulates parameter gradients given the loss gradients w.r.t.
    /// this sequence's position vectors (`d_hidden`, m×d) and pooled
    /// vector (`d_pooled`, d).
    fn backward(
        &self,
        ids: &[usize],
        cache: &Self::Cache,
        d_hidden: &Array2<f64>,
        d_pooled: &Array1<f64>,
        grads: &mut Gradients,
    );
}

/// A small trainable encoder: an embedding table followed by two
/// position-wise tanh feed-forward layers. No pretrained weights and no
/// dedicated sequence token, so pooling is the mean over positions.
///
/// Defaults to d = 8 over the 64-symbol hashed lexicon — large enough
/// to learn the synthetic tasks in the test suite, small enough for
/// exhaustive finite-difference checks. The same architecture can be
/// built at other widths (e.g. 768 or 1024) to exercise dimension
/// contracts; those instances are randomly initialized, not pretrained.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToyEncoder {
    dim: usize,
    embed: Array2<f64>, // SUBWORD_VOCAB × d
    w1: Array2<f64>,    // d × d
    b1: Array1<f64>,    // d
    w2: Array2<f64>,    // d × d
    b2: Array1<f64>,    // d
}

/// Activations retained by [`ToyEncoder::forward`].
#[derive(Debug)]
pub struct ToyCache {
    embedded: Array2<f64>, // m × d
    h1: Array2<f64>,       // m × d
    h2: Array2<f64>,       // m × d
}

impl ToyEncoder {
    /// The default d=8 encoder, randomly initialized from `seed`.
    pub fn new(seed: u64) -> Self {
        Self::with_dim(TOY_DIM, seed)
    }

    /// Same architecture at an arbitrary width.
    pub fn with_dim(dim: usize, seed: u64) -> Self {
        assert!(dim > 0, "encoder dimension must be positive");
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let scale = 1.0 / (dim as f64).sqrt();
        let dist = Uniform::new_inclusive(-scale, scale).expect("valid uniform bounds");
        let mut draw = |shape: (usize, usize)| {
            Array2::from_shape_fn(shape, |_| dist.sample(&mut rng))
        };
        let embed = draw((SUBWORD_VOCAB, dim));
        let w1 = draw((dim, dim));
        let w2 = draw((dim, dim));
        let mut draw1 = |n: usize| Array1::from_shape_fn(n, |_| dist.sample(&mut rng));
        let b1 = draw1(dim);
        let b2 = draw1(dim);
        ToyEncoder {
            dim,
            embed,
            w1,
            b1,
            w2,
            b2,
        }
    }

    /// Checks shape consistency, e.g. after deserializing a checkpoint.
    pub fn validate(&self) -> Result<(), ModelError> {
        let shapes_ok = self.embed.ncols() == self.dim
            && self.embed.nrows() == SUBWORD_VOCAB
            && self.w1.dim() == (self.dim, self.dim)
            && self.w2.dim() == (self.dim, self.dim)
            && self.b1.len() == self.dim
            && self.b2.len() == self.dim;
        if !shapes_ok {
            return Err(ModelError::DimensionMismatch {
                what: "encoder parameter shapes",
                expected: self.dim,
                found: self.embed.ncols(),
            });
        }
        Ok(())
    }
}

impl Backbone for ToyEncoder {
    fn hidden_dim(&self) -> usize {
        self.dim
    }

    fn token_subword_ids(&self, token: &str) -> Vec<usize> {
        subword_ids(token)
    }

    fn encode_ids(&self, ids: &[usize]) -> EncoderOutput {
        self.forward(ids).0
    }
}

impl TrainableBackbone for ToyEncoder {
    type Cache = ToyCache;

    fn forward(&self, ids: &[usize]) -> (EncoderOutput, ToyCache) {
        assert!(!ids.is_empty(), "cannot encode an empty sequence");
        let m = ids.len();
        let mut embedded = Array2::zeros((m, self.dim));
        for (j, &id) in ids.iter().enumerate() {
            assert!(id < SUBWORD_VOCAB, "subword id {id} out of range");
            embedded.row_mut(j).assign(&self.embed.row(id));
        }
        // Position-wise: h1 = tanh(W1·e + b1), h2 = tanh(W2·h1 + b2).
        let h1 = (embedded.dot(&self.w1.t()) + &self.b1).mapv(f64::tanh);
        let h2 = (h1.dot(&self.w2.t()) + &self.b2).mapv(f64::tanh);
        let pooled = h2.mean_axis(Axis(0)).expect("non-empty sequence");
        (
            EncoderOutput {
                token_vectors: h2.clone(),
                pooled,
            },
            ToyCache { embedded, h1, h2 },
        )
    }

    fn backward(
        &self,
        ids: &[usize],
        cache: &ToyCache,
        d_hidden: &Array2<f64>,
        d_pooled: &Array1<f64>,
        grads: &mut Gradients,
    ) {
        let m = ids.len();
        assert_eq!(d_hidden.nrows(), m, "hidden gradient row count");
        // Pooled = mean over positions, so its gradient spreads evenly.
        let spread = d_pooled / m as f64;
        let dh2 = d_hidden + &spread.broadcast((m, self.dim)).expect("broadcast");

        // h2 = tanh(a2): da2 = dh2 ⊙ (1 − h2²).
        let da2 = &dh2 * &cache.h2.mapv(|v| 1.0 - v * v);
        grads.add("encoder.w2", da2.t().dot(&cache.h1).into_dyn());
        grads.add("encoder.b2", da2.sum_axis(Axis(0)).into_dyn());
        let dh1 = da2.dot(&self.w2);

        let da1 = &dh1 * &cache.h1.mapv(|v| 1.0 - v * v);
        grads.add("encoder.w1", da1.t().dot(&cache.embedded).into_dyn());
        grads.add("encoder.b1", da1.sum_axis(Axis(0)).into_dyn());
        let de = da1.dot(&self.w1);

        let mut d_embed = Array2::<f64>::zeros((SUBWORD_VOCAB, self.dim));
        for (j, &id) in ids.iter().enumerate() {
            let mut row = d_embed.row_mut(id);
            row += &de.row(j);
        }
        grads.add("encoder.embed", d_embed.into_dyn());
    }
}

impl ParamVisitor for ToyEncoder {
    fn for_each_param(&self, f: &mut dyn FnMut(&str, ArrayViewD<'_, f64>)) {
        f("encoder.embed", self.embed.view().into_dyn());
        f("encoder.w1", self.w1.view().into_dyn());
        f("encoder.b1", self.b1.view().into_dyn());
        f("encoder.w2", self.w2.view().into_dyn());
        f("encoder.b2", self.b2.view().into_dyn());
    }

    fn for_each_param_mut(&mut self, f: &mut dyn FnMut(&str, ArrayViewMutD<'_, f64>)) {
        f("encoder.embed", self.embed.view_mut().into_dyn());
        f("encoder.w1", self.w1.view_mut().into_dyn());
        f("encoder.b1", self.b1.view_mut().into_dyn());
        f("encoder.w2", self.w2.view_mut().into_dyn());
        f("encoder.b2", self.b2.view_mut().into_dyn());
    }
}
