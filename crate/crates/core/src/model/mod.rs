//! Classification heads over DGME descriptors: a descriptor-only logistic
//! classifier and a late-fusion head gating the normalized descriptor with a
//! learnable scalar, trained with AdamW under cosine annealing.

mod embed;
mod head;
pub mod io;
mod optim;
mod train;

pub use embed::{stub_embedding, EmbeddingProvider, StubEmbedding, STUB_DEFAULT_DIM};
pub use head::{argmax, cross_entropy, layer_norm, softmax, Example, FusionHead, Grads, HeadKind, LN_EPS, PROB_FLOOR};
pub use optim::{cosine_lr, AdamW, AdamWConfig};
pub use train::{macro_f1, train, LogRow, TrainConfig, TrainOutcome};
