//! The learnable metric.
//!
//! Every text is encoded into a d-vector; for each reference `r` the output
//! `s` is compared with the original `c` and `r` through the representation
//! `[s; r; s*c; s*r; |s-c|; |s-r|]`, which a feedforward scorer maps to a
//! score `z`. The metric value is the maximum of the per-reference scores.
//! Training minimises squared error against the top-k per-reference scores
//! only (see [`adaptive_loss`]).

mod encoder;
mod loss;
mod model;
pub mod nn;
mod representation;
mod scorer;
mod train;

pub use encoder::{Encoder, EncoderConfig, ExternalEmbeddings, FeatureHashEncoder, MIN_DIMENSION};
pub use loss::{adaptive_loss, batch_adaptive_loss, top_k_indices, LossConfig};
pub use model::{load_model, save_model, LensModel, ReferenceScores, TrainingMeta, MODEL_VERSION};
pub use representation::{build_representation, Representation, BLOCKS};
pub use scorer::Scorer;
pub use train::{
    evaluate_loss, loss_and_gradients, train, train_with_history, EpochRecord, ModelGradients, TrainConfig,
    TrainOutcome, TrainingExample,
};
