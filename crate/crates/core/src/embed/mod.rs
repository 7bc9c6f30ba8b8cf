//! Knowledge-graph embeddings: TransE, TransR, DistMult and RESCAL with
//! hand-derived gradients, trained by mini-batch SGD.

pub mod dataset;
pub mod eval;
pub mod io;
pub mod loss;
pub mod model;
pub mod train;

pub use dataset::{training_set, IdMap};
pub use eval::{evaluate_link_prediction, LinkPredictionMetrics};
pub use loss::{gradient_check, GradCheck, LossConfig};
pub use model::{ModelKind, ModelParams, TripleIds};
pub use train::{negative_sample, train, TrainConfig, TrainError, TrainOutcome, TrainingSet};
