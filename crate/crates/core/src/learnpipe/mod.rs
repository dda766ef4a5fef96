//! Training and evaluation: losses, the graph and pair trainers, decision
//! rules, metrics, checkpoints and embedding export.

mod checkpoint;
mod export;
mod loss;
mod metrics;
mod train;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph2vec::{Activation, Graph2VecError, HeadConfig, ModelConfig, Readout};
use crate::graphdata::GraphDataError;
use crate::nncore::NnError;

pub use checkpoint::{load_checkpoint, save_checkpoint, Checkpoint, CHECKPOINT_VERSION};
pub use export::{embedding_table, export_embeddings};
pub use loss::{contrastive_loss, contrastive_loss_on_tape, cross_entropy, cross_entropy_on_tape, LOG_EPS};
pub use metrics::{compute_metrics, f1_score, Counts, EvalReport, ItemPrediction, Metrics};
pub use train::{
    decide_ht, decide_piracy, evaluate_classifier, evaluate_pairs, predict_ht, predict_piracy, train_graph_classifier,
    train_pair_model, HtVerdict, PiracyVerdict, TrainOutcome, ValidationPoint, TROJAN_CLASS,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LearnError {
    #[error(transparent)]
    Model(#[from] Graph2VecError),
    #[error(transparent)]
    Data(#[from] GraphDataError),
    #[error(transparent)]
    Numeric(#[from] NnError),
    #[error("pair label must be +1 or -1, got {0}")]
    BadLabel(i64),
    #[error("{0} set is empty")]
    EmptyDataset(&'static str),
    #[error("graph {0} has no class label")]
    MissingLabel(String),
    #[error("loss diverged at step {step} (last finite loss {last_finite_loss:?})")]
    Divergence { step: usize, last_finite_loss: Option<f64> },
    #[error("invalid training configuration: {0}")]
    InvalidConfig(String),
    #[error("checkpoint format version {found} is not supported (expected {expected})")]
    VersionMismatch { found: u32, expected: u32 },
    #[error("vocabulary mismatch: {0}; re-extract graphs with the vocabulary stored in the checkpoint")]
    VocabMismatch(String),
    #[error("corrupt checkpoint {path}: {reason}")]
    CorruptFile { path: String, reason: String },
    #[error("I/O error on {path}: {message}")]
    Io { path: String, message: String },
}

impl LearnError {
    pub(crate) fn io(path: &std::path::Path, e: std::io::Error) -> Self {
        LearnError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OptimizerKind {
    Adam,
    Sgd,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub lr: f64,
    pub optimizer: OptimizerKind,
    pub pooling_ratio: f64,
    pub margin: f64,
    /// Piracy decision boundary.
    pub delta: f64,
    pub seed: u64,
    /// Optimizer steps between validation passes.
    pub mini_test_interval: usize,
    pub readout: Readout,
    pub conv_dims: Vec<usize>,
    pub mlp_dims: Vec<usize>,
    pub activation: Activation,
    pub directed_messages: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 50,
            batch_size: 8,
            lr: 1e-3,
            optimizer: OptimizerKind::Adam,
            pooling_ratio: 0.5,
            margin: 0.5,
            delta: 0.5,
            seed: 0,
            mini_test_interval: 10,
            readout: Readout::Sum,
            conv_dims: vec![64, 64],
            mlp_dims: vec![32],
            activation: Activation::Relu,
            directed_messages: false,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), LearnError> {
        let bad = |m: &str| Err(LearnError::InvalidConfig(m.to_string()));
        if self.batch_size == 0 {
            return bad("batch_size must be positive");
        }
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return bad("lr must be positive");
        }
        if !(0.0..1.0).contains(&self.margin) {
            return bad("margin must lie in [0, 1)");
        }
        if !(self.delta > -1.0 && self.delta < 1.0) {
            return bad("delta must lie in (-1, 1)");
        }
        if self.mini_test_interval == 0 {
            return bad("mini_test_interval must be positive");
        }
        Ok(())
    }

    pub fn model_config(&self, input_dim: usize, head: HeadConfig) -> ModelConfig {
        ModelConfig {
            input_dim,
            conv_dims: self.conv_dims.clone(),
            activation: self.activation,
            pooling_ratio: self.pooling_ratio,
            readout: self.readout,
            head,
            directed_messages: self.directed_messages,
        }
    }

    pub fn classifier_config(&self, input_dim: usize) -> ModelConfig {
        self.model_config(
            input_dim,
            HeadConfig::Classifier {
                hidden: self.mlp_dims.clone(),
            },
        )
    }

    pub fn siamese_config(&self, input_dim: usize) -> ModelConfig {
        self.model_config(input_dim, HeadConfig::Siamese)
    }
}
