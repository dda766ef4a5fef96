use std::path::{Path, PathBuf};

use anyhow::Context;
use hwgnn::hwgraph::GraphKind;
use hwgnn::learnpipe::TrainConfig;
use serde::{Deserialize, Serialize};

pub const CONFIG_HELP: &str = "\
CONFIGURATION FILE (YAML, passed with --config; unknown keys are errors)

  graph_kind: DFG              AST or DFG
  task: ht                     embed, ht or piracy; checked against the command
  paths:
    corpus: corpus/ht          corpus root: <corpus>/<design>/*.v
    labels: null               manifest, default <corpus>/labels.json
    cache: null                tensor cache directory, disabled when null
    out: runs/ht               output directory
  split:
    test_ratio: 0.2            held-out fraction of designs (or pairs)
    val_ratio: 0.2             validation fraction carved from training
    leave_out: null            circuit held out instead of a random split
  train:
    epochs: 50
    batch_size: 8
    lr: 0.001
    optimizer: adam            adam or sgd
    pooling_ratio: 0.5
    margin: 0.5                contrastive margin, in [0, 1)
    delta: 0.5                 piracy decision boundary, in (-1, 1)
    seed: 0
    mini_test_interval: 10     optimizer steps between validation passes
    readout: sum               sum or mean
    conv_dims: [64, 64]
    mlp_dims: [32]
    activation: relu           relu, tanh or identity
    directed_messages: false   aggregate over successors only

Flags override the file: --kind, --seed (train.seed), --cache, --out,
--corpus, --leave-out.

MANIFESTS
  Trojan corpora: {\"design\": \"Trojan\" | \"Non_Trojan\"} or
                  {\"design\": {\"label\": \"Trojan\", \"circuit\": \"AES\"}}
  Piracy corpora: {\"design\": \"category\"}";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Task {
    Embed,
    Ht,
    Piracy,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Paths {
    pub corpus: Option<PathBuf>,
    pub labels: Option<PathBuf>,
    pub cache: Option<PathBuf>,
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SplitConfig {
    pub test_ratio: f64,
    pub val_ratio: f64,
    pub leave_out: Option<String>,
}

impl Default for SplitConfig {
    fn default() -> Self {
        Self {
            test_ratio: 0.2,
            val_ratio: 0.2,
            leave_out: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub graph_kind: GraphKind,
    pub task: Option<Task>,
    pub paths: Paths,
    pub split: SplitConfig,
    pub train: TrainConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            graph_kind: GraphKind::Dfg,
            task: None,
            paths: Paths::default(),
            split: SplitConfig::default(),
            train: TrainConfig::default(),
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        serde_yaml::from_str(&text).with_context(|| format!("invalid configuration {}", path.display()))
    }

    pub fn labels_path(&self) -> Option<PathBuf> {
        self.paths
            .labels
            .clone()
            .or_else(|| self.paths.corpus.as_ref().map(|c| c.join("labels.json")))
    }

    pub fn out_dir(&self) -> PathBuf {
        self.paths.out.clone().unwrap_or_else(|| PathBuf::from("."))
    }
}
