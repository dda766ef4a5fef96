//! Graph embedding model: neighbourhood-mean convolutions, attention-scored
//! top-k pooling, a sum or mean readout and a task head.
//!
//! ```text
//! X ─► conv ─► … ─► conv ─► X'
//!                            ├─► scorer conv ─► α
//!                            └─► rows P of (X' ⊙ tanh α) ─► readout ─► h_g ─► head
//! ```

mod layers;

use std::sync::Arc;

use rand::distributions::{Distribution, Uniform};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graphdata::GraphTensors;
use crate::nncore::{cosine, Matrix, Neighborhood, NnError, ParamId, ParamStore, Scalar, Tape, Var};

pub use layers::{graph_conv, neighbor_mean, pool, pool_size, Pooled, readout, topk_filter, Activation, Readout};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Graph2VecError {
    #[error(transparent)]
    Numeric(#[from] NnError),
    #[error("model has a {found} head but {expected} was required")]
    WrongHead { expected: &'static str, found: &'static str },
    #[error("graph has {found} feature columns, model expects {expected}")]
    FeatureDim { expected: usize, found: usize },
    #[error("pooling selected no nodes")]
    EmptyPool,
    #[error("invalid model configuration: {0}")]
    InvalidConfig(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "kind")]
pub enum HeadConfig {
    /// MLP with the given hidden widths and two softmax outputs; output 0 is
    /// the positive (Trojan) class.
    Classifier { hidden: Vec<usize> },
    Siamese,
}

impl HeadConfig {
    pub fn name(&self) -> &'static str {
        match self {
            HeadConfig::Classifier { .. } => "classifier",
            HeadConfig::Siamese => "siamese",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub input_dim: usize,
    #[serde(default = "default_conv_dims")]
    pub conv_dims: Vec<usize>,
    #[serde(default = "default_activation")]
    pub activation: Activation,
    #[serde(default = "default_pooling_ratio")]
    pub pooling_ratio: f64,
    #[serde(default = "default_readout")]
    pub readout: Readout,
    #[serde(default = "default_head")]
    pub head: HeadConfig,
    /// Aggregate over successors only instead of the undirected
    /// neighbourhood.
    #[serde(default)]
    pub directed_messages: bool,
}

fn default_conv_dims() -> Vec<usize> {
    vec![64, 64]
}

fn default_activation() -> Activation {
    Activation::Relu
}

fn default_pooling_ratio() -> f64 {
    0.5
}

fn default_readout() -> Readout {
    Readout::Sum
}

fn default_head() -> HeadConfig {
    HeadConfig::Classifier { hidden: vec![32] }
}

impl ModelConfig {
    /// Default architecture for `input_dim` features and the given head.
    pub fn new(input_dim: usize, head: HeadConfig) -> Self {
        Self {
            input_dim,
            conv_dims: default_conv_dims(),
            activation: default_activation(),
            pooling_ratio: default_pooling_ratio(),
            readout: default_readout(),
            head,
            directed_messages: false,
        }
    }

    pub fn embedding_dim(&self) -> usize {
        *self.conv_dims.last().unwrap_or(&self.input_dim)
    }

    pub fn validate(&self) -> Result<(), Graph2VecError> {
        let bad = |m: &str| Err(Graph2VecError::InvalidConfig(m.to_string()));
        if self.input_dim == 0 {
            return bad("input_dim must be positive");
        }
        if self.conv_dims.is_empty() {
            return bad("at least one convolution layer is required");
        }
        if self.conv_dims.contains(&0) {
            return bad("convolution widths must be positive");
        }
        if !(self.pooling_ratio > 0.0 && self.pooling_ratio <= 1.0) {
            return bad("pooling_ratio must lie in (0, 1]");
        }
        if let HeadConfig::Classifier { hidden } = &self.head {
            if hidden.contains(&0) {
                return bad("classifier widths must be positive");
            }
        }
        Ok(())
    }
}

/// Parameter handles of one convolution.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ConvLayer {
    pub w_self: ParamId,
    pub w_neigh: ParamId,
    pub bias: ParamId,
    pub activation: Activation,
}

/// Scorer convolution (output width 1, identity activation) plus the
/// pooling ratio.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PoolLayer {
    pub scorer: ConvLayer,
    pub ratio: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Dense {
    w: ParamId,
    b: ParamId,
}

/// Tape handles produced by one forward pass.
#[derive(Debug, Clone)]
pub struct Forward {
    /// Node features after the convolution stack.
    pub x_prop: Var,
    /// Raw scores, one per node (`n×1`).
    pub alpha: Var,
    /// Selected node indices in ascending order.
    pub selected: Vec<usize>,
    /// Graph embedding (`1×c`).
    pub embedding: Var,
}

#[derive(Debug, Clone)]
pub struct GnnModel<T> {
    config: ModelConfig,
    params: ParamStore<T>,
    convs: Vec<ConvLayer>,
    pool: PoolLayer,
    mlp: Vec<Dense>,
}

impl<T: Scalar> GnnModel<T> {
    /// Glorot-uniform weights and zero biases from a seeded generator.
    pub fn new(config: ModelConfig, seed: u64) -> Result<Self, Graph2VecError> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut params = ParamStore::new();
        let mut glorot = |params: &mut ParamStore<T>, name: String, rows: usize, cols: usize| {
            let limit = (6.0 / (rows + cols) as f64).sqrt();
            let dist = Uniform::new_inclusive(-limit, limit);
            let data = (0..rows * cols).map(|_| T::lit(dist.sample(&mut rng))).collect();
            params.add(name, Matrix::new(rows, cols, data).expect("positive dims"))
        };
        let mut conv = |params: &mut ParamStore<T>, prefix: &str, fan_in: usize, fan_out: usize, act| ConvLayer {
            w_self: glorot(params, format!("{prefix}.w_self"), fan_in, fan_out),
            w_neigh: glorot(params, format!("{prefix}.w_neigh"), fan_in, fan_out),
            bias: params.add(format!("{prefix}.bias"), Matrix::zeros(1, fan_out)),
            activation: act,
        };
        let mut convs = Vec::new();
        let mut width = config.input_dim;
        for (i, &d) in config.conv_dims.iter().enumerate() {
            convs.push(conv(&mut params, &format!("conv{i}"), width, d, config.activation));
            width = d;
        }
        let pool = PoolLayer {
            scorer: conv(&mut params, "pool.scorer", width, 1, Activation::Identity),
            ratio: config.pooling_ratio,
        };
        let mut mlp = Vec::new();
        if let HeadConfig::Classifier { hidden } = &config.head {
            let mut fan_in = width;
            for (i, &d) in hidden.iter().chain(std::iter::once(&2)).enumerate() {
                mlp.push(Dense {
                    w: glorot(&mut params, format!("mlp{i}.w"), fan_in, d),
                    b: params.add(format!("mlp{i}.b"), Matrix::zeros(1, d)),
                });
                fan_in = d;
            }
        }
        Ok(Self {
            config,
            params,
            convs,
            pool,
            mlp,
        })
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    pub fn params(&self) -> &ParamStore<T> {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut ParamStore<T> {
        &mut self.params
    }

    pub fn conv_layers(&self) -> &[ConvLayer] {
        &self.convs
    }

    pub fn pool_layer(&self) -> &PoolLayer {
        &self.pool
    }

    pub fn neighborhood(&self, g: &GraphTensors<T>) -> Result<Arc<Neighborhood>, Graph2VecError> {
        Ok(Arc::new(g.neighborhood(self.config.directed_messages)?))
    }

    fn check_input(&self, g: &GraphTensors<T>) -> Result<(), Graph2VecError> {
        if g.feature_dim() != self.config.input_dim {
            return Err(Graph2VecError::FeatureDim {
                expected: self.config.input_dim,
                found: g.feature_dim(),
            });
        }
        Ok(())
    }

    fn conv_on_tape(&self, tape: &mut Tape<T>, layer: &ConvLayer, h: Var, nbrs: &Arc<Neighborhood>) -> Result<Var, NnError> {
        let ws = tape.param(&self.params, layer.w_self)?;
        let wn = tape.param(&self.params, layer.w_neigh)?;
        let b = tape.param(&self.params, layer.bias)?;
        let self_part = tape.matmul(h, ws)?;
        let agg = tape.neighbor_mean(h, Arc::clone(nbrs))?;
        let neigh_part = tape.matmul(agg, wn)?;
        let sum = tape.add(self_part, neigh_part)?;
        let z = tape.add_row(sum, b)?;
        match layer.activation {
            Activation::Relu => tape.relu(z),
            Activation::Tanh => tape.tanh(z),
            Activation::Identity => Ok(z),
        }
    }

    /// Records convolution, scoring, pooling and readout on `tape`.
    pub fn forward(&self, tape: &mut Tape<T>, g: &GraphTensors<T>, nbrs: &Arc<Neighborhood>) -> Result<Forward, Graph2VecError> {
        self.check_input(g)?;
        let mut h = tape.constant(g.x.clone())?;
        for layer in &self.convs {
            h = self.conv_on_tape(tape, layer, h, nbrs)?;
        }
        let alpha = self.conv_on_tape(tape, &self.pool.scorer, h, nbrs)?;
        let selected = topk_filter(tape.value(alpha).as_slice(), self.pool.ratio);
        if selected.is_empty() {
            return Err(Graph2VecError::EmptyPool);
        }
        let gate = tape.tanh(alpha)?;
        let kept = tape.gather_rows(h, &selected)?;
        let kept_gate = tape.gather_rows(gate, &selected)?;
        let pooled = tape.scale_rows(kept, kept_gate)?;
        let embedding = match self.config.readout {
            Readout::Sum => tape.sum_rows(pooled)?,
            Readout::Mean => tape.mean_rows(pooled)?,
        };
        Ok(Forward {
            x_prop: h,
            alpha,
            selected,
            embedding,
        })
    }

    /// Class probabilities (`1×2`) for an embedding recorded on `tape`.
    pub fn classify_on_tape(&self, tape: &mut Tape<T>, h: Var) -> Result<Var, Graph2VecError> {
        self.require_head("classifier")?;
        let mut z = h;
        for (i, layer) in self.mlp.iter().enumerate() {
            let w = tape.param(&self.params, layer.w)?;
            let b = tape.param(&self.params, layer.b)?;
            let lin = tape.matmul(z, w)?;
            z = tape.add_row(lin, b)?;
            if i + 1 < self.mlp.len() {
                z = match self.config.activation {
                    Activation::Relu => tape.relu(z)?,
                    Activation::Tanh => tape.tanh(z)?,
                    Activation::Identity => z,
                };
            }
        }
        Ok(tape.softmax_rows(z)?)
    }

    fn require_head(&self, expected: &'static str) -> Result<(), Graph2VecError> {
        let found = self.config.head.name();
        if found != expected {
            return Err(Graph2VecError::WrongHead { expected, found });
        }
        Ok(())
    }

    /// Node features after the convolution stack, without the tape.
    pub fn propagate(&self, g: &GraphTensors<T>, nbrs: &Neighborhood) -> Result<Matrix<T>, Graph2VecError> {
        self.check_input(g)?;
        let mut h = g.x.clone();
        for layer in &self.convs {
            h = self.apply_conv(layer, &h, nbrs)?;
        }
        Ok(h)
    }

    fn apply_conv(&self, layer: &ConvLayer, x: &Matrix<T>, nbrs: &Neighborhood) -> Result<Matrix<T>, NnError> {
        graph_conv(
            x,
            nbrs,
            self.params.value(layer.w_self),
            self.params.value(layer.w_neigh),
            self.params.value(layer.bias),
            layer.activation,
        )
    }

    /// Pooling scores for propagated features.
    pub fn score_nodes(&self, x_prop: &Matrix<T>, nbrs: &Neighborhood) -> Result<Vec<T>, Graph2VecError> {
        Ok(self.apply_conv(&self.pool.scorer, x_prop, nbrs)?.into_vec())
    }

    /// Graph embedding `h_g`.
    pub fn embed(&self, g: &GraphTensors<T>) -> Result<Vec<T>, Graph2VecError> {
        let nbrs = g.neighborhood(self.config.directed_messages)?;
        let x_prop = self.propagate(g, &nbrs)?;
        let alpha = self.score_nodes(&x_prop, &nbrs)?;
        let p = topk_filter(&alpha, self.pool.ratio);
        if p.is_empty() {
            return Err(Graph2VecError::EmptyPool);
        }
        let (pooled, _) = pool(&x_prop, &g.edges, &alpha, &p)?;
        Ok(readout(&pooled, self.config.readout).into_vec())
    }

    /// Class probabilities `[p_trojan, p_clean]`.
    pub fn classify(&self, h_g: &[T]) -> Result<[T; 2], Graph2VecError> {
        self.require_head("classifier")?;
        let mut z = Matrix::row_vector(h_g)?;
        for (i, layer) in self.mlp.iter().enumerate() {
            let b = self.params.value(layer.b);
            z = z.matmul(self.params.value(layer.w))?.add(b)?;
            if i + 1 < self.mlp.len() {
                let act = self.config.activation;
                z = z.map(|v| act.apply(v));
            }
        }
        let p = z.softmax_rows();
        Ok([p[(0, 0)], p[(0, 1)]])
    }

    /// Cosine similarity of two embeddings.
    pub fn pair_similarity(&self, h1: &[T], h2: &[T]) -> Result<T, Graph2VecError> {
        self.require_head("siamese")?;
        Ok(cosine(h1, h2)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tensors(x: Matrix<f64>, edges: Vec<(usize, usize)>) -> GraphTensors<f64> {
        GraphTensors {
            graph_id: "g".into(),
            x,
            edges,
            label: None,
        }
    }

    fn small_config(head: HeadConfig) -> ModelConfig {
        ModelConfig {
            conv_dims: vec![4, 3],
            ..ModelConfig::new(2, head)
        }
    }

    #[test]
    fn config_defaults_and_validation() {
        let c: ModelConfig = serde_json::from_str(r#"{"input_dim": 5}"#).unwrap();
        assert_eq!(c, ModelConfig::new(5, HeadConfig::Classifier { hidden: vec![32] }));
        assert!(serde_json::from_str::<ModelConfig>(r#"{"input_dim": 5, "typo": 1}"#).is_err());
        let mut bad = c.clone();
        bad.pooling_ratio = 0.0;
        assert!(bad.validate().is_err());
        bad.pooling_ratio = 1.0;
        bad.conv_dims.clear();
        assert!(GnnModel::<f64>::new(bad, 0).is_err());
    }

    #[test]
    fn tape_and_direct_paths_agree() {
        let model = GnnModel::<f64>::new(small_config(HeadConfig::Classifier { hidden: vec![3] }), 3).unwrap();
        let g = tensors(
            Matrix::from_rows(&[[1.0, 0.0], [0.0, 1.0], [1.0, 0.0], [0.0, 1.0], [0.0, 1.0]]).unwrap(),
            vec![(0, 1), (1, 2), (2, 3), (0, 4)],
        );
        let nbrs = model.neighborhood(&g).unwrap();
        let mut tape = Tape::new();
        let f = model.forward(&mut tape, &g, &nbrs).unwrap();
        let direct = model.embed(&g).unwrap();
        let via_tape = tape.value(f.embedding).as_slice().to_vec();
        for (a, b) in direct.iter().zip(&via_tape) {
            assert!((a - b).abs() < 1e-12);
        }
        assert_eq!(f.selected.len(), 3);
        let probs = model.classify_on_tape(&mut tape, f.embedding).unwrap();
        let direct_p = model.classify(&direct).unwrap();
        assert!((tape.value(probs)[(0, 0)] - direct_p[0]).abs() < 1e-12);
        assert!((direct_p[0] + direct_p[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn zero_weight_classifier_is_uniform() {
        let mut model = GnnModel::<f64>::new(small_config(HeadConfig::Classifier { hidden: vec![] }), 1).unwrap();
        for p in model.params_mut().iter_mut() {
            if p.name.starts_with("mlp") {
                p.value = p.value.map(|_| 0.0);
            }
        }
        assert_eq!(model.classify(&[0.3, -1.0, 2.0]).unwrap(), [0.5, 0.5]);
    }

    #[test]
    fn hand_set_single_layer_classifier() {
        let mut model = GnnModel::<f64>::new(small_config(HeadConfig::Classifier { hidden: vec![] }), 1).unwrap();
        let w = model.params().find("mlp0.w").unwrap();
        let b = model.params().find("mlp0.b").unwrap();
        model.params_mut().get_mut(w).value =
            Matrix::from_rows(&[[1.0, 0.0], [0.0, 1.0], [0.0, 0.0]]).unwrap();
        model.params_mut().get_mut(b).value = Matrix::from_rows(&[[0.0, 0.0]]).unwrap();
        let p = model.classify(&[2.0, 0.0, 7.0]).unwrap();
        let e = 2f64.exp();
        assert!((p[0] - e / (e + 1.0)).abs() < 1e-15);
    }

    #[test]
    fn heads_are_checked() {
        let siamese = GnnModel::<f64>::new(small_config(HeadConfig::Siamese), 0).unwrap();
        assert!(matches!(siamese.classify(&[1.0, 2.0, 3.0]), Err(Graph2VecError::WrongHead { .. })));
        assert!((siamese.pair_similarity(&[1.0, 2.0], &[1.0, 2.0]).unwrap() - 1.0).abs() < 1e-12);
        assert!((siamese.pair_similarity(&[1.0, 2.0], &[-1.0, -2.0]).unwrap() + 1.0).abs() < 1e-12);
        assert_eq!(siamese.pair_similarity(&[1.0, 0.0], &[0.0, 3.0]).unwrap(), 0.0);
        let clf = GnnModel::<f64>::new(small_config(HeadConfig::Classifier { hidden: vec![] }), 0).unwrap();
        assert!(clf.pair_similarity(&[1.0], &[1.0]).is_err());
    }

    #[test]
    fn zero_scorer_gives_ties() {
        let mut model = GnnModel::<f64>::new(small_config(HeadConfig::Siamese), 5).unwrap();
        let scorer = model.pool_layer().scorer;
        for id in [scorer.w_self, scorer.w_neigh, scorer.bias] {
            let p = model.params_mut().get_mut(id);
            p.value = p.value.map(|_| 0.0);
        }
        let g = tensors(Matrix::from_rows(&[[1.0, 0.0], [0.0, 1.0], [1.0, 1.0]]).unwrap(), vec![(0, 1)]);
        let nbrs = g.neighborhood(false).unwrap();
        let alpha = model.score_nodes(&model.propagate(&g, &nbrs).unwrap(), &nbrs).unwrap();
        assert!(alpha.iter().all(|&a| a == 0.0));
        assert_eq!(model.embed(&g).unwrap(), vec![0.0; 3]);
    }

    #[test]
    fn feature_width_is_checked() {
        let model = GnnModel::<f64>::new(small_config(HeadConfig::Siamese), 0).unwrap();
        let g = tensors(Matrix::zeros(2, 5), vec![]);
        assert_eq!(model.embed(&g), Err(Graph2VecError::FeatureDim { expected: 2, found: 5 }));
    }

    #[test]
    fn single_precision_models_run() {
        let model = GnnModel::<f32>::new(small_config(HeadConfig::Siamese), 0).unwrap();
        let g = GraphTensors {
            graph_id: "g".into(),
            x: Matrix::from_rows(&[[1.0f32, 0.0], [0.0, 1.0]]).unwrap(),
            edges: vec![(0, 1)],
            label: None,
        };
        assert_eq!(model.embed(&g).unwrap().len(), 3);
    }
}
