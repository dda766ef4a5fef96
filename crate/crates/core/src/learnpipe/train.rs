use std::collections::{HashMap, HashSet};
use std::fmt;
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::graph2vec::{GnnModel, Graph2VecError};
use crate::graphdata::{encode, normalize, GraphDataError, GraphPair, GraphTensors, NodeVocab, PairLabel};
use crate::hwgraph::HwGraph;
use crate::nncore::{Adam, Matrix, Neighborhood, NnError, Optimizer, ParamStore, Scalar, Sgd, Tape, Var};

use super::checkpoint::Checkpoint;
use super::loss::{contrastive_loss, contrastive_loss_on_tape, cross_entropy, cross_entropy_on_tape};
use super::metrics::{EvalReport, ItemPrediction};
use super::{LearnError, OptimizerKind, TrainConfig};

/// Index of the Trojan class in classifier outputs and graph labels.
pub const TROJAN_CLASS: usize = 0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum HtVerdict {
    Trojan,
    #[serde(rename = "Non_Trojan")]
    NonTrojan,
}

impl fmt::Display for HtVerdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            HtVerdict::Trojan => "Trojan",
            HtVerdict::NonTrojan => "Non_Trojan",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PiracyVerdict {
    Piracy,
    #[serde(rename = "Non_Piracy")]
    NonPiracy,
}

impl fmt::Display for PiracyVerdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PiracyVerdict::Piracy => "Piracy",
            PiracyVerdict::NonPiracy => "Non_Piracy",
        })
    }
}

/// Trojan iff `ŷ[0] > ŷ[1]`.
pub fn decide_ht<T: Scalar>(y_hat: [T; 2]) -> HtVerdict {
    if y_hat[0] > y_hat[1] {
        HtVerdict::Trojan
    } else {
        HtVerdict::NonTrojan
    }
}

/// Piracy iff the similarity exceeds `delta`.
pub fn decide_piracy<T: Scalar>(similarity: T, delta: f64) -> PiracyVerdict {
    if similarity.as_f64() > delta {
        PiracyVerdict::Piracy
    } else {
        PiracyVerdict::NonPiracy
    }
}

impl<T: Scalar> Checkpoint<T> {
    /// Normalizes and encodes `g` with the stored vocabulary.
    pub fn encode(&self, g: &HwGraph) -> Result<GraphTensors<T>, LearnError> {
        let unseen = |e: GraphDataError| match e {
            GraphDataError::UnknownLabel { label, graph } => {
                LearnError::VocabMismatch(format!("graph {graph} has node label {label:?} unseen in training"))
            }
            other => LearnError::Data(other),
        };
        let n = normalize(g).map_err(unseen)?;
        encode(&n, &self.vocab).map_err(unseen)
    }
}

pub fn predict_ht<T: Scalar>(ckpt: &Checkpoint<T>, g: &HwGraph) -> Result<(HtVerdict, [T; 2]), LearnError> {
    let t = ckpt.encode(g)?;
    let y_hat = ckpt.model.classify(&ckpt.model.embed(&t)?)?;
    Ok((decide_ht(y_hat), y_hat))
}

pub fn predict_piracy<T: Scalar>(
    ckpt: &Checkpoint<T>,
    g1: &HwGraph,
    g2: &HwGraph,
    delta: f64,
) -> Result<(PiracyVerdict, T), LearnError> {
    let (a, b) = (ckpt.encode(g1)?, ckpt.encode(g2)?);
    let m = &ckpt.model;
    let y_hat = m.pair_similarity(&m.embed(&a)?, &m.embed(&b)?)?;
    Ok((decide_piracy(y_hat, delta), y_hat))
}

/// One mini-step validation pass.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationPoint {
    /// Optimizer steps taken before this pass.
    pub step: usize,
    pub val_loss: f64,
    /// F1 for classifiers, accuracy for pair models.
    pub metric: f64,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome<T> {
    pub checkpoint: Checkpoint<T>,
    pub history: Vec<ValidationPoint>,
    /// Loss of the last training batch, if any step was taken.
    pub final_loss: Option<f64>,
    pub steps: usize,
}

fn one_hot_row<T: Scalar>(class: usize) -> Matrix<T> {
    let mut m = Matrix::zeros(1, 2);
    m.as_mut_slice()[class] = T::one();
    m
}

fn class_of<T>(g: &GraphTensors<T>) -> Result<usize, LearnError> {
    match g.label {
        Some(c) if c < 2 => Ok(c),
        _ => Err(LearnError::MissingLabel(g.graph_id.clone())),
    }
}

/// Class probabilities and cross-entropy for each graph.
pub fn evaluate_classifier<T: Scalar>(model: &GnnModel<T>, graphs: &[GraphTensors<T>]) -> Result<(EvalReport, f64), LearnError> {
    let mut items = Vec::with_capacity(graphs.len());
    let mut loss = 0.0;
    for g in graphs {
        let class = class_of(g)?;
        let p = model.classify(&model.embed(g)?)?;
        loss += cross_entropy(&Matrix::row_vector(&p)?, &one_hot_row(class))?.as_f64();
        items.push(ItemPrediction {
            id: g.graph_id.clone(),
            truth: class == TROJAN_CLASS,
            predicted: decide_ht(p) == HtVerdict::Trojan,
            score: p[0].as_f64(),
        });
    }
    Ok((EvalReport::from_items(items), loss))
}

/// Similarity, verdict and contrastive loss for each pair of `graphs`.
pub fn evaluate_pairs<T: Scalar>(
    model: &GnnModel<T>,
    graphs: &[GraphTensors<T>],
    pairs: &[GraphPair<usize>],
    delta: f64,
    margin: f64,
) -> Result<(EvalReport, f64), LearnError> {
    let mut cache: HashMap<usize, Vec<T>> = HashMap::new();
    let mut items = Vec::with_capacity(pairs.len());
    let mut loss = 0.0;
    for p in pairs {
        for i in [p.first, p.second] {
            if let std::collections::hash_map::Entry::Vacant(e) = cache.entry(i) {
                let g = graphs.get(i).ok_or(NnError::IndexOutOfRange { index: i, len: graphs.len() })?;
                e.insert(model.embed(g)?);
            }
        }
        let sim = model.pair_similarity(&cache[&p.first], &cache[&p.second])?;
        loss += contrastive_loss(sim, p.label.sign().into(), T::lit(margin))?.as_f64();
        items.push(ItemPrediction {
            id: format!("{}|{}", graphs[p.first].graph_id, graphs[p.second].graph_id),
            truth: p.label == PairLabel::Similar,
            predicted: decide_piracy(sim, delta) == PiracyVerdict::Piracy,
            score: sim.as_f64(),
        });
    }
    Ok((EvalReport::from_items(items), loss))
}

fn check_inputs<T: Scalar>(graphs: &[&GraphTensors<T>], vocab: &NodeVocab) -> Result<(), LearnError> {
    for g in graphs {
        if g.feature_dim() != vocab.len() {
            return Err(LearnError::VocabMismatch(format!(
                "graph {} has {} feature columns but the vocabulary has {} labels",
                g.graph_id,
                g.feature_dim(),
                vocab.len()
            )));
        }
    }
    Ok(())
}

fn divergence(step: usize, last: Option<f64>) -> impl Fn(LearnError) -> LearnError {
    move |e| match e {
        LearnError::Numeric(NnError::NonFinite { .. })
        | LearnError::Model(Graph2VecError::Numeric(NnError::NonFinite { .. })) => LearnError::Divergence {
            step,
            last_finite_loss: last,
        },
        other => other,
    }
}

fn optimizer<T: Scalar>(cfg: &TrainConfig) -> Box<dyn Optimizer<T>> {
    match cfg.optimizer {
        OptimizerKind::Adam => Box::new(Adam::with_lr(T::lit(cfg.lr))),
        OptimizerKind::Sgd => Box::new(Sgd { lr: T::lit(cfg.lr) }),
    }
}

/// Shared loop: batches, updates, mini-step validation and best-weight
/// retention.
fn run<T: Scalar, S>(
    mut model: GnnModel<T>,
    vocab: &NodeVocab,
    cfg: &TrainConfig,
    mut epoch_batches: impl FnMut(&mut ChaCha8Rng) -> Vec<Vec<S>>,
    batch_loss: impl Fn(&GnnModel<T>, &mut Tape<T>, &[S]) -> Result<Var, LearnError>,
    validate: impl Fn(&GnnModel<T>) -> Result<(f64, f64), LearnError>,
) -> Result<TrainOutcome<T>, LearnError> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_add(1));
    let mut opt = optimizer::<T>(cfg);
    let mut history = Vec::new();
    let mut best: Option<(f64, f64, ParamStore<T>)> = None;
    let mut last_loss: Option<f64> = None;
    let mut step = 0;

    let mut checkpoint_pass = |model: &GnnModel<T>, step: usize, last: Option<f64>| -> Result<(), LearnError> {
        let (metric, val_loss) = validate(model).map_err(divergence(step, last))?;
        if !val_loss.is_finite() {
            return Err(LearnError::Divergence {
                step,
                last_finite_loss: last,
            });
        }
        history.push(ValidationPoint { step, val_loss, metric });
        let better = match &best {
            None => true,
            Some((m, l, _)) => metric > *m || (metric == *m && val_loss < *l),
        };
        if better {
            best = Some((metric, val_loss, model.params().clone()));
        }
        Ok(())
    };

    checkpoint_pass(&model, 0, None)?;
    for _ in 0..cfg.epochs {
        for batch in epoch_batches(&mut rng) {
            model.params_mut().zero_grad();
            let mut tape = Tape::new();
            let loss_var = batch_loss(&model, &mut tape, &batch).map_err(divergence(step + 1, last_loss))?;
            let loss = tape.value(loss_var)[(0, 0)].as_f64();
            if !loss.is_finite() {
                return Err(LearnError::Divergence {
                    step: step + 1,
                    last_finite_loss: last_loss,
                });
            }
            let grads = tape.backward(loss_var).map_err(|e| divergence(step + 1, last_loss)(e.into()))?;
            grads.accumulate(model.params_mut())?;
            opt.step(model.params_mut());
            step += 1;
            last_loss = Some(loss);
            if step % cfg.mini_test_interval == 0 {
                checkpoint_pass(&model, step, last_loss)?;
            }
        }
    }
    if step % cfg.mini_test_interval != 0 {
        checkpoint_pass(&model, step, last_loss)?;
    }
    let (best_metric, _, params) = best.expect("initial validation always runs");
    *model.params_mut() = params;
    Ok(TrainOutcome {
        checkpoint: Checkpoint {
            model,
            vocab: vocab.clone(),
            best_metric,
        },
        history,
        final_loss: last_loss,
        steps: step,
    })
}

fn neighborhoods<T: Scalar>(graphs: &[GraphTensors<T>], directed: bool) -> Result<Vec<Arc<Neighborhood>>, LearnError> {
    graphs
        .iter()
        .map(|g| Ok(Arc::new(g.neighborhood(directed)?)))
        .collect()
}

/// Trains a classifier on labelled graphs (`label` 0 = Trojan, 1 = clean)
/// and returns the weights with the best validation F1.
pub fn train_graph_classifier<T: Scalar>(
    train: &[GraphTensors<T>],
    val: &[GraphTensors<T>],
    vocab: &NodeVocab,
    cfg: &TrainConfig,
) -> Result<TrainOutcome<T>, LearnError> {
    cfg.validate()?;
    if train.is_empty() {
        return Err(LearnError::EmptyDataset("training"));
    }
    if val.is_empty() {
        return Err(LearnError::EmptyDataset("validation"));
    }
    let train_ids: HashSet<&str> = train.iter().map(|g| g.graph_id.as_str()).collect();
    if let Some(g) = val.iter().find(|g| train_ids.contains(g.graph_id.as_str())) {
        return Err(LearnError::InvalidConfig(format!("graph {} is in both training and validation sets", g.graph_id)));
    }
    check_inputs(&train.iter().chain(val).collect::<Vec<_>>(), vocab)?;
    let classes = train.iter().chain(val).map(class_of).collect::<Result<Vec<_>, _>>()?;
    let targets: Vec<Matrix<T>> = classes[..train.len()].iter().map(|&c| one_hot_row(c)).collect();
    let model = GnnModel::new(cfg.classifier_config(vocab.len()), cfg.seed)?;
    let nbrs = neighborhoods(train, cfg.directed_messages)?;
    let order: Vec<usize> = (0..train.len()).collect();

    run(
        model,
        vocab,
        cfg,
        |rng| {
            let mut o = order.clone();
            o.shuffle(rng);
            o.chunks(cfg.batch_size).map(<[usize]>::to_vec).collect()
        },
        |model, tape, batch| {
            let mut total: Option<Var> = None;
            for &i in batch {
                let f = model.forward(tape, &train[i], &nbrs[i])?;
                let p = model.classify_on_tape(tape, f.embedding)?;
                let l = cross_entropy_on_tape(tape, p, &targets[i])?;
                total = Some(match total {
                    Some(t) => tape.add(t, l)?,
                    None => l,
                });
            }
            Ok(total.expect("batches are nonempty"))
        },
        |model| {
            let (report, loss) = evaluate_classifier(model, val)?;
            Ok((report.metrics.f1, loss))
        },
    )
}

/// Batches with equal numbers of similar and dissimilar pairs where both
/// exist; the minority class is cycled.
fn balanced_batches(pos: &[usize], neg: &[usize], batch_size: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<usize>> {
    let total = pos.len() + neg.len();
    let mut pos = pos.to_vec();
    let mut neg = neg.to_vec();
    pos.shuffle(rng);
    neg.shuffle(rng);
    let (mut ip, mut ineg) = (0, 0);
    let mut out = Vec::new();
    let mut emitted = 0;
    while emitted < total {
        let size = batch_size.min(total - emitted).max(1);
        let n_pos = match (pos.is_empty(), neg.is_empty()) {
            (true, _) => 0,
            (_, true) => size,
            _ => size.div_ceil(2),
        };
        let mut batch = Vec::with_capacity(size);
        for _ in 0..n_pos {
            batch.push(pos[ip % pos.len()]);
            ip += 1;
        }
        for _ in n_pos..size {
            batch.push(neg[ineg % neg.len()]);
            ineg += 1;
        }
        emitted += size;
        out.push(batch);
    }
    out
}

/// Trains a Siamese model on graph pairs with the contrastive loss and
/// returns the weights with the best validation accuracy at `cfg.delta`.
pub fn train_pair_model<T: Scalar>(
    graphs: &[GraphTensors<T>],
    train_pairs: &[GraphPair<usize>],
    val_pairs: &[GraphPair<usize>],
    vocab: &NodeVocab,
    cfg: &TrainConfig,
) -> Result<TrainOutcome<T>, LearnError> {
    cfg.validate()?;
    if train_pairs.is_empty() {
        return Err(LearnError::EmptyDataset("training"));
    }
    if val_pairs.is_empty() {
        return Err(LearnError::EmptyDataset("validation"));
    }
    for p in train_pairs.iter().chain(val_pairs) {
        for i in [p.first, p.second] {
            if i >= graphs.len() {
                return Err(NnError::IndexOutOfRange { index: i, len: graphs.len() }.into());
            }
        }
    }
    check_inputs(&graphs.iter().collect::<Vec<_>>(), vocab)?;
    let model = GnnModel::new(cfg.siamese_config(vocab.len()), cfg.seed)?;
    let nbrs = neighborhoods(graphs, cfg.directed_messages)?;
    let (pos, neg): (Vec<usize>, Vec<usize>) =
        (0..train_pairs.len()).partition(|&i| train_pairs[i].label == PairLabel::Similar);
    let margin = T::lit(cfg.margin);

    run(
        model,
        vocab,
        cfg,
        |rng| balanced_batches(&pos, &neg, cfg.batch_size, rng),
        |model, tape, batch| {
            let mut embedded: HashMap<usize, Var> = HashMap::new();
            let mut total: Option<Var> = None;
            for &k in batch {
                let pair = &train_pairs[k];
                for i in [pair.first, pair.second] {
                    if let std::collections::hash_map::Entry::Vacant(e) = embedded.entry(i) {
                        let f = model.forward(tape, &graphs[i], &nbrs[i])?;
                        e.insert(f.embedding);
                    }
                }
                let sim = tape.cosine(embedded[&pair.first], embedded[&pair.second])?;
                let l = contrastive_loss_on_tape(tape, sim, pair.label.sign().into(), margin)?;
                total = Some(match total {
                    Some(t) => tape.add(t, l)?,
                    None => l,
                });
            }
            Ok(total.expect("batches are nonempty"))
        },
        |model| {
            let (report, loss) = evaluate_pairs(model, graphs, val_pairs, cfg.delta, cfg.margin)?;
            Ok((report.metrics.accuracy, loss))
        },
    )
}
