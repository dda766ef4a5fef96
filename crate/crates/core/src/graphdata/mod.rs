//! Model inputs built from extracted graphs: label normalization, the node
//! vocabulary, one-hot encoding, dataset splits, graph pairs and an on-disk
//! tensor cache.

mod cache;
mod split;
mod vocab;

use std::path::Path;

use thiserror::Error;

use crate::hwgraph::{ast_labels, dfg_labels, GraphKind, HwGraph};
use crate::nncore::{Matrix, Neighborhood, NnError, Scalar};

pub use cache::{cache_key, GraphCache};
pub use split::{leave_one_circuit_out, make_pairs, split, DatasetSplit, GraphPair, PairLabel};
pub use vocab::{build_vocab, NodeVocab};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GraphDataError {
    #[error("unknown node label {label:?} in graph {graph}")]
    UnknownLabel { label: String, graph: String },
    #[error("corpus has no graphs or no labels")]
    EmptyCorpus,
    #[error("graph {0} has no nodes")]
    EmptyGraph(String),
    #[error("split ratio {0} is outside (0, 1)")]
    InvalidRatio(f64),
    #[error("degenerate split: {train} train and {test} test items")]
    DegenerateSplit { train: usize, test: usize },
    #[error("need at least two items, got {0}")]
    TooFewItems(usize),
    #[error("circuit {0} does not occur in the circuit map")]
    UnknownCircuit(String),
    #[error("item {0} has no circuit assignment")]
    MissingCircuit(String),
    #[error("item {0} has no category assignment")]
    MissingCategory(String),
    #[error("malformed vocabulary: {0}")]
    VocabFormat(String),
    #[error("corrupt cache file {path}: {reason}")]
    CacheCorrupt { path: String, reason: String },
    #[error("I/O error on {path}: {message}")]
    Io { path: String, message: String },
    #[error(transparent)]
    Numeric(#[from] NnError),
}

impl GraphDataError {
    pub(crate) fn io(path: &Path, e: std::io::Error) -> Self {
        GraphDataError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        }
    }
}

/// Replaces labels by their normalized form and drops node names.
///
/// Data-flow signal, input and output nodes become `signal` and literals
/// `const`; syntax-tree labels are kept.
pub fn normalize(g: &HwGraph) -> Result<HwGraph, GraphDataError> {
    let known = match g.kind {
        GraphKind::Ast => ast_labels(),
        GraphKind::Dfg => dfg_labels(),
    };
    let mut out = g.clone();
    for n in &mut out.nodes {
        if !known.contains(&n.label.as_str()) {
            return Err(GraphDataError::UnknownLabel {
                label: n.label.clone(),
                graph: g.design.clone(),
            });
        }
        if g.kind == GraphKind::Dfg && matches!(n.label.as_str(), "input" | "output") {
            n.label = "signal".into();
        }
        n.name = None;
    }
    Ok(out)
}

/// One graph as model input: one-hot node features and the edge list.
#[derive(Debug, Clone, PartialEq)]
pub struct GraphTensors<T> {
    pub graph_id: String,
    pub x: Matrix<T>,
    pub edges: Vec<(usize, usize)>,
    /// Class index for classification tasks.
    pub label: Option<usize>,
}

impl<T: Scalar> GraphTensors<T> {
    pub fn num_nodes(&self) -> usize {
        self.x.rows()
    }

    pub fn feature_dim(&self) -> usize {
        self.x.cols()
    }

    pub fn neighborhood(&self, directed: bool) -> Result<Neighborhood, NnError> {
        Neighborhood::from_edges(self.num_nodes(), &self.edges, directed)
    }

    /// Recovers node labels from the argmax of each feature row.
    pub fn decode_labels<'v>(&self, vocab: &'v NodeVocab) -> Vec<&'v str> {
        (0..self.num_nodes())
            .map(|i| {
                let row = self.x.row(i);
                let best = (0..row.len()).fold(0, |b, j| if row[j] > row[b] { j } else { b });
                vocab.label(best).unwrap_or("")
            })
            .collect()
    }

    /// Renumbers nodes so that old node `v` becomes `perm[v]`.
    pub fn permuted(&self, perm: &[usize]) -> Self {
        let n = self.num_nodes();
        assert_eq!(perm.len(), n, "permutation length must equal node count");
        let mut inverse = vec![0; n];
        for (old, &new) in perm.iter().enumerate() {
            inverse[new] = old;
        }
        Self {
            graph_id: self.graph_id.clone(),
            x: self.x.select_rows(&inverse),
            edges: self.edges.iter().map(|&(s, d)| (perm[s], perm[d])).collect(),
            label: self.label,
        }
    }
}

/// One-hot encodes a normalized graph.
pub fn encode<T: Scalar>(g: &HwGraph, vocab: &NodeVocab) -> Result<GraphTensors<T>, GraphDataError> {
    if g.nodes.is_empty() {
        return Err(GraphDataError::EmptyGraph(g.design.clone()));
    }
    let d = vocab.len();
    let mut data = vec![T::zero(); g.nodes.len() * d];
    for (i, n) in g.nodes.iter().enumerate() {
        let j = vocab.index_of(&n.label).ok_or_else(|| GraphDataError::UnknownLabel {
            label: n.label.clone(),
            graph: g.design.clone(),
        })?;
        data[i * d + j] = T::one();
    }
    Ok(GraphTensors {
        graph_id: g.design.clone(),
        x: Matrix::new(g.nodes.len(), d, data)?,
        edges: g.edge_pairs(),
        label: None,
    })
}

/// Normalizes `graphs`, builds their vocabulary and encodes each one.
pub fn prepare<T: Scalar>(graphs: &[HwGraph]) -> Result<(NodeVocab, Vec<GraphTensors<T>>), GraphDataError> {
    let normalized = graphs.iter().map(normalize).collect::<Result<Vec<_>, _>>()?;
    let vocab = build_vocab(&normalized)?;
    let tensors = normalized.iter().map(|g| encode(g, &vocab)).collect::<Result<_, _>>()?;
    Ok((vocab, tensors))
}
