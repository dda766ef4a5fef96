use std::collections::{BTreeSet, HashMap};
use std::path::Path;

use sha2::{Digest, Sha256};

use super::GraphDataError;
use crate::hwgraph::HwGraph;

/// Sorted node-label vocabulary.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NodeVocab {
    labels: Vec<String>,
    index: HashMap<String, usize>,
}

impl NodeVocab {
    /// Builds a vocabulary from arbitrary labels; duplicates collapse and
    /// the result is sorted.
    pub fn from_labels<I, S>(labels: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let set: BTreeSet<String> = labels.into_iter().map(Into::into).collect();
        let labels: Vec<String> = set.into_iter().collect();
        let index = labels.iter().enumerate().map(|(i, l)| (l.clone(), i)).collect();
        Self { labels, index }
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.index.get(label).copied()
    }

    pub fn label(&self, i: usize) -> Option<&str> {
        self.labels.get(i).map(String::as_str)
    }

    /// One label per line, LF terminated.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for l in &self.labels {
            s.push_str(l);
            s.push('\n');
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Self, GraphDataError> {
        let labels: Vec<&str> = text.lines().filter(|l| !l.is_empty()).collect();
        if labels.is_empty() {
            return Err(GraphDataError::EmptyCorpus);
        }
        if labels.windows(2).any(|w| w[0] >= w[1]) {
            return Err(GraphDataError::VocabFormat("labels must be sorted and unique".into()));
        }
        Ok(Self::from_labels(labels))
    }

    /// Hex SHA-256 of [`NodeVocab::to_text`].
    pub fn fingerprint(&self) -> String {
        hex::encode(Sha256::digest(self.to_text().as_bytes()))
    }

    pub fn save(&self, path: &Path) -> Result<(), GraphDataError> {
        std::fs::write(path, self.to_text()).map_err(|e| GraphDataError::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self, GraphDataError> {
        let text = std::fs::read_to_string(path).map_err(|e| GraphDataError::io(path, e))?;
        Self::from_text(&text)
    }
}

/// Sorted union of the labels of normalized graphs.
pub fn build_vocab(graphs: &[HwGraph]) -> Result<NodeVocab, GraphDataError> {
    let vocab = NodeVocab::from_labels(graphs.iter().flat_map(|g| g.nodes.iter().map(|n| n.label.clone())));
    if vocab.is_empty() {
        return Err(GraphDataError::EmptyCorpus);
    }
    Ok(vocab)
}
