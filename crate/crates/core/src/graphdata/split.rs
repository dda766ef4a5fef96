use std::collections::HashMap;
use std::hash::Hash;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::GraphDataError;

/// Disjoint train/test partition.
#[derive(Debug, Clone, PartialEq)]
pub struct DatasetSplit<I = String> {
    pub train: Vec<I>,
    pub test: Vec<I>,
    pub seed: u64,
    pub ratio: f64,
}

/// Shuffles `ids` with a seeded ChaCha8 generator and places the first
/// `round(ratio * n)` items in the test set.
pub fn split<I: Clone>(ids: &[I], ratio: f64, seed: u64) -> Result<DatasetSplit<I>, GraphDataError> {
    if !(ratio > 0.0 && ratio < 1.0) {
        return Err(GraphDataError::InvalidRatio(ratio));
    }
    if ids.len() < 2 {
        return Err(GraphDataError::TooFewItems(ids.len()));
    }
    let mut shuffled = ids.to_vec();
    shuffled.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let n_test = (ratio * ids.len() as f64).round() as usize;
    if n_test == 0 || n_test == ids.len() {
        return Err(GraphDataError::DegenerateSplit {
            train: ids.len() - n_test,
            test: n_test,
        });
    }
    let train = shuffled.split_off(n_test);
    Ok(DatasetSplit {
        train,
        test: shuffled,
        seed,
        ratio,
    })
}

/// Holds out every item derived from `held_out`; order follows `ids`.
pub fn leave_one_circuit_out(
    ids: &[String],
    circuit_of: &HashMap<String, String>,
    held_out: &str,
) -> Result<DatasetSplit<String>, GraphDataError> {
    if !circuit_of.values().any(|c| c == held_out) {
        return Err(GraphDataError::UnknownCircuit(held_out.to_string()));
    }
    let mut train = Vec::new();
    let mut test = Vec::new();
    for id in ids {
        let c = circuit_of
            .get(id)
            .ok_or_else(|| GraphDataError::MissingCircuit(id.clone()))?;
        if c == held_out {
            test.push(id.clone());
        } else {
            train.push(id.clone());
        }
    }
    let ratio = if ids.is_empty() { 0.0 } else { test.len() as f64 / ids.len() as f64 };
    Ok(DatasetSplit {
        train,
        test,
        seed: 0,
        ratio,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PairLabel {
    Similar,
    Dissimilar,
}

impl PairLabel {
    /// `+1` for similar pairs, `-1` otherwise.
    pub fn sign(self) -> i8 {
        match self {
            PairLabel::Similar => 1,
            PairLabel::Dissimilar => -1,
        }
    }

    pub fn from_sign(s: i8) -> Option<Self> {
        match s {
            1 => Some(PairLabel::Similar),
            -1 => Some(PairLabel::Dissimilar),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct GraphPair<I = String> {
    pub first: I,
    pub second: I,
    pub label: PairLabel,
}

/// Every unordered pair of distinct items, labelled by category equality.
pub fn make_pairs<I, C>(ids: &[I], category_of: &HashMap<I, C>) -> Result<Vec<GraphPair<I>>, GraphDataError>
where
    I: Clone + Eq + Hash + ToString,
    C: PartialEq,
{
    if ids.len() < 2 {
        return Err(GraphDataError::TooFewItems(ids.len()));
    }
    let cats: Vec<&C> = ids
        .iter()
        .map(|id| {
            category_of
                .get(id)
                .ok_or_else(|| GraphDataError::MissingCategory(id.to_string()))
        })
        .collect::<Result<_, _>>()?;
    let mut pairs = Vec::with_capacity(ids.len() * (ids.len() - 1) / 2);
    for i in 0..ids.len() {
        for j in i + 1..ids.len() {
            pairs.push(GraphPair {
                first: ids[i].clone(),
                second: ids[j].clone(),
                label: if cats[i] == cats[j] {
                    PairLabel::Similar
                } else {
                    PairLabel::Dissimilar
                },
            });
        }
    }
    Ok(pairs)
}
