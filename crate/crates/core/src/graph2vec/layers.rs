use serde::{Deserialize, Serialize};

use crate::nncore::{Matrix, Neighborhood, NnError, Scalar};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Relu,
    Tanh,
    Identity,
}

impl Activation {
    pub fn apply<T: Scalar>(self, x: T) -> T {
        match self {
            Activation::Relu => x.max(T::zero()),
            Activation::Tanh => x.tanh(),
            Activation::Identity => x,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Readout {
    Sum,
    Mean,
}

/// Row `v` is the mean of the rows of `x` over the neighbours of `v`, or zero
/// when `v` has none.
pub fn neighbor_mean<T: Scalar>(x: &Matrix<T>, nbrs: &Neighborhood) -> Result<Matrix<T>, NnError> {
    if nbrs.num_nodes() != x.rows() {
        return Err(NnError::ShapeMismatch {
            op: "neighbor_mean",
            left: x.shape(),
            right: (nbrs.num_nodes(), 1),
        });
    }
    let mut out = Matrix::zeros(x.rows(), x.cols());
    for v in 0..x.rows() {
        let ns = nbrs.of(v);
        if ns.is_empty() {
            continue;
        }
        let inv = T::one() / T::from_usize(ns.len()).unwrap();
        let row = out.row_mut(v);
        for &u in ns {
            for (o, &a) in row.iter_mut().zip(x.row(u)) {
                *o = *o + a;
            }
        }
        row.iter_mut().for_each(|o| *o = *o * inv);
    }
    Ok(out)
}

/// One convolution: `act(X·W_self + mean_N(X)·W_neigh + b)`.
pub fn graph_conv<T: Scalar>(
    x: &Matrix<T>,
    nbrs: &Neighborhood,
    w_self: &Matrix<T>,
    w_neigh: &Matrix<T>,
    bias: &Matrix<T>,
    act: Activation,
) -> Result<Matrix<T>, NnError> {
    let agg = neighbor_mean(x, nbrs)?;
    let mut out = x.matmul(w_self)?.add(&agg.matmul(w_neigh)?)?;
    if bias.shape() != (1, out.cols()) {
        return Err(NnError::ShapeMismatch {
            op: "graph_conv bias",
            left: out.shape(),
            right: bias.shape(),
        });
    }
    for i in 0..out.rows() {
        for (o, &b) in out.row_mut(i).iter_mut().zip(bias.as_slice()) {
            *o = act.apply(*o + b);
        }
    }
    Ok(out)
}

/// Number of nodes kept by pooling: `ceil(pr·n)` clamped to `[1, n]`.
pub fn pool_size(pr: f64, n: usize) -> usize {
    // The epsilon keeps exact products such as 0.5·4 from rounding up.
    let k = (pr * n as f64 - 1e-9).ceil();
    (k.max(1.0) as usize).min(n.max(1))
}

/// Indices of the `pool_size(pr, n)` highest scores, ties broken towards the
/// lower index, returned in ascending order.
pub fn topk_filter<T: Scalar>(alpha: &[T], pr: f64) -> Vec<usize> {
    let n = alpha.len();
    if n == 0 {
        return Vec::new();
    }
    let k = pool_size(pr, n);
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &b| {
        alpha[b]
            .partial_cmp(&alpha[a])
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.cmp(&b))
    });
    idx.truncate(k);
    idx.sort_unstable();
    idx
}

pub type Pooled<T> = (Matrix<T>, Vec<(usize, usize)>);

/// Gated rows `P` of `x` and the subgraph induced by `P`, renumbered by rank.
pub fn pool<T: Scalar>(
    x: &Matrix<T>,
    edges: &[(usize, usize)],
    alpha: &[T],
    p: &[usize],
) -> Result<Pooled<T>, NnError> {
    if alpha.len() != x.rows() {
        return Err(NnError::ShapeMismatch {
            op: "pool",
            left: x.shape(),
            right: (alpha.len(), 1),
        });
    }
    if let Some(&bad) = p.iter().find(|&&i| i >= x.rows()) {
        return Err(NnError::IndexOutOfRange {
            index: bad,
            len: x.rows(),
        });
    }
    let mut rows = Vec::with_capacity(p.len() * x.cols());
    for &i in p {
        let g = alpha[i].tanh();
        rows.extend(x.row(i).iter().map(|&v| v * g));
    }
    let pooled = Matrix::new(p.len(), x.cols(), rows)?;
    let mut rank = vec![usize::MAX; x.rows()];
    for (r, &i) in p.iter().enumerate() {
        rank[i] = r;
    }
    let mut induced: Vec<(usize, usize)> = edges
        .iter()
        .filter(|&&(s, d)| rank[s] != usize::MAX && rank[d] != usize::MAX)
        .map(|&(s, d)| (rank[s], rank[d]))
        .collect();
    induced.sort_unstable();
    induced.dedup();
    Ok((pooled, induced))
}

/// Column-wise sum or mean, as a `1×c` row.
pub fn readout<T: Scalar>(x: &Matrix<T>, mode: Readout) -> Matrix<T> {
    match mode {
        Readout::Sum => x.sum_rows(),
        Readout::Mean => x.mean_rows(),
    }
}
