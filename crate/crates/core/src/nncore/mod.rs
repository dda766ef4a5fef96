//! Dense numeric substrate: matrices, a reverse-mode tape, optimizers and
//! finite-difference gradient checking.

mod check;
mod matrix;
mod neighborhood;
mod optim;
mod params;
mod scalar;
mod tape;

use thiserror::Error;

pub use check::{central_differences, relative_error};
pub use matrix::Matrix;
pub use neighborhood::Neighborhood;
pub use optim::{adam_step, sgd_step, Adam, Optimizer, Sgd};
pub use params::{ParamId, ParamStore, Parameter};
pub use scalar::Scalar;
pub use tape::{Gradients, Tape, Var};

/// Norm below which a vector is treated as zero by [`cosine`].
pub const ZERO_NORM_EPS: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum NnError {
    #[error("shape mismatch in {op}: {left:?} vs {right:?}")]
    ShapeMismatch {
        op: &'static str,
        left: (usize, usize),
        right: (usize, usize),
    },
    #[error("matrix dimensions must be positive, got {rows}x{cols}")]
    EmptyShape { rows: usize, cols: usize },
    #[error("non-finite value produced by {op}")]
    NonFinite { op: &'static str },
    #[error("cosine similarity of a zero vector")]
    ZeroVector,
    #[error("backward requires a 1x1 loss, got {shape:?}")]
    NotScalar { shape: (usize, usize) },
    #[error("index {index} out of range for {len} rows")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("edge ({src}, {dst}) references a node outside 0..{nodes}")]
    InvalidEdge { src: usize, dst: usize, nodes: usize },
}

/// Cosine similarity `u·v / (‖u‖‖v‖)`, clamped to `[-1, 1]`.
pub fn cosine<T: Scalar>(u: &[T], v: &[T]) -> Result<T, NnError> {
    if u.len() != v.len() || u.is_empty() {
        return Err(NnError::ShapeMismatch {
            op: "cosine",
            left: (1, u.len()),
            right: (1, v.len()),
        });
    }
    let dot: T = u.iter().zip(v).map(|(&a, &b)| a * b).sum();
    let nu = u.iter().map(|&a| a * a).sum::<T>().sqrt();
    let nv = v.iter().map(|&a| a * a).sum::<T>().sqrt();
    let eps = T::lit(ZERO_NORM_EPS);
    if !(nu > eps && nv > eps) {
        return Err(NnError::ZeroVector);
    }
    let c = dot / (nu * nv);
    if !c.is_finite() {
        return Err(NnError::NonFinite { op: "cosine" });
    }
    Ok(c.max(-T::one()).min(T::one()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cosine_reference_values() {
        assert_eq!(cosine(&[3.0, 4.0], &[3.0, 4.0]).unwrap(), 1.0);
        assert_eq!(cosine(&[1.0, 0.0], &[0.0, 1.0]).unwrap(), 0.0);
        assert_eq!(cosine(&[1.0, 0.0], &[-1.0, 0.0]).unwrap(), -1.0);
    }

    #[test]
    fn cosine_rejects_zero_vectors() {
        assert_eq!(cosine(&[0.0, 0.0], &[1.0, 0.0]), Err(NnError::ZeroVector));
        assert_eq!(cosine(&[1e-13, 0.0], &[1.0, 0.0]), Err(NnError::ZeroVector));
    }

    #[test]
    fn cosine_works_in_single_precision() {
        let c = cosine(&[1.0f32, 2.0, 3.0], &[1.0f32, 2.0, 3.0]).unwrap();
        assert!((c - 1.0).abs() < 1e-6);
    }

    proptest::proptest! {
        #[test]
        fn cosine_stays_in_range(
            u in proptest::collection::vec(-1e3f64..1e3, 1..12),
            scale in -50.0f64..50.0,
            noise in proptest::collection::vec(-1e-9f64..1e-9, 12),
        ) {
            let v: Vec<f64> = u.iter().zip(&noise).map(|(a, n)| a * scale + n).collect();
            if let Ok(c) = cosine(&u, &v) {
                proptest::prop_assert!((-1.0..=1.0).contains(&c));
            }
        }
    }
}
