use crate::nncore::{Matrix, NnError, Scalar, Tape, Var};

use super::LearnError;

/// Added inside the logarithm of the cross-entropy.
pub const LOG_EPS: f64 = 1e-12;

/// `-Σ Y·ln(Ŷ + ε)` over all rows.
pub fn cross_entropy<T: Scalar>(y_hat: &Matrix<T>, y: &Matrix<T>) -> Result<T, NnError> {
    let eps = T::lit(LOG_EPS);
    let terms = y.zip_map(y_hat, "cross_entropy", |t, p| t * (p + eps).ln())?;
    Ok(-terms.sum())
}

pub fn cross_entropy_on_tape<T: Scalar>(tape: &mut Tape<T>, y_hat: Var, y: &Matrix<T>) -> Result<Var, NnError> {
    let shifted = tape.affine(y_hat, T::one(), T::lit(LOG_EPS))?;
    let logs = tape.log(shifted)?;
    let target = tape.constant(y.clone())?;
    let terms = tape.hadamard(target, logs)?;
    let total = tape.sum_all(terms)?;
    tape.affine(total, -T::one(), T::zero())
}

/// `1 - ŷ` for similar pairs (`y = +1`), `max(0, ŷ - margin)` for
/// dissimilar ones (`y = -1`).
pub fn contrastive_loss<T: Scalar>(y_hat: T, y: i64, margin: T) -> Result<T, LearnError> {
    match y {
        1 => Ok(T::one() - y_hat),
        -1 => Ok((y_hat - margin).max(T::zero())),
        other => Err(LearnError::BadLabel(other)),
    }
}

pub fn contrastive_loss_on_tape<T: Scalar>(tape: &mut Tape<T>, y_hat: Var, y: i64, margin: T) -> Result<Var, LearnError> {
    match y {
        1 => Ok(tape.affine(y_hat, -T::one(), T::one())?),
        -1 => {
            let shifted = tape.affine(y_hat, T::one(), -margin)?;
            Ok(tape.relu(shifted)?)
        }
        other => Err(LearnError::BadLabel(other)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn row(v: &[f64]) -> Matrix<f64> {
        Matrix::row_vector(v).unwrap()
    }

    #[test]
    fn cross_entropy_examples() {
        assert!(cross_entropy(&row(&[1.0, 0.0]), &row(&[1.0, 0.0])).unwrap().abs() < 1e-11);
        let half = cross_entropy(&row(&[0.5, 0.5]), &row(&[1.0, 0.0])).unwrap();
        assert!((half - 2f64.ln()).abs() < 1e-9);
        let two = Matrix::from_rows(&[[0.3, 0.7], [0.3, 0.7]]).unwrap();
        let y2 = Matrix::from_rows(&[[0.0, 1.0], [0.0, 1.0]]).unwrap();
        let single = cross_entropy(&row(&[0.3, 0.7]), &row(&[0.0, 1.0])).unwrap();
        assert!((cross_entropy(&two, &y2).unwrap() - 2.0 * single).abs() < 1e-12);
        assert!(cross_entropy(&row(&[0.5, 0.5]), &row(&[1.0, 0.0, 0.0])).is_err());
    }

    #[test]
    fn tape_cross_entropy_matches() {
        let mut tape = Tape::new();
        let p = tape.input(row(&[0.2, 0.8])).unwrap();
        let l = cross_entropy_on_tape(&mut tape, p, &row(&[1.0, 0.0])).unwrap();
        let direct = cross_entropy(&row(&[0.2, 0.8]), &row(&[1.0, 0.0])).unwrap();
        assert_eq!(tape.value(l)[(0, 0)], direct);
    }

    #[test]
    fn contrastive_examples() {
        assert_eq!(contrastive_loss(1.0, 1, 0.5).unwrap(), 0.0);
        assert_eq!(contrastive_loss(0.3, -1, 0.5).unwrap(), 0.0);
        assert!((contrastive_loss(0.9f64, -1, 0.5).unwrap() - 0.4).abs() < 1e-15);
        assert_eq!(contrastive_loss(0.5, -1, 0.5).unwrap(), 0.0);
        assert_eq!(contrastive_loss(0.5, 0, 0.5), Err(LearnError::BadLabel(0)));
        assert_eq!(contrastive_loss(0.5, 2, 0.5), Err(LearnError::BadLabel(2)));
    }

    proptest! {
        #[test]
        fn losses_are_nonnegative(a in 0.0f64..1.0, yhat in -1.0f64..=1.0, m in 0.0f64..1.0) {
            let p = row(&[a, 1.0 - a]);
            prop_assert!(cross_entropy(&p, &row(&[1.0, 0.0])).unwrap() >= 0.0);
            prop_assert!(cross_entropy(&p, &row(&[0.0, 1.0])).unwrap() >= 0.0);
            prop_assert!(contrastive_loss(yhat, 1, m).unwrap() >= 0.0);
            prop_assert!(contrastive_loss(yhat, -1, m).unwrap() >= 0.0);
        }

        #[test]
        fn contrastive_is_continuous_at_margin(m in 0.0f64..1.0, d in 1e-9f64..1e-6) {
            prop_assert_eq!(contrastive_loss(m, -1, m).unwrap(), 0.0);
            prop_assert!(contrastive_loss(m + d, -1, m).unwrap() <= d + 1e-15);
        }

        #[test]
        fn tape_contrastive_matches(yhat in -1.0f64..=1.0, pos in any::<bool>()) {
            let y = if pos { 1 } else { -1 };
            let mut tape = Tape::new();
            let v = tape.input(Matrix::filled(1, 1, yhat)).unwrap();
            let l = contrastive_loss_on_tape(&mut tape, v, y, 0.5).unwrap();
            prop_assert!((tape.value(l)[(0, 0)] - contrastive_loss(yhat, y, 0.5).unwrap()).abs() < 1e-15);
        }
    }
}
