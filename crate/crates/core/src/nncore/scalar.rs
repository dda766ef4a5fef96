use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Floating point element type used by every numeric routine in the crate.
///
/// Implemented for `f32` and `f64`. The training pipeline and checkpoint
/// format are calibrated for `f64`; `f32` is supported for inference and
/// experimentation.
pub trait Scalar:
    Float + FromPrimitive + ToPrimitive + Debug + Display + Default + Sum + Send + Sync + 'static
{
    /// Converts an `f64` constant into this scalar type.
    fn lit(value: f64) -> Self {
        Self::from_f64(value).expect("f64 constant representable in scalar type")
    }

    fn as_f64(self) -> f64 {
        self.to_f64().expect("scalar converts to f64")
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}
