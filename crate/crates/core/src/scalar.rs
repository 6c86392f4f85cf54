use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};

/// Real scalar the Fourier layer is generic over: `f32` or `f64`.
pub trait Scalar:
    Float + FloatConst + FromPrimitive + ToPrimitive + Sum + Send + Sync + Debug + Display + 'static
{
    /// Converts an `f64` literal, which every scalar can represent approximately.
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal converts to every scalar")
    }

    fn from_count(n: usize) -> Self {
        Self::from_usize(n).expect("count converts to every scalar")
    }

    fn as_f64(self) -> f64 {
        self.to_f64().expect("scalar converts to f64")
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}
