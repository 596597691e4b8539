//! Scalar abstractions.
//!
//! Weights and accumulations are generic over [`Real`] (implemented for `f32`
//! and `f64`). The Calderón–Zygmund decomposition only needs an ordered field
//! with an absolute value, captured by [`Exact`]; it is satisfied by the
//! floating types and by `num_rational::Ratio<i64 | i128>`, which gives exact
//! reconstruction and mean-zero checks.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, Num, NumAssign, Signed, ToPrimitive};

/// Floating point scalar used for measure weights and Fourier values.
pub trait Real:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + NumAssign
    + Signed
    + Default
    + Sum
    + Debug
    + Display
    + Send
    + Sync
    + 'static
{
    /// Lossy conversion from `f64`.
    fn of(x: f64) -> Self {
        Self::from_f64(x).expect("f64 converts to every Real")
    }

    fn to64(self) -> f64 {
        self.to_f64().expect("Real converts to f64")
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Ordered field with absolute value; enough for stopping-time constructions.
pub trait Exact:
    Clone + PartialOrd + Num + Signed + FromPrimitive + ToPrimitive + Debug + Send + Sync
{
}

impl<T> Exact for T where
    T: Clone + PartialOrd + Num + Signed + FromPrimitive + ToPrimitive + Debug + Send + Sync
{
}
