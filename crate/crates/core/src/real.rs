//! Scalar abstraction: the model arithmetic is written once, generic over
//! the floating-point type.

use num_traits::{Float, FloatConst, FromPrimitive};

/// Floating-point scalar the model is generic over: `f32` or `f64`.
///
/// The default tolerances baked into the contracts (quadrature 1e-10,
/// kernel mass 1e-12, ...) assume `f64`; `f32` instantiations work for the
/// algebraic paths but cannot meet those tolerances.
pub trait Real:
    Float
    + FloatConst
    + FromPrimitive
    + std::iter::Sum
    + std::fmt::Debug
    + std::fmt::Display
    + std::fmt::LowerExp
    + Send
    + Sync
    + 'static
{
    /// Shorthand for converting an `f64` literal into the scalar type.
    fn of(v: f64) -> Self {
        Self::from_f64(v).expect("finite f64 literal converts to any Real")
    }

    /// Lossy view as `f64`, for diagnostics and error messages.
    fn as_f64(self) -> f64 {
        num_traits::cast(self).expect("Real converts to f64")
    }

    fn from_count(n: usize) -> Self {
        Self::from_usize(n).expect("usize count converts to any Real")
    }
}

impl Real for f32 {}
impl Real for f64 {}
