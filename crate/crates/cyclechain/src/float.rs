//! Scalar abstraction: every numerical routine in this crate is generic over
//! a floating point type `F` so the same code runs in `f32` or `f64`.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float as NumFloat, FloatConst, FromPrimitive, NumAssign};

/// Bundle of floating point capabilities required by the library.
///
/// Implemented for `f32` and `f64`. The crate-root type aliases fix `f64`,
/// which is what the CLI and the file formats use.
pub trait Float:
    NumFloat
    + FloatConst
    + FromPrimitive
    + NumAssign
    + Debug
    + Display
    + Sum
    + Send
    + Sync
    + 'static
{
    /// Convert an `f64` constant into `F`, rounding if necessary.
    fn cast(x: f64) -> Self {
        Self::from_f64(x).expect("f64 constant must convert to the scalar type")
    }

    /// Convert a grid size or index into `F`.
    ///
    /// Sizes in this crate are far below 2^53, so the conversion is exact
    /// for `f64` and correctly rounded for `f32`.
    fn from_count(n: usize) -> Self {
        Self::cast(n as f64)
    }
}

impl Float for f32 {}
impl Float for f64 {}
