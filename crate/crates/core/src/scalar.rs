//! Floating-point abstraction shared by the numeric kernels.
//!
//! Metrics, least squares, special functions, the LSTM and the fuzzy network are
//! written once against [`Scalar`] and instantiated for `f32` and `f64`. The
//! pipeline itself runs in `f64`; see the aliases at the crate root.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, ToPrimitive};
use serde::de::DeserializeOwned;
use serde::Serialize;

pub trait Scalar:
    Float
    + FromPrimitive
    + ToPrimitive
    + Default
    + Debug
    + Display
    + Sum
    + Send
    + Sync
    + Serialize
    + DeserializeOwned
    + 'static
{
    /// Lossy conversion from an `f64` literal.
    fn of(x: f64) -> Self;

    /// Widening conversion used when results leave the generic layer.
    fn to_f64_lossy(self) -> f64;

    /// Convergence tolerance appropriate for iterative series at this precision.
    fn series_tol() -> Self;
}

impl Scalar for f64 {
    #[inline]
    fn of(x: f64) -> Self {
        x
    }
    #[inline]
    fn to_f64_lossy(self) -> f64 {
        self
    }
    fn series_tol() -> Self {
        1e-15
    }
}

impl Scalar for f32 {
    #[inline]
    fn of(x: f64) -> Self {
        x as f32
    }
    #[inline]
    fn to_f64_lossy(self) -> f64 {
        self as f64
    }
    fn series_tol() -> Self {
        1e-7
    }
}

/// `n` as a scalar.
#[inline]
pub fn count<T: Scalar>(n: usize) -> T {
    T::of(n as f64)
}
