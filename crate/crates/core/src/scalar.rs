//! Scalar abstraction shared by every numeric routine in the crate.
//!
//! All estimation code is written once against [`Scalar`] and instantiated
//! for `f32` and `f64`. Linear algebra goes through `nalgebra`, which is why
//! the trait builds on [`RealField`].

use nalgebra::RealField;
use num_traits::ToPrimitive;

/// Real floating point type usable by the estimators: `f32` or `f64`.
pub trait Scalar: RealField + Copy + ToPrimitive + Default {
    /// Converts an `f64` literal into the scalar type.
    #[inline]
    fn lit(x: f64) -> Self {
        nalgebra::convert(x)
    }

    #[inline]
    fn from_count(n: usize) -> Self {
        nalgebra::convert(n as f64)
    }

    /// Lossy conversion used for I/O and diagnostics.
    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    /// Machine epsilon of the type.
    fn eps() -> Self;

    fn infinity() -> Self;
}

impl Scalar for f32 {
    #[inline]
    fn eps() -> Self {
        f32::EPSILON
    }

    #[inline]
    fn infinity() -> Self {
        f32::INFINITY
    }
}

impl Scalar for f64 {
    #[inline]
    fn eps() -> Self {
        f64::EPSILON
    }

    #[inline]
    fn infinity() -> Self {
        f64::INFINITY
    }
}

/// Sum with a fixed left-to-right evaluation order.
#[inline]
pub(crate) fn sum<T: Scalar>(values: impl IntoIterator<Item = T>) -> T {
    values.into_iter().fold(T::zero(), |acc, v| acc + v)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn literals_round_trip() {
        assert_eq!(f64::lit(0.25), 0.25);
        assert_eq!(f32::lit(0.25), 0.25f32);
        assert_eq!(f64::from_count(7), 7.0);
        assert_eq!(1.5f32.as_f64(), 1.5);
    }
}
