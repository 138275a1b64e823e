//! Scalar abstraction so the numerical core works with either `f32` or `f64`.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Floating-point scalar used throughout the crate.
pub trait Scalar:
    Float + FromPrimitive + ToPrimitive + Sum + Debug + Display + Send + Sync + 'static
{
}

impl<T> Scalar for T where
    T: Float + FromPrimitive + ToPrimitive + Sum + Debug + Display + Send + Sync + 'static
{
}

/// Converts an `f64` constant into the working scalar type.
pub(crate) fn cast<T: Scalar>(v: f64) -> T {
    T::from_f64(v).expect("f64 constant must be representable")
}

/// Tolerance used when checking that probabilities sum to one.
///
/// 1e-9 for f64; widened to a few ulps for lower-precision scalars where 1e-9
/// is unreachable after arithmetic.
pub(crate) fn sum_tolerance<T: Scalar>() -> T {
    let base = cast::<T>(1e-9);
    let ulps = T::epsilon() * cast::<T>(32.0);
    if ulps > base {
        ulps
    } else {
        base
    }
}

/// Formats a scalar with 17 significant digits, enough to reconstruct an
/// `f64` bit-exactly.
pub(crate) fn format_scalar<T: Scalar>(v: T) -> String {
    format!("{:.16e}", v.to_f64().expect("scalar convertible to f64"))
}

/// Parses a scalar previously written by [`format_scalar`] (or any decimal).
pub(crate) fn parse_scalar<T: Scalar>(s: &str) -> Option<T> {
    s.trim().parse::<f64>().ok().and_then(T::from_f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn format_round_trips_f64_bits() {
        for &v in &[0.1, 1.0 / 3.0, 2.0_f64.powi(-40), 1.0, 0.0, -17.25] {
            let s = format_scalar(v);
            let back: f64 = parse_scalar(&s).unwrap();
            assert_eq!(v.to_bits(), back.to_bits(), "{s}");
        }
    }

    #[test]
    fn tolerance_is_spec_value_for_f64() {
        assert_eq!(sum_tolerance::<f64>(), 1e-9);
    }
}
