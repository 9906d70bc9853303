//! Scalar types usable as matrix entries in the coefficient rings.
//!
//! `f64` is the working precision. [`Wide`] is a double-double type used
//! where cancellation in products of large inverse-metric blocks would
//! otherwise swamp tolerances near `1e-10`.

use std::fmt::Debug;
use std::ops::Neg;

use nalgebra::{ClosedAddAssign, ClosedMulAssign, ClosedSubAssign, Scalar};
use num_traits::{One, Zero};

pub use twofloat::TwoFloat as Wide;

pub trait Real:
    Scalar
    + Copy
    + Debug
    + Zero
    + One
    + ClosedAddAssign
    + ClosedSubAssign
    + ClosedMulAssign
    + Neg<Output = Self>
    + Send
    + Sync
{
    fn from_f64(x: f64) -> Self;
    fn to_f64(self) -> f64;
}

impl Real for f64 {
    #[inline]
    fn from_f64(x: f64) -> Self {
        x
    }
    #[inline]
    fn to_f64(self) -> f64 {
        self
    }
}

impl Real for Wide {
    #[inline]
    fn from_f64(x: f64) -> Self {
        Wide::from(x)
    }
    #[inline]
    fn to_f64(self) -> f64 {
        f64::from(self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wide_keeps_bits_f64_drops() {
        let big = 1.0e17_f64;
        let w = Wide::from_f64(big) + Wide::from_f64(1.0) - Wide::from_f64(big);
        assert_eq!(w.to_f64(), 1.0);
        assert_eq!(big + 1.0 - big, 0.0);
    }
}
