//! Real scalar abstraction shared by every numerical kernel.

use std::fmt::{Debug, Display, LowerExp};

use num_complex::Complex;
use num_traits::{Float, FloatConst, FromPrimitive, NumAssign, ToPrimitive};

use crate::double_double::DoubleDouble;

/// Real field used for matrix entries (through `Complex<T>`), parameters
/// and tolerances.
///
/// The unit roundoff is carried by [`Real::unit_roundoff`] rather than
/// `Float::epsilon`, whose meaning varies across extended-precision crates.
pub trait Real:
    Float
    + FloatConst
    + NumAssign
    + FromPrimitive
    + ToPrimitive
    + Default
    + Debug
    + Display
    + LowerExp
    + Send
    + Sync
    + 'static
{
    /// Distance from 1.0 to the next representable value.
    fn unit_roundoff() -> Self;

    /// Bit pattern identifying the value exactly; used as a cache key.
    fn key_bits(self) -> (u64, u64);

    /// Converts an `f64` literal. Exact for every type in this crate.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal must convert")
    }

    #[inline]
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Real for f64 {
    fn unit_roundoff() -> Self {
        f64::EPSILON
    }

    fn key_bits(self) -> (u64, u64) {
        (self.to_bits(), 0)
    }
}

impl Real for f32 {
    fn unit_roundoff() -> Self {
        f32::EPSILON
    }

    fn key_bits(self) -> (u64, u64) {
        (u64::from(self.to_bits()), 0)
    }
}

impl Real for DoubleDouble {
    fn unit_roundoff() -> Self {
        <DoubleDouble as Float>::epsilon()
    }

    fn key_bits(self) -> (u64, u64) {
        (self.hi().to_bits(), self.lo().to_bits())
    }
}

/// Shorthand for building a complex number from two reals.
#[inline]
pub fn cplx<T: Real>(re: T, im: T) -> Complex<T> {
    Complex::new(re, im)
}

/// Complex number with zero imaginary part.
#[inline]
pub fn re<T: Real>(x: T) -> Complex<T> {
    Complex::new(x, T::zero())
}

/// Principal branch of `sqrt(1 - t^2)`: real on `|t| <= 1`, `i*sqrt(t^2 - 1)` beyond.
pub fn sqrt_one_minus_sq<T: Real>(t: T) -> Complex<T> {
    let d = T::one() - t * t;
    if d >= T::zero() {
        re(d.sqrt())
    } else {
        cplx(T::zero(), (-d).sqrt())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn branch_is_imaginary_beyond_one() {
        let s = sqrt_one_minus_sq(2.0_f64);
        assert_eq!(s.re, 0.0);
        assert!((s.im - 3.0_f64.sqrt()).abs() < 1e-15);
        assert_eq!(sqrt_one_minus_sq(1.0_f64), re(0.0));
        assert_eq!(sqrt_one_minus_sq(0.0_f64), re(1.0));
    }

    #[test]
    fn double_double_roundoff_is_tiny() {
        let u = DoubleDouble::unit_roundoff();
        assert!(u > DoubleDouble::lit(0.0) && u < DoubleDouble::lit(1e-30));
        let third = DoubleDouble::lit(1.0) / DoubleDouble::lit(3.0);
        let err = (third * DoubleDouble::lit(3.0) - DoubleDouble::lit(1.0)).abs();
        assert!(err <= u * DoubleDouble::lit(4.0));
    }
}
