//! Double-double real built on `twofloat`.
//!
//! `twofloat` 0.8 computes the reciprocal residual `1 - b*(1/b)` without a
//! fused multiply-add, so its quotient is only f64-accurate. This wrapper
//! replaces division (and everything routed through it) with long division
//! on top of the exact `TwoFloat` products, and forwards the rest.

use std::cmp::Ordering;
use std::fmt;
use std::num::FpCategory;
use std::ops::{
    Add, AddAssign, Div, DivAssign, Mul, MulAssign, Neg, Rem, RemAssign, Sub, SubAssign,
};

use num_traits::{Float, FloatConst, FromPrimitive, Num, NumCast, One, ToPrimitive, Zero};
use twofloat::TwoFloat;

/// Unevaluated sum `hi + lo` of two f64 values, about 106 significant bits.
#[derive(Clone, Copy, Default, Debug, PartialEq)]
pub struct DoubleDouble(TwoFloat);

impl DoubleDouble {
    pub fn new(hi: f64) -> Self {
        Self(<TwoFloat as From<f64>>::from(hi))
    }

    pub fn hi(self) -> f64 {
        self.0.hi()
    }

    pub fn lo(self) -> f64 {
        self.0.lo()
    }

    pub fn inner(self) -> TwoFloat {
        self.0
    }
}

impl From<f64> for DoubleDouble {
    fn from(x: f64) -> Self {
        Self::new(x)
    }
}

impl From<TwoFloat> for DoubleDouble {
    fn from(x: TwoFloat) -> Self {
        Self(x)
    }
}

impl PartialOrd for DoubleDouble {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        self.0.partial_cmp(&other.0)
    }
}

fn quotient(a: TwoFloat, b: TwoFloat) -> TwoFloat {
    let q1 = a.hi() / b.hi();
    if !q1.is_finite() || q1 == 0.0 {
        return <TwoFloat as From<f64>>::from(q1);
    }
    let r = a - b * q1;
    let q2 = r.hi() / b.hi();
    let r = r - b * q2;
    let q3 = r.hi() / b.hi();
    TwoFloat::new_add(q1, q2) + q3
}

impl Neg for DoubleDouble {
    type Output = Self;
    fn neg(self) -> Self {
        Self(-self.0)
    }
}

macro_rules! forward_binop {
    ($tr:ident, $f:ident, $atr:ident, $af:ident, $body:expr) => {
        impl $tr for DoubleDouble {
            type Output = Self;
            #[inline]
            fn $f(self, rhs: Self) -> Self {
                Self($body(self.0, rhs.0))
            }
        }
        impl $atr for DoubleDouble {
            #[inline]
            fn $af(&mut self, rhs: Self) {
                *self = $tr::$f(*self, rhs);
            }
        }
    };
}

forward_binop!(Add, add, AddAssign, add_assign, |a: TwoFloat, b| a + b);
forward_binop!(Sub, sub, SubAssign, sub_assign, |a: TwoFloat, b| a - b);
forward_binop!(Mul, mul, MulAssign, mul_assign, |a: TwoFloat, b| a * b);
forward_binop!(Div, div, DivAssign, div_assign, quotient);
forward_binop!(
    Rem,
    rem,
    RemAssign,
    rem_assign,
    |a: TwoFloat, b: TwoFloat| { a - quotient(a, b).trunc() * b }
);

impl Zero for DoubleDouble {
    fn zero() -> Self {
        Self(TwoFloat::zero())
    }
    fn is_zero(&self) -> bool {
        self.0.is_zero()
    }
}

impl One for DoubleDouble {
    fn one() -> Self {
        Self(TwoFloat::one())
    }
}

impl Num for DoubleDouble {
    type FromStrRadixErr = <TwoFloat as Num>::FromStrRadixErr;
    fn from_str_radix(s: &str, radix: u32) -> Result<Self, Self::FromStrRadixErr> {
        TwoFloat::from_str_radix(s, radix).map(Self)
    }
}

impl ToPrimitive for DoubleDouble {
    fn to_i64(&self) -> Option<i64> {
        self.0.to_i64()
    }
    fn to_u64(&self) -> Option<u64> {
        self.0.to_u64()
    }
    fn to_f64(&self) -> Option<f64> {
        self.0.to_f64()
    }
}

impl FromPrimitive for DoubleDouble {
    fn from_i64(n: i64) -> Option<Self> {
        TwoFloat::from_i64(n).map(Self)
    }
    fn from_u64(n: u64) -> Option<Self> {
        TwoFloat::from_u64(n).map(Self)
    }
    fn from_f64(n: f64) -> Option<Self> {
        Some(Self::new(n))
    }
}

impl NumCast for DoubleDouble {
    fn from<N: ToPrimitive>(n: N) -> Option<Self> {
        <TwoFloat as NumCast>::from(n).map(Self)
    }
}

impl fmt::Display for DoubleDouble {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(&self.0, f)
    }
}

impl fmt::LowerExp for DoubleDouble {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::LowerExp::fmt(&self.0, f)
    }
}

macro_rules! consts {
    ($($c:ident),*) => {
        $(fn $c() -> Self { Self(<TwoFloat as FloatConst>::$c()) })*
    };
}

impl FloatConst for DoubleDouble {
    consts!(
        E,
        FRAC_1_PI,
        FRAC_1_SQRT_2,
        FRAC_2_PI,
        FRAC_2_SQRT_PI,
        FRAC_PI_2,
        FRAC_PI_3,
        FRAC_PI_4,
        FRAC_PI_6,
        FRAC_PI_8,
        LN_10,
        LN_2,
        LOG10_E,
        LOG2_E,
        PI,
        SQRT_2,
        TAU,
        LOG10_2,
        LOG2_10
    );
}

macro_rules! nullary {
    ($($f:ident),*) => {
        $(fn $f() -> Self { Self(<TwoFloat as Float>::$f()) })*
    };
}

macro_rules! unary {
    ($($f:ident),*) => {
        $(fn $f(self) -> Self { Self(Float::$f(self.0)) })*
    };
}

macro_rules! binary {
    ($($f:ident),*) => {
        $(fn $f(self, other: Self) -> Self { Self(Float::$f(self.0, other.0)) })*
    };
}

macro_rules! predicate {
    ($($f:ident),*) => {
        $(fn $f(self) -> bool { Float::$f(self.0) })*
    };
}

impl Float for DoubleDouble {
    nullary!(
        nan,
        infinity,
        neg_infinity,
        neg_zero,
        min_value,
        min_positive_value,
        max_value
    );
    unary!(
        floor, ceil, round, trunc, fract, abs, signum, sqrt, exp, exp2, ln, log2, log10, cbrt, sin,
        cos, tan, asin, acos, atan, exp_m1, ln_1p, sinh, cosh, tanh, asinh, acosh, atanh
    );
    binary!(powf, log, max, min, abs_sub, hypot, atan2);
    predicate!(
        is_nan,
        is_infinite,
        is_finite,
        is_normal,
        is_sign_positive,
        is_sign_negative
    );

    fn epsilon() -> Self {
        // 2^-104
        Self::new(4.930380657631324e-32)
    }

    fn classify(self) -> FpCategory {
        self.0.classify()
    }

    fn mul_add(self, a: Self, b: Self) -> Self {
        self * a + b
    }

    fn recip(self) -> Self {
        Self::one() / self
    }

    fn powi(self, n: i32) -> Self {
        let mut base = self;
        let mut e = n.unsigned_abs();
        let mut acc = Self::one();
        while e > 0 {
            if e & 1 == 1 {
                acc *= base;
            }
            base *= base;
            e >>= 1;
        }
        if n < 0 {
            acc.recip()
        } else {
            acc
        }
    }

    fn sin_cos(self) -> (Self, Self) {
        let (s, c) = self.0.sin_cos();
        (Self(s), Self(c))
    }

    /// Decodes the high word only; the low word is dropped.
    fn integer_decode(self) -> (u64, i16, i8) {
        Float::integer_decode(self.0.hi())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn division_keeps_low_word() {
        let third = DoubleDouble::one() / DoubleDouble::new(3.0);
        let err = (third * DoubleDouble::new(3.0) - DoubleDouble::one()).abs();
        assert!(err <= DoubleDouble::epsilon());
        assert!(third.lo() != 0.0);
    }

    #[test]
    fn sqrt_and_powi() {
        let two = DoubleDouble::new(2.0);
        let r = two.sqrt();
        assert!((r * r - two).abs() <= DoubleDouble::epsilon() * DoubleDouble::new(4.0));
        let inv = two.powi(-3);
        assert_eq!(inv, DoubleDouble::new(0.125));
        assert_eq!(
            DoubleDouble::new(7.0) % DoubleDouble::new(2.0),
            DoubleDouble::one()
        );
    }
}
