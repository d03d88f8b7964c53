//! Scalar abstraction: every numerical routine in this crate is generic over a
//! floating-point type implementing [`Real`]. Concrete aliases for the common
//! instantiations live at the crate root.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_complex::Complex;
use num_traits::{Float, FloatConst, FromPrimitive, NumAssign, ToPrimitive};

/// Floating-point scalar usable as the real base field.
///
/// `f64` is the working type; `f32` is supported for quick, low-precision
/// runs. The bound set is what the eigensolvers, channel models and schedule
/// arithmetic actually need: ordinary float ops, named constants, conversion
/// from literals, and summation.
pub trait Real:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + NumAssign
    + Sum
    + Debug
    + Display
    + Send
    + Sync
    + 'static
{
}

impl Real for f32 {}
impl Real for f64 {}

/// Shorthand for converting an `f64` literal into the working scalar.
///
/// Panics only if the target type cannot represent any `f64` at all, which no
/// implementor of [`Real`] exhibits.
#[inline]
pub fn r<R: Real>(x: f64) -> R {
    R::from_f64(x).expect("f64 literal must convert into the scalar type")
}

/// Complex number over the working scalar.
pub type C<R> = Complex<R>;

/// `i` as a complex constant.
#[inline]
pub fn im<R: Real>() -> C<R> {
    Complex::new(R::zero(), R::one())
}

/// `exp(i * phi)` as a unit complex number.
#[inline]
pub fn cis<R: Real>(phi: R) -> C<R> {
    Complex::new(phi.cos(), phi.sin())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn literal_conversion_roundtrips() {
        let x: f64 = r::<f64>(0.125);
        assert_eq!(x, 0.125);
        let y: f32 = r::<f32>(0.5);
        assert_eq!(y, 0.5);
    }

    #[test]
    fn cis_is_unit_modulus() {
        let z = cis(1.234_f64);
        assert!((z.norm() - 1.0).abs() < 1e-15);
    }
}
