//! Numeric traits shared by the grid, field and sparse layers.

use std::fmt::{Debug, Display, LowerExp};
use std::iter::Sum;
use std::ops::{AddAssign, DivAssign, MulAssign, Neg, SubAssign};

use num_complex::Complex;
use num_traits::{Float, FloatConst, FromPrimitive, NumAssign};

/// Real floating-point type used for coordinates, weights and norms.
pub trait Real:
    Float
    + FloatConst
    + FromPrimitive
    + NumAssign
    + Sum
    + Default
    + Debug
    + Display
    + LowerExp
    + Send
    + Sync
    + 'static
{
    /// Lossy conversion from an `f64` literal.
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable")
    }

    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Field element for sparse matrices: real or complex.
pub trait Scalar:
    Copy
    + PartialEq
    + Default
    + Debug
    + Send
    + Sync
    + NumAssign
    + AddAssign
    + SubAssign
    + MulAssign
    + DivAssign
    + Neg<Output = Self>
    + Sum
    + 'static
{
    type Real: Real;

    fn from_real(r: Self::Real) -> Self;
    fn modulus(self) -> Self::Real;
    fn modulus_sqr(self) -> Self::Real;
    fn conj(self) -> Self;
    fn is_finite(self) -> bool;
}

macro_rules! real_scalar {
    ($t:ty) => {
        impl Scalar for $t {
            type Real = $t;

            fn from_real(r: $t) -> Self {
                r
            }
            fn modulus(self) -> $t {
                self.abs()
            }
            fn modulus_sqr(self) -> $t {
                self * self
            }
            fn conj(self) -> Self {
                self
            }
            fn is_finite(self) -> bool {
                <$t>::is_finite(self)
            }
        }
    };
}

macro_rules! complex_scalar {
    ($t:ty) => {
        impl Scalar for Complex<$t> {
            type Real = $t;

            fn from_real(r: $t) -> Self {
                Complex::new(r, 0.0)
            }
            fn modulus(self) -> $t {
                self.norm()
            }
            fn modulus_sqr(self) -> $t {
                self.norm_sqr()
            }
            fn conj(self) -> Self {
                Complex::conj(&self)
            }
            fn is_finite(self) -> bool {
                self.re.is_finite() && self.im.is_finite()
            }
        }
    };
}

real_scalar!(f32);
real_scalar!(f64);
complex_scalar!(f32);
complex_scalar!(f64);

/// Euclidean norm of a slice.
pub fn norm2<S: Scalar>(v: &[S]) -> S::Real {
    v.iter().map(|x| x.modulus_sqr()).sum::<S::Real>().sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn complex_modulus_and_conj() {
        let z = Complex::new(3.0f64, -4.0);
        assert_eq!(z.modulus(), 5.0);
        assert_eq!(Scalar::conj(z), Complex::new(3.0, 4.0));
        assert_eq!(norm2(&[z, Complex::new(0.0, 0.0)]), 5.0);
        assert!(!Scalar::is_finite(Complex::new(f32::NAN, 0.0)));
    }
}
