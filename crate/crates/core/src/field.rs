//! Scalar abstraction so grid fields can hold either real or complex values.

use core::fmt::Debug;
use core::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64;

/// Real or complex scalar on which grid operations are generic.
pub trait Field:
    Copy
    + Debug
    + PartialEq
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Neg<Output = Self>
{
    const ZERO: Self;
    const ONE: Self;

    fn from_re(x: f64) -> Self;
    /// Multiplication by a real scalar.
    fn scale(self, a: f64) -> Self;
    /// Absolute value / complex modulus.
    fn modulus(self) -> f64;
    fn conj(self) -> Self;
    fn is_finite(self) -> bool;
}

impl Field for f64 {
    const ZERO: Self = 0.0;
    const ONE: Self = 1.0;

    fn from_re(x: f64) -> Self {
        x
    }

    fn scale(self, a: f64) -> Self {
        self * a
    }

    fn modulus(self) -> f64 {
        libm::fabs(self)
    }

    fn conj(self) -> Self {
        self
    }

    fn is_finite(self) -> bool {
        f64::is_finite(self)
    }
}

impl Field for Complex64 {
    const ZERO: Self = Complex64::new(0.0, 0.0);
    const ONE: Self = Complex64::new(1.0, 0.0);

    fn from_re(x: f64) -> Self {
        Complex64::new(x, 0.0)
    }

    fn scale(self, a: f64) -> Self {
        Complex64::new(self.re * a, self.im * a)
    }

    fn modulus(self) -> f64 {
        libm::hypot(self.re, self.im)
    }

    fn conj(self) -> Self {
        Complex64::new(self.re, -self.im)
    }

    fn is_finite(self) -> bool {
        self.re.is_finite() && self.im.is_finite()
    }
}
