//! Scalar abstraction shared by the floating and exact matrix realizations.
//!
//! Every tower operation (embedding, diagonal compression, traces, norms,
//! rotation kernels) is written against [`Scalar`], so the same code runs on
//! `Complex64` for numerics and on [`crate::exact::QuadExtComplex`] for
//! zero-rounding verification.

use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64;

/// The real value type underlying a [`Scalar`]: carries squared magnitudes,
/// norms and traces of self-adjoint data.
pub trait RealScalar:
    Clone + PartialEq + PartialOrd + Add<Output = Self> + Sub<Output = Self>
{
    fn zero() -> Self;

    /// Exact scaling by `2^-k` (always exact for dyadic denominators).
    fn div_pow2(&self, k: u32) -> Self;
}

impl RealScalar for f64 {
    fn zero() -> Self {
        0.0
    }

    fn div_pow2(&self, k: u32) -> Self {
        self * 0.5f64.powi(k as i32)
    }
}

/// A complex-like scalar with conjugation and squared modulus.
pub trait Scalar:
    Clone
    + PartialEq
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Neg<Output = Self>
{
    type Real: RealScalar;

    fn zero() -> Self;
    fn one() -> Self;
    fn conj(&self) -> Self;
    fn abs_sq(&self) -> Self::Real;

    /// The scalar `1/sqrt(2)` in this realization.
    fn inv_sqrt2() -> Self;

    /// Exact scaling by `2^-k`.
    fn div_pow2(&self, k: u32) -> Self;

    fn is_zero(&self) -> bool {
        *self == Self::zero()
    }
}

impl Scalar for Complex64 {
    type Real = f64;

    fn zero() -> Self {
        Complex64::new(0.0, 0.0)
    }

    fn one() -> Self {
        Complex64::new(1.0, 0.0)
    }

    fn conj(&self) -> Self {
        Complex64::new(self.re, -self.im)
    }

    fn abs_sq(&self) -> f64 {
        self.re * self.re + self.im * self.im
    }

    fn inv_sqrt2() -> Self {
        Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0)
    }

    fn div_pow2(&self, k: u32) -> Self {
        let s = 0.5f64.powi(k as i32);
        Complex64::new(self.re * s, self.im * s)
    }
}
