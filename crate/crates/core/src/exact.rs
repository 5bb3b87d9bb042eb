//! Exact arithmetic in `Q(sqrt 2)` and its complexification.
//!
//! This is the verification engine for the two closed-form rotation-distance
//! identities and for the contraction constant `lambda = 5/4 - sqrt(2)/2`:
//! every comparison here is decided by integer arithmetic, with no rounding
//! anywhere.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use rand::Rng;

use crate::error::Result;
use crate::scalar::{RealScalar, Scalar};
use crate::tower::{Level, MatrixAtLevel};
use crate::walsh::{conjugate_by_w, WalshIndex};

/// An element `a + b*sqrt(2)` with rational `a`, `b` in reduced form.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QuadExt {
    a: BigRational,
    b: BigRational,
}

impl QuadExt {
    pub fn new(a: BigRational, b: BigRational) -> Self {
        QuadExt { a, b }
    }

    pub fn from_int(n: i64) -> Self {
        QuadExt {
            a: BigRational::from_integer(BigInt::from(n)),
            b: BigRational::zero(),
        }
    }

    /// The rational `num/den` (no sqrt(2) part). Panics on zero denominator.
    pub fn rational(num: i64, den: i64) -> Self {
        QuadExt {
            a: BigRational::new(BigInt::from(num), BigInt::from(den)),
            b: BigRational::zero(),
        }
    }

    /// The element `(num/den) * sqrt(2)`.
    pub fn sqrt2_times(num: i64, den: i64) -> Self {
        QuadExt {
            b: BigRational::new(BigInt::from(num), BigInt::from(den)),
            a: BigRational::zero(),
        }
    }

    pub fn rational_part(&self) -> &BigRational {
        &self.a
    }

    pub fn sqrt2_part(&self) -> &BigRational {
        &self.b
    }

    /// Exact sign of `a + b*sqrt(2)`, decided by sign analysis of `a`, `b`
    /// and the integer comparison `a^2` vs `2 b^2`.
    pub fn sign(&self) -> Ordering {
        let (sa, sb) = (
            self.a.cmp(&BigRational::zero()),
            self.b.cmp(&BigRational::zero()),
        );
        match (sa, sb) {
            (Ordering::Equal, Ordering::Equal) => Ordering::Equal,
            (Ordering::Less | Ordering::Equal, Ordering::Less | Ordering::Equal) => Ordering::Less,
            (Ordering::Greater | Ordering::Equal, Ordering::Greater | Ordering::Equal) => {
                Ordering::Greater
            }
            // Mixed signs: |a| vs |b|*sqrt(2); equality is impossible in Q.
            (Ordering::Greater, Ordering::Less) | (Ordering::Less, Ordering::Greater) => {
                let a2 = &self.a * &self.a;
                let two_b2 = BigRational::from_integer(BigInt::from(2)) * &self.b * &self.b;
                let cmp = a2.cmp(&two_b2);
                if sa == Ordering::Greater {
                    cmp
                } else {
                    cmp.reverse()
                }
            }
        }
    }

    pub fn is_negative(&self) -> bool {
        self.sign() == Ordering::Less
    }

    /// Approximate double value, for reporting only.
    pub fn to_f64(&self) -> f64 {
        rational_to_f64(&self.a) + std::f64::consts::SQRT_2 * rational_to_f64(&self.b)
    }

    /// The contraction constant `lambda = (1/2)(1 + 3/2 - sqrt 2) = 5/4 - (1/2) sqrt 2`.
    pub fn lambda() -> Self {
        QuadExt {
            a: BigRational::new(BigInt::from(5), BigInt::from(4)),
            b: BigRational::new(BigInt::from(-1), BigInt::from(2)),
        }
    }

    /// `4 - 2 sqrt 2`, the off-diagonal coefficient of the distance identity.
    pub fn four_minus_two_sqrt2() -> Self {
        QuadExt {
            a: BigRational::from_integer(BigInt::from(4)),
            b: BigRational::from_integer(BigInt::from(-2)),
        }
    }

    /// `5/2 - sqrt 2`, the diagonal-gap coefficient after two rotations.
    pub fn five_half_minus_sqrt2() -> Self {
        QuadExt {
            a: BigRational::new(BigInt::from(5), BigInt::from(2)),
            b: BigRational::from_integer(BigInt::from(-1)),
        }
    }
}

fn rational_to_f64(r: &BigRational) -> f64 {
    let num = r.numer().to_string().parse::<f64>().unwrap_or(f64::NAN);
    let den = r.denom().to_string().parse::<f64>().unwrap_or(f64::NAN);
    num / den
}

impl Add for QuadExt {
    type Output = QuadExt;
    fn add(self, rhs: QuadExt) -> QuadExt {
        QuadExt {
            a: self.a + rhs.a,
            b: self.b + rhs.b,
        }
    }
}

impl Sub for QuadExt {
    type Output = QuadExt;
    fn sub(self, rhs: QuadExt) -> QuadExt {
        QuadExt {
            a: self.a - rhs.a,
            b: self.b - rhs.b,
        }
    }
}

impl Mul for QuadExt {
    type Output = QuadExt;
    fn mul(self, rhs: QuadExt) -> QuadExt {
        // (a + b sqrt2)(c + d sqrt2) = (ac + 2bd) + (ad + bc) sqrt2
        let two = BigRational::from_integer(BigInt::from(2));
        QuadExt {
            a: &self.a * &rhs.a + two * &self.b * &rhs.b,
            b: &self.a * &rhs.b + &self.b * &rhs.a,
        }
    }
}

impl Neg for QuadExt {
    type Output = QuadExt;
    fn neg(self) -> QuadExt {
        QuadExt {
            a: -self.a,
            b: -self.b,
        }
    }
}

impl PartialOrd for QuadExt {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for QuadExt {
    fn cmp(&self, other: &Self) -> Ordering {
        (self.clone() - other.clone()).sign()
    }
}

impl RealScalar for QuadExt {
    fn zero() -> Self {
        QuadExt {
            a: BigRational::zero(),
            b: BigRational::zero(),
        }
    }

    fn div_pow2(&self, k: u32) -> Self {
        let p = BigRational::new(BigInt::one(), BigInt::from(1i64 << k));
        QuadExt {
            a: &self.a * &p,
            b: &self.b * &p,
        }
    }
}

impl fmt::Display for QuadExt {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.b.is_zero() {
            return write!(f, "{}", self.a);
        }
        if self.a.is_zero() {
            return write!(f, "{}*sqrt2", self.b);
        }
        if self.b.is_negative() {
            write!(f, "{} - {}*sqrt2", self.a, -self.b.clone())
        } else {
            write!(f, "{} + {}*sqrt2", self.a, self.b)
        }
    }
}

/// An exact complex scalar `re + i*im` with `re`, `im` in `Q(sqrt 2)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QuadExtComplex {
    pub re: QuadExt,
    pub im: QuadExt,
}

impl QuadExtComplex {
    pub fn new(re: QuadExt, im: QuadExt) -> Self {
        QuadExtComplex { re, im }
    }

    pub fn real(re: QuadExt) -> Self {
        QuadExtComplex {
            re,
            im: RealScalar::zero(),
        }
    }

    pub fn from_int(n: i64) -> Self {
        Self::real(QuadExt::from_int(n))
    }
}

impl Add for QuadExtComplex {
    type Output = QuadExtComplex;
    fn add(self, rhs: QuadExtComplex) -> QuadExtComplex {
        QuadExtComplex {
            re: self.re + rhs.re,
            im: self.im + rhs.im,
        }
    }
}

impl Sub for QuadExtComplex {
    type Output = QuadExtComplex;
    fn sub(self, rhs: QuadExtComplex) -> QuadExtComplex {
        QuadExtComplex {
            re: self.re - rhs.re,
            im: self.im - rhs.im,
        }
    }
}

impl Mul for QuadExtComplex {
    type Output = QuadExtComplex;
    fn mul(self, rhs: QuadExtComplex) -> QuadExtComplex {
        QuadExtComplex {
            re: self.re.clone() * rhs.re.clone() - self.im.clone() * rhs.im.clone(),
            im: self.re * rhs.im + self.im * rhs.re,
        }
    }
}

impl Neg for QuadExtComplex {
    type Output = QuadExtComplex;
    fn neg(self) -> QuadExtComplex {
        QuadExtComplex {
            re: -self.re,
            im: -self.im,
        }
    }
}

impl Scalar for QuadExtComplex {
    type Real = QuadExt;

    fn zero() -> Self {
        QuadExtComplex {
            re: RealScalar::zero(),
            im: RealScalar::zero(),
        }
    }

    fn one() -> Self {
        QuadExtComplex {
            re: QuadExt::from_int(1),
            im: RealScalar::zero(),
        }
    }

    fn conj(&self) -> Self {
        QuadExtComplex {
            re: self.re.clone(),
            im: -self.im.clone(),
        }
    }

    fn abs_sq(&self) -> QuadExt {
        self.re.clone() * self.re.clone() + self.im.clone() * self.im.clone()
    }

    fn inv_sqrt2() -> Self {
        // 1/sqrt(2) = (1/2) sqrt(2), staying inside Q(sqrt 2).
        QuadExtComplex {
            re: QuadExt::sqrt2_times(1, 2),
            im: RealScalar::zero(),
        }
    }

    fn div_pow2(&self, k: u32) -> Self {
        QuadExtComplex {
            re: self.re.div_pow2(k),
            im: self.im.div_pow2(k),
        }
    }
}

/// The exact matrix realization.
pub type QMatrix = MatrixAtLevel<QuadExtComplex>;

/// Both exact sides of a verified identity, for reporting.
#[derive(Debug, Clone, PartialEq)]
pub struct ExactSides {
    pub lhs: QuadExt,
    pub rhs: QuadExt,
}

impl ExactSides {
    pub fn holds(&self) -> bool {
        self.lhs == self.rhs
    }
}

fn offdiag_and_gap(b: &QMatrix) -> (QuadExt, QuadExt) {
    let s = b.get(1, 2).abs_sq() + b.get(2, 1).abs_sq();
    let d = (b.get(1, 1).clone() - b.get(2, 2).clone()).abs_sq();
    (s, d)
}

/// One rotation step in exact arithmetic: `B(2) = W_1 (embedded B) W_1^*`.
pub fn rotate_once_exact(b: &QMatrix) -> Result<QMatrix> {
    conjugate_by_w(&b.embed()?, WalshIndex::new(1)?)
}

/// Checks `fro^2(B(2) - embedded B) = (4 - 2 sqrt2)(|b12|^2 + |b21|^2) + |b11 - b22|^2`
/// with exact equality in `Q(sqrt 2)`.
pub fn eq5_sides(b: &QMatrix) -> Result<ExactSides> {
    let embedded = b.embed()?;
    let b2 = conjugate_by_w(&embedded, WalshIndex::new(1)?)?;
    let lhs = b2.sub(&embedded)?.fro_sq();
    let (s, d) = offdiag_and_gap(b);
    let rhs = QuadExt::four_minus_two_sqrt2() * s + d;
    Ok(ExactSides { lhs, rhs })
}

pub fn eq5_exact_check(b: &QMatrix) -> Result<bool> {
    Ok(eq5_sides(b)?.holds())
}

/// Checks `(1/2) fro^2(B(3) - embedded B(2))` against
/// `(1/2)[(4 - 2 sqrt2)(|b12|^2 + |b21|^2) + (5/2 - sqrt2)|b11 - b22|^2]`, exactly.
pub fn eq6_sides(b: &QMatrix) -> Result<ExactSides> {
    let b2 = rotate_once_exact(b)?;
    let embedded2 = b2.embed()?;
    let b3 = conjugate_by_w(&embedded2, WalshIndex::new(2)?)?;
    let lhs = b3.sub(&embedded2)?.fro_sq().div_pow2(1);
    let (s, d) = offdiag_and_gap(b);
    let rhs =
        (QuadExt::four_minus_two_sqrt2() * s + QuadExt::five_half_minus_sqrt2() * d).div_pow2(1);
    Ok(ExactSides { lhs, rhs })
}

pub fn eq6_exact_check(b: &QMatrix) -> Result<bool> {
    Ok(eq6_sides(b)?.holds())
}

/// Exact form of the contraction bound for one seed: the step-distance ratio
/// numerator is at most `lambda` times the denominator, in the field order.
/// Returns `None` when the denominator vanishes (scalar-plus-diagonal seeds).
pub fn ratio_bound_holds(b: &QMatrix) -> Result<Option<bool>> {
    let five = eq5_sides(b)?;
    let six = eq6_sides(b)?;
    if five.lhs == RealScalar::zero() {
        return Ok(None);
    }
    let margin = QuadExt::lambda() * five.lhs - six.lhs;
    Ok(Some(!margin.is_negative()))
}

/// A random rational in `[-9, 9] / [1, 9]`.
fn random_rational<R: Rng>(rng: &mut R) -> BigRational {
    let num = rng.gen_range(-9i64..=9);
    let den = rng.gen_range(1i64..=9);
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

fn random_quad<R: Rng>(rng: &mut R) -> QuadExt {
    QuadExt::new(random_rational(rng), random_rational(rng))
}

/// A random 2x2 exact matrix with small rational heights (both the rational
/// and the sqrt-2 component of every entry are drawn).
pub fn random_exact_matrix<R: Rng>(rng: &mut R) -> QMatrix {
    let level = Level::new(1).expect("level 1 is always admissible");
    let mut m = QMatrix::zeros(level);
    for i in 1..=2 {
        for j in 1..=2 {
            m.set(
                i,
                j,
                QuadExtComplex::new(random_quad(rng), random_quad(rng)),
            );
        }
    }
    m
}
