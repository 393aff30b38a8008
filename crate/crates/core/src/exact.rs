//! Exact arithmetic in the real quadratic field Q(√2).
//!
//! Every probability produced by real beam splitters at angles that are
//! multiples of π/8 lives in this field: cos², sin² and cos·sin of such
//! angles are of the form `a + b√2` with rational `a`, `b`. Working in the
//! field keeps the discrete eraser model free of rounding, so "zero" and
//! "equal" mean exactly that.

use std::cmp::Ordering;
use std::fmt;
use std::iter::Sum;
use std::ops::{Add, AddAssign, Div, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive, Zero};

/// An element `a + b√2` of Q(√2).
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct QSqrt2 {
    a: BigRational,
    b: BigRational,
}

fn ratio(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

impl QSqrt2 {
    pub fn new(a: BigRational, b: BigRational) -> Self {
        QSqrt2 { a, b }
    }

    /// `n/d + (m/e)√2`
    pub fn from_parts(n: i64, d: i64, m: i64, e: i64) -> Self {
        QSqrt2 {
            a: ratio(n, d),
            b: ratio(m, e),
        }
    }

    pub fn rational(n: i64, d: i64) -> Self {
        Self::from_parts(n, d, 0, 1)
    }

    pub fn sqrt2() -> Self {
        Self::from_parts(0, 1, 1, 1)
    }

    pub fn zero() -> Self {
        Self::rational(0, 1)
    }

    pub fn one() -> Self {
        Self::rational(1, 1)
    }

    pub fn rational_part(&self) -> &BigRational {
        &self.a
    }

    pub fn sqrt2_part(&self) -> &BigRational {
        &self.b
    }

    pub fn is_zero(&self) -> bool {
        self.a.is_zero() && self.b.is_zero()
    }

    /// Exact sign: -1, 0 or 1.
    pub fn signum(&self) -> i32 {
        let sa = sign_of(&self.a);
        let sb = sign_of(&self.b);
        if sa >= 0 && sb >= 0 {
            return if sa == 0 && sb == 0 { 0 } else { 1 };
        }
        if sa <= 0 && sb <= 0 {
            return -1;
        }
        // Mixed signs: compare a² against 2b².
        let a2 = &self.a * &self.a;
        let b2 = &self.b * &self.b * BigRational::from_integer(BigInt::from(2));
        match a2.cmp(&b2) {
            Ordering::Equal => 0,
            Ordering::Greater => sa,
            Ordering::Less => sb,
        }
    }

    pub fn abs(&self) -> Self {
        if self.signum() < 0 {
            -self.clone()
        } else {
            self.clone()
        }
    }

    /// Multiplicative inverse; `None` for zero.
    pub fn recip(&self) -> Option<Self> {
        if self.is_zero() {
            return None;
        }
        // (a - b√2) / (a² - 2b²); the norm is nonzero because √2 is irrational.
        let two = BigRational::from_integer(BigInt::from(2));
        let norm = &self.a * &self.a - &self.b * &self.b * two;
        Some(QSqrt2 {
            a: &self.a / &norm,
            b: -(&self.b) / &norm,
        })
    }

    pub fn to_f64(&self) -> f64 {
        self.a.to_f64().unwrap_or(f64::NAN) + self.b.to_f64().unwrap_or(f64::NAN) * std::f64::consts::SQRT_2
    }

    pub fn min(self, other: Self) -> Self {
        if self <= other {
            self
        } else {
            other
        }
    }
}

fn sign_of(r: &BigRational) -> i32 {
    if r.is_zero() {
        0
    } else if r.is_positive() {
        1
    } else {
        -1
    }
}

impl PartialOrd for QSqrt2 {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for QSqrt2 {
    fn cmp(&self, other: &Self) -> Ordering {
        (self.clone() - other.clone()).signum().cmp(&0)
    }
}

impl Add for QSqrt2 {
    type Output = QSqrt2;
    fn add(self, rhs: Self) -> Self {
        QSqrt2 {
            a: self.a + rhs.a,
            b: self.b + rhs.b,
        }
    }
}

impl AddAssign for QSqrt2 {
    fn add_assign(&mut self, rhs: Self) {
        self.a += rhs.a;
        self.b += rhs.b;
    }
}

impl Sub for QSqrt2 {
    type Output = QSqrt2;
    fn sub(self, rhs: Self) -> Self {
        QSqrt2 {
            a: self.a - rhs.a,
            b: self.b - rhs.b,
        }
    }
}

impl Mul for QSqrt2 {
    type Output = QSqrt2;
    fn mul(self, rhs: Self) -> Self {
        let two = BigRational::from_integer(BigInt::from(2));
        QSqrt2 {
            a: &self.a * &rhs.a + &self.b * &rhs.b * two,
            b: &self.a * &rhs.b + &self.b * &rhs.a,
        }
    }
}

impl Div for QSqrt2 {
    type Output = QSqrt2;
    /// Panics on division by zero, like integer division.
    fn div(self, rhs: Self) -> Self {
        self * rhs.recip().expect("division by zero in Q(sqrt 2)")
    }
}

impl Neg for QSqrt2 {
    type Output = QSqrt2;
    fn neg(self) -> Self {
        QSqrt2 {
            a: -self.a,
            b: -self.b,
        }
    }
}

impl Sum for QSqrt2 {
    fn sum<I: Iterator<Item = Self>>(iter: I) -> Self {
        iter.fold(QSqrt2::zero(), |acc, x| acc + x)
    }
}

impl fmt::Display for QSqrt2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.a.is_zero(), self.b.is_zero()) {
            (_, true) => write!(f, "{}", self.a),
            (true, false) => write!(f, "{}*sqrt(2)", self.b),
            (false, false) => {
                if self.b.is_negative() {
                    write!(f, "{} - {}*sqrt(2)", self.a, -self.b.clone())
                } else {
                    write!(f, "{} + {}*sqrt(2)", self.a, self.b)
                }
            }
        }
    }
}

/// Numbers the eraser model and the statistical tests can run on: exact
/// field elements or plain floats.
pub trait Scalar:
    Clone
    + PartialOrd
    + fmt::Debug
    + fmt::Display
    + Send
    + Sync
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + Sum
{
    fn zero() -> Self;
    fn one() -> Self;
    fn from_ratio(n: i64, d: i64) -> Self;
    fn to_f64(&self) -> f64;
    /// Exactly zero for field elements; below round-off for floats.
    fn is_negligible(&self) -> bool;
    /// Whether values of this type are exact.
    fn is_exact() -> bool;
    fn abs_val(&self) -> Self {
        if *self < Self::zero() {
            -self.clone()
        } else {
            self.clone()
        }
    }
}

/// Float tolerance used where "zero" must be decided in floating point.
pub const FLOAT_ZERO: f64 = 1e-12;

impl Scalar for f64 {
    fn zero() -> Self {
        0.0
    }
    fn one() -> Self {
        1.0
    }
    fn from_ratio(n: i64, d: i64) -> Self {
        n as f64 / d as f64
    }
    fn to_f64(&self) -> f64 {
        *self
    }
    fn is_negligible(&self) -> bool {
        self.abs() <= FLOAT_ZERO
    }
    fn is_exact() -> bool {
        false
    }
}

impl Scalar for QSqrt2 {
    fn zero() -> Self {
        QSqrt2::zero()
    }
    fn one() -> Self {
        QSqrt2::one()
    }
    fn from_ratio(n: i64, d: i64) -> Self {
        QSqrt2::rational(n, d)
    }
    fn to_f64(&self) -> f64 {
        QSqrt2::to_f64(self)
    }
    fn is_negligible(&self) -> bool {
        self.is_zero()
    }
    fn is_exact() -> bool {
        true
    }
}

/// Exact (cos²θ, sin²θ, cosθ·sinθ) for θ = k·π/8, k ∈ 0..=4.
pub fn trig_products_eighths(k: u32) -> Option<(QSqrt2, QSqrt2, QSqrt2)> {
    // cos 2θ and sin 2θ at 2θ = kπ/4
    let (cos2, sin2) = match k {
        0 => (QSqrt2::one(), QSqrt2::zero()),
        1 => (QSqrt2::from_parts(0, 1, 1, 2), QSqrt2::from_parts(0, 1, 1, 2)),
        2 => (QSqrt2::zero(), QSqrt2::one()),
        3 => (QSqrt2::from_parts(0, 1, -1, 2), QSqrt2::from_parts(0, 1, 1, 2)),
        4 => (-QSqrt2::one(), QSqrt2::zero()),
        _ => return None,
    };
    let half = QSqrt2::rational(1, 2);
    let cc = half.clone() * (QSqrt2::one() + cos2.clone());
    let ss = half.clone() * (QSqrt2::one() - cos2);
    let cs = half * sin2;
    Some((cc, ss, cs))
}

/// Recognise θ as an exact multiple of π/8 inside [0, π/2].
pub fn eighths_of_pi(theta: f64) -> Option<u32> {
    let k = theta / (std::f64::consts::PI / 8.0);
    let r = k.round();
    if (k - r).abs() < 1e-9 && (0.0..=4.0).contains(&r) {
        Some(r as u32)
    } else {
        None
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn sign_of_mixed_elements() {
        assert_eq!(QSqrt2::from_parts(3, 2, -1, 1).signum(), 1); // 1.5 - 1.414
        assert_eq!(QSqrt2::from_parts(7, 5, -1, 1).signum(), -1); // 1.4 - 1.414
        assert_eq!(QSqrt2::from_parts(-3, 2, 1, 1).signum(), -1);
        assert_eq!(QSqrt2::zero().signum(), 0);
    }

    #[test]
    fn sqrt2_squared_is_two() {
        assert_eq!(QSqrt2::sqrt2() * QSqrt2::sqrt2(), QSqrt2::rational(2, 1));
    }

    #[test]
    fn recip_of_zero_is_none() {
        assert!(QSqrt2::zero().recip().is_none());
    }

    #[test]
    fn trig_products_match_floats() {
        for k in 0..=4u32 {
            let theta = k as f64 * std::f64::consts::PI / 8.0;
            let (cc, ss, cs) = trig_products_eighths(k).unwrap();
            assert!((cc.to_f64() - theta.cos().powi(2)).abs() < 1e-15);
            assert!((ss.to_f64() - theta.sin().powi(2)).abs() < 1e-15);
            assert!((cs.to_f64() - theta.cos() * theta.sin()).abs() < 1e-15);
            assert_eq!(cc + ss, QSqrt2::one());
        }
        assert!(trig_products_eighths(5).is_none());
    }

    #[test]
    fn recognises_eighths() {
        assert_eq!(eighths_of_pi(std::f64::consts::FRAC_PI_4), Some(2));
        assert_eq!(eighths_of_pi(0.0), Some(0));
        assert_eq!(eighths_of_pi(0.3), None);
        assert_eq!(eighths_of_pi(std::f64::consts::PI), None);
    }

    fn elem() -> impl Strategy<Value = QSqrt2> {
        (-50i64..50, 1i64..20, -50i64..50, 1i64..20).prop_map(|(n, d, m, e)| QSqrt2::from_parts(n, d, m, e))
    }

    proptest! {
        #[test]
        fn field_ops_agree_with_floats(x in elem(), y in elem()) {
            let s = (x.clone() + y.clone()).to_f64();
            prop_assert!((s - (x.to_f64() + y.to_f64())).abs() < 1e-9);
            let p = (x.clone() * y.clone()).to_f64();
            prop_assert!((p - x.to_f64() * y.to_f64()).abs() < 1e-7);
            if !y.is_zero() {
                let q = x.clone() / y.clone();
                prop_assert_eq!(q * y.clone(), x.clone());
            }
        }

        #[test]
        fn ordering_agrees_with_floats(x in elem(), y in elem()) {
            let (fx, fy) = (x.to_f64(), y.to_f64());
            if (fx - fy).abs() > 1e-9 {
                prop_assert_eq!(x < y, fx < fy);
            }
        }
    }
}
