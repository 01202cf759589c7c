//! Exact rationals with an inline `i64` fast path.
//!
//! Almost every structure constant in this crate is a small integer, so the
//! common case stays in machine words and only promotes to `BigRational`
//! when an intermediate overflows.

use std::cmp::Ordering;
use std::fmt;
use std::hash::{Hash, Hasher};
use std::iter::Sum;
use std::ops::{Add, AddAssign, Div, Mul, MulAssign, Neg, Sub, SubAssign};
use std::str::FromStr;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// An exact rational number in canonical form.
#[derive(Clone)]
pub struct Q(Repr);

#[derive(Clone)]
enum Repr {
    /// Reduced fraction, denominator > 0.
    Small(i64, i64),
    /// Only used when the value does not fit in `Small`.
    Big(Box<BigRational>),
}

fn gcd_u128(mut a: u128, mut b: u128) -> u128 {
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

impl Q {
    pub const ZERO: Q = Q(Repr::Small(0, 1));
    pub const ONE: Q = Q(Repr::Small(1, 1));

    pub fn zero() -> Q {
        Q::ZERO
    }

    pub fn one() -> Q {
        Q::ONE
    }

    pub fn from_int(n: i64) -> Q {
        Q(Repr::Small(n, 1))
    }

    /// `n / d`; panics when `d == 0`.
    pub fn new(n: i64, d: i64) -> Q {
        assert!(d != 0, "zero denominator");
        Q::from_i128(n as i128, d as i128)
    }

    /// `(-1)^e`.
    pub fn sign(e: i64) -> Q {
        if e.rem_euclid(2) == 0 {
            Q::ONE
        } else {
            Q::from_int(-1)
        }
    }

    fn from_i128(n: i128, d: i128) -> Q {
        debug_assert!(d != 0);
        if n == 0 {
            return Q::ZERO;
        }
        let g = gcd_u128(n.unsigned_abs(), d.unsigned_abs()) as i128;
        let (mut n, mut d) = (n / g, d / g);
        if d < 0 {
            n = -n;
            d = -d;
        }
        match (i64::try_from(n), i64::try_from(d)) {
            (Ok(a), Ok(b)) => Q(Repr::Small(a, b)),
            _ => Q(Repr::Big(Box::new(BigRational::new_raw(
                BigInt::from(n),
                BigInt::from(d),
            )))),
        }
    }

    fn from_big(r: BigRational) -> Q {
        // `r` is assumed reduced (all BigRational constructors in use reduce).
        if let (Some(n), Some(d)) = (r.numer().to_i64(), r.denom().to_i64()) {
            return Q(Repr::Small(n, d));
        }
        Q(Repr::Big(Box::new(r)))
    }

    fn to_big(&self) -> BigRational {
        match &self.0 {
            Repr::Small(n, d) => BigRational::new_raw(BigInt::from(*n), BigInt::from(*d)),
            Repr::Big(b) => (**b).clone(),
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self.0, Repr::Small(0, _))
    }

    pub fn is_one(&self) -> bool {
        matches!(self.0, Repr::Small(1, 1))
    }

    pub fn is_integer(&self) -> bool {
        match &self.0 {
            Repr::Small(_, d) => *d == 1,
            Repr::Big(b) => b.is_integer(),
        }
    }

    pub fn is_negative(&self) -> bool {
        match &self.0 {
            Repr::Small(n, _) => *n < 0,
            Repr::Big(b) => b.is_negative(),
        }
    }

    /// Integer value if this is an integer fitting in `i64`.
    pub fn to_i64(&self) -> Option<i64> {
        match &self.0 {
            Repr::Small(n, 1) => Some(*n),
            _ => None,
        }
    }

    /// Floor of the value.
    pub fn floor(&self) -> BigInt {
        match &self.0 {
            Repr::Small(n, d) => BigInt::from(n.div_floor(d)),
            Repr::Big(b) => b.floor().to_integer(),
        }
    }

    pub fn numer(&self) -> BigInt {
        match &self.0 {
            Repr::Small(n, _) => BigInt::from(*n),
            Repr::Big(b) => b.numer().clone(),
        }
    }

    pub fn denom(&self) -> BigInt {
        match &self.0 {
            Repr::Small(_, d) => BigInt::from(*d),
            Repr::Big(b) => b.denom().clone(),
        }
    }

    /// Multiplicative inverse; panics on zero.
    pub fn inv(&self) -> Q {
        match &self.0 {
            Repr::Small(0, _) => panic!("inverse of zero"),
            Repr::Small(n, d) => Q::from_i128(*d as i128, *n as i128),
            Repr::Big(b) => Q::from_big(b.recip()),
        }
    }

    pub fn abs(&self) -> Q {
        if self.is_negative() {
            -self
        } else {
            self.clone()
        }
    }

    pub fn pow(&self, e: i32) -> Q {
        let base = if e < 0 { self.inv() } else { self.clone() };
        let mut acc = Q::ONE;
        for _ in 0..e.unsigned_abs() {
            acc = &acc * &base;
        }
        acc
    }
}

impl Default for Q {
    fn default() -> Self {
        Q::ZERO
    }
}

impl From<i64> for Q {
    fn from(n: i64) -> Q {
        Q::from_int(n)
    }
}

impl From<i32> for Q {
    fn from(n: i32) -> Q {
        Q::from_int(n as i64)
    }
}

impl From<BigInt> for Q {
    fn from(n: BigInt) -> Q {
        Q::from_big(BigRational::from_integer(n))
    }
}

impl PartialEq for Q {
    fn eq(&self, other: &Q) -> bool {
        match (&self.0, &other.0) {
            (Repr::Small(a, b), Repr::Small(c, d)) => a == c && b == d,
            (Repr::Big(x), Repr::Big(y)) => x == y,
            // canonical forms never mix representations for equal values
            _ => false,
        }
    }
}

impl Eq for Q {}

impl Hash for Q {
    fn hash<H: Hasher>(&self, state: &mut H) {
        match &self.0 {
            Repr::Small(n, d) => {
                0u8.hash(state);
                n.hash(state);
                d.hash(state);
            }
            Repr::Big(b) => {
                1u8.hash(state);
                b.hash(state);
            }
        }
    }
}

impl PartialOrd for Q {
    fn partial_cmp(&self, other: &Q) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Q {
    fn cmp(&self, other: &Q) -> Ordering {
        match (&self.0, &other.0) {
            (Repr::Small(a, b), Repr::Small(c, d)) => {
                ((*a as i128) * (*d as i128)).cmp(&((*c as i128) * (*b as i128)))
            }
            _ => self.to_big().cmp(&other.to_big()),
        }
    }
}

fn add_q(x: &Q, y: &Q) -> Q {
    match (&x.0, &y.0) {
        (Repr::Small(0, _), _) => y.clone(),
        (_, Repr::Small(0, _)) => x.clone(),
        (Repr::Small(a, b), Repr::Small(c, d)) => {
            if b == d {
                Q::from_i128(*a as i128 + *c as i128, *b as i128)
            } else {
                let n = (*a as i128) * (*d as i128) + (*c as i128) * (*b as i128);
                let dd = (*b as i128) * (*d as i128);
                Q::from_i128(n, dd)
            }
        }
        _ => Q::from_big(x.to_big() + y.to_big()),
    }
}

fn mul_q(x: &Q, y: &Q) -> Q {
    match (&x.0, &y.0) {
        (Repr::Small(0, _), _) | (_, Repr::Small(0, _)) => Q::ZERO,
        (Repr::Small(1, 1), _) => y.clone(),
        (_, Repr::Small(1, 1)) => x.clone(),
        (Repr::Small(a, b), Repr::Small(c, d)) => {
            Q::from_i128((*a as i128) * (*c as i128), (*b as i128) * (*d as i128))
        }
        _ => Q::from_big(x.to_big() * y.to_big()),
    }
}

fn neg_q(x: &Q) -> Q {
    match &x.0 {
        Repr::Small(n, d) if *n != i64::MIN => Q(Repr::Small(-n, *d)),
        Repr::Small(n, d) => Q::from_i128(-(*n as i128), *d as i128),
        Repr::Big(b) => Q::from_big(-(**b).clone()),
    }
}

macro_rules! binop {
    ($tr:ident, $m:ident, $f:expr) => {
        impl $tr<&Q> for &Q {
            type Output = Q;
            fn $m(self, rhs: &Q) -> Q {
                $f(self, rhs)
            }
        }
        impl $tr<Q> for Q {
            type Output = Q;
            fn $m(self, rhs: Q) -> Q {
                $f(&self, &rhs)
            }
        }
        impl $tr<&Q> for Q {
            type Output = Q;
            fn $m(self, rhs: &Q) -> Q {
                $f(&self, rhs)
            }
        }
        impl $tr<Q> for &Q {
            type Output = Q;
            fn $m(self, rhs: Q) -> Q {
                $f(self, &rhs)
            }
        }
    };
}

binop!(Add, add, add_q);
binop!(Mul, mul, mul_q);
binop!(Sub, sub, |a: &Q, b: &Q| add_q(a, &neg_q(b)));
binop!(Div, div, |a: &Q, b: &Q| mul_q(a, &b.inv()));

impl Neg for Q {
    type Output = Q;
    fn neg(self) -> Q {
        neg_q(&self)
    }
}

impl Neg for &Q {
    type Output = Q;
    fn neg(self) -> Q {
        neg_q(self)
    }
}

impl AddAssign<&Q> for Q {
    fn add_assign(&mut self, rhs: &Q) {
        *self = add_q(self, rhs);
    }
}

impl AddAssign<Q> for Q {
    fn add_assign(&mut self, rhs: Q) {
        *self = add_q(self, &rhs);
    }
}

impl SubAssign<&Q> for Q {
    fn sub_assign(&mut self, rhs: &Q) {
        *self = add_q(self, &neg_q(rhs));
    }
}

impl SubAssign<Q> for Q {
    fn sub_assign(&mut self, rhs: Q) {
        *self = add_q(self, &neg_q(&rhs));
    }
}

impl MulAssign<&Q> for Q {
    fn mul_assign(&mut self, rhs: &Q) {
        *self = mul_q(self, rhs);
    }
}

impl Sum for Q {
    fn sum<I: Iterator<Item = Q>>(iter: I) -> Q {
        iter.fold(Q::ZERO, |a, b| a + b)
    }
}

impl<'a> Sum<&'a Q> for Q {
    fn sum<I: Iterator<Item = &'a Q>>(iter: I) -> Q {
        iter.fold(Q::ZERO, |a, b| a + b)
    }
}

impl fmt::Display for Q {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.0 {
            Repr::Small(n, 1) => write!(f, "{n}"),
            Repr::Small(n, d) => write!(f, "{n}/{d}"),
            Repr::Big(b) if b.is_integer() => write!(f, "{}", b.numer()),
            Repr::Big(b) => write!(f, "{}/{}", b.numer(), b.denom()),
        }
    }
}

impl fmt::Debug for Q {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

/// Error returned when a string is not of the form `p` or `p/q`.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("invalid rational literal {0:?}")]
pub struct ParseQError(pub String);

impl FromStr for Q {
    type Err = ParseQError;

    fn from_str(s: &str) -> Result<Q, ParseQError> {
        let err = || ParseQError(s.to_string());
        let t = s.trim();
        let (n, d) = match t.split_once('/') {
            Some((a, b)) => (a.trim(), b.trim()),
            None => (t, "1"),
        };
        let n: BigInt = n.parse().map_err(|_| err())?;
        let d: BigInt = d.parse().map_err(|_| err())?;
        if d.is_zero() {
            return Err(err());
        }
        Ok(Q::from_big(BigRational::new(n, d)))
    }
}

/// Always written as `"p/q"`, with `q = 1` for integers.
impl Serialize for Q {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&format!("{}/{}", self.numer(), self.denom()))
    }
}

impl<'de> Deserialize<'de> for Q {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Q, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

impl Zero for Q {
    fn zero() -> Q {
        Q::ZERO
    }
    fn is_zero(&self) -> bool {
        Q::is_zero(self)
    }
}

impl One for Q {
    fn one() -> Q {
        Q::ONE
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canonical_form() {
        assert_eq!(Q::new(2, 4), Q::new(1, 2));
        assert_eq!(Q::new(3, -6), Q::new(-1, 2));
        assert_eq!(Q::new(0, -5), Q::zero());
        assert_eq!(Q::new(-4, 2).to_i64(), Some(-2));
    }

    #[test]
    fn overflow_promotes_and_demotes() {
        let big = Q::from_int(i64::MAX);
        let sq = &big * &big;
        assert!(matches!(sq.0, Repr::Big(_)));
        let back = &sq / &big;
        assert_eq!(back, big);
        assert!(matches!(back.0, Repr::Small(..)));
        let neg = -Q::from_int(i64::MIN);
        assert_eq!(&neg + &Q::from_int(i64::MIN), Q::zero());
    }

    #[test]
    fn parse_and_print() {
        for s in ["0", "7", "-3/4", "123456789012345678901234567891/7"] {
            let q: Q = s.parse().unwrap();
            assert_eq!(q.to_string(), s);
        }
        assert_eq!("6/8".parse::<Q>().unwrap().to_string(), "3/4");
        assert!("1/0".parse::<Q>().is_err());
        assert!("x".parse::<Q>().is_err());
    }

    #[test]
    fn ordering_and_signs() {
        assert!(Q::new(1, 3) < Q::new(1, 2));
        assert_eq!(Q::sign(3), Q::from_int(-1));
        assert_eq!(Q::sign(-2), Q::one());
        assert_eq!(Q::new(2, 3).pow(-2), Q::new(9, 4));
    }
}
