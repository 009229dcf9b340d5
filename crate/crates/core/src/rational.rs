//! Exact rational scalar.
//!
//! Values that fit in a pair of `i64` stay in a small inline form; anything
//! larger is promoted to a heap-allocated [`BigRational`]. The representation
//! is canonical (reduced, positive denominator, small whenever it fits), so
//! structural equality and hashing agree with numeric equality.

use std::cmp::Ordering;
use std::fmt;
use std::iter::Sum;
use std::ops::{Add, AddAssign, Div, Mul, Neg, Sub, SubAssign};
use std::str::FromStr;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{de, Deserialize, Deserializer, Serialize, Serializer};

#[derive(Clone, PartialEq, Eq, Hash)]
enum Repr {
    /// Reduced, denominator > 0.
    Small(i64, i64),
    /// Reduced and does not fit `Small`.
    Big(Box<BigRational>),
}

/// An exact rational number.
///
/// The type itself is signed so that differences can be formed; instance
/// validation is what keeps utilities non-negative.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Rational(Repr);

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("malformed rational {input:?}: {reason}")]
pub struct ParseRationalError {
    pub input: String,
    pub reason: &'static str,
}

impl Rational {
    pub const ZERO: Rational = Rational(Repr::Small(0, 1));
    pub const ONE: Rational = Rational(Repr::Small(1, 1));

    pub const fn from_integer(n: i64) -> Rational {
        Rational(Repr::Small(n, 1))
    }

    /// Builds `numer / denom`. Returns `None` when `denom == 0`.
    pub fn new(numer: i64, denom: i64) -> Option<Rational> {
        if denom == 0 {
            return None;
        }
        Some(Self::from_i128(numer as i128, denom as i128))
    }

    /// `numer / denom` for arbitrary-precision parts; `None` on zero denominator.
    pub fn from_big(numer: BigInt, denom: BigInt) -> Option<Rational> {
        if denom.is_zero() {
            return None;
        }
        Some(Self::from_big_ratio(BigRational::new(numer, denom)))
    }

    fn from_i128(n: i128, d: i128) -> Rational {
        debug_assert!(d != 0);
        let (mut n, mut d) = if d < 0 { (-n, -d) } else { (n, d) };
        if d != 1 {
            let g = n.gcd(&d);
            if g > 1 {
                n /= g;
                d /= g;
            }
        }
        match (i64::try_from(n), i64::try_from(d)) {
            (Ok(n), Ok(d)) => Rational(Repr::Small(n, d)),
            _ => Rational(Repr::Big(Box::new(BigRational::new_raw(
                BigInt::from(n),
                BigInt::from(d),
            )))),
        }
    }

    fn from_big_ratio(r: BigRational) -> Rational {
        // BigRational::new reduces and normalizes the sign; results of its
        // arithmetic are reduced as well.
        match (r.numer().to_i64(), r.denom().to_i64()) {
            (Some(n), Some(d)) => Rational(Repr::Small(n, d)),
            _ => Rational(Repr::Big(Box::new(r))),
        }
    }

    fn to_big(&self) -> BigRational {
        match &self.0 {
            Repr::Small(n, d) => BigRational::new_raw(BigInt::from(*n), BigInt::from(*d)),
            Repr::Big(b) => (**b).clone(),
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

    pub fn is_zero(&self) -> bool {
        matches!(self.0, Repr::Small(0, _))
    }

    pub fn is_negative(&self) -> bool {
        match &self.0 {
            Repr::Small(n, _) => *n < 0,
            Repr::Big(b) => b.is_negative(),
        }
    }

    pub fn is_positive(&self) -> bool {
        !self.is_zero() && !self.is_negative()
    }

    pub fn is_integer(&self) -> bool {
        match &self.0 {
            Repr::Small(_, d) => *d == 1,
            Repr::Big(b) => b.is_integer(),
        }
    }

    pub fn abs(&self) -> Rational {
        if self.is_negative() {
            -self
        } else {
            self.clone()
        }
    }

    /// Largest integer not above `self`.
    pub fn floor(&self) -> Rational {
        match &self.0 {
            Repr::Small(n, d) => Rational::from_integer(n.div_floor(d)),
            Repr::Big(b) => Self::from_big_ratio(b.floor()),
        }
    }

    /// `max(self, 0)`.
    pub fn positive_part(&self) -> Rational {
        if self.is_negative() {
            Rational::ZERO
        } else {
            self.clone()
        }
    }

    pub fn recip(&self) -> Option<Rational> {
        if self.is_zero() {
            return None;
        }
        Some(match &self.0 {
            Repr::Small(n, d) => Self::from_i128(*d as i128, *n as i128),
            Repr::Big(b) => Self::from_big_ratio(b.recip()),
        })
    }

    /// `self / rhs`, or `None` when `rhs` is zero.
    pub fn checked_div(&self, rhs: &Rational) -> Option<Rational> {
        rhs.recip().map(|r| self * &r)
    }

    pub fn to_f64(&self) -> f64 {
        match &self.0 {
            Repr::Small(n, d) => *n as f64 / *d as f64,
            Repr::Big(b) => b.to_f64().unwrap_or(f64::NAN),
        }
    }

    /// Always `p/q`, including `q = 1`.
    pub fn to_fraction_string(&self) -> String {
        format!("{}/{}", self.numer(), self.denom())
    }

    /// Decimal rendering rounded half away from zero to `digits` places.
    pub fn to_decimal_string(&self, digits: u32) -> String {
        let scale = BigInt::from(10u32).pow(digits);
        let r = self.to_big();
        let scaled = r * BigRational::from_integer(scale.clone());
        let rounded = scaled.round().to_integer();
        let neg = rounded.is_negative();
        let mag = rounded.abs();
        let (int_part, frac_part) = mag.div_rem(&scale);
        let sign = if neg { "-" } else { "" };
        if digits == 0 {
            return format!("{sign}{int_part}");
        }
        format!(
            "{sign}{int_part}.{:0>width$}",
            frac_part.to_string(),
            width = digits as usize
        )
    }
}

impl Default for Rational {
    fn default() -> Self {
        Rational::ZERO
    }
}

impl From<i64> for Rational {
    fn from(n: i64) -> Self {
        Rational::from_integer(n)
    }
}

impl From<u32> for Rational {
    fn from(n: u32) -> Self {
        Rational::from_integer(n as i64)
    }
}

impl From<usize> for Rational {
    fn from(n: usize) -> Self {
        match i64::try_from(n) {
            Ok(n) => Rational::from_integer(n),
            Err(_) => Self::from_big_ratio(BigRational::from_integer(BigInt::from(n))),
        }
    }
}

impl Ord for Rational {
    fn cmp(&self, other: &Self) -> Ordering {
        match (&self.0, &other.0) {
            (Repr::Small(a, b), Repr::Small(c, d)) => {
                if b == d {
                    a.cmp(c)
                } else {
                    (*a as i128 * *d as i128).cmp(&(*c as i128 * *b as i128))
                }
            }
            _ => self.to_big().cmp(&other.to_big()),
        }
    }
}

impl PartialOrd for Rational {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl<'a> Add<&'a Rational> for &'a Rational {
    type Output = Rational;
    fn add(self, rhs: &'a Rational) -> Rational {
        match (&self.0, &rhs.0) {
            (Repr::Small(a, 1), Repr::Small(c, 1)) => match a.checked_add(*c) {
                Some(s) => Rational::from_integer(s),
                None => Rational::from_i128(*a as i128 + *c as i128, 1),
            },
            (Repr::Small(a, b), Repr::Small(c, d)) if b == d => {
                Rational::from_i128(*a as i128 + *c as i128, *b as i128)
            }
            (Repr::Small(a, b), Repr::Small(c, d)) => {
                let (a, b, c, d) = (*a as i128, *b as i128, *c as i128, *d as i128);
                match a
                    .checked_mul(d)
                    .and_then(|x| c.checked_mul(b).and_then(|y| x.checked_add(y)))
                {
                    Some(n) => Rational::from_i128(n, b * d),
                    None => Rational::from_big_ratio(self.to_big() + rhs.to_big()),
                }
            }
            _ => Rational::from_big_ratio(self.to_big() + rhs.to_big()),
        }
    }
}

impl<'a> Sub<&'a Rational> for &'a Rational {
    type Output = Rational;
    fn sub(self, rhs: &'a Rational) -> Rational {
        match (&self.0, &rhs.0) {
            (Repr::Small(a, 1), Repr::Small(c, 1)) => match a.checked_sub(*c) {
                Some(s) => Rational::from_integer(s),
                None => Rational::from_i128(*a as i128 - *c as i128, 1),
            },
            _ => self + &(-rhs),
        }
    }
}

impl<'a> Mul<&'a Rational> for &'a Rational {
    type Output = Rational;
    fn mul(self, rhs: &'a Rational) -> Rational {
        match (&self.0, &rhs.0) {
            (Repr::Small(a, b), Repr::Small(c, d)) => {
                let n = *a as i128 * *c as i128;
                let q = *b as i128 * *d as i128;
                Rational::from_i128(n, q)
            }
            _ => Rational::from_big_ratio(self.to_big() * rhs.to_big()),
        }
    }
}

impl<'a> Div<&'a Rational> for &'a Rational {
    type Output = Rational;
    /// Panics on division by zero; use [`Rational::checked_div`] otherwise.
    fn div(self, rhs: &'a Rational) -> Rational {
        self.checked_div(rhs).expect("division by zero rational")
    }
}

impl Neg for &Rational {
    type Output = Rational;
    fn neg(self) -> Rational {
        match &self.0 {
            Repr::Small(n, d) => match n.checked_neg() {
                Some(n) => Rational(Repr::Small(n, *d)),
                None => Rational::from_i128(-(*n as i128), *d as i128),
            },
            Repr::Big(b) => Rational::from_big_ratio(-(**b).clone()),
        }
    }
}

impl Neg for Rational {
    type Output = Rational;
    fn neg(self) -> Rational {
        -&self
    }
}

macro_rules! forward_owned_binop {
    ($tr:ident, $method:ident) => {
        impl $tr<Rational> for Rational {
            type Output = Rational;
            fn $method(self, rhs: Rational) -> Rational {
                (&self).$method(&rhs)
            }
        }
        impl<'a> $tr<&'a Rational> for Rational {
            type Output = Rational;
            fn $method(self, rhs: &'a Rational) -> Rational {
                (&self).$method(rhs)
            }
        }
        impl<'a> $tr<Rational> for &'a Rational {
            type Output = Rational;
            fn $method(self, rhs: Rational) -> Rational {
                self.$method(&rhs)
            }
        }
    };
}

forward_owned_binop!(Add, add);
forward_owned_binop!(Sub, sub);
forward_owned_binop!(Mul, mul);
forward_owned_binop!(Div, div);

impl AddAssign<&Rational> for Rational {
    fn add_assign(&mut self, rhs: &Rational) {
        *self = &*self + rhs;
    }
}

impl AddAssign<Rational> for Rational {
    fn add_assign(&mut self, rhs: Rational) {
        *self = &*self + &rhs;
    }
}

impl SubAssign<&Rational> for Rational {
    fn sub_assign(&mut self, rhs: &Rational) {
        *self = &*self - rhs;
    }
}

impl Sum for Rational {
    fn sum<I: Iterator<Item = Rational>>(iter: I) -> Rational {
        iter.fold(Rational::ZERO, |acc, x| acc + x)
    }
}

impl<'a> Sum<&'a Rational> for Rational {
    fn sum<I: Iterator<Item = &'a Rational>>(iter: I) -> Rational {
        iter.fold(Rational::ZERO, |acc, x| &acc + x)
    }
}

impl fmt::Display for Rational {
    /// `p` for integers, `p/q` otherwise.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.0 {
            Repr::Small(n, 1) => write!(f, "{n}"),
            Repr::Small(n, d) => write!(f, "{n}/{d}"),
            Repr::Big(b) if b.is_integer() => write!(f, "{}", b.numer()),
            Repr::Big(b) => write!(f, "{}/{}", b.numer(), b.denom()),
        }
    }
}

impl fmt::Debug for Rational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

fn parse_bigint(s: &str) -> Option<BigInt> {
    let digits = s.strip_prefix(['+', '-']).unwrap_or(s);
    if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    s.parse().ok()
}

impl FromStr for Rational {
    type Err = ParseRationalError;

    /// Accepts integers (`7`), fractions (`3/4`) and decimals (`0.25`, `1e-3` is not supported).
    fn from_str(input: &str) -> Result<Self, Self::Err> {
        let err = |reason| ParseRationalError {
            input: input.to_string(),
            reason,
        };
        let s = input.trim();
        if s.is_empty() {
            return Err(err("empty string"));
        }
        if let Some((p, q)) = s.split_once('/') {
            let p = parse_bigint(p.trim()).ok_or_else(|| err("bad numerator"))?;
            let q = parse_bigint(q.trim()).ok_or_else(|| err("bad denominator"))?;
            return Rational::from_big(p, q).ok_or_else(|| err("zero denominator"));
        }
        if let Some((int_part, frac_part)) = s.split_once('.') {
            let neg = int_part.starts_with('-');
            let int_digits = int_part.strip_prefix(['+', '-']).unwrap_or(int_part);
            if (int_digits.is_empty() && frac_part.is_empty())
                || !int_digits.bytes().all(|b| b.is_ascii_digit())
                || !frac_part.bytes().all(|b| b.is_ascii_digit())
            {
                return Err(err("bad decimal"));
            }
            let joined = format!("{int_digits}{frac_part}");
            let mut numer: BigInt = joined.parse().map_err(|_| err("bad decimal"))?;
            if neg {
                numer = -numer;
            }
            let denom = BigInt::from(10u32).pow(frac_part.len() as u32);
            return Ok(Rational::from_big(numer, denom).expect("power of ten is non-zero"));
        }
        let n = parse_bigint(s).ok_or_else(|| err("not a number"))?;
        Ok(Rational::from_big(n, BigInt::one()).expect("one is non-zero"))
    }
}

impl Serialize for Rational {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        match &self.0 {
            Repr::Small(n, 1) => serializer.serialize_i64(*n),
            _ => serializer.serialize_str(&self.to_string()),
        }
    }
}

impl<'de> Deserialize<'de> for Rational {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        struct Visitor;
        impl de::Visitor<'_> for Visitor {
            type Value = Rational;

            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("an integer, a decimal, or a \"p/q\" string")
            }

            fn visit_i64<E: de::Error>(self, v: i64) -> Result<Rational, E> {
                Ok(Rational::from_integer(v))
            }

            fn visit_u64<E: de::Error>(self, v: u64) -> Result<Rational, E> {
                Ok(Rational::from_big(BigInt::from(v), BigInt::one()).expect("non-zero"))
            }

            fn visit_f64<E: de::Error>(self, v: f64) -> Result<Rational, E> {
                if !v.is_finite() {
                    return Err(E::custom("non-finite number"));
                }
                // Shortest round-trip decimal, read back exactly.
                format!("{v}").parse().map_err(E::custom)
            }

            fn visit_str<E: de::Error>(self, v: &str) -> Result<Rational, E> {
                v.parse().map_err(E::custom)
            }
        }
        deserializer.deserialize_any(Visitor)
    }
}

/// Shorthand for building test and fixture values.
pub fn q(numer: i64, denom: i64) -> Rational {
    Rational::new(numer, denom).expect("non-zero denominator")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canonical_form() {
        assert_eq!(q(6, 110), q(3, 55));
        assert_eq!(q(-2, -4), q(1, 2));
        assert_eq!(q(2, -4), -q(1, 2));
        assert_eq!(q(0, 5), Rational::ZERO);
        assert_eq!(q(6, 110).to_string(), "3/55");
        assert_eq!(q(8, 1).to_string(), "8");
    }

    #[test]
    fn parse_forms() {
        assert_eq!("3/4".parse::<Rational>().unwrap(), q(3, 4));
        assert_eq!("0.25".parse::<Rational>().unwrap(), q(1, 4));
        assert_eq!(".5".parse::<Rational>().unwrap(), q(1, 2));
        assert_eq!("18".parse::<Rational>().unwrap(), q(18, 1));
        assert_eq!("-1.5".parse::<Rational>().unwrap(), q(-3, 2));
        assert!("3/0".parse::<Rational>().is_err());
        assert!("abc".parse::<Rational>().is_err());
        assert!("1/2/3".parse::<Rational>().is_err());
        assert!("".parse::<Rational>().is_err());
    }

    #[test]
    fn overflow_promotes_to_big() {
        let big = Rational::from_integer(i64::MAX);
        let sum = &big + &big;
        assert_eq!(sum.numer(), BigInt::from(i64::MAX) * 2);
        let back = &sum - &big;
        assert_eq!(back, big);
        assert!(matches!(back.0, Repr::Small(..)));
        let tiny = q(1, i64::MAX);
        let prod = &tiny * &tiny;
        assert!(prod.is_positive());
        assert_eq!(&prod * &(&big * &big), Rational::ONE);
    }

    #[test]
    fn ordering_and_helpers() {
        assert!(q(1, 3) < q(1, 2));
        assert!(q(-1, 2) < Rational::ZERO);
        assert_eq!(q(7, 2).floor(), q(3, 1));
        assert_eq!(q(-7, 2).floor(), q(-4, 1));
        assert_eq!(q(-3, 2).positive_part(), Rational::ZERO);
        assert_eq!(q(23, 55).to_decimal_string(6), "0.418182");
        assert_eq!(q(2, 3).to_decimal_string(0), "1");
        assert_eq!(q(1, 1).to_fraction_string(), "1/1");
        assert_eq!(Rational::ZERO.checked_div(&Rational::ZERO), None);
    }

    #[test]
    fn serde_round_trip() {
        let vals = vec![q(3, 1), q(3, 4), q(0, 1)];
        let json = serde_json::to_string(&vals).unwrap();
        assert_eq!(json, r#"[3,"3/4",0]"#);
        let back: Vec<Rational> = serde_json::from_str(&json).unwrap();
        assert_eq!(back, vals);
        let mixed: Vec<Rational> = serde_json::from_str(r#"[0.5, "1.25", "2/6", 4]"#).unwrap();
        assert_eq!(mixed, vec![q(1, 2), q(5, 4), q(1, 3), q(4, 1)]);
    }
}
