//! Exact arithmetic in the field Q(√2).
//!
//! Every coefficient produced by the gate catalog (rational interaction
//! strengths, quarter-turn rotations, balanced beam splitters, √2 squeezers)
//! lives in this field, so the Heisenberg tables can be checked without
//! rounding.

use std::fmt;
use std::ops::{Add, AddAssign, Div, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};

/// `rational + irrational·√2` with arbitrary-precision rational parts.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Default)]
pub struct Surd {
    rational: BigRational,
    irrational: BigRational,
}

impl Surd {
    pub fn new(rational: BigRational, irrational: BigRational) -> Self {
        Surd {
            rational,
            irrational,
        }
    }

    pub fn integer(n: i64) -> Self {
        Surd::new(BigRational::from_integer(BigInt::from(n)), BigRational::zero())
    }

    /// `num/den`; panics if `den == 0`.
    pub fn ratio(num: i64, den: i64) -> Self {
        Surd::new(
            BigRational::new(BigInt::from(num), BigInt::from(den)),
            BigRational::zero(),
        )
    }

    pub fn sqrt2() -> Self {
        Surd::new(BigRational::zero(), BigRational::one())
    }

    /// `1/√2 = √2/2`.
    pub fn inv_sqrt2() -> Self {
        Surd::new(
            BigRational::zero(),
            BigRational::new(BigInt::from(1), BigInt::from(2)),
        )
    }

    pub fn rational_part(&self) -> &BigRational {
        &self.rational
    }

    pub fn irrational_part(&self) -> &BigRational {
        &self.irrational
    }

    pub fn is_zero(&self) -> bool {
        self.rational.is_zero() && self.irrational.is_zero()
    }

    pub fn to_f64(&self) -> f64 {
        let a = self.rational.to_f64().unwrap_or(f64::NAN);
        let b = self.irrational.to_f64().unwrap_or(f64::NAN);
        a + b * std::f64::consts::SQRT_2
    }

    /// Sign of the real number, computed exactly.
    pub fn signum(&self) -> i32 {
        // a + b√2 > 0  ⇔  compare a and -b√2 by squaring where signs agree
        let a = &self.rational;
        let b = &self.irrational;
        let sa = sign(a);
        let sb = sign(b);
        if sa >= 0 && sb >= 0 {
            return if sa == 0 && sb == 0 { 0 } else { 1 };
        }
        if sa <= 0 && sb <= 0 {
            return -1;
        }
        let a2 = a * a;
        let two_b2 = b * b * BigRational::from_integer(BigInt::from(2));
        match a2.cmp(&two_b2) {
            std::cmp::Ordering::Greater => sa,
            std::cmp::Ordering::Less => sb,
            std::cmp::Ordering::Equal => 0,
        }
    }

    /// Galois conjugate `a - b√2`.
    pub fn conjugate(&self) -> Self {
        Surd::new(self.rational.clone(), -self.irrational.clone())
    }

    /// Field norm `a² - 2b²`; zero only for zero.
    pub fn norm(&self) -> BigRational {
        &self.rational * &self.rational
            - &self.irrational * &self.irrational * BigRational::from_integer(BigInt::from(2))
    }

    pub fn recip(&self) -> Result<Self> {
        let n = self.norm();
        if n.is_zero() {
            return Err(domain("reciprocal of zero"));
        }
        let c = self.conjugate();
        Ok(Surd::new(c.rational / &n, c.irrational / &n))
    }
}

fn sign(r: &BigRational) -> i32 {
    if r.is_zero() {
        0
    } else if r.is_positive() {
        1
    } else {
        -1
    }
}

impl Zero for Surd {
    fn zero() -> Self {
        Surd::default()
    }
    fn is_zero(&self) -> bool {
        Surd::is_zero(self)
    }
}

impl One for Surd {
    fn one() -> Self {
        Surd::integer(1)
    }
}

impl From<i64> for Surd {
    fn from(n: i64) -> Self {
        Surd::integer(n)
    }
}

impl Add for Surd {
    type Output = Surd;
    fn add(self, rhs: Surd) -> Surd {
        Surd::new(self.rational + rhs.rational, self.irrational + rhs.irrational)
    }
}

impl<'a> Add<&'a Surd> for &'a Surd {
    type Output = Surd;
    fn add(self, rhs: &Surd) -> Surd {
        Surd::new(&self.rational + &rhs.rational, &self.irrational + &rhs.irrational)
    }
}

impl AddAssign<&Surd> for Surd {
    fn add_assign(&mut self, rhs: &Surd) {
        self.rational += &rhs.rational;
        self.irrational += &rhs.irrational;
    }
}

impl Sub for Surd {
    type Output = Surd;
    fn sub(self, rhs: Surd) -> Surd {
        Surd::new(self.rational - rhs.rational, self.irrational - rhs.irrational)
    }
}

impl<'a> Sub<&'a Surd> for &'a Surd {
    type Output = Surd;
    fn sub(self, rhs: &Surd) -> Surd {
        Surd::new(&self.rational - &rhs.rational, &self.irrational - &rhs.irrational)
    }
}

impl Neg for Surd {
    type Output = Surd;
    fn neg(self) -> Surd {
        Surd::new(-self.rational, -self.irrational)
    }
}

impl Neg for &Surd {
    type Output = Surd;
    fn neg(self) -> Surd {
        Surd::new(-self.rational.clone(), -self.irrational.clone())
    }
}

impl<'a> Mul<&'a Surd> for &'a Surd {
    type Output = Surd;
    fn mul(self, rhs: &Surd) -> Surd {
        // (a + b√2)(c + d√2) = (ac + 2bd) + (ad + bc)√2
        let two = BigRational::from_integer(BigInt::from(2));
        Surd::new(
            &self.rational * &rhs.rational + &self.irrational * &rhs.irrational * two,
            &self.rational * &rhs.irrational + &self.irrational * &rhs.rational,
        )
    }
}

impl Mul for Surd {
    type Output = Surd;
    fn mul(self, rhs: Surd) -> Surd {
        &self * &rhs
    }
}

impl Div for Surd {
    type Output = Surd;
    /// Panics on division by zero, like integer division.
    fn div(self, rhs: Surd) -> Surd {
        &self * &rhs.recip().expect("division by zero in Q(√2)")
    }
}

fn fmt_ratio(r: &BigRational) -> String {
    if r.is_integer() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

impl fmt::Display for Surd {
    /// Renders `a + b√2` compactly: `0`, `3/2`, `√2`, `-√2/2`, `1 + √2`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let a = &self.rational;
        let b = &self.irrational;
        let irr = |b: &BigRational| -> String {
            let mag = b.abs();
            let body = if mag.numer() == mag.denom() {
                "√2".to_string()
            } else if mag.is_integer() {
                format!("{}√2", mag.numer())
            } else if mag.numer() == &BigInt::from(1) {
                format!("√2/{}", mag.denom())
            } else {
                format!("{}√2/{}", mag.numer(), mag.denom())
            };
            body
        };
        match (a.is_zero(), b.is_zero()) {
            (true, true) => write!(f, "0"),
            (false, true) => write!(f, "{}", fmt_ratio(a)),
            (true, false) => {
                if b.is_negative() {
                    write!(f, "-{}", irr(b))
                } else {
                    write!(f, "{}", irr(b))
                }
            }
            (false, false) => {
                let op = if b.is_negative() { "-" } else { "+" };
                write!(f, "({} {} {})", fmt_ratio(a), op, irr(b))
            }
        }
    }
}

/// Serialized as `{ "rational": "p/q", "sqrt2": "r/s" }`.
#[derive(Serialize, Deserialize)]
struct SurdRepr {
    rational: String,
    #[serde(default = "zero_str")]
    sqrt2: String,
}

fn zero_str() -> String {
    "0".into()
}

fn parse_ratio(s: &str) -> std::result::Result<BigRational, String> {
    let s = s.trim();
    let parse_int = |t: &str| t.trim().parse::<BigInt>().map_err(|e| format!("`{t}`: {e}"));
    match s.split_once('/') {
        Some((n, d)) => {
            let d = parse_int(d)?;
            if d.is_zero() {
                return Err(format!("`{s}`: zero denominator"));
            }
            Ok(BigRational::new(parse_int(n)?, d))
        }
        None => Ok(BigRational::from_integer(parse_int(s)?)),
    }
}

impl Serialize for Surd {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        SurdRepr {
            rational: fmt_ratio(&self.rational),
            sqrt2: fmt_ratio(&self.irrational),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for Surd {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let repr = SurdRepr::deserialize(d)?;
        let a = parse_ratio(&repr.rational).map_err(serde::de::Error::custom)?;
        let b = parse_ratio(&repr.sqrt2).map_err(serde::de::Error::custom)?;
        Ok(Surd::new(a, b))
    }
}

impl std::str::FromStr for Surd {
    type Err = crate::error::Error;

    /// Accepts `p`, `p/q`, `sqrt2`, `-sqrt2`, `sqrt2/q`, `1/sqrt2`, `-1/sqrt2`.
    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim().replace('√', "sqrt");
        let (neg, body) = match t.strip_prefix('-') {
            Some(rest) => (true, rest.to_string()),
            None => (false, t.clone()),
        };
        let v = match body.as_str() {
            "sqrt2" => Surd::sqrt2(),
            "1/sqrt2" => Surd::inv_sqrt2(),
            other => {
                if let Some(den) = other.strip_prefix("sqrt2/") {
                    let q = parse_ratio(den).map_err(domain)?;
                    Surd::new(BigRational::zero(), q.recip())
                } else {
                    Surd::new(parse_ratio(other).map_err(domain)?, BigRational::zero())
                }
            }
        };
        Ok(if neg { -v } else { v })
    }
}
