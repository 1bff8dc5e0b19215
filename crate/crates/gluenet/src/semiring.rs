//! Exact commutative semirings of scalars.
//!
//! Every coefficient in the system is an element of one of the built-in
//! semirings below. All arithmetic is exact: booleans, arbitrary-precision
//! integers, or arbitrary-precision rationals. Floating point never appears.

use std::fmt;
use std::str::FromStr;

use num::bigint::Sign;
use num::{BigInt, BigRational, BigUint, One, Signed, Zero};
use serde::{Deserialize, Serialize};

/// The built-in scalar semirings, selected by name.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Semiring {
    /// Booleans under join/meet; models relational scalars.
    Bool,
    /// Arbitrary-precision natural numbers.
    Nat,
    /// Arbitrary-precision integers.
    Int,
    /// Exact rationals.
    Rat,
    /// Exact rationals restricted to be nonnegative.
    NonnegRat,
}

/// An element of one of the built-in semirings.
///
/// All numeric semirings share the rational representation; the owning
/// [`Semiring`] constrains which rationals are admissible (integral,
/// nonnegative, ...). `Bool` elements are kept apart so that join/meet
/// arithmetic cannot be confused with numeric arithmetic.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Scalar {
    Bool(bool),
    Num(BigRational),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SemiringError {
    UnknownName(String),
    Unparseable { semiring: Semiring, text: String },
    OutsideDomain { semiring: Semiring, text: String },
}

impl fmt::Display for SemiringError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SemiringError::UnknownName(n) => write!(f, "unknown semiring {n:?}"),
            SemiringError::Unparseable { semiring, text } => {
                write!(f, "cannot parse {text:?} as a {} element", semiring.name())
            }
            SemiringError::OutsideDomain { semiring, text } => {
                write!(f, "{text:?} is not an element of {}", semiring.name())
            }
        }
    }
}

impl std::error::Error for SemiringError {}

impl Semiring {
    pub const ALL: [Semiring; 5] = [
        Semiring::Bool,
        Semiring::Nat,
        Semiring::Int,
        Semiring::Rat,
        Semiring::NonnegRat,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Semiring::Bool => "bool",
            Semiring::Nat => "nat",
            Semiring::Int => "int",
            Semiring::Rat => "rat",
            Semiring::NonnegRat => "nonneg_rat",
        }
    }

    pub fn by_name(name: &str) -> Result<Semiring, SemiringError> {
        Semiring::ALL
            .into_iter()
            .find(|s| s.name() == name)
            .ok_or_else(|| SemiringError::UnknownName(name.to_string()))
    }

    pub fn zero(self) -> Scalar {
        match self {
            Semiring::Bool => Scalar::Bool(false),
            _ => Scalar::Num(BigRational::zero()),
        }
    }

    pub fn one(self) -> Scalar {
        match self {
            Semiring::Bool => Scalar::Bool(true),
            _ => Scalar::Num(BigRational::one()),
        }
    }

    pub fn add(self, a: &Scalar, b: &Scalar) -> Scalar {
        match (self, a, b) {
            (Semiring::Bool, Scalar::Bool(x), Scalar::Bool(y)) => Scalar::Bool(*x || *y),
            (_, Scalar::Num(x), Scalar::Num(y)) => Scalar::Num(x + y),
            _ => panic!("scalar kind does not match semiring {}", self.name()),
        }
    }

    pub fn mul(self, a: &Scalar, b: &Scalar) -> Scalar {
        match (self, a, b) {
            (Semiring::Bool, Scalar::Bool(x), Scalar::Bool(y)) => Scalar::Bool(*x && *y),
            (_, Scalar::Num(x), Scalar::Num(y)) => Scalar::Num(x * y),
            _ => panic!("scalar kind does not match semiring {}", self.name()),
        }
    }

    /// The additive inverse of `a`, when one exists in this semiring.
    pub fn additive_inverse(self, a: &Scalar) -> Option<Scalar> {
        match (self, a) {
            (Semiring::Bool, Scalar::Bool(x)) => (!x).then_some(Scalar::Bool(false)),
            (Semiring::Int | Semiring::Rat, Scalar::Num(x)) => Some(Scalar::Num(-x)),
            (Semiring::Nat | Semiring::NonnegRat, Scalar::Num(x)) => {
                x.is_zero().then(|| self.zero())
            }
            _ => panic!("scalar kind does not match semiring {}", self.name()),
        }
    }

    /// Whether 0 is the only element with an additive inverse.
    pub fn is_zero_sum_free(self) -> bool {
        match self {
            Semiring::Bool | Semiring::Nat | Semiring::NonnegRat => true,
            Semiring::Int | Semiring::Rat => false,
        }
    }

    /// The image of a natural number under the unique map from the naturals,
    /// i.e. 1 + 1 + ... + 1.
    pub fn from_natural(self, n: &BigUint) -> Scalar {
        match self {
            Semiring::Bool => Scalar::Bool(!n.is_zero()),
            _ => Scalar::Num(BigRational::from(BigInt::from_biguint(Sign::Plus, n.clone()))),
        }
    }

    pub fn contains(self, a: &Scalar) -> bool {
        match (self, a) {
            (Semiring::Bool, Scalar::Bool(_)) => true,
            (Semiring::Nat, Scalar::Num(x)) => x.is_integer() && !x.is_negative(),
            (Semiring::Int, Scalar::Num(x)) => x.is_integer(),
            (Semiring::Rat, Scalar::Num(_)) => true,
            (Semiring::NonnegRat, Scalar::Num(x)) => !x.is_negative(),
            _ => false,
        }
    }

    /// Parses the decimal-string form used in all file formats: booleans as
    /// "0"/"1", integers as signed decimals, rationals as "p/q".
    pub fn parse(self, text: &str) -> Result<Scalar, SemiringError> {
        let text = text.trim();
        let value = match self {
            Semiring::Bool => match text {
                "0" | "false" => Scalar::Bool(false),
                "1" | "true" => Scalar::Bool(true),
                _ => {
                    return Err(SemiringError::Unparseable {
                        semiring: self,
                        text: text.to_string(),
                    })
                }
            },
            _ => {
                let rational = if let Some((num, den)) = text.split_once('/') {
                    let p = BigInt::from_str(num.trim());
                    let q = BigInt::from_str(den.trim());
                    match (p, q) {
                        (Ok(p), Ok(q)) if !q.is_zero() => BigRational::new(p, q),
                        _ => {
                            return Err(SemiringError::Unparseable {
                                semiring: self,
                                text: text.to_string(),
                            })
                        }
                    }
                } else {
                    BigInt::from_str(text)
                        .map(BigRational::from)
                        .map_err(|_| SemiringError::Unparseable {
                            semiring: self,
                            text: text.to_string(),
                        })?
                };
                Scalar::Num(rational)
            }
        };
        if !self.contains(&value) {
            return Err(SemiringError::OutsideDomain {
                semiring: self,
                text: text.to_string(),
            });
        }
        Ok(value)
    }
}

impl Scalar {
    pub fn is_zero(&self) -> bool {
        match self {
            Scalar::Bool(b) => !b,
            Scalar::Num(x) => x.is_zero(),
        }
    }

    pub fn is_one(&self) -> bool {
        match self {
            Scalar::Bool(b) => *b,
            Scalar::Num(x) => x.is_one(),
        }
    }

    /// Convenience constructor for integer literals in tests and builders.
    pub fn int(v: i64) -> Scalar {
        Scalar::Num(BigRational::from(BigInt::from(v)))
    }
}

impl fmt::Display for Scalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Scalar::Bool(false) => write!(f, "0"),
            Scalar::Bool(true) => write!(f, "1"),
            Scalar::Num(x) => {
                if x.is_integer() {
                    write!(f, "{}", x.numer())
                } else {
                    write!(f, "{}/{}", x.numer(), x.denom())
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn elements(s: Semiring) -> Vec<Scalar> {
        match s {
            Semiring::Bool => vec![Scalar::Bool(false), Scalar::Bool(true)],
            Semiring::Nat => [0i64, 1, 2, 3, 7, 41]
                .iter()
                .map(|&v| Scalar::int(v))
                .collect(),
            Semiring::Int => [-5i64, -1, 0, 1, 2, 9]
                .iter()
                .map(|&v| Scalar::int(v))
                .collect(),
            Semiring::Rat => ["-3/2", "0", "1", "2/3", "7"]
                .iter()
                .map(|t| s.parse(t).unwrap())
                .collect(),
            Semiring::NonnegRat => ["0", "1/3", "1", "9/4"]
                .iter()
                .map(|t| s.parse(t).unwrap())
                .collect(),
        }
    }

    #[test]
    fn semiring_laws_hold_on_sampled_triples() {
        for s in Semiring::ALL {
            let elems = elements(s);
            for a in &elems {
                assert_eq!(s.add(a, &s.zero()), *a);
                assert_eq!(s.mul(a, &s.one()), *a);
                assert_eq!(s.mul(a, &s.zero()), s.zero());
                for b in &elems {
                    assert_eq!(s.add(a, b), s.add(b, a));
                    assert_eq!(s.mul(a, b), s.mul(b, a));
                    for c in &elems {
                        assert_eq!(s.add(a, &s.add(b, c)), s.add(&s.add(a, b), c));
                        assert_eq!(s.mul(a, &s.mul(b, c)), s.mul(&s.mul(a, b), c));
                        assert_eq!(
                            s.mul(a, &s.add(b, c)),
                            s.add(&s.mul(a, b), &s.mul(a, c))
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn zero_sum_free_classification() {
        assert!(Semiring::Nat.is_zero_sum_free());
        assert!(!Semiring::Int.is_zero_sum_free());
        assert!(Semiring::NonnegRat.is_zero_sum_free());
        assert!(Semiring::Bool.is_zero_sum_free());
        assert!(!Semiring::Rat.is_zero_sum_free());
    }

    #[test]
    fn classification_consistent_with_inverses() {
        for s in Semiring::ALL {
            for a in elements(s) {
                let inv = s.additive_inverse(&a);
                if s.is_zero_sum_free() && !a.is_zero() {
                    assert!(inv.is_none(), "{} claims inverse for {a}", s.name());
                }
                if let Some(inv) = inv {
                    assert!(s.add(&a, &inv).is_zero());
                }
            }
        }
    }

    #[test]
    fn bool_addition_is_idempotent() {
        let one = Semiring::Bool.one();
        assert_eq!(Semiring::Bool.add(&one, &one), one);
    }

    #[test]
    fn arithmetic_agrees_with_i128_oracle() {
        // Independent check of the big-number backend on random-ish values.
        let pairs = [(37i128, 91i128), (-14, 200), (123456, -98765), (0, -7)];
        for (x, y) in pairs {
            let a = Semiring::Int.parse(&x.to_string()).unwrap();
            let b = Semiring::Int.parse(&y.to_string()).unwrap();
            assert_eq!(Semiring::Int.add(&a, &b).to_string(), (x + y).to_string());
            assert_eq!(Semiring::Int.mul(&a, &b).to_string(), (x * y).to_string());
        }
    }

    #[test]
    fn decimal_strings_round_trip() {
        for s in Semiring::ALL {
            for a in elements(s) {
                let text = a.to_string();
                assert_eq!(s.parse(&text).unwrap(), a, "{} {}", s.name(), text);
            }
        }
    }

    #[test]
    fn domain_checks_reject_out_of_range_text() {
        assert!(Semiring::Nat.parse("-1").is_err());
        assert!(Semiring::NonnegRat.parse("-1/2").is_err());
        assert!(Semiring::Int.parse("1/2").is_err());
        assert!(Semiring::Rat.parse("1/0").is_err());
        assert!(Semiring::Bool.parse("2").is_err());
    }
}
