//! Exact coefficient arithmetic over the supported ground rings.
//!
//! Every coefficient in the system is a [`Scalar`]: an integer, a rational,
//! or a canonical residue mod a prime. There is no floating point anywhere.

use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

/// Tag for the ground ring all coefficients of one structure live in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Ring {
    /// The integers.
    Int,
    /// The rationals.
    Rat,
    /// Integers mod a prime `p`, residues kept in `[0, p)`.
    Mod(u64),
}

impl fmt::Display for Ring {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Ring::Int => write!(f, "Z"),
            Ring::Rat => write!(f, "Q"),
            Ring::Mod(p) => write!(f, "Z/{}", p),
        }
    }
}

impl Ring {
    pub fn is_characteristic_two(&self) -> bool {
        matches!(self, Ring::Mod(2))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ScalarError {
    #[error("mixed rings: {0} and {1}")]
    RingMismatch(Ring, Ring),
    #[error("cannot parse {text:?} as a coefficient in {ring}")]
    Parse { text: String, ring: Ring },
    #[error("{0} is not prime")]
    NotPrime(u64),
    #[error("zero denominator in {0:?}")]
    ZeroDenominator(String),
}

/// An exact element of one of the supported rings.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Scalar {
    Int(BigInt),
    Rat(BigRational),
    Mod { p: u64, value: u64 },
}

impl Scalar {
    pub fn ring(&self) -> Ring {
        match self {
            Scalar::Int(_) => Ring::Int,
            Scalar::Rat(_) => Ring::Rat,
            Scalar::Mod { p, .. } => Ring::Mod(*p),
        }
    }

    pub fn zero(ring: Ring) -> Self {
        Scalar::from_i64(ring, 0)
    }

    pub fn one(ring: Ring) -> Self {
        Scalar::from_i64(ring, 1)
    }

    pub fn from_i64(ring: Ring, n: i64) -> Self {
        match ring {
            Ring::Int => Scalar::Int(BigInt::from(n)),
            Ring::Rat => Scalar::Rat(BigRational::from(BigInt::from(n))),
            Ring::Mod(p) => {
                let r = n.rem_euclid(p as i64) as u64;
                Scalar::Mod { p, value: r }
            }
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            Scalar::Int(n) => n.is_zero(),
            Scalar::Rat(q) => q.is_zero(),
            Scalar::Mod { value, .. } => *value == 0,
        }
    }

    pub fn is_one(&self) -> bool {
        match self {
            Scalar::Int(n) => n.is_one(),
            Scalar::Rat(q) => q.is_one(),
            Scalar::Mod { value, .. } => *value == 1,
        }
    }

    fn check_ring(&self, other: &Scalar) -> Result<(), ScalarError> {
        if self.ring() == other.ring() {
            Ok(())
        } else {
            Err(ScalarError::RingMismatch(self.ring(), other.ring()))
        }
    }

    pub fn add(&self, other: &Scalar) -> Scalar {
        self.check_ring(other).expect("scalar ring mismatch");
        match (self, other) {
            (Scalar::Int(a), Scalar::Int(b)) => Scalar::Int(a + b),
            (Scalar::Rat(a), Scalar::Rat(b)) => Scalar::Rat(a + b),
            (Scalar::Mod { p, value: a }, Scalar::Mod { value: b, .. }) => Scalar::Mod {
                p: *p,
                value: ((*a as u128 + *b as u128) % *p as u128) as u64,
            },
            _ => unreachable!(),
        }
    }

    pub fn mul(&self, other: &Scalar) -> Scalar {
        self.check_ring(other).expect("scalar ring mismatch");
        match (self, other) {
            (Scalar::Int(a), Scalar::Int(b)) => Scalar::Int(a * b),
            (Scalar::Rat(a), Scalar::Rat(b)) => Scalar::Rat(a * b),
            (Scalar::Mod { p, value: a }, Scalar::Mod { value: b, .. }) => Scalar::Mod {
                p: *p,
                value: ((*a as u128 * *b as u128) % *p as u128) as u64,
            },
            _ => unreachable!(),
        }
    }

    pub fn neg(&self) -> Scalar {
        match self {
            Scalar::Int(a) => Scalar::Int(-a),
            Scalar::Rat(a) => Scalar::Rat(-a),
            Scalar::Mod { p, value } => Scalar::Mod {
                p: *p,
                value: if *value == 0 { 0 } else { p - value },
            },
        }
    }

    pub fn sub(&self, other: &Scalar) -> Scalar {
        self.add(&other.neg())
    }

    /// Parses a decimal integer or a `p/q` rational (rationals only over `Q`);
    /// mod-p coefficients reduce at parse time.
    pub fn parse(ring: Ring, text: &str) -> Result<Scalar, ScalarError> {
        let err = || ScalarError::Parse {
            text: text.to_owned(),
            ring,
        };
        let text = text.trim();
        if let Some((num, den)) = text.split_once('/') {
            if ring != Ring::Rat {
                return Err(err());
            }
            let num = BigInt::from_str(num.trim()).map_err(|_| err())?;
            let den = BigInt::from_str(den.trim()).map_err(|_| err())?;
            if den.is_zero() {
                return Err(ScalarError::ZeroDenominator(text.to_owned()));
            }
            return Ok(Scalar::Rat(BigRational::new(num, den)));
        }
        let n = BigInt::from_str(text).map_err(|_| err())?;
        Ok(match ring {
            Ring::Int => Scalar::Int(n),
            Ring::Rat => Scalar::Rat(BigRational::from(n)),
            Ring::Mod(p) => {
                let p_big = BigInt::from(p);
                let mut r = &n % &p_big;
                if r.is_negative() {
                    r += &p_big;
                }
                let (_, digits) = r.to_u64_digits();
                Scalar::Mod {
                    p,
                    value: digits.first().copied().unwrap_or(0),
                }
            }
        })
    }

    /// Renders the value in the same syntax `parse` accepts.
    pub fn coefficient_string(&self) -> String {
        match self {
            Scalar::Int(n) => n.to_string(),
            Scalar::Rat(q) => {
                if q.denom().is_one() {
                    q.numer().to_string()
                } else {
                    format!("{}/{}", q.numer(), q.denom())
                }
            }
            Scalar::Mod { value, .. } => value.to_string(),
        }
    }
}

impl fmt::Display for Scalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.coefficient_string())
    }
}

pub fn is_prime(p: u64) -> bool {
    if p < 2 {
        return false;
    }
    let mut d = 2u64;
    while d.saturating_mul(d) <= p {
        if p % d == 0 {
            return false;
        }
        d += 1;
    }
    true
}

/// A bare sign, the common output of the Koszul and suspension rules.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub fn from_exponent(e: i64) -> Sign {
        if e.rem_euclid(2) == 0 {
            Sign::Plus
        } else {
            Sign::Minus
        }
    }

    pub fn compose(self, other: Sign) -> Sign {
        if self == other {
            Sign::Plus
        } else {
            Sign::Minus
        }
    }

    pub fn scalar(self, ring: Ring) -> Scalar {
        match self {
            Sign::Plus => Scalar::one(ring),
            Sign::Minus => Scalar::one(ring).neg(),
        }
    }

    pub fn apply(self, s: &Scalar) -> Scalar {
        match self {
            Sign::Plus => s.clone(),
            Sign::Minus => s.neg(),
        }
    }
}

impl fmt::Display for Sign {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Sign::Plus => write!(f, "+1"),
            Sign::Minus => write!(f, "-1"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mod_p_canonical_range() {
        let s = Scalar::parse(Ring::Mod(5), "-3").unwrap();
        assert_eq!(s, Scalar::Mod { p: 5, value: 2 });
        let t = Scalar::parse(Ring::Mod(5), "12").unwrap();
        assert_eq!(t, Scalar::Mod { p: 5, value: 2 });
        assert_eq!(s.add(&t), Scalar::Mod { p: 5, value: 4 });
        assert_eq!(s.neg(), Scalar::Mod { p: 5, value: 3 });
        assert_eq!(Scalar::zero(Ring::Mod(5)).neg(), Scalar::zero(Ring::Mod(5)));
    }

    #[test]
    fn rational_parse_and_arithmetic() {
        let a = Scalar::parse(Ring::Rat, "2/4").unwrap();
        let b = Scalar::parse(Ring::Rat, "1/2").unwrap();
        assert_eq!(a, b);
        assert_eq!(a.add(&b), Scalar::parse(Ring::Rat, "1").unwrap());
        assert!(Scalar::parse(Ring::Rat, "1/0").is_err());
        assert!(Scalar::parse(Ring::Int, "1/2").is_err());
    }

    #[test]
    fn coefficient_string_round_trip() {
        for text in ["-7", "0", "42"] {
            let s = Scalar::parse(Ring::Int, text).unwrap();
            assert_eq!(Scalar::parse(Ring::Int, &s.coefficient_string()).unwrap(), s);
        }
        let q = Scalar::parse(Ring::Rat, "-3/7").unwrap();
        assert_eq!(Scalar::parse(Ring::Rat, &q.coefficient_string()).unwrap(), q);
    }

    #[test]
    fn primality() {
        assert!(is_prime(2));
        assert!(is_prime(97));
        assert!(!is_prime(1));
        assert!(!is_prime(91));
    }

    #[test]
    fn sign_composition() {
        assert_eq!(Sign::from_exponent(-3), Sign::Minus);
        assert_eq!(Sign::from_exponent(6), Sign::Plus);
        assert_eq!(Sign::Minus.compose(Sign::Minus), Sign::Plus);
        assert_eq!(Sign::Minus.scalar(Ring::Mod(2)), Scalar::one(Ring::Mod(2)));
    }
}
