use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// A Lebesgue exponent `p` in `[1, inf]`.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd)]
pub struct Exponent(f64);

impl Exponent {
    pub const ONE: Exponent = Exponent(1.0);
    pub const TWO: Exponent = Exponent(2.0);
    pub const INFINITY: Exponent = Exponent(f64::INFINITY);

    pub fn new(p: f64) -> Result<Self> {
        if p >= 1.0 {
            Ok(Exponent(p))
        } else {
            Err(Error::BadExponent(p))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }

    pub fn is_infinite(self) -> bool {
        self.0.is_infinite()
    }

    /// Hölder conjugate `q` with `1/p + 1/q = 1`.
    pub fn conjugate(self) -> Exponent {
        if self.0 == 1.0 {
            Exponent::INFINITY
        } else if self.is_infinite() {
            Exponent::ONE
        } else {
            Exponent(self.0 / (self.0 - 1.0))
        }
    }

    /// `p`-norm of a sequence of moduli.
    pub fn norm<I: IntoIterator<Item = f64>>(self, moduli: I) -> f64 {
        let p = self.0;
        if p.is_infinite() {
            moduli.into_iter().fold(0.0, f64::max)
        } else if p == 1.0 {
            moduli.into_iter().sum()
        } else if p == 2.0 {
            moduli.into_iter().map(|m| m * m).sum::<f64>().sqrt()
        } else {
            // scale by the max modulus to avoid overflow and underflow
            let v: Vec<f64> = moduli.into_iter().collect();
            let scale = v.iter().copied().fold(0.0, f64::max);
            if scale == 0.0 {
                return 0.0;
            }
            scale * v.iter().map(|m| (m / scale).powf(p)).sum::<f64>().powf(1.0 / p)
        }
    }

    /// Parses `1`, `1.5`, `inf`, `infinity`.
    pub fn parse(text: &str) -> Result<Self> {
        let t = text.trim().to_ascii_lowercase();
        if t == "inf" || t == "infinity" || t == "∞" {
            return Ok(Exponent::INFINITY);
        }
        let p: f64 = t
            .parse()
            .map_err(|_| Error::Invalid(format!("bad exponent {text:?}")))?;
        if p.is_nan() {
            return Err(Error::BadExponent(p));
        }
        Exponent::new(p)
    }
}

impl fmt::Display for Exponent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_infinite() {
            write!(f, "inf")
        } else {
            write!(f, "{}", self.0)
        }
    }
}

impl Serialize for Exponent {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        if self.is_infinite() {
            s.serialize_str("inf")
        } else {
            s.serialize_f64(self.0)
        }
    }
}

impl<'de> Deserialize<'de> for Exponent {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Text(String),
        }
        let p = match Raw::deserialize(d)? {
            Raw::Num(p) => Exponent::new(p),
            Raw::Text(t) => Exponent::parse(&t),
        };
        p.map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_small_exponents() {
        assert!(Exponent::new(0.5).is_err());
        assert!(Exponent::parse("nan").is_err());
        assert_eq!(Exponent::parse("inf").unwrap(), Exponent::INFINITY);
    }

    #[test]
    fn norms() {
        let v = [3.0, 4.0];
        assert_eq!(Exponent::ONE.norm(v), 7.0);
        assert_eq!(Exponent::TWO.norm(v), 5.0);
        assert_eq!(Exponent::INFINITY.norm(v), 4.0);
        let p3 = Exponent::new(3.0).unwrap().norm(v);
        assert!((p3 - 91f64.powf(1.0 / 3.0)).abs() < 1e-12);
    }

    #[test]
    fn conjugates() {
        assert_eq!(Exponent::ONE.conjugate(), Exponent::INFINITY);
        assert_eq!(Exponent::TWO.conjugate(), Exponent::TWO);
        assert!((Exponent::new(1.5).unwrap().conjugate().value() - 3.0).abs() < 1e-12);
    }
}
