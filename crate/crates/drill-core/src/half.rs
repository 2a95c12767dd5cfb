//! Exact half-integers. Gromov products and 4-point defects of graph metrics
//! always land in ½ℤ.

use num_rational::Ratio;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::ops::{Add, Sub};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Half(i64);

impl Half {
    pub const ZERO: Half = Half(0);

    pub fn from_twice(twice: i64) -> Half {
        Half(twice)
    }
    pub fn from_int(n: i64) -> Half {
        Half(2 * n)
    }
    pub fn twice(self) -> i64 {
        self.0
    }
    pub fn is_integer(self) -> bool {
        self.0 % 2 == 0
    }
    pub fn floor(self) -> i64 {
        self.0.div_euclid(2)
    }
    pub fn ceil(self) -> i64 {
        -((-self.0).div_euclid(2))
    }
    pub fn to_f64(self) -> f64 {
        self.0 as f64 / 2.0
    }
    pub fn to_ratio(self) -> Ratio<i64> {
        Ratio::new(self.0, 2)
    }
    /// Multiply by an integer.
    pub fn times(self, k: i64) -> Half {
        Half(self.0 * k)
    }
}

impl Add for Half {
    type Output = Half;
    fn add(self, o: Half) -> Half {
        Half(self.0 + o.0)
    }
}

impl Sub for Half {
    type Output = Half;
    fn sub(self, o: Half) -> Half {
        Half(self.0 - o.0)
    }
}

impl fmt::Display for Half {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0 % 2 == 0 {
            write!(f, "{}", self.0 / 2)
        } else {
            write!(f, "{}.5", if self.0 < 0 && self.0 > -2 { "-0".to_string() } else { (self.0 / 2).to_string() })
        }
    }
}

impl Serialize for Half {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_f64(self.to_f64())
    }
}

impl<'de> Deserialize<'de> for Half {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Half, D::Error> {
        let v = f64::deserialize(d)?;
        let t = v * 2.0;
        if t.fract() != 0.0 {
            return Err(serde::de::Error::custom("not a half-integer"));
        }
        Ok(Half(t as i64))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn display_and_rounding() {
        assert_eq!(Half::from_twice(5).to_string(), "2.5");
        assert_eq!(Half::from_twice(-1).to_string(), "-0.5");
        assert_eq!(Half::from_twice(-3).to_string(), "-1.5");
        assert_eq!(Half::from_twice(5).floor(), 2);
        assert_eq!(Half::from_twice(5).ceil(), 3);
        assert_eq!(Half::from_twice(-3).floor(), -2);
        assert_eq!(Half::from_twice(-3).ceil(), -1);
    }
}
