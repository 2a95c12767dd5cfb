//! Outward-rounded f64 intervals. Transcendental results are widened by a few
//! ulps to cover the libm error budget, so enclosures stay valid.

use serde::{Deserialize, Serialize};
use std::ops::{Add, Div, Mul, Neg, Sub};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

fn down(x: f64, ulps: u32) -> f64 {
    (0..ulps).fold(x, |v, _| v.next_down())
}

fn up(x: f64, ulps: u32) -> f64 {
    (0..ulps).fold(x, |v, _| v.next_up())
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Interval {
        assert!(lo <= hi, "empty interval [{lo}, {hi}]");
        Interval { lo, hi }
    }

    pub fn point(x: f64) -> Interval {
        Interval { lo: x, hi: x }
    }

    /// Enclosure of p/q.
    pub fn ratio(p: i64, q: i64) -> Interval {
        let v = p as f64 / q as f64;
        Interval { lo: down(v, 1), hi: up(v, 1) }
    }

    pub fn int(n: i64) -> Interval {
        Interval::ratio(n, 1)
    }

    pub fn mid(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }

    pub fn exp(self) -> Interval {
        Interval { lo: down(self.lo.exp(), 2).max(0.0), hi: up(self.hi.exp(), 2) }
    }

    pub fn ln(self) -> Interval {
        assert!(self.lo > 0.0, "log of non-positive interval");
        Interval { lo: down(self.lo.ln(), 2), hi: up(self.hi.ln(), 2) }
    }

    pub fn max(self, o: Interval) -> Interval {
        Interval { lo: self.lo.max(o.lo), hi: self.hi.max(o.hi) }
    }

    /// Some(true) if certainly ≤, Some(false) if certainly >, None otherwise.
    pub fn le(self, o: Interval) -> Option<bool> {
        if self.hi <= o.lo {
            Some(true)
        } else if self.lo > o.hi {
            Some(false)
        } else {
            None
        }
    }

    pub fn lt(self, o: Interval) -> Option<bool> {
        if self.hi < o.lo {
            Some(true)
        } else if self.lo >= o.hi {
            Some(false)
        } else {
            None
        }
    }
}

impl Add for Interval {
    type Output = Interval;
    fn add(self, o: Interval) -> Interval {
        Interval { lo: down(self.lo + o.lo, 1), hi: up(self.hi + o.hi, 1) }
    }
}

impl Sub for Interval {
    type Output = Interval;
    fn sub(self, o: Interval) -> Interval {
        Interval { lo: down(self.lo - o.hi, 1), hi: up(self.hi - o.lo, 1) }
    }
}

impl Neg for Interval {
    type Output = Interval;
    fn neg(self) -> Interval {
        Interval { lo: -self.hi, hi: -self.lo }
    }
}

impl Mul for Interval {
    type Output = Interval;
    fn mul(self, o: Interval) -> Interval {
        let c = [self.lo * o.lo, self.lo * o.hi, self.hi * o.lo, self.hi * o.hi];
        let lo = c.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = c.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        Interval { lo: down(lo, 1), hi: up(hi, 1) }
    }
}

impl Div for Interval {
    type Output = Interval;
    fn div(self, o: Interval) -> Interval {
        assert!(o.lo > 0.0 || o.hi < 0.0, "division by interval containing zero");
        let c = [self.lo / o.lo, self.lo / o.hi, self.hi / o.lo, self.hi / o.hi];
        let lo = c.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = c.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        Interval { lo: down(lo, 1), hi: up(hi, 1) }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn encloses_known_values() {
        let e = Interval::int(1).exp();
        assert!(e.contains(std::f64::consts::E));
        let l2 = Interval::int(2).ln();
        assert!(l2.contains(std::f64::consts::LN_2));
        let third = Interval::ratio(1, 3);
        assert!(third.lo < third.hi);
        assert_eq!(Interval::int(1).le(Interval::int(2)), Some(true));
        assert_eq!(third.le(third), None);
    }
}
