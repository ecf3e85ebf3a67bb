//! Closed intervals with outward rounding.
//!
//! Every operation widens its result by one ulp on each side, so the interval
//! contains the exact real result and also every floating-point evaluation
//! of the same expression on points of the operands.

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Self {
        debug_assert!(lo <= hi || lo.is_nan() || hi.is_nan());
        Interval { lo, hi }
    }

    pub fn point(x: f64) -> Self {
        Interval { lo: x, hi: x }
    }

    pub fn widen(self) -> Self {
        Interval {
            lo: self.lo.next_down(),
            hi: self.hi.next_up(),
        }
    }

    /// `self + other`
    pub fn add(self, other: Interval) -> Self {
        Interval::new(self.lo + other.lo, self.hi + other.hi).widen()
    }

    /// `w · self` for a scalar `w`.
    pub fn scale(self, w: f64) -> Self {
        let (a, b) = (w * self.lo, w * self.hi);
        Interval::new(a.min(b), a.max(b)).widen()
    }

    pub fn contains(&self, x: f64) -> bool {
        x >= self.lo && x <= self.hi
    }
}
