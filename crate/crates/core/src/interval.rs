/// Closed interval `[lo, hi]` on the real line.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Self {
        debug_assert!(lo <= hi, "inverted interval [{lo}, {hi}]");
        Self { lo, hi }
    }

    pub fn point(x: f64) -> Self {
        Self { lo: x, hi: x }
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }

    pub fn is_subset_of(&self, other: &Interval) -> bool {
        other.lo <= self.lo && self.hi <= other.hi
    }

    pub fn is_degenerate(&self) -> bool {
        self.lo == self.hi
    }

    pub fn hull(&self, other: &Interval) -> Interval {
        Interval {
            lo: self.lo.min(other.lo),
            hi: self.hi.max(other.hi),
        }
    }

    /// Smallest interval containing both `self` and `x`.
    pub fn include(&self, x: f64) -> Interval {
        Interval {
            lo: self.lo.min(x),
            hi: self.hi.max(x),
        }
    }

    pub fn intersect(&self, other: &Interval) -> Option<Interval> {
        let lo = self.lo.max(other.lo);
        let hi = self.hi.min(other.hi);
        (lo <= hi).then_some(Interval { lo, hi })
    }

    pub fn clamp(&self, bounds: &Interval) -> Interval {
        let lo = self.lo.clamp(bounds.lo, bounds.hi);
        let hi = self.hi.clamp(bounds.lo, bounds.hi);
        Interval { lo, hi: hi.max(lo) }
    }

    pub fn scale(&self, k: f64) -> Interval {
        debug_assert!(k > 0.0);
        Interval {
            lo: self.lo * k,
            hi: self.hi * k,
        }
    }

    /// Length in natural-log space. Requires positive endpoints.
    pub fn log_len(&self) -> f64 {
        self.hi.ln() - self.lo.ln()
    }

    pub fn is_positive(&self) -> bool {
        self.lo > 0.0 && self.hi > 0.0 && self.lo.is_finite() && self.hi.is_finite()
    }
}

impl std::fmt::Display for Interval {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "[{}, {}]", self.lo, self.hi)
    }
}
