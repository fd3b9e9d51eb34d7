//! Conservative interval enclosure of an expression over a box.
//!
//! Only used to prove that a net vanishes on a region, so enclosures are
//! allowed to be loose; they must never exclude a value the point
//! evaluator can return, apart from the astronomically small tails at the
//! primitive support edges.

use super::simplify::exponent_f64;
use super::NetExpr;
use std::f64::consts::{FRAC_PI_2, PI};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub const ENTIRE: Interval = Interval {
        lo: f64::NEG_INFINITY,
        hi: f64::INFINITY,
    };
    pub const ZERO: Interval = Interval { lo: 0.0, hi: 0.0 };

    pub fn new(lo: f64, hi: f64) -> Self {
        if lo.is_nan() || hi.is_nan() {
            Self::ENTIRE
        } else {
            Interval {
                lo: lo.min(hi),
                hi: lo.max(hi),
            }
        }
    }

    pub fn point(v: f64) -> Self {
        Self::new(v, v)
    }

    pub fn is_zero(&self) -> bool {
        self.lo == 0.0 && self.hi == 0.0
    }

    pub fn contains(&self, v: f64) -> bool {
        self.lo <= v && v <= self.hi
    }

    fn add(self, o: Self) -> Self {
        Self::new(self.lo + o.lo, self.hi + o.hi)
    }

    fn neg(self) -> Self {
        Self::new(-self.hi, -self.lo)
    }

    fn mul(self, o: Self) -> Self {
        if self.is_zero() || o.is_zero() {
            return Self::ZERO;
        }
        let p = [self.lo * o.lo, self.lo * o.hi, self.hi * o.lo, self.hi * o.hi];
        if p.iter().any(|v| v.is_nan()) {
            return Self::ENTIRE;
        }
        Self::new(
            p.iter().copied().fold(f64::INFINITY, f64::min),
            p.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        )
    }

    fn recip(self) -> Self {
        if self.contains(0.0) {
            Self::ENTIRE
        } else {
            Self::new(1.0 / self.hi, 1.0 / self.lo)
        }
    }

    fn powi(self, n: i32) -> Self {
        if n < 0 {
            return self.powi(-n).recip();
        }
        if n % 2 == 1 {
            return Self::new(self.lo.powi(n), self.hi.powi(n));
        }
        let (a, b) = (self.lo.abs(), self.hi.abs());
        let top = a.max(b).powi(n);
        if self.contains(0.0) {
            Self::new(0.0, top)
        } else {
            Self::new(a.min(b).powi(n), top)
        }
    }

    fn sin(self) -> Self {
        if !(self.lo.is_finite() && self.hi.is_finite()) || self.hi - self.lo >= 2.0 * PI {
            return Self::new(-1.0, 1.0);
        }
        let mut lo = self.lo.sin().min(self.hi.sin());
        let mut hi = self.lo.sin().max(self.hi.sin());
        // does the interval contain a crest pi/2 + 2 pi k or a trough?
        let hits = |offset: f64| {
            let k = ((self.lo - offset) / (2.0 * PI)).ceil();
            offset + 2.0 * PI * k <= self.hi
        };
        if hits(FRAC_PI_2) {
            hi = 1.0;
        }
        if hits(-FRAC_PI_2) {
            lo = -1.0;
        }
        // absorb rounding in the endpoint evaluations
        Self::new((lo - 1e-15).max(-1.0), (hi + 1e-15).min(1.0))
    }

    fn exp(self) -> Self {
        Self::new(self.lo.exp(), self.hi.exp())
    }

    fn abs_at_least(&self, r: f64) -> bool {
        self.lo >= r || self.hi <= -r
    }

    fn within(&self, r: f64) -> bool {
        self.lo >= -r && self.hi <= r
    }
}

/// Encloses the values of `e` for `x` in the box `region` at fixed `eps`.
pub fn enclose(e: &NetExpr, region: &[Interval], eps: f64) -> Interval {
    use NetExpr::*;
    match e {
        Const(c) => Interval::point(*c),
        Var(i) => region[*i],
        Eps => Interval::point(eps),
        EpsPow(q) => Interval::point(eps.powf(exponent_f64(q))),
        Add(v) => v
            .iter()
            .fold(Interval::ZERO, |acc, t| acc.add(enclose(t, region, eps))),
        Sub(a, b) => enclose(a, region, eps).add(enclose(b, region, eps).neg()),
        Mul(v) => {
            let parts: Vec<Interval> = v.iter().map(|f| enclose(f, region, eps)).collect();
            if parts.iter().any(Interval::is_zero) {
                return Interval::ZERO;
            }
            parts.into_iter().fold(Interval::point(1.0), Interval::mul)
        }
        Div(a, b) => {
            let num = enclose(a, region, eps);
            if num.is_zero() {
                return Interval::ZERO;
            }
            num.mul(enclose(b, region, eps).recip())
        }
        IntPow(b, n) => enclose(b, region, eps).powi(*n),
        Sin(a) => enclose(a, region, eps).sin(),
        Cos(a) => enclose(a, region, eps)
            .add(Interval::point(FRAC_PI_2))
            .sin(),
        Exp(a) => enclose(a, region, eps).exp(),
        Bump { order, arg } => {
            let t = enclose(arg, region, eps);
            if t.abs_at_least(1.0) {
                Interval::ZERO
            } else if *order == 0 {
                Interval::new(0.0, (-1.0f64).exp())
            } else {
                Interval::ENTIRE
            }
        }
        Cutoff { order, arg } => {
            let t = enclose(arg, region, eps);
            if t.abs_at_least(2.0) {
                Interval::ZERO
            } else if *order == 0 {
                if t.within(1.0) {
                    Interval::point(1.0)
                } else {
                    Interval::new(0.0, 1.0)
                }
            } else if t.within(1.0) {
                Interval::ZERO
            } else {
                Interval::ENTIRE
            }
        }
    }
}

/// True when `e` is provably identically zero on `region`.
pub fn vanishes_on(e: &NetExpr, region: &[Interval], eps: f64) -> bool {
    enclose(e, region, eps).is_zero()
}
