//! Scalar abstractions shared by the numeric kernels.
//!
//! [`Real`] is the floating-point bound used by the generic kernels
//! (quadrature, jets, power scales, fits). [`EvalScalar`] is the narrower
//! arithmetic interface the expression evaluator runs on; besides the IEEE
//! types it is implemented by [`LogAbs`], a sign/log-magnitude number that
//! keeps steep nets (p_k ~ eps^-60 and beyond) representable.

use num_traits::{Float, FromPrimitive};
use std::fmt::Debug;

pub trait Real: Float + FromPrimitive + Debug + Send + Sync + 'static {
    #[inline]
    fn lit(v: f64) -> Self {
        Self::from_f64(v).expect("literal representable in scalar type")
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Arithmetic needed to evaluate a [`NetExpr`](crate::expr::NetExpr).
///
/// Transcendental heads evaluate their argument, convert it to `f64` and
/// lift the result back, so only ring operations and `eps` powers need a
/// native implementation.
pub trait EvalScalar: Copy + Debug + Send + Sync {
    fn from_f64(v: f64) -> Self;
    fn zero() -> Self;
    fn one() -> Self;
    fn is_zero(self) -> bool;
    fn is_finite(self) -> bool;
    fn add(self, other: Self) -> Self;
    fn sub(self, other: Self) -> Self;
    fn mul(self, other: Self) -> Self;
    fn div(self, other: Self) -> Self;
    fn powi(self, n: i32) -> Self;
    /// `eps^q` given `ln eps`.
    fn eps_pow(eps: f64, ln_eps: f64, q: f64) -> Self;
    /// `exp(arg)`; lets the log representation skip the overflow.
    fn exp_of(arg: Self) -> Self;
    fn to_f64(self) -> f64;
    /// `ln |self|` (`-inf` for zero).
    fn ln_abs(self) -> f64;
}

macro_rules! impl_eval_scalar_float {
    ($t:ty) => {
        impl EvalScalar for $t {
            #[inline]
            fn from_f64(v: f64) -> Self {
                v as $t
            }
            #[inline]
            fn zero() -> Self {
                0.0
            }
            #[inline]
            fn one() -> Self {
                1.0
            }
            #[inline]
            fn is_zero(self) -> bool {
                self == 0.0
            }
            #[inline]
            fn is_finite(self) -> bool {
                <$t>::is_finite(self)
            }
            #[inline]
            fn add(self, other: Self) -> Self {
                self + other
            }
            #[inline]
            fn sub(self, other: Self) -> Self {
                self - other
            }
            #[inline]
            fn mul(self, other: Self) -> Self {
                self * other
            }
            #[inline]
            fn div(self, other: Self) -> Self {
                self / other
            }
            #[inline]
            fn powi(self, n: i32) -> Self {
                <$t>::powi(self, n)
            }
            #[inline]
            fn eps_pow(eps: f64, _ln_eps: f64, q: f64) -> Self {
                if q == 1.0 {
                    eps as $t
                } else if q == -1.0 {
                    (1.0 / eps) as $t
                } else {
                    eps.powf(q) as $t
                }
            }
            #[inline]
            fn exp_of(arg: Self) -> Self {
                arg.exp()
            }
            #[inline]
            fn to_f64(self) -> f64 {
                self as f64
            }
            #[inline]
            fn ln_abs(self) -> f64 {
                (self as f64).abs().ln()
            }
        }
    };
}

impl_eval_scalar_float!(f32);
impl_eval_scalar_float!(f64);

/// A real number stored as sign and natural log of its magnitude.
///
/// Zero is `ln = -inf`. Addition goes through a signed log-sum-exp.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LogAbs {
    pub negative: bool,
    pub ln: f64,
}

impl LogAbs {
    pub const ZERO: LogAbs = LogAbs {
        negative: false,
        ln: f64::NEG_INFINITY,
    };

    pub fn new(negative: bool, ln: f64) -> Self {
        if ln == f64::NEG_INFINITY {
            Self::ZERO
        } else {
            LogAbs { negative, ln }
        }
    }

    fn neg(self) -> Self {
        if self.is_zero() {
            self
        } else {
            LogAbs::new(!self.negative, self.ln)
        }
    }
}

impl EvalScalar for LogAbs {
    fn from_f64(v: f64) -> Self {
        if v == 0.0 {
            Self::ZERO
        } else {
            LogAbs::new(v < 0.0, v.abs().ln())
        }
    }
    fn zero() -> Self {
        Self::ZERO
    }
    fn one() -> Self {
        LogAbs::new(false, 0.0)
    }
    fn is_zero(self) -> bool {
        self.ln == f64::NEG_INFINITY
    }
    fn is_finite(self) -> bool {
        self.ln.is_finite() || self.is_zero()
    }
    fn add(self, other: Self) -> Self {
        if self.is_zero() {
            return other;
        }
        if other.is_zero() {
            return self;
        }
        let (big, small) = if self.ln >= other.ln {
            (self, other)
        } else {
            (other, self)
        };
        let ratio = (small.ln - big.ln).exp();
        if big.negative == small.negative {
            LogAbs::new(big.negative, big.ln + ratio.ln_1p())
        } else if ratio == 1.0 {
            Self::ZERO
        } else {
            LogAbs::new(big.negative, big.ln + (-ratio).ln_1p())
        }
    }
    fn sub(self, other: Self) -> Self {
        self.add(other.neg())
    }
    fn mul(self, other: Self) -> Self {
        if self.is_zero() || other.is_zero() {
            return Self::ZERO;
        }
        LogAbs::new(self.negative != other.negative, self.ln + other.ln)
    }
    fn div(self, other: Self) -> Self {
        if self.is_zero() {
            return Self::ZERO;
        }
        LogAbs::new(self.negative != other.negative, self.ln - other.ln)
    }
    fn powi(self, n: i32) -> Self {
        if n == 0 {
            return Self::one();
        }
        if self.is_zero() {
            return if n > 0 {
                Self::ZERO
            } else {
                LogAbs::new(false, f64::INFINITY)
            };
        }
        LogAbs::new(self.negative && n % 2 != 0, self.ln * n as f64)
    }
    fn eps_pow(_eps: f64, ln_eps: f64, q: f64) -> Self {
        LogAbs::new(false, q * ln_eps)
    }
    fn exp_of(arg: Self) -> Self {
        LogAbs::new(false, arg.to_f64())
    }
    fn to_f64(self) -> f64 {
        let m = self.ln.exp();
        if self.negative {
            -m
        } else {
            m
        }
    }
    fn ln_abs(self) -> f64 {
        self.ln
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn log_abs_ring_ops_match_f64() {
        let vals = [3.5, -2.25, 0.0, 1e-3, -7.0];
        for &a in &vals {
            for &b in &vals {
                let (la, lb) = (LogAbs::from_f64(a), LogAbs::from_f64(b));
                let check = |got: LogAbs, want: f64| {
                    let g = got.to_f64();
                    assert!((g - want).abs() <= 1e-12 * want.abs().max(1.0), "{g} vs {want}");
                };
                check(la.add(lb), a + b);
                check(la.sub(lb), a - b);
                check(la.mul(lb), a * b);
                if b != 0.0 {
                    check(la.div(lb), a / b);
                }
            }
        }
    }

    #[test]
    fn log_abs_survives_overflow() {
        let big = <LogAbs as EvalScalar>::eps_pow(1e-6, (1e-6f64).ln(), -80.0);
        assert!(big.is_finite());
        assert!((big.ln_abs() - 80.0 * 1e6f64.ln()).abs() < 1e-9);
        let f = <f64 as EvalScalar>::eps_pow(1e-6, (1e-6f64).ln(), -80.0);
        assert!(!EvalScalar::is_finite(f));
    }

    #[test]
    fn exact_cancellation_is_zero() {
        let a = LogAbs::from_f64(2.0);
        assert!(a.sub(a).is_zero());
    }
}
