//! Symbolic eps-parameterised expressions.
//!
//! A [`NetExpr`] describes one representative `u_eps(x)` of a net: a smooth
//! function of `x1..xd` whose only eps dependence is through rational powers
//! `eps^q`. Expressions are immutable once built; [`parse`],
//! [`differentiate`], [`simplify`] and the evaluators are pure.

mod diff;
mod eval;
mod interval;
mod parse;
pub mod primitives;
mod simplify;

pub use diff::{differentiate, differentiate_with_cap};
pub use eval::{evaluate, evaluate_at, evaluate_with, EvalError};
pub use interval::{enclose, vanishes_on, Interval};
pub use parse::{parse, parse_raw, ParseError, ParseErrorKind};
pub use simplify::simplify;

use num_rational::Rational64;
use num_traits::{Signed, Zero};
use std::fmt;

/// Node-count cap applied after differentiation + simplification.
pub const DEFAULT_SIZE_CAP: usize = 100_000;

/// Highest spatial dimension supported by the parser.
pub const MAX_DIMENSION: usize = 3;

#[derive(Clone, Debug, PartialEq)]
pub enum NetExpr {
    Const(f64),
    /// Zero-based coordinate index (`x1` is `Var(0)`).
    Var(usize),
    Eps,
    EpsPow(Rational64),
    Add(Vec<NetExpr>),
    Mul(Vec<NetExpr>),
    Sub(Box<NetExpr>, Box<NetExpr>),
    Div(Box<NetExpr>, Box<NetExpr>),
    IntPow(Box<NetExpr>, i32),
    Sin(Box<NetExpr>),
    Cos(Box<NetExpr>),
    Exp(Box<NetExpr>),
    /// `order`-th derivative of the bump primitive applied to `arg`.
    Bump { order: u32, arg: Box<NetExpr> },
    /// `order`-th derivative of the cutoff primitive applied to `arg`.
    Cutoff { order: u32, arg: Box<NetExpr> },
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ExprError {
    #[error("variable index {index} out of range for dimension {dimension}")]
    VariableOutOfRange { index: usize, dimension: usize },
    #[error("expression grew to {size} nodes, above the cap of {cap}")]
    SizeCapExceeded { size: usize, cap: usize },
    #[error("primitive derivative order {0} exceeds the supported maximum")]
    OrderTooHigh(u32),
}

impl NetExpr {
    pub fn constant(c: f64) -> Self {
        NetExpr::Const(c)
    }

    pub fn eps_pow(q: Rational64) -> Self {
        NetExpr::EpsPow(q)
    }

    pub fn var(i: usize) -> Self {
        NetExpr::Var(i)
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, NetExpr::Const(c) if *c == 0.0)
    }

    pub fn is_one(&self) -> bool {
        matches!(self, NetExpr::Const(c) if *c == 1.0)
    }

    pub fn children(&self) -> Vec<&NetExpr> {
        use NetExpr::*;
        match self {
            Const(_) | Var(_) | Eps | EpsPow(_) => Vec::new(),
            Add(v) | Mul(v) => v.iter().collect(),
            Sub(a, b) | Div(a, b) => vec![a, b],
            IntPow(b, _) => vec![b],
            Sin(a) | Cos(a) | Exp(a) => vec![a],
            Bump { arg, .. } | Cutoff { arg, .. } => vec![arg],
        }
    }

    pub fn node_count(&self) -> usize {
        1 + self.children().iter().map(|c| c.node_count()).sum::<usize>()
    }

    /// Largest variable index used, if any.
    pub fn max_var(&self) -> Option<usize> {
        match self {
            NetExpr::Var(i) => Some(*i),
            _ => self.children().iter().filter_map(|c| c.max_var()).max(),
        }
    }

    pub fn check_dimension(&self, dimension: usize) -> Result<(), ExprError> {
        match self.max_var() {
            Some(i) if i >= dimension => Err(ExprError::VariableOutOfRange {
                index: i,
                dimension,
            }),
            _ => Ok(()),
        }
    }

    /// Heuristic finest spatial scale: the largest `q` such that `eps^-q`
    /// multiplies a coordinate inside a transcendental or primitive head.
    pub fn oscillation_hint(&self) -> Rational64 {
        fn neg_eps_exponent(e: &NetExpr) -> Rational64 {
            // most negative eps exponent reachable inside an argument
            match e {
                NetExpr::EpsPow(q) if q.is_negative() => -*q,
                NetExpr::Eps | NetExpr::EpsPow(_) | NetExpr::Const(_) | NetExpr::Var(_) => {
                    Rational64::zero()
                }
                NetExpr::Mul(v) => v.iter().map(neg_eps_exponent).sum(),
                NetExpr::Div(a, b) => {
                    let mut q = neg_eps_exponent(a);
                    match b.as_ref() {
                        NetExpr::EpsPow(p) if p.is_positive() => q += *p,
                        NetExpr::Eps => q += Rational64::from_integer(1),
                        _ => {}
                    }
                    q
                }
                NetExpr::IntPow(b, n) => neg_eps_exponent(b) * Rational64::from_integer(*n as i64).abs(),
                other => other
                    .children()
                    .iter()
                    .map(|c| neg_eps_exponent(c))
                    .max()
                    .unwrap_or_else(Rational64::zero),
            }
        }
        match self {
            NetExpr::Sin(a) | NetExpr::Cos(a) | NetExpr::Exp(a) => {
                neg_eps_exponent(a).max(a.oscillation_hint())
            }
            NetExpr::Bump { arg, .. } | NetExpr::Cutoff { arg, .. } => {
                neg_eps_exponent(arg).max(arg.oscillation_hint())
            }
            _ => self
                .children()
                .iter()
                .map(|c| c.oscillation_hint())
                .max()
                .unwrap_or_else(Rational64::zero),
        }
    }
}


fn fmt_rational_exponent(q: &Rational64) -> String {
    if q.is_integer() {
        let n = q.to_integer();
        if n < 0 {
            format!("({n})")
        } else {
            format!("{n}")
        }
    } else {
        format!("({}/{})", q.numer(), q.denom())
    }
}

fn fmt_const(c: f64) -> String {
    if c < 0.0 {
        format!("(-{:?})", -c)
    } else {
        format!("{c:?}")
    }
}

/// Binding strength used to decide where parentheses are needed.
fn precedence(e: &NetExpr) -> u8 {
    use NetExpr::*;
    match e {
        Add(v) if v.len() > 1 => 1,
        Sub(..) => 1,
        Mul(v) if v.len() > 1 => 2,
        Div(..) => 2,
        IntPow(..) => 4,
        Add(v) | Mul(v) if v.len() == 1 => precedence(&v[0]),
        Add(_) | Mul(_) => 5,
        // `eps^q` binds like a power
        EpsPow(q) if *q != Rational64::from_integer(1) => 4,
        _ => 5,
    }
}

fn wrap(e: &NetExpr, min_prec: u8) -> String {
    if precedence(e) < min_prec {
        format!("({e})")
    } else {
        e.to_string()
    }
}

impl fmt::Display for NetExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        use NetExpr::*;
        match self {
            Const(c) => write!(f, "{}", fmt_const(*c)),
            Var(i) => write!(f, "x{}", i + 1),
            Eps => write!(f, "eps"),
            EpsPow(q) if *q == Rational64::from_integer(1) => write!(f, "eps"),
            EpsPow(q) => write!(f, "eps^{}", fmt_rational_exponent(q)),
            Add(v) if v.is_empty() => write!(f, "0.0"),
            Mul(v) if v.is_empty() => write!(f, "1.0"),
            Add(v) => {
                let parts: Vec<String> = v.iter().map(|c| wrap(c, 2)).collect();
                write!(f, "{}", parts.join(" + "))
            }
            Mul(v) => {
                let parts: Vec<String> = v.iter().map(|c| wrap(c, 3)).collect();
                write!(f, "{}", parts.join("*"))
            }
            Sub(a, b) => write!(f, "{} - {}", wrap(a, 1), wrap(b, 2)),
            Div(a, b) => write!(f, "{}/{}", wrap(a, 3), wrap(b, 4)),
            IntPow(b, n) => {
                let exp = if *n < 0 {
                    format!("({n})")
                } else {
                    n.to_string()
                };
                write!(f, "{}^{}", wrap(b, 5), exp)
            }
            Sin(a) => write!(f, "sin({a})"),
            Cos(a) => write!(f, "cos({a})"),
            Exp(a) => write!(f, "exp({a})"),
            Bump { order: 0, arg } => write!(f, "bump({arg})"),
            Bump { order, arg } => write!(f, "bump_d{order}({arg})"),
            Cutoff { order: 0, arg } => write!(f, "cutoff({arg})"),
            Cutoff { order, arg } => write!(f, "cutoff_d{order}({arg})"),
        }
    }
}
