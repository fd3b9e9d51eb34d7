//! Pointwise evaluation.

use super::primitives::{bump_derivative, cutoff_derivative};
use super::simplify::exponent_f64;
use super::NetExpr;
use crate::scalar::EvalScalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
pub enum EvalError {
    #[error("non-finite intermediate value")]
    NonFinite,
    #[error("division by zero")]
    DivisionByZero,
}

/// Evaluates `e` at `x` for the given `eps` in `f64`.
pub fn evaluate(e: &NetExpr, x: &[f64], eps: f64) -> Result<f64, EvalError> {
    evaluate_with::<f64>(e, x, eps)
}

/// Evaluates in any [`EvalScalar`], e.g. [`LogAbs`](crate::scalar::LogAbs)
/// when the magnitude may leave the `f64` range.
pub fn evaluate_with<S: EvalScalar>(e: &NetExpr, x: &[f64], eps: f64) -> Result<S, EvalError> {
    evaluate_at(e, x, eps, eps.ln())
}

/// As [`evaluate_with`] with `ln eps` supplied by the caller.
pub fn evaluate_at<S: EvalScalar>(
    e: &NetExpr,
    x: &[f64],
    eps: f64,
    ln_eps: f64,
) -> Result<S, EvalError> {
    ev::<S>(e, &Ctx { x, eps, ln_eps })
}

struct Ctx<'a> {
    x: &'a [f64],
    eps: f64,
    ln_eps: f64,
}

fn finite<S: EvalScalar>(v: S) -> Result<S, EvalError> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(EvalError::NonFinite)
    }
}

fn lift<S: EvalScalar>(v: f64) -> Result<S, EvalError> {
    if v.is_finite() {
        Ok(S::from_f64(v))
    } else {
        Err(EvalError::NonFinite)
    }
}

fn ev<S: EvalScalar>(e: &NetExpr, c: &Ctx) -> Result<S, EvalError> {
    use NetExpr::*;
    match e {
        Const(v) => lift(*v),
        Var(i) => lift(c.x[*i]),
        Eps => lift(c.eps),
        EpsPow(q) => finite(S::eps_pow(c.eps, c.ln_eps, exponent_f64(q))),
        Add(v) => {
            let mut acc = S::zero();
            for t in v {
                acc = acc.add(ev(t, c)?);
            }
            finite(acc)
        }
        Sub(a, b) => finite(ev::<S>(a, c)?.sub(ev(b, c)?)),
        Mul(v) => {
            // An exact zero factor wins over errors in the other factors.
            let mut acc = S::one();
            let mut err = None;
            for f in v {
                match ev::<S>(f, c) {
                    Ok(x) if x.is_zero() => return Ok(S::zero()),
                    Ok(x) => acc = acc.mul(x),
                    Err(e) => {
                        err.get_or_insert(e);
                    }
                }
            }
            match err {
                Some(e) => Err(e),
                None => finite(acc),
            }
        }
        Div(a, b) => {
            let num = ev::<S>(a, c);
            if matches!(num, Ok(n) if n.is_zero()) {
                return Ok(S::zero());
            }
            let den = ev::<S>(b, c)?;
            let num = num?;
            if den.is_zero() {
                return Err(EvalError::DivisionByZero);
            }
            finite(num.div(den))
        }
        IntPow(b, n) => {
            let v = ev::<S>(b, c)?;
            if v.is_zero() && *n < 0 {
                return Err(EvalError::DivisionByZero);
            }
            finite(v.powi(*n))
        }
        Sin(a) => lift(ev::<S>(a, c)?.to_f64().sin()),
        Cos(a) => lift(ev::<S>(a, c)?.to_f64().cos()),
        Exp(a) => finite(S::exp_of(ev(a, c)?)),
        Bump { order, arg } => lift(bump_derivative(*order as usize, ev::<S>(arg, c)?.to_f64())),
        Cutoff { order, arg } => {
            lift(cutoff_derivative(*order as usize, ev::<S>(arg, c)?.to_f64()))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse;
    use crate::scalar::LogAbs;

    #[test]
    fn evaluates_basic_net() {
        let e = parse("sin(x1/eps)", 1).unwrap();
        let v = evaluate(&e, &[0.3], 0.1).unwrap();
        assert!((v - 3f64.sin()).abs() < 1e-15);
    }

    #[test]
    fn zero_factor_absorbs_overflow() {
        let e = parse("bump(x1/eps)*exp(x1/eps^4)", 1).unwrap();
        assert_eq!(evaluate(&e, &[0.5], 0.01).unwrap(), 0.0);
        let e = parse("exp(x1/eps^4)", 1).unwrap();
        assert_eq!(evaluate(&e, &[0.5], 0.01), Err(EvalError::NonFinite));
    }

    #[test]
    fn division_by_zero_is_reported() {
        let e = parse("1/x1", 1).unwrap();
        assert_eq!(evaluate(&e, &[0.0], 0.5), Err(EvalError::DivisionByZero));
        let e = parse("x1^(-2)", 1).unwrap();
        assert_eq!(evaluate(&e, &[0.0], 0.5), Err(EvalError::DivisionByZero));
    }

    #[test]
    fn log_scalar_reaches_beyond_f64() {
        let e = parse("3*eps^(-200)*cos(x1)", 1).unwrap();
        assert!(evaluate(&e, &[0.0], 1e-3).is_err());
        let v: LogAbs = evaluate_with(&e, &[0.0], 1e-3).unwrap();
        assert!((v.ln_abs() - (3f64.ln() + 200.0 * 1e3f64.ln())).abs() < 1e-9);
    }

    #[test]
    fn f32_agrees_with_f64() {
        let e = parse("exp(x1)*cutoff(x1) + x1^3/eps", 1).unwrap();
        let a = evaluate(&e, &[1.3], 0.5).unwrap();
        let b: f32 = evaluate_with(&e, &[1.3], 0.5).unwrap();
        assert!((a - b as f64).abs() < 1e-5 * a.abs());
    }
}
