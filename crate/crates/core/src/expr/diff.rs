//! Symbolic partial differentiation.

use super::primitives::MAX_PRIMITIVE_ORDER;
use super::{simplify, ExprError, NetExpr, DEFAULT_SIZE_CAP};

/// `d e / d x_{var+1}`, simplified, with the default node cap.
pub fn differentiate(e: &NetExpr, var: usize) -> Result<NetExpr, ExprError> {
    differentiate_with_cap(e, var, DEFAULT_SIZE_CAP)
}

pub fn differentiate_with_cap(e: &NetExpr, var: usize, cap: usize) -> Result<NetExpr, ExprError> {
    let raw = d(e, var)?;
    let out = simplify(&raw);
    let size = out.node_count();
    if size > cap {
        return Err(ExprError::SizeCapExceeded { size, cap });
    }
    Ok(out)
}

fn zero() -> NetExpr {
    NetExpr::Const(0.0)
}

fn times(a: NetExpr, b: NetExpr) -> NetExpr {
    if b.is_zero() || a.is_zero() {
        zero()
    } else if b.is_one() {
        a
    } else {
        NetExpr::Mul(vec![a, b])
    }
}

fn next_order(k: u32) -> Result<u32, ExprError> {
    if (k as usize) >= MAX_PRIMITIVE_ORDER {
        Err(ExprError::OrderTooHigh(k + 1))
    } else {
        Ok(k + 1)
    }
}

fn d(e: &NetExpr, var: usize) -> Result<NetExpr, ExprError> {
    use NetExpr::*;
    Ok(match e {
        Const(_) | Eps | EpsPow(_) => zero(),
        Var(i) => Const(if *i == var { 1.0 } else { 0.0 }),
        Add(v) => Add(v.iter().map(|t| d(t, var)).collect::<Result<_, _>>()?),
        Sub(a, b) => Sub(Box::new(d(a, var)?), Box::new(d(b, var)?)),
        Mul(v) => {
            let mut terms = Vec::new();
            for (i, f) in v.iter().enumerate() {
                let df = d(f, var)?;
                if df.is_zero() {
                    continue;
                }
                let mut fs = v.clone();
                fs[i] = df;
                terms.push(Mul(fs));
            }
            Add(terms)
        }
        Div(a, b) => {
            let da = d(a, var)?;
            let db = d(b, var)?;
            let first = if da.is_zero() {
                zero()
            } else {
                Div(Box::new(da), b.clone())
            };
            let second = if db.is_zero() {
                zero()
            } else {
                Div(
                    Box::new(Mul(vec![(**a).clone(), db])),
                    Box::new(IntPow(b.clone(), 2)),
                )
            };
            Sub(Box::new(first), Box::new(second))
        }
        IntPow(b, n) => {
            let db = d(b, var)?;
            times(
                Mul(vec![Const(*n as f64), IntPow(b.clone(), n - 1)]),
                db,
            )
        }
        Sin(a) => times(Cos(a.clone()), d(a, var)?),
        Cos(a) => times(Mul(vec![Const(-1.0), Sin(a.clone())]), d(a, var)?),
        Exp(a) => times(Exp(a.clone()), d(a, var)?),
        Bump { order, arg } => {
            let da = d(arg, var)?;
            if da.is_zero() {
                zero()
            } else {
                times(
                    Bump {
                        order: next_order(*order)?,
                        arg: arg.clone(),
                    },
                    da,
                )
            }
        }
        Cutoff { order, arg } => {
            let da = d(arg, var)?;
            if da.is_zero() {
                zero()
            } else {
                times(
                    Cutoff {
                        order: next_order(*order)?,
                        arg: arg.clone(),
                    },
                    da,
                )
            }
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse;

    fn p(t: &str) -> NetExpr {
        parse(t, 2).unwrap()
    }

    #[test]
    fn chain_rule_through_eps_scaling() {
        let e = p("sin(x1/eps)");
        assert_eq!(differentiate(&e, 0).unwrap(), p("cos(x1/eps)/eps"));
        assert_eq!(differentiate(&e, 1).unwrap(), NetExpr::Const(0.0));
    }

    #[test]
    fn primitive_orders_increase() {
        let e = p("bump(x1/eps)/eps");
        let de = differentiate(&e, 0).unwrap();
        assert_eq!(de, p("bump_d1(x1*eps^(-1))*eps^(-2)"));
    }

    #[test]
    fn size_cap_is_enforced() {
        let e = p("exp(sin(x1)*cos(x2))*(x1 + x2)^3");
        let err = differentiate_with_cap(&e, 0, 5).unwrap_err();
        assert!(matches!(err, ExprError::SizeCapExceeded { cap: 5, .. }));
    }

    #[test]
    fn order_overflow_is_an_error() {
        let e = p("bump_d32(x1)");
        assert_eq!(differentiate(&e, 0), Err(ExprError::OrderTooHigh(33)));
    }
}
