//! Algebraic normalisation.
//!
//! Rules are applied bottom-up and repeated until the tree stops changing,
//! so `simplify` is idempotent.

use super::primitives::{bump_derivative, cutoff_derivative, MAX_PRIMITIVE_ORDER};
use super::NetExpr;
use num_rational::Rational64;
use num_traits::{ToPrimitive, Zero};

const MAX_PASSES: usize = 64;

pub fn simplify(e: &NetExpr) -> NetExpr {
    let mut cur = step(e);
    for _ in 0..MAX_PASSES {
        let next = step(&cur);
        if next == cur {
            break;
        }
        cur = next;
    }
    cur
}

fn konst(c: f64) -> NetExpr {
    // normalise -0.0
    NetExpr::Const(if c == 0.0 { 0.0 } else { c })
}

fn fold(c: f64, fallback: NetExpr) -> NetExpr {
    if c.is_finite() {
        konst(c)
    } else {
        fallback
    }
}

fn step(e: &NetExpr) -> NetExpr {
    use NetExpr::*;
    match e {
        Const(c) => konst(*c),
        Var(i) => Var(*i),
        Eps => EpsPow(Rational64::from_integer(1)),
        EpsPow(q) if q.is_zero() => Const(1.0),
        EpsPow(q) => EpsPow(*q),
        Sub(a, b) => add(vec![step(a), mul(vec![Const(-1.0), step(b)])]),
        Add(v) => add(v.iter().map(step).collect()),
        Mul(v) => mul(v.iter().map(step).collect()),
        Div(a, b) => div(step(a), step(b)),
        IntPow(b, n) => int_pow(step(b), *n),
        Sin(a) => unary(step(a), f64::sin, Sin),
        Cos(a) => unary(step(a), f64::cos, Cos),
        Exp(a) => unary(step(a), f64::exp, Exp),
        Bump { order, arg } => {
            let a = step(arg);
            let k = *order;
            match a {
                Const(t) if (k as usize) <= MAX_PRIMITIVE_ORDER => fold(
                    bump_derivative(k as usize, t),
                    Bump {
                        order: k,
                        arg: Box::new(Const(t)),
                    },
                ),
                a => Bump {
                    order: k,
                    arg: Box::new(a),
                },
            }
        }
        Cutoff { order, arg } => {
            let a = step(arg);
            let k = *order;
            match a {
                Const(t) if (k as usize) <= MAX_PRIMITIVE_ORDER => fold(
                    cutoff_derivative(k as usize, t),
                    Cutoff {
                        order: k,
                        arg: Box::new(Const(t)),
                    },
                ),
                a => Cutoff {
                    order: k,
                    arg: Box::new(a),
                },
            }
        }
    }
}

fn unary(a: NetExpr, f: fn(f64) -> f64, ctor: fn(Box<NetExpr>) -> NetExpr) -> NetExpr {
    match a {
        NetExpr::Const(c) => fold(f(c), ctor(Box::new(NetExpr::Const(c)))),
        a => ctor(Box::new(a)),
    }
}

/// Splits a term into its numeric coefficient and the remaining factors.
fn split_coefficient(t: NetExpr) -> (f64, NetExpr) {
    match t {
        NetExpr::Mul(mut fs) if matches!(fs.first(), Some(NetExpr::Const(_))) => {
            let NetExpr::Const(c) = fs.remove(0) else {
                unreachable!()
            };
            let rest = if fs.len() == 1 {
                fs.pop().unwrap()
            } else {
                NetExpr::Mul(fs)
            };
            (c, rest)
        }
        t => (1.0, t),
    }
}

fn with_coefficient(c: f64, rest: NetExpr) -> NetExpr {
    if c == 1.0 {
        return rest;
    }
    match rest {
        NetExpr::Mul(mut fs) => {
            fs.insert(0, konst(c));
            NetExpr::Mul(fs)
        }
        r => NetExpr::Mul(vec![konst(c), r]),
    }
}

fn add(terms: Vec<NetExpr>) -> NetExpr {
    let mut flat = Vec::with_capacity(terms.len());
    for t in terms {
        match t {
            NetExpr::Add(inner) => flat.extend(inner),
            t => flat.push(t),
        }
    }
    let mut constant = 0.0;
    let mut groups: Vec<(f64, NetExpr)> = Vec::new();
    for t in flat {
        if let NetExpr::Const(c) = t {
            constant += c;
            continue;
        }
        let (c, rest) = split_coefficient(t);
        match groups.iter_mut().find(|(_, r)| *r == rest) {
            Some(g) => g.0 += c,
            None => groups.push((c, rest)),
        }
    }
    let mut out: Vec<NetExpr> = groups
        .into_iter()
        .filter(|(c, _)| *c != 0.0)
        .map(|(c, r)| with_coefficient(c, r))
        .collect();
    if constant != 0.0 || !constant.is_finite() {
        out.push(konst(constant));
    }
    match out.len() {
        0 => NetExpr::Const(0.0),
        1 => out.pop().unwrap(),
        _ => NetExpr::Add(out),
    }
}

fn mul(factors: Vec<NetExpr>) -> NetExpr {
    let mut flat = Vec::with_capacity(factors.len());
    for f in factors {
        match f {
            NetExpr::Mul(inner) => flat.extend(inner),
            f => flat.push(f),
        }
    }
    let mut constant = 1.0;
    let mut eps: Option<(usize, Rational64)> = None;
    let mut rest: Vec<NetExpr> = Vec::with_capacity(flat.len());
    for f in flat {
        match f {
            NetExpr::Const(c) => constant *= c,
            NetExpr::EpsPow(q) => match &mut eps {
                Some((_, acc)) => *acc += q,
                None => {
                    eps = Some((rest.len(), q));
                    rest.push(NetExpr::EpsPow(q));
                }
            },
            f => rest.push(f),
        }
    }
    if constant == 0.0 {
        return NetExpr::Const(0.0);
    }
    if let Some((pos, q)) = eps {
        if q.is_zero() {
            rest.remove(pos);
        } else {
            rest[pos] = NetExpr::EpsPow(q);
        }
    }
    if constant != 1.0 {
        rest.insert(0, konst(constant));
    }
    match rest.len() {
        0 => NetExpr::Const(1.0),
        1 => rest.pop().unwrap(),
        _ => NetExpr::Mul(rest),
    }
}

fn div(a: NetExpr, b: NetExpr) -> NetExpr {
    if a.is_zero() {
        return NetExpr::Const(0.0);
    }
    match b {
        NetExpr::Const(c) if c != 0.0 => mul(vec![a, konst(1.0 / c)]),
        NetExpr::EpsPow(q) => mul(vec![a, NetExpr::EpsPow(-q)]),
        NetExpr::Mul(fs) => {
            let mut num = vec![a];
            let mut den = Vec::new();
            for f in fs {
                match f {
                    NetExpr::Const(c) if c != 0.0 => num.push(konst(1.0 / c)),
                    NetExpr::EpsPow(q) => num.push(NetExpr::EpsPow(-q)),
                    f => den.push(f),
                }
            }
            let num = mul(num);
            match den.len() {
                0 => num,
                1 => NetExpr::Div(Box::new(num), Box::new(den.pop().unwrap())),
                _ => NetExpr::Div(Box::new(num), Box::new(NetExpr::Mul(den))),
            }
        }
        b => NetExpr::Div(Box::new(a), Box::new(b)),
    }
}

fn int_pow(b: NetExpr, n: i32) -> NetExpr {
    match (b, n) {
        (_, 0) => NetExpr::Const(1.0),
        (b, 1) => b,
        (NetExpr::Const(c), n) => fold(c.powi(n), NetExpr::IntPow(Box::new(NetExpr::Const(c)), n)),
        (NetExpr::EpsPow(q), n) => {
            let r = q * Rational64::from_integer(n as i64);
            if r.is_zero() {
                NetExpr::Const(1.0)
            } else {
                NetExpr::EpsPow(r)
            }
        }
        (NetExpr::IntPow(inner, m), n) => match m.checked_mul(n) {
            Some(k) => int_pow(*inner, k),
            None => NetExpr::IntPow(Box::new(NetExpr::IntPow(inner, m)), n),
        },
        (b, n) => NetExpr::IntPow(Box::new(b), n),
    }
}

/// Numeric value of an `EpsPow` exponent.
pub(crate) fn exponent_f64(q: &Rational64) -> f64 {
    q.to_f64().unwrap_or(f64::NAN)
}
