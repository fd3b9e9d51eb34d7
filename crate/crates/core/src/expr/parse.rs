//! Recursive-descent parser for the net expression language.
//!
//! ```text
//! expr     := term (("+" | "-") term)*
//! term     := unary (("*" | "/") unary)*
//! unary    := "-" unary | power
//! power    := atom ("^" exponent)?
//! atom     := NUMBER | "eps" | VAR | FUNC "(" expr ")" | "(" expr ")"
//! exponent := INT | "(" "-"? INT ("/" INT)? ")"
//! VAR      := "x1" | "x2" | "x3"
//! FUNC     := "sin" | "cos" | "exp" | "bump" | "cutoff"
//! ```
//!
//! The printer emits derivatives of the primitives as `bump_dK(...)` and
//! `cutoff_dK(...)`; the parser accepts those spellings too so printed
//! derivatives read back.

use super::primitives::MAX_PRIMITIVE_ORDER;
use super::{simplify, NetExpr, MAX_DIMENSION};
use num_rational::Rational64;
use std::fmt;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("{kind} at byte {position}")]
pub struct ParseError {
    pub kind: ParseErrorKind,
    pub position: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ParseErrorKind {
    UnexpectedChar(char),
    UnexpectedToken { found: String, expected: &'static str },
    UnexpectedEnd,
    UnknownIdentifier(String),
    VariableOutOfRange { index: usize, dimension: usize },
    InvalidNumber(String),
    NonIntegerExponent,
    ZeroDenominator,
    ExponentOverflow,
    InvalidDimension(usize),
}

impl fmt::Display for ParseErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        use ParseErrorKind::*;
        match self {
            UnexpectedChar(c) => write!(f, "unexpected character {c:?}"),
            UnexpectedToken { found, expected } => {
                write!(f, "syntax error: found {found:?}, expected {expected}")
            }
            UnexpectedEnd => write!(f, "syntax error: unexpected end of input"),
            UnknownIdentifier(s) => write!(f, "unknown identifier {s:?}"),
            VariableOutOfRange { index, dimension } => write!(
                f,
                "variable x{} out of range for dimension {dimension}",
                index + 1
            ),
            InvalidNumber(s) => write!(f, "invalid number {s:?}"),
            NonIntegerExponent => write!(f, "non-integer exponent is only allowed on eps"),
            ZeroDenominator => write!(f, "zero denominator in exponent"),
            ExponentOverflow => write!(f, "exponent out of range"),
            InvalidDimension(d) => write!(f, "dimension {d} outside 1..={MAX_DIMENSION}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(String),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Num(s) | Tok::Ident(s) => s.clone(),
            Tok::Plus => "+".into(),
            Tok::Minus => "-".into(),
            Tok::Star => "*".into(),
            Tok::Slash => "/".into(),
            Tok::Caret => "^".into(),
            Tok::LParen => "(".into(),
            Tok::RParen => ")".into(),
        }
    }
}

fn tokenize(text: &str) -> Result<Vec<(Tok, usize)>, ParseError> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        let start = i;
        match c {
            b' ' | b'\t' | b'\n' | b'\r' => {
                i += 1;
                continue;
            }
            b'+' => out.push((Tok::Plus, start)),
            b'-' => out.push((Tok::Minus, start)),
            b'*' => out.push((Tok::Star, start)),
            b'/' => out.push((Tok::Slash, start)),
            b'^' => out.push((Tok::Caret, start)),
            b'(' => out.push((Tok::LParen, start)),
            b')' => out.push((Tok::RParen, start)),
            b'0'..=b'9' => {
                while i < bytes.len() && bytes[i].is_ascii_digit() {
                    i += 1;
                }
                if i < bytes.len() && bytes[i] == b'.' {
                    i += 1;
                    while i < bytes.len() && bytes[i].is_ascii_digit() {
                        i += 1;
                    }
                }
                if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
                    let mut j = i + 1;
                    if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
                        j += 1;
                    }
                    if j < bytes.len() && bytes[j].is_ascii_digit() {
                        while j < bytes.len() && bytes[j].is_ascii_digit() {
                            j += 1;
                        }
                        i = j;
                    }
                }
                out.push((Tok::Num(text[start..i].to_string()), start));
                continue;
            }
            c if c.is_ascii_alphabetic() || c == b'_' => {
                while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                    i += 1;
                }
                out.push((Tok::Ident(text[start..i].to_string()), start));
                continue;
            }
            _ => {
                let ch = text[start..].chars().next().unwrap_or('?');
                return Err(ParseError {
                    kind: ParseErrorKind::UnexpectedChar(ch),
                    position: start,
                });
            }
        }
        i += 1;
    }
    Ok(out)
}

struct Parser {
    toks: Vec<(Tok, usize)>,
    pos: usize,
    end: usize,
    dimension: usize,
}

enum Head {
    Sin,
    Cos,
    Exp,
    Bump(u32),
    Cutoff(u32),
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(t, _)| t)
    }

    fn here(&self) -> usize {
        self.toks.get(self.pos).map(|(_, p)| *p).unwrap_or(self.end)
    }

    fn err<T>(&self, kind: ParseErrorKind) -> Result<T, ParseError> {
        Err(ParseError {
            kind,
            position: self.here(),
        })
    }

    fn unexpected<T>(&self, expected: &'static str) -> Result<T, ParseError> {
        match self.peek() {
            Some(t) => self.err(ParseErrorKind::UnexpectedToken {
                found: t.describe(),
                expected,
            }),
            None => self.err(ParseErrorKind::UnexpectedEnd),
        }
    }

    fn expect(&mut self, tok: Tok, expected: &'static str) -> Result<(), ParseError> {
        if self.peek() == Some(&tok) {
            self.pos += 1;
            Ok(())
        } else {
            self.unexpected(expected)
        }
    }

    fn expr(&mut self) -> Result<NetExpr, ParseError> {
        let mut acc = self.term()?;
        loop {
            match self.peek() {
                Some(Tok::Plus) => {
                    self.pos += 1;
                    let rhs = self.term()?;
                    acc = match acc {
                        NetExpr::Add(mut v) => {
                            v.push(rhs);
                            NetExpr::Add(v)
                        }
                        other => NetExpr::Add(vec![other, rhs]),
                    };
                }
                Some(Tok::Minus) => {
                    self.pos += 1;
                    let rhs = self.term()?;
                    acc = NetExpr::Sub(Box::new(acc), Box::new(rhs));
                }
                _ => return Ok(acc),
            }
        }
    }

    fn term(&mut self) -> Result<NetExpr, ParseError> {
        let mut acc = self.unary()?;
        loop {
            match self.peek() {
                Some(Tok::Star) => {
                    self.pos += 1;
                    let rhs = self.unary()?;
                    acc = match acc {
                        NetExpr::Mul(mut v) => {
                            v.push(rhs);
                            NetExpr::Mul(v)
                        }
                        other => NetExpr::Mul(vec![other, rhs]),
                    };
                }
                Some(Tok::Slash) => {
                    self.pos += 1;
                    let rhs = self.unary()?;
                    acc = NetExpr::Div(Box::new(acc), Box::new(rhs));
                }
                _ => return Ok(acc),
            }
        }
    }

    fn unary(&mut self) -> Result<NetExpr, ParseError> {
        if self.peek() == Some(&Tok::Minus) {
            self.pos += 1;
            let inner = self.unary()?;
            return Ok(match inner {
                NetExpr::Const(c) => NetExpr::Const(-c),
                other => NetExpr::Mul(vec![NetExpr::Const(-1.0), other]),
            });
        }
        self.power()
    }

    fn power(&mut self) -> Result<NetExpr, ParseError> {
        let base = self.atom()?;
        if self.peek() != Some(&Tok::Caret) {
            return Ok(base);
        }
        self.pos += 1;
        let exp_pos = self.here();
        let q = self.exponent()?;
        if let NetExpr::Eps = base {
            return Ok(NetExpr::EpsPow(q));
        }
        if let NetExpr::EpsPow(p) = base {
            return Ok(NetExpr::EpsPow(p * q));
        }
        if !q.is_integer() {
            return Err(ParseError {
                kind: ParseErrorKind::NonIntegerExponent,
                position: exp_pos,
            });
        }
        let n = i32::try_from(q.to_integer()).map_err(|_| ParseError {
            kind: ParseErrorKind::ExponentOverflow,
            position: exp_pos,
        })?;
        Ok(NetExpr::IntPow(Box::new(base), n))
    }

    fn int(&mut self) -> Result<i64, ParseError> {
        match self.peek() {
            Some(Tok::Num(s)) if s.bytes().all(|b| b.is_ascii_digit()) => {
                let v = s.parse::<i64>().map_err(|_| ParseError {
                    kind: ParseErrorKind::ExponentOverflow,
                    position: self.here(),
                })?;
                self.pos += 1;
                Ok(v)
            }
            _ => self.unexpected("integer exponent"),
        }
    }

    fn exponent(&mut self) -> Result<Rational64, ParseError> {
        if self.peek() != Some(&Tok::LParen) {
            return Ok(Rational64::from_integer(self.int()?));
        }
        self.pos += 1;
        let negative = if self.peek() == Some(&Tok::Minus) {
            self.pos += 1;
            true
        } else {
            false
        };
        let num = self.int()?;
        let den = if self.peek() == Some(&Tok::Slash) {
            self.pos += 1;
            let d_pos = self.here();
            let d = self.int()?;
            if d == 0 {
                return Err(ParseError {
                    kind: ParseErrorKind::ZeroDenominator,
                    position: d_pos,
                });
            }
            d
        } else {
            1
        };
        self.expect(Tok::RParen, "')' closing exponent")?;
        let q = Rational64::new(num, den);
        Ok(if negative { -q } else { q })
    }

    fn head(name: &str) -> Option<Head> {
        match name {
            "sin" => Some(Head::Sin),
            "cos" => Some(Head::Cos),
            "exp" => Some(Head::Exp),
            "bump" => Some(Head::Bump(0)),
            "cutoff" => Some(Head::Cutoff(0)),
            _ => {
                let order = |prefix: &str| {
                    name.strip_prefix(prefix)
                        .filter(|r| !r.is_empty() && r.bytes().all(|b| b.is_ascii_digit()))
                        .and_then(|r| r.parse::<u32>().ok())
                        .filter(|&k| k as usize <= MAX_PRIMITIVE_ORDER)
                };
                if let Some(k) = order("bump_d") {
                    Some(Head::Bump(k))
                } else {
                    order("cutoff_d").map(Head::Cutoff)
                }
            }
        }
    }

    fn atom(&mut self) -> Result<NetExpr, ParseError> {
        let pos = self.here();
        match self.peek().cloned() {
            Some(Tok::Num(s)) => {
                self.pos += 1;
                match s.parse::<f64>() {
                    Ok(v) if v.is_finite() => Ok(NetExpr::Const(v)),
                    _ => Err(ParseError {
                        kind: ParseErrorKind::InvalidNumber(s),
                        position: pos,
                    }),
                }
            }
            Some(Tok::LParen) => {
                self.pos += 1;
                let e = self.expr()?;
                self.expect(Tok::RParen, "')'")?;
                Ok(e)
            }
            Some(Tok::Ident(name)) => {
                self.pos += 1;
                if name == "eps" {
                    return Ok(NetExpr::Eps);
                }
                if let Some(idx) = name
                    .strip_prefix('x')
                    .filter(|r| r.len() == 1)
                    .and_then(|r| r.parse::<usize>().ok())
                    .filter(|&i| (1..=MAX_DIMENSION).contains(&i))
                {
                    if idx > self.dimension {
                        return Err(ParseError {
                            kind: ParseErrorKind::VariableOutOfRange {
                                index: idx - 1,
                                dimension: self.dimension,
                            },
                            position: pos,
                        });
                    }
                    return Ok(NetExpr::Var(idx - 1));
                }
                let Some(head) = Self::head(&name) else {
                    return Err(ParseError {
                        kind: ParseErrorKind::UnknownIdentifier(name),
                        position: pos,
                    });
                };
                self.expect(Tok::LParen, "'(' after function name")?;
                let arg = Box::new(self.expr()?);
                self.expect(Tok::RParen, "')' closing function call")?;
                Ok(match head {
                    Head::Sin => NetExpr::Sin(arg),
                    Head::Cos => NetExpr::Cos(arg),
                    Head::Exp => NetExpr::Exp(arg),
                    Head::Bump(order) => NetExpr::Bump { order, arg },
                    Head::Cutoff(order) => NetExpr::Cutoff { order, arg },
                })
            }
            _ => self.unexpected("number, variable, eps, function or '('"),
        }
    }
}

/// Parses without simplification.
pub fn parse_raw(text: &str, dimension: usize) -> Result<NetExpr, ParseError> {
    if !(1..=MAX_DIMENSION).contains(&dimension) {
        return Err(ParseError {
            kind: ParseErrorKind::InvalidDimension(dimension),
            position: 0,
        });
    }
    let toks = tokenize(text)?;
    let mut p = Parser {
        toks,
        pos: 0,
        end: text.len(),
        dimension,
    };
    let e = p.expr()?;
    if p.pos != p.toks.len() {
        return p.unexpected("operator or end of input");
    }
    Ok(e)
}

/// Parses `text` in dimension `dimension` and returns the simplified AST.
pub fn parse(text: &str, dimension: usize) -> Result<NetExpr, ParseError> {
    parse_raw(text, dimension).map(|e| simplify(&e))
}
