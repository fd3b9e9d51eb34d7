//! Nets of smooth functions and their seminorms.
//!
//! A [`FunctionNet`] is a family `u_eps` of smooth functions on `R^d`.
//! Every derivative request goes through [`FunctionNet::prepare`], which
//! fixes `alpha` and `eps` and returns a [`PreparedDerivative`]; both
//! [`derivative_eval`] and the seminorm sampler evaluate through it.

mod compact;
mod sampling;

pub use compact::{CompactBox, CompactError, MultiIndex};
pub use sampling::{
    is_moderate, is_negligible, moderate_from_estimate, negligible_from_estimate, seminorm,
    seminorm_table, sharp_from_table, sharp_seminorm, Evidence, DEFAULT_M_MAX, ModerateVerdict, NegligibleVerdict, SamplingSpec, SeminormEntry, SeminormTable,
    SharpSeminorm,
};

use crate::expr::primitives::cutoff_derivative;
use crate::expr::{
    evaluate_at, parse, vanishes_on, EvalError, ExprError, Interval, NetExpr, ParseError,
    DEFAULT_SIZE_CAP, MAX_DIMENSION,
};
use crate::mollify::{DerivativeRoute, Mollifier};
use crate::scalar::{EvalScalar, LogAbs};
use crate::scale::ScaleError;
use num_rational::Rational64;
use num_traits::{ToPrimitive, Zero};
use std::collections::HashMap;
use std::sync::{Arc, Mutex};

/// Hard cap on the derivative order `k` handled by the classifiers.
pub const MAX_K: u32 = 8;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum NetError {
    #[error(transparent)]
    Expr(#[from] ExprError),
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error(transparent)]
    Compact(#[from] CompactError),
    #[error(transparent)]
    Scale(#[from] ScaleError),
    #[error("dimension mismatch: net has dimension {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("dimension {0} outside 1..=3")]
    UnsupportedDimension(usize),
    #[error("derivative order {order} exceeds the maximum {max}")]
    OrderTooHigh { order: u32, max: u32 },
    #[error("eps must lie in (0, 1), got {0}")]
    InvalidEps(f64),
    #[error("bands must partition (0, 1]: {0}")]
    InvalidBands(String),
    #[error("finite sum needs at least one term")]
    EmptySum,
    #[error("net {0} declares no support box")]
    MissingSupport(String),
    #[error("invalid sampling: {0}")]
    InvalidSampling(String),
    #[error("invalid cutoff: {0}")]
    InvalidCutoff(String),
    #[error(transparent)]
    Eval(#[from] EvalError),
}

/// Expression with a cache of its partial derivatives.
#[derive(Clone, Debug)]
pub struct ExprNet {
    expr: Arc<NetExpr>,
    cache: Arc<Mutex<HashMap<MultiIndex, Arc<NetExpr>>>>,
}

impl ExprNet {
    pub fn new(expr: NetExpr) -> Self {
        ExprNet {
            expr: Arc::new(expr),
            cache: Arc::new(Mutex::new(HashMap::new())),
        }
    }

    pub fn expr(&self) -> &NetExpr {
        &self.expr
    }

    /// `d^alpha` of the expression, built one axis at a time and cached.
    pub fn derivative(&self, alpha: &MultiIndex) -> Result<Arc<NetExpr>, ExprError> {
        let Some(axis) = alpha.components().iter().rposition(|&a| a > 0) else {
            return Ok(self.expr.clone());
        };
        if let Some(hit) = self.cache.lock().unwrap().get(alpha) {
            return Ok(hit.clone());
        }
        let parent = alpha
            .checked_sub(&MultiIndex::unit(alpha.dimension(), axis))
            .expect("axis has positive order");
        let base = self.derivative(&parent)?;
        let d = Arc::new(crate::expr::differentiate_with_cap(&base, axis, DEFAULT_SIZE_CAP)?);
        self.cache.lock().unwrap().insert(alpha.clone(), d.clone());
        Ok(d)
    }
}

/// One piece of a banded net, active for `eps` in `(lo, hi]`.
#[derive(Clone, Debug)]
pub struct Band {
    pub lo: f64,
    pub hi: f64,
    pub net: ExprNet,
}

/// Per-axis factor of a cutoff product: identically 1 for
/// `|x - center| <= half_width`, 0 beyond `half_width + margin`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CutoffAxis {
    pub center: f64,
    pub half_width: f64,
    pub margin: f64,
}

impl CutoffAxis {
    /// `k`-th derivative of the axis factor.
    pub fn derivative(&self, k: u32, x: f64) -> f64 {
        let r = (x - self.center).abs();
        if r <= self.half_width {
            return if k == 0 { 1.0 } else { 0.0 };
        }
        let t = 1.0 + (r - self.half_width) / self.margin;
        let v = cutoff_derivative(k as usize, t);
        if k == 0 || v == 0.0 {
            return v;
        }
        let sign = if x < self.center && k % 2 == 1 { -1.0 } else { 1.0 };
        sign * v / self.margin.powi(k as i32)
    }

    fn vanishes_on(&self, k: u32, iv: Interval) -> bool {
        let a = (iv.lo - self.center).abs();
        let b = (iv.hi - self.center).abs();
        let r_hi = a.max(b);
        let r_lo = if iv.contains(self.center) { 0.0 } else { a.min(b) };
        (k > 0 && r_hi <= self.half_width) || r_lo >= self.half_width + self.margin
    }
}

#[derive(Clone, Debug)]
pub enum NetKind {
    Expression(ExprNet),
    Banded(Vec<Band>),
    FiniteSum(Vec<ExprNet>),
    CutoffProduct {
        base: Arc<FunctionNet>,
        axes: Vec<CutoffAxis>,
    },
    /// `u_eps * psi_{eps^n}`.
    Mollified {
        base: Arc<FunctionNet>,
        n: u32,
        mollifier: Arc<Mollifier>,
        route: DerivativeRoute,
    },
    /// `u_eps * psi_{eps^n} - u_eps`, evaluated through the second-order
    /// Taylor remainder so that no cancellation occurs.
    MollifierResidual {
        base: Arc<FunctionNet>,
        n: u32,
        mollifier: Arc<Mollifier>,
    },
}

#[derive(Clone, Debug)]
pub struct FunctionNet {
    dimension: usize,
    kind: NetKind,
    support_box: Option<CompactBox>,
    oscillation_hint: Rational64,
    name: String,
    sampling_override: Option<SamplingSpec>,
}

impl FunctionNet {
    fn with_kind(dimension: usize, kind: NetKind, hint: Rational64, name: String) -> Self {
        FunctionNet {
            dimension,
            kind,
            support_box: None,
            oscillation_hint: hint,
            name,
            sampling_override: None,
        }
    }

    fn check_dimension(d: usize) -> Result<(), NetError> {
        if (1..=MAX_DIMENSION).contains(&d) {
            Ok(())
        } else {
            Err(NetError::UnsupportedDimension(d))
        }
    }

    pub fn expression(expr: NetExpr, dimension: usize) -> Result<Self, NetError> {
        Self::check_dimension(dimension)?;
        expr.check_dimension(dimension)?;
        let hint = expr.oscillation_hint();
        let name = expr.to_string();
        Ok(Self::with_kind(
            dimension,
            NetKind::Expression(ExprNet::new(expr)),
            hint,
            name,
        ))
    }

    pub fn parse(text: &str, dimension: usize) -> Result<Self, NetError> {
        Self::check_dimension(dimension)?;
        let e = parse(text, dimension)?;
        Self::expression(e, dimension)
    }

    /// Piecewise-in-eps net. Bands `(lo, hi]` must tile `(0, 1]` when
    /// sorted by `lo`.
    pub fn banded(bands: Vec<(f64, f64, NetExpr)>, dimension: usize) -> Result<Self, NetError> {
        Self::check_dimension(dimension)?;
        let mut bands = bands;
        bands.sort_by(|a, b| a.0.total_cmp(&b.0));
        if bands.is_empty() {
            return Err(NetError::InvalidBands("no bands".into()));
        }
        if bands[0].0 != 0.0 {
            return Err(NetError::InvalidBands(format!(
                "first band starts at {}, not 0",
                bands[0].0
            )));
        }
        if bands.last().unwrap().1 < 1.0 {
            return Err(NetError::InvalidBands("last band ends below 1".into()));
        }
        for w in bands.windows(2) {
            if w[0].1 != w[1].0 {
                return Err(NetError::InvalidBands(format!(
                    "gap or overlap between {} and {}",
                    w[0].1, w[1].0
                )));
            }
        }
        let mut hint = Rational64::zero();
        let mut out = Vec::with_capacity(bands.len());
        for (lo, hi, e) in bands {
            if !(lo < hi) {
                return Err(NetError::InvalidBands(format!("empty band ({lo}, {hi}]")));
            }
            e.check_dimension(dimension)?;
            hint = hint.max(e.oscillation_hint());
            out.push(Band {
                lo,
                hi,
                net: ExprNet::new(e),
            });
        }
        Ok(Self::with_kind(
            dimension,
            NetKind::Banded(out),
            hint,
            "banded".into(),
        ))
    }

    pub fn finite_sum(terms: Vec<NetExpr>, dimension: usize) -> Result<Self, NetError> {
        Self::check_dimension(dimension)?;
        if terms.is_empty() {
            return Err(NetError::EmptySum);
        }
        let mut hint = Rational64::zero();
        for t in &terms {
            t.check_dimension(dimension)?;
            hint = hint.max(t.oscillation_hint());
        }
        let name = terms
            .iter()
            .map(|t| t.to_string())
            .collect::<Vec<_>>()
            .join(" + ");
        Ok(Self::with_kind(
            dimension,
            NetKind::FiniteSum(terms.into_iter().map(ExprNet::new).collect()),
            hint,
            name,
        ))
    }

    /// `u * prod_i chi_i(x_i)`.
    pub fn cutoff_product(base: FunctionNet, axes: Vec<CutoffAxis>) -> Result<Self, NetError> {
        if axes.len() != base.dimension {
            return Err(NetError::Dimension {
                expected: base.dimension,
                got: axes.len(),
            });
        }
        for a in &axes {
            if !(a.margin > 0.0 && a.half_width >= 0.0) {
                return Err(NetError::InvalidCutoff(format!(
                    "half width {} and margin {} must be >= 0 and > 0",
                    a.half_width, a.margin
                )));
            }
        }
        let support = CompactBox::from_boxes(vec![axes
            .iter()
            .map(|a| {
                let r = a.half_width + a.margin;
                (a.center - r, a.center + r)
            })
            .collect()])?;
        let name = format!("cutoff({})", base.name);
        let d = base.dimension;
        let hint = base.oscillation_hint;
        let mut net = Self::with_kind(
            d,
            NetKind::CutoffProduct {
                base: Arc::new(base),
                axes,
            },
            hint,
            name,
        );
        net.support_box = Some(support);
        Ok(net)
    }

    pub(crate) fn from_kind(
        dimension: usize,
        kind: NetKind,
        hint: Rational64,
        name: String,
        support_box: Option<CompactBox>,
    ) -> Self {
        let mut n = Self::with_kind(dimension, kind, hint, name);
        n.support_box = support_box;
        n
    }

    pub fn with_support(mut self, support: CompactBox) -> Result<Self, NetError> {
        if support.dimension() != self.dimension {
            return Err(NetError::Dimension {
                expected: self.dimension,
                got: support.dimension(),
            });
        }
        self.support_box = Some(support);
        Ok(self)
    }

    pub fn with_hint(mut self, hint: Rational64) -> Self {
        self.oscillation_hint = hint;
        self
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    /// Minimum sampling density this net needs; merged into any requested
    /// spec by taking the larger value of every field.
    pub fn with_sampling_override(mut self, spec: SamplingSpec) -> Self {
        self.sampling_override = Some(spec);
        self
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn kind(&self) -> &NetKind {
        &self.kind
    }

    pub fn support_box(&self) -> Option<&CompactBox> {
        self.support_box.as_ref()
    }

    pub fn oscillation_hint(&self) -> Rational64 {
        self.oscillation_hint
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn sampling_override(&self) -> Option<&SamplingSpec> {
        self.sampling_override.as_ref()
    }

    pub fn effective_sampling(&self, requested: &SamplingSpec) -> SamplingSpec {
        match &self.sampling_override {
            None => requested.clone(),
            Some(o) => requested.merge_max(o),
        }
    }

    /// Fixes `alpha` and `eps` for repeated pointwise evaluation.
    pub fn prepare(&self, alpha: &MultiIndex, eps: f64) -> Result<PreparedDerivative, NetError> {
        if alpha.dimension() != self.dimension {
            return Err(NetError::Dimension {
                expected: self.dimension,
                got: alpha.dimension(),
            });
        }
        if !(eps > 0.0 && eps < 1.0) {
            return Err(NetError::InvalidEps(eps));
        }
        let body = match &self.kind {
            NetKind::Expression(e) => Body::Expr(e.derivative(alpha)?),
            NetKind::Banded(bands) => {
                let band = bands
                    .iter()
                    .find(|b| b.lo < eps && eps <= b.hi)
                    .expect("bands tile (0, 1]");
                Body::Expr(band.net.derivative(alpha)?)
            }
            NetKind::FiniteSum(terms) => Body::Sum(
                terms
                    .iter()
                    .map(|t| t.derivative(alpha))
                    .collect::<Result<_, _>>()?,
            ),
            NetKind::CutoffProduct { base, axes } => {
                let mut terms = Vec::new();
                for beta in alpha.below() {
                    let gamma = alpha.checked_sub(&beta).expect("beta <= alpha");
                    terms.push(LeibnizTerm {
                        coefficient: alpha.binomial(&beta),
                        gamma: gamma.0,
                        base: base.prepare(&beta, eps)?,
                    });
                }
                Body::Leibniz {
                    axes: axes.clone(),
                    terms,
                }
            }
            NetKind::Mollified {
                base,
                n,
                mollifier,
                route,
            } => mollifier.prepare_mollified(base, alpha, eps, *n, *route)?,
            NetKind::MollifierResidual { base, n, mollifier } => {
                mollifier.prepare_residual(base, alpha, eps, *n)?
            }
        };
        Ok(PreparedDerivative {
            eps,
            ln_eps: eps.ln(),
            body,
        })
    }
}

/// `d^alpha u_eps(x)`.
pub fn derivative_eval(
    u: &FunctionNet,
    alpha: &MultiIndex,
    x: &[f64],
    eps: f64,
) -> Result<f64, NetError> {
    if alpha.order() > MAX_K + 1 {
        return Err(NetError::OrderTooHigh {
            order: alpha.order(),
            max: MAX_K + 1,
        });
    }
    if x.len() != u.dimension() {
        return Err(NetError::Dimension {
            expected: u.dimension(),
            got: x.len(),
        });
    }
    Ok(u.prepare(alpha, eps)?.eval(x)?.to_f64())
}

/// Pointwise value: plain `f64` when representable, log form otherwise.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum NetValue {
    Finite(f64),
    Log(LogAbs),
}

impl NetValue {
    pub fn ln_abs(&self) -> f64 {
        match self {
            NetValue::Finite(v) => v.abs().ln(),
            NetValue::Log(l) => l.ln_abs(),
        }
    }

    /// May be infinite for log-form values.
    pub fn to_f64(&self) -> f64 {
        match self {
            NetValue::Finite(v) => *v,
            NetValue::Log(l) => l.to_f64(),
        }
    }
}

#[derive(Clone, Debug)]
pub(crate) struct LeibnizTerm {
    coefficient: f64,
    gamma: Vec<u32>,
    base: PreparedDerivative,
}

/// Weighted evaluation nodes of one quadrature sum.
#[derive(Clone, Debug)]
pub(crate) struct QuadTerm {
    pub(crate) base: PreparedDerivative,
    /// `(shift, weight)`; the base is evaluated at `x - shift`.
    pub(crate) nodes: Arc<Vec<([f64; 3], f64)>>,
}

#[derive(Clone, Debug)]
pub(crate) enum Body {
    Expr(Arc<NetExpr>),
    Sum(Vec<Arc<NetExpr>>),
    Leibniz {
        axes: Vec<CutoffAxis>,
        terms: Vec<LeibnizTerm>,
    },
    /// `eps^scale * sum_terms sum_nodes w * base(x - shift)`; every shift
    /// lies within `reach` of the origin on each axis.
    Quadrature {
        scale: Rational64,
        reach: f64,
        terms: Vec<QuadTerm>,
    },
}

/// A derivative `d^alpha u_eps` with `alpha` and `eps` fixed.
#[derive(Clone, Debug)]
pub struct PreparedDerivative {
    eps: f64,
    ln_eps: f64,
    body: Body,
}

impl PreparedDerivative {
    pub fn eps(&self) -> f64 {
        self.eps
    }

    /// Evaluates in `f64`, retrying in log form when an intermediate
    /// overflows.
    pub fn eval(&self, x: &[f64]) -> Result<NetValue, EvalError> {
        match self.eval_with::<f64>(x) {
            Ok(v) => Ok(NetValue::Finite(v)),
            Err(EvalError::NonFinite) => self.eval_with::<LogAbs>(x).map(NetValue::Log),
            Err(e) => Err(e),
        }
    }

    pub fn eval_with<S: EvalScalar>(&self, x: &[f64]) -> Result<S, EvalError> {
        match &self.body {
            Body::Expr(e) => evaluate_at(e, x, self.eps, self.ln_eps),
            Body::Sum(terms) => {
                let mut acc = S::zero();
                for t in terms {
                    acc = acc.add(evaluate_at(t, x, self.eps, self.ln_eps)?);
                }
                finite(acc)
            }
            Body::Leibniz { axes, terms } => {
                let mut acc = S::zero();
                for t in terms {
                    let mut c = t.coefficient;
                    for ((axis, &g), &xi) in axes.iter().zip(&t.gamma).zip(x) {
                        c *= axis.derivative(g, xi);
                        if c == 0.0 {
                            break;
                        }
                    }
                    if c == 0.0 {
                        continue;
                    }
                    acc = acc.add(S::from_f64(c).mul(t.base.eval_with::<S>(x)?));
                }
                finite(acc)
            }
            Body::Quadrature { scale, terms, .. } => {
                let d = x.len();
                let mut y = [0.0f64; 3];
                let mut acc = S::zero();
                for t in terms {
                    for (shift, w) in t.nodes.iter() {
                        for i in 0..d {
                            y[i] = x[i] - shift[i];
                        }
                        let v = t.base.eval_with::<S>(&y[..d])?;
                        acc = acc.add(S::from_f64(*w).mul(v));
                    }
                }
                if !scale.is_zero() {
                    let q = scale.to_f64().unwrap_or(f64::NAN);
                    acc = acc.mul(S::eps_pow(self.eps, self.ln_eps, q));
                }
                finite(acc)
            }
        }
    }

    /// True when the derivative is provably zero on the box `region`.
    pub fn vanishes_on(&self, region: &[Interval]) -> bool {
        match &self.body {
            Body::Expr(e) => vanishes_on(e, region, self.eps),
            Body::Sum(terms) => terms.iter().all(|t| vanishes_on(t, region, self.eps)),
            Body::Leibniz { axes, terms } => terms.iter().all(|t| {
                axes.iter()
                    .zip(&t.gamma)
                    .zip(region)
                    .any(|((a, &g), &iv)| a.vanishes_on(g, iv))
                    || t.base.vanishes_on(region)
            }),
            Body::Quadrature { reach, terms, .. } => {
                let pad = reach * (1.0 + 1e-9) + f64::MIN_POSITIVE;
                let grown: Vec<Interval> = region
                    .iter()
                    .map(|iv| Interval::new(iv.lo - pad, iv.hi + pad))
                    .collect();
                terms.iter().all(|t| t.base.vanishes_on(&grown))
            }
        }
    }
}

fn finite<S: EvalScalar>(v: S) -> Result<S, EvalError> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(EvalError::NonFinite)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64) -> Rational64 {
        Rational64::from_integer(n)
    }

    #[test]
    fn derivative_examples() {
        let osc = FunctionNet::parse("sin(x1/eps)", 1).unwrap();
        let v = derivative_eval(&osc, &MultiIndex(vec![2]), &[0.0], 0.1).unwrap();
        assert_eq!(v, 0.0);
        let c = FunctionNet::parse("eps^(-4)*sin(x1)", 1).unwrap();
        let v = derivative_eval(&c, &MultiIndex(vec![1]), &[0.0], 0.1).unwrap();
        assert!((v - 1e4).abs() < 1e-9);
        let delta = FunctionNet::parse("bump(x1/eps)/eps", 1).unwrap();
        assert_eq!(derivative_eval(&delta, &MultiIndex(vec![0]), &[0.4], 0.2).unwrap(), 0.0);
        assert_eq!(delta.oscillation_hint(), q(1));
    }

    #[test]
    fn banded_lookup() {
        let a = parse("x1", 1).unwrap();
        let b = parse("2*x1", 1).unwrap();
        let n = FunctionNet::banded(vec![(0.25, 1.0, a), (0.0, 0.25, b)], 1).unwrap();
        let at = |eps| derivative_eval(&n, &MultiIndex(vec![0]), &[1.0], eps).unwrap();
        assert_eq!(at(0.5), 1.0);
        assert_eq!(at(0.25), 2.0);
        assert_eq!(at(0.1), 2.0);
        let gap = FunctionNet::banded(
            vec![(0.0, 0.2, parse("1", 1).unwrap()), (0.3, 1.0, parse("1", 1).unwrap())],
            1,
        );
        assert!(matches!(gap, Err(NetError::InvalidBands(_))));
    }

    #[test]
    fn cutoff_product_leibniz_matches_symbolic() {
        // cutoff axis with center 0, half width 1, margin 1 is cutoff(x)
        let base = FunctionNet::parse("sin(x1/eps)", 1).unwrap();
        let cp = FunctionNet::cutoff_product(
            base,
            vec![CutoffAxis {
                center: 0.0,
                half_width: 1.0,
                margin: 1.0,
            }],
        )
        .unwrap();
        let sym = FunctionNet::parse("cutoff(x1)*sin(x1/eps)", 1).unwrap();
        for k in 0..4 {
            for &x in &[-1.7, -0.5, 1.2, 1.5, 1.93] {
                let a = derivative_eval(&cp, &MultiIndex(vec![k]), &[x], 0.3).unwrap();
                let b = derivative_eval(&sym, &MultiIndex(vec![k]), &[x], 0.3).unwrap();
                assert!((a - b).abs() <= 1e-10 * b.abs().max(1.0), "k={k} x={x}: {a} {b}");
            }
        }
        assert_eq!(cp.support_box().unwrap().boxes(), &[vec![(-2.0, 2.0)]]);
    }

    #[test]
    fn log_fallback_for_huge_values() {
        let n = FunctionNet::parse("eps^(-200)*cos(x1)", 1).unwrap();
        let p = n.prepare(&MultiIndex(vec![0]), 1e-3).unwrap();
        let v = p.eval(&[0.0]).unwrap();
        assert!(matches!(v, NetValue::Log(_)));
        assert!((v.ln_abs() - 200.0 * 1e3f64.ln()).abs() < 1e-9);
    }

    #[test]
    fn order_and_dimension_errors() {
        let n = FunctionNet::parse("x1*x2", 2).unwrap();
        assert!(matches!(
            derivative_eval(&n, &MultiIndex(vec![1]), &[0.0, 0.0], 0.5),
            Err(NetError::Dimension { .. })
        ));
        assert!(matches!(
            derivative_eval(&n, &MultiIndex(vec![10, 0]), &[0.0, 0.0], 0.5),
            Err(NetError::OrderTooHigh { .. })
        ));
        assert!(matches!(
            derivative_eval(&n, &MultiIndex(vec![1, 0]), &[0.0, 0.0], 1.5),
            Err(NetError::InvalidEps(_))
        ));
        let d2 = derivative_eval(&n, &MultiIndex(vec![1, 1]), &[0.3, 0.7], 0.5).unwrap();
        assert_eq!(d2, 1.0);
    }
}
