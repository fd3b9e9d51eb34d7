//! The radial mollifier and the convergence/density experiments.
//!
//! `psi(x) = c_d exp(1/(|x|^2 - 1))` on the unit ball, normalised by the
//! same tensor Gauss–Legendre rule that later integrates against it.
//! Convolutions use the substitution `t = eps^n s`, so the rule lives on
//! `[-1, 1]^d` for every `eps`.

use crate::expr::primitives::{bump_derivative, radial_profile_derivative};
use crate::fit::fit_line;
use crate::nets::{
    seminorm, sharp_seminorm, Body, CompactBox, CutoffAxis, Evidence, FunctionNet, MultiIndex,
    NetError, NetKind, PreparedDerivative, QuadTerm, SamplingSpec,
};
use crate::quadrature::GaussLegendre;
use crate::regularity::{p_sequence, PSequence, RegularityError};
use crate::scale::{EpsGrid, FitOptions, ValuationEstimate};
use num_rational::Rational64;
use num_traits::Zero;
use serde::{Deserialize, Serialize};
use std::sync::Arc;

type NodeWeight<'a> = Box<dyn Fn(&MollifierNode) -> f64 + 'a>;

/// Default nodes per axis. 64 rather than 32: the 32-point rule misses
/// the `1e-8` normalisation target for `c_1`.
pub const DEFAULT_QUADRATURE_ORDER: usize = 64;

/// Nodes of the `theta` rule in the Taylor-remainder integral.
pub const THETA_NODES: usize = 8;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum MollifyError {
    #[error("mollifier dimension {0} outside 1..=3")]
    Dimension(usize),
    #[error("quadrature order {0} below the minimum of 16")]
    OrderTooLow(usize),
    #[error("quadrature produced a non-finite normalisation")]
    NonFinite,
}

/// Where derivatives of a mollified net are placed.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DerivativeRoute {
    /// `(d^alpha u) * psi_delta`.
    OnBase,
    /// `u * d^alpha(psi_delta)`.
    OnMollifier,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MollifierNode {
    pub s: [f64; 3],
    /// Tensor Gauss–Legendre weight.
    pub weight: f64,
    /// `psi(s)`.
    pub psi: f64,
}

#[derive(Clone, Debug)]
pub struct Mollifier {
    dimension: usize,
    order: usize,
    c_d: f64,
    nodes: Vec<MollifierNode>,
    theta: Vec<(f64, f64)>,
}

impl Mollifier {
    pub fn new(dimension: usize, order: usize) -> Result<Self, MollifyError> {
        if !(1..=3).contains(&dimension) {
            return Err(MollifyError::Dimension(dimension));
        }
        if order < 16 {
            return Err(MollifyError::OrderTooLow(order));
        }
        let rule = GaussLegendre::<f64>::new(order);
        let mut raw = Vec::new();
        let mut mass = 0.0;
        for (point, weight) in rule.tensor(dimension) {
            let q: f64 = point.iter().map(|v| v * v).sum();
            if q >= 1.0 {
                continue;
            }
            let g = (1.0 / (q - 1.0)).exp();
            mass += weight * g;
            let mut s = [0.0; 3];
            s[..dimension].copy_from_slice(&point);
            raw.push((s, weight, g));
        }
        let c_d = 1.0 / mass;
        if !c_d.is_finite() {
            return Err(MollifyError::NonFinite);
        }
        let nodes = raw
            .into_iter()
            .filter(|r| r.2 > 0.0)
            .map(|(s, weight, g)| MollifierNode {
                s,
                weight,
                psi: c_d * g,
            })
            .collect();
        let theta = GaussLegendre::<f64>::new(THETA_NODES)
            .nodes()
            .iter()
            .zip(GaussLegendre::<f64>::new(THETA_NODES).weights())
            .map(|(&t, &w)| ((1.0 + t) / 2.0, w / 2.0))
            .collect();
        Ok(Mollifier {
            dimension,
            order,
            c_d,
            nodes,
            theta,
        })
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn order(&self) -> usize {
        self.order
    }

    /// Normalisation constant `c_d`.
    pub fn normalization(&self) -> f64 {
        self.c_d
    }

    /// `int |psi|`, which is 1 because `psi >= 0`.
    pub fn abs_integral(&self) -> f64 {
        1.0
    }

    pub fn nodes(&self) -> &[MollifierNode] {
        &self.nodes
    }

    pub fn psi(&self, s: &[f64]) -> f64 {
        let q: f64 = s.iter().map(|v| v * v).sum();
        if q >= 1.0 {
            0.0
        } else {
            self.c_d * (1.0 / (q - 1.0)).exp()
        }
    }

    /// `d^alpha psi(s)`.
    pub fn psi_derivative(&self, alpha: &[u32], s: &[f64]) -> f64 {
        if self.dimension == 1 {
            return self.c_d * bump_derivative(alpha[0] as usize, s[0]);
        }
        let q: f64 = s.iter().map(|v| v * v).sum();
        if q >= 1.0 {
            return 0.0;
        }
        let total: u32 = alpha.iter().sum();
        // d^alpha g(|s|^2) = sum_j prod_i a_i!/(j_i!(a_i-2j_i)!) (2 s_i)^(a_i-2j_i) g^(|a|-|j|)
        let mut sum = 0.0;
        let mut j = vec![0u32; alpha.len()];
        loop {
            let mut coef = 1.0;
            for ((&a, &ji), &si) in alpha.iter().zip(&j).zip(s) {
                let rest = a - 2 * ji;
                coef *= factorial(a) / (factorial(ji) * factorial(rest))
                    * (2.0 * si).powi(rest as i32);
            }
            let jsum: u32 = j.iter().sum();
            if coef != 0.0 {
                sum += coef * radial_profile_derivative((total - jsum) as usize, q);
            }
            let mut axis = 0;
            loop {
                if axis == alpha.len() {
                    return self.c_d * sum;
                }
                if 2 * (j[axis] + 1) <= alpha[axis] {
                    j[axis] += 1;
                    break;
                }
                j[axis] = 0;
                axis += 1;
            }
        }
    }

    /// `sum w psi` over the rule.
    pub fn integral(&self) -> f64 {
        self.nodes.iter().map(|n| n.weight * n.psi).sum()
    }

    pub(crate) fn prepare_mollified(
        &self,
        base: &FunctionNet,
        alpha: &MultiIndex,
        eps: f64,
        n: u32,
        route: DerivativeRoute,
    ) -> Result<Body, NetError> {
        let delta = eps.powi(n as i32);
        let d = self.dimension;
        let (base_prep, scale, weight): (PreparedDerivative, Rational64, NodeWeight<'_>) =
            match route {
                DerivativeRoute::OnBase => (
                    base.prepare(alpha, eps)?,
                    Rational64::zero(),
                    Box::new(|nd: &MollifierNode| nd.weight * nd.psi),
                ),
                DerivativeRoute::OnMollifier => {
                    let a = alpha.components().to_vec();
                    (
                        base.prepare(&MultiIndex::zero(d), eps)?,
                        Rational64::from_integer(-(n as i64) * alpha.order() as i64),
                        Box::new(move |nd: &MollifierNode| {
                            nd.weight * self.psi_derivative(&a, &nd.s[..d])
                        }),
                    )
                }
            };
        let nodes: Vec<([f64; 3], f64)> = self
            .nodes
            .iter()
            .filter_map(|nd| {
                let w = weight(nd);
                (w != 0.0).then(|| (scale_shift(nd.s, delta), w))
            })
            .collect();
        Ok(Body::Quadrature {
            scale,
            reach: delta,
            terms: vec![QuadTerm {
                base: base_prep,
                nodes: Arc::new(nodes),
            }],
        })
    }

    pub(crate) fn prepare_residual(
        &self,
        base: &FunctionNet,
        alpha: &MultiIndex,
        eps: f64,
        n: u32,
    ) -> Result<Body, NetError> {
        let delta = eps.powi(n as i32);
        let d = self.dimension;
        let mut terms = Vec::new();
        for beta in MultiIndex::all_of_order(d, 2) {
            let coef = 2.0 / beta.factorial();
            let base_prep = base.prepare(&alpha.add(&beta), eps)?;
            let mut nodes = Vec::with_capacity(self.nodes.len() * self.theta.len());
            for nd in &self.nodes {
                let moment: f64 = beta
                    .components()
                    .iter()
                    .zip(&nd.s)
                    .map(|(&b, &si)| si.powi(b as i32))
                    .product();
                let w = coef * nd.weight * nd.psi * moment;
                if w == 0.0 {
                    continue;
                }
                for &(theta, wt) in &self.theta {
                    nodes.push((scale_shift(nd.s, theta * delta), w * wt * (1.0 - theta)));
                }
            }
            terms.push(QuadTerm {
                base: base_prep,
                nodes: Arc::new(nodes),
            });
        }
        Ok(Body::Quadrature {
            scale: Rational64::from_integer(2 * n as i64),
            reach: delta,
            terms,
        })
    }
}

fn scale_shift(s: [f64; 3], factor: f64) -> [f64; 3] {
    [s[0] * factor, s[1] * factor, s[2] * factor]
}

fn factorial(n: u32) -> f64 {
    (1..=n).map(f64::from).product()
}

/// `build_mollifier(d, Q)`.
pub fn build_mollifier(dimension: usize, order: usize) -> Result<Mollifier, MollifyError> {
    Mollifier::new(dimension, order)
}

fn check_mollifier(u: &FunctionNet, m: &Mollifier, n: u32) -> Result<(), NetError> {
    if m.dimension() != u.dimension() {
        return Err(NetError::Dimension {
            expected: u.dimension(),
            got: m.dimension(),
        });
    }
    if n == 0 {
        return Err(NetError::InvalidSampling("mollification order n must be >= 1".into()));
    }
    Ok(())
}

/// `u_eps * psi_{eps^n}` with derivatives on `u`.
pub fn mollify(u: &FunctionNet, n: u32, m: &Arc<Mollifier>) -> Result<FunctionNet, NetError> {
    mollify_with_route(u, n, m, DerivativeRoute::OnBase)
}

pub fn mollify_with_route(
    u: &FunctionNet,
    n: u32,
    m: &Arc<Mollifier>,
    route: DerivativeRoute,
) -> Result<FunctionNet, NetError> {
    check_mollifier(u, m, n)?;
    let mut net = FunctionNet::from_kind(
        u.dimension(),
        NetKind::Mollified {
            base: Arc::new(u.clone()),
            n,
            mollifier: m.clone(),
            route,
        },
        u.oscillation_hint(),
        format!("mollify({}, n={n})", u.name()),
        u.support_box().map(|b| b.enlarge(1.0)),
    );
    if let Some(s) = u.sampling_override() {
        net = net.with_sampling_override(s.clone());
    }
    Ok(net)
}

/// `u_eps * psi_{eps^n} - u_eps`.
pub fn mollifier_residual(
    u: &FunctionNet,
    n: u32,
    m: &Arc<Mollifier>,
) -> Result<FunctionNet, NetError> {
    check_mollifier(u, m, n)?;
    let mut net = FunctionNet::from_kind(
        u.dimension(),
        NetKind::MollifierResidual {
            base: Arc::new(u.clone()),
            n,
            mollifier: m.clone(),
        },
        u.oscillation_hint(),
        format!("mollify({}, n={n}) - {}", u.name(), u.name()),
        u.support_box().map(|b| b.enlarge(1.0)),
    );
    if let Some(s) = u.sampling_override() {
        net = net.with_sampling_override(s.clone());
    }
    Ok(net)
}

/// `u` times a product of per-axis cutoffs equal to 1 on `inner_box` and
/// 0 outside `inner_box` inflated by `outer_margin`.
pub fn cutoff_net(
    u: &FunctionNet,
    inner_box: &[(f64, f64)],
    outer_margin: f64,
) -> Result<FunctionNet, NetError> {
    if !(outer_margin > 0.0) {
        return Err(NetError::InvalidCutoff(format!(
            "outer margin must be positive, got {outer_margin}"
        )));
    }
    let axes = inner_box
        .iter()
        .map(|&(lo, hi)| CutoffAxis {
            center: (lo + hi) / 2.0,
            half_width: (hi - lo) / 2.0,
            margin: outer_margin,
        })
        .collect();
    FunctionNet::cutoff_product(u.clone(), axes)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConvergenceEntry {
    pub n: u32,
    pub estimate: ValuationEstimate,
    /// `v_n - (n + reference - slack)`; nonnegative when the bound holds.
    pub margin: f64,
    pub satisfied: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConvergenceRecord {
    pub k: u32,
    pub compact: CompactBox,
    pub r: f64,
    /// Fitted valuation of `p_{k+1, K+r}(u)`.
    pub reference: ValuationEstimate,
    pub entries: Vec<ConvergenceEntry>,
    /// Least-squares slope of `v_n` against `n` over finite entries.
    pub slope: Option<f64>,
}

/// Slack on the convergence bound, ln-domain.
pub const CONVERGENCE_SLACK: f64 = 0.2;

#[allow(clippy::too_many_arguments)]
pub fn convergence_experiment(
    u: &FunctionNet,
    compact: &CompactBox,
    k: u32,
    n_list: &[u32],
    r: f64,
    m: &Arc<Mollifier>,
    grid: &EpsGrid,
    sampling: &SamplingSpec,
    fit: &FitOptions,
) -> Result<ConvergenceRecord, NetError> {
    let reference = sharp_seminorm(u, k + 1, &compact.enlarge(r), grid, sampling, fit)?.estimate;
    let mut entries = Vec::with_capacity(n_list.len());
    for &n in n_list {
        let diff = mollifier_residual(u, n, m)?;
        let est = sharp_seminorm(&diff, k, compact, grid, sampling, fit)?.estimate;
        let required = n as f64 + reference.value - CONVERGENCE_SLACK;
        let (margin, satisfied) = if est.value == f64::INFINITY {
            (f64::INFINITY, true)
        } else {
            let m = est.value - required;
            (m, m >= 0.0)
        };
        entries.push(ConvergenceEntry {
            n,
            estimate: est,
            margin,
            satisfied,
        });
    }
    let (xs, ys): (Vec<f64>, Vec<f64>) = entries
        .iter()
        .filter(|e| e.estimate.value.is_finite())
        .map(|e| (e.n as f64, e.estimate.value))
        .unzip();
    let slope = fit_line(&xs, &ys).map(|f| f.slope);
    Ok(ConvergenceRecord {
        k,
        compact: compact.clone(),
        r,
        reference,
        entries,
        slope,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BoundEntry {
    pub j: usize,
    pub eps: f64,
    /// `ln p_k(u * psi_{eps^n})`, derivatives on the mollifier.
    pub lhs: f64,
    /// `(-n k - 1) ln eps + ln sup_L |u_eps|`.
    pub rhs: f64,
    pub holds: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BoundReport {
    pub k: u32,
    pub n: u32,
    pub entries: Vec<BoundEntry>,
    pub holds: bool,
}

/// Slack on the dense-class bound, ln-domain.
pub const BOUND_SLACK: f64 = 0.1;
/// First grid index checked by the dense-class bound.
pub const DEFAULT_SMALL_EPS_INDEX: usize = 4;

#[allow(clippy::too_many_arguments)]
pub fn regular_bound_experiment(
    u: &FunctionNet,
    compact: &CompactBox,
    k: u32,
    n: u32,
    m: &Arc<Mollifier>,
    grid: &EpsGrid,
    sampling: &SamplingSpec,
    j0: usize,
) -> Result<BoundReport, NetError> {
    let support = u
        .support_box()
        .ok_or_else(|| NetError::MissingSupport(u.name().to_string()))?
        .clone();
    let psi_route = mollify_with_route(u, n, m, DerivativeRoute::OnMollifier)?;
    grid.validate()?;
    let mut entries = Vec::new();
    for j in j0..grid.count {
        let eps = grid.point(j);
        let lhs = seminorm(&psi_route, k, compact, eps, sampling)?.ln_p;
        let sup_u = seminorm(u, 0, &support, eps, sampling)?.ln_p;
        let rhs = (-(n as f64) * k as f64 - 1.0) * eps.ln() + sup_u;
        let holds = lhs == f64::NEG_INFINITY || lhs <= rhs + BOUND_SLACK;
        entries.push(BoundEntry {
            j,
            eps,
            lhs,
            rhs,
            holds,
        });
    }
    let holds = entries.iter().all(|e| e.holds);
    Ok(BoundReport {
        k,
        n,
        entries,
        holds,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ClassAEntry {
    pub compact: Option<CompactBox>,
    pub k: u32,
    pub estimate: ValuationEstimate,
    /// `-N k - N`.
    pub bound: f64,
    pub ok: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ClassAVerdict {
    pub n_exponent: u32,
    pub evidence: Evidence,
    pub entries: Vec<ClassAEntry>,
}

/// Slack on the class-A exponent test.
pub const CLASS_A_SLACK: f64 = 0.1;

#[allow(clippy::too_many_arguments)]
pub fn class_a_membership(
    u: &FunctionNet,
    big_n: u32,
    compacts: &[CompactBox],
    k_max: u32,
    grid: &EpsGrid,
    sampling: &SamplingSpec,
    fit: &FitOptions,
) -> Result<ClassAVerdict, RegularityError> {
    let seqs = compacts
        .iter()
        .map(|c| p_sequence(u, c, k_max, grid, sampling, fit))
        .collect::<Result<Vec<_>, _>>()?;
    class_a_from_sequences(&seqs, big_n)
}

/// Class-A test on precomputed `P`-sequences.
pub fn class_a_from_sequences(
    sequences: &[PSequence],
    big_n: u32,
) -> Result<ClassAVerdict, RegularityError> {
    if sequences.is_empty() {
        return Err(RegularityError::NoCompacts);
    }
    if big_n == 0 {
        return Err(RegularityError::InvalidParameter("N must be >= 1".into()));
    }
    let mut entries = Vec::new();
    for s in sequences {
        for e in s.entries() {
            let bound = -(big_n as f64) * e.k as f64 - big_n as f64;
            let v = e.estimate.value;
            entries.push(ClassAEntry {
                compact: s.compact.clone(),
                k: e.k,
                estimate: e.estimate,
                bound,
                ok: v == f64::INFINITY || v >= bound - CLASS_A_SLACK,
            });
        }
    }
    let evidence = if entries.iter().any(|e| !e.ok && e.estimate.stable) {
        Evidence::No
    } else if entries.iter().any(|e| !e.estimate.stable) {
        Evidence::Inconclusive
    } else {
        Evidence::Yes
    };
    Ok(ClassAVerdict {
        n_exponent: big_n,
        evidence,
        entries,
    })
}
