//! Grid suprema of derivatives and the resulting seminorm tables.

use super::{CompactBox, FunctionNet, MultiIndex, NetError, PreparedDerivative, MAX_K};
use crate::expr::Interval;
use crate::scale::{estimate_valuation_ln, EpsGrid, FitOptions, ValuationEstimate};
use num_traits::ToPrimitive;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Points-per-axis policy for grid suprema.
///
/// A box side of length `s` gets `max(base_points, ceil(s * per_feature *
/// eps^-m) + 1)` points, `m` being the net's oscillation hint, capped at
/// `cap_points`. `max_total` bounds the tensor grid of one box.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SamplingSpec {
    pub base_points: usize,
    pub per_feature: f64,
    pub cap_points: usize,
    pub max_total: usize,
}

impl Default for SamplingSpec {
    fn default() -> Self {
        SamplingSpec {
            base_points: 33,
            per_feature: 4.0,
            cap_points: 20_001,
            max_total: 4_000_000,
        }
    }
}

impl SamplingSpec {
    pub fn validate(&self) -> Result<(), NetError> {
        if self.base_points < 2 {
            return Err(NetError::InvalidSampling("base_points must be >= 2".into()));
        }
        if self.cap_points < self.base_points {
            return Err(NetError::InvalidSampling(
                "cap_points must be >= base_points".into(),
            ));
        }
        if !(self.per_feature > 0.0 && self.per_feature.is_finite()) {
            return Err(NetError::InvalidSampling("per_feature must be positive".into()));
        }
        if self.max_total < self.base_points {
            return Err(NetError::InvalidSampling("max_total must be >= base_points".into()));
        }
        Ok(())
    }

    pub fn merge_max(&self, other: &SamplingSpec) -> SamplingSpec {
        SamplingSpec {
            base_points: self.base_points.max(other.base_points),
            per_feature: self.per_feature.max(other.per_feature),
            cap_points: self.cap_points.max(other.cap_points),
            max_total: self.max_total.max(other.max_total),
        }
    }

    /// Points on one axis and whether the cap prevented resolving the hint.
    fn axis_points(&self, side: f64, hint: f64, eps: f64) -> (usize, bool) {
        let mut want = side * self.per_feature * eps.powf(-hint);
        let r = want.round();
        if (want - r).abs() <= 1e-9 * r.max(1.0) {
            want = r;
        }
        let needed = if want.is_finite() && want < 1e18 {
            want.ceil() as usize + 1
        } else {
            usize::MAX
        };
        let n = needed.max(self.base_points);
        if n > self.cap_points {
            (self.cap_points, true)
        } else {
            (n, false)
        }
    }

    /// Per-axis point counts for one box.
    fn grid_for(&self, bx: &[(f64, f64)], hint: f64, eps: f64) -> (Vec<usize>, bool) {
        let mut under = false;
        let mut counts: Vec<usize> = bx
            .iter()
            .map(|&(lo, hi)| {
                let (n, u) = self.axis_points(hi - lo, hint, eps);
                under |= u;
                n
            })
            .collect();
        // shrink the densest axis until the tensor grid fits
        while counts.iter().map(|&c| c as f64).product::<f64>() > self.max_total as f64 {
            let i = (0..counts.len()).max_by_key(|&i| counts[i]).unwrap();
            if counts[i] <= 2 {
                break;
            }
            counts[i] = (counts[i] / 2).max(2);
            under = true;
        }
        (counts, under)
    }
}

/// One row of a seminorm table.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SeminormEntry {
    pub eps: f64,
    /// `ln p_{k,K}(u_eps)`; `-inf` when every sample is exactly zero.
    pub ln_p: f64,
    /// Points per axis, one vector per box.
    pub points_per_axis: Vec<Vec<usize>>,
    pub nonfinite: usize,
    pub undersampled: bool,
}

impl SeminormEntry {
    pub fn flags(&self) -> String {
        let mut f = Vec::new();
        if self.undersampled {
            f.push("undersampled".to_string());
        }
        if self.nonfinite > 0 {
            f.push(format!("nonfinite={}", self.nonfinite));
        }
        f.join(";")
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SeminormTable {
    pub net: String,
    pub compact: CompactBox,
    pub k: u32,
    pub entries: Vec<SeminormEntry>,
}

impl SeminormTable {
    pub fn samples(&self) -> Vec<(f64, f64)> {
        self.entries.iter().map(|e| (e.eps, e.ln_p)).collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SharpSeminorm {
    pub k: u32,
    pub compact: CompactBox,
    pub estimate: ValuationEstimate,
    /// `e^{-v}`, 0 for negligible data.
    pub p_value: f64,
}

impl SharpSeminorm {
    pub fn ln_p(&self) -> f64 {
        -self.estimate.value
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Evidence {
    Yes,
    No,
    Inconclusive,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ModerateVerdict {
    pub evidence: Evidence,
    /// Smallest integer `N` with `p_k <= eps^-N` on the fitted tail.
    pub n_hat: Option<i64>,
    pub estimate: ValuationEstimate,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NegligibleVerdict {
    pub evidence: Evidence,
    pub estimate: ValuationEstimate,
}

struct MaxAcc {
    ln_max: f64,
    nonfinite: usize,
}

const LEAF_POINTS: usize = 512;

struct AxisGrid {
    lo: f64,
    hi: f64,
    h: f64,
    n: usize,
}

impl AxisGrid {
    fn new(lo: f64, hi: f64, n: usize) -> Self {
        AxisGrid {
            lo,
            hi,
            h: (hi - lo) / (n - 1) as f64,
            n,
        }
    }

    fn at(&self, j: usize) -> f64 {
        if j + 1 == self.n {
            self.hi
        } else {
            self.lo + j as f64 * self.h
        }
    }
}

fn scan_cell(
    prep: &PreparedDerivative,
    axes: &[AxisGrid],
    cell: &mut [(usize, usize)],
    acc: &mut MaxAcc,
) {
    let region: Vec<Interval> = axes
        .iter()
        .zip(cell.iter())
        .map(|(g, &(a, b))| Interval::new(g.at(a), g.at(b)))
        .collect();
    if prep.vanishes_on(&region) {
        return;
    }
    let count: usize = cell.iter().map(|&(a, b)| b - a + 1).product();
    if count > LEAF_POINTS {
        let axis = (0..cell.len())
            .max_by_key(|&i| cell[i].1 - cell[i].0)
            .unwrap();
        let (a, b) = cell[axis];
        if b > a {
            let mid = a + (b - a) / 2;
            cell[axis] = (a, mid);
            scan_cell(prep, axes, cell, acc);
            cell[axis] = (mid + 1, b);
            scan_cell(prep, axes, cell, acc);
            cell[axis] = (a, b);
            return;
        }
    }
    let d = axes.len();
    let mut idx: Vec<usize> = cell.iter().map(|c| c.0).collect();
    let mut x = [0.0f64; 3];
    loop {
        for i in 0..d {
            x[i] = axes[i].at(idx[i]);
        }
        match prep.eval(&x[..d]) {
            Ok(v) => {
                let l = v.ln_abs();
                if l > acc.ln_max {
                    acc.ln_max = l;
                }
            }
            Err(_) => acc.nonfinite += 1,
        }
        let mut axis = d;
        loop {
            if axis == 0 {
                return;
            }
            axis -= 1;
            if idx[axis] < cell[axis].1 {
                idx[axis] += 1;
                break;
            }
            idx[axis] = cell[axis].0;
        }
    }
}

fn check_order(k: u32) -> Result<(), NetError> {
    if k > MAX_K + 1 {
        Err(NetError::OrderTooHigh {
            order: k,
            max: MAX_K + 1,
        })
    } else {
        Ok(())
    }
}

/// `ln p_{k,K}(u_eps)` as a grid maximum over all `|alpha| = k`.
pub fn seminorm(
    u: &FunctionNet,
    k: u32,
    compact: &CompactBox,
    eps: f64,
    sampling: &SamplingSpec,
) -> Result<SeminormEntry, NetError> {
    check_order(k)?;
    if compact.dimension() != u.dimension() {
        return Err(NetError::Dimension {
            expected: u.dimension(),
            got: compact.dimension(),
        });
    }
    let spec = u.effective_sampling(sampling);
    spec.validate()?;
    let hint = u.oscillation_hint().to_f64().unwrap_or(0.0);
    let mut acc = MaxAcc {
        ln_max: f64::NEG_INFINITY,
        nonfinite: 0,
    };
    let mut under = false;
    let mut grids = Vec::with_capacity(compact.boxes().len());
    let preps: Vec<PreparedDerivative> = MultiIndex::all_of_order(u.dimension(), k)
        .iter()
        .map(|a| u.prepare(a, eps))
        .collect::<Result<_, _>>()?;
    for bx in compact.boxes() {
        let (counts, u_flag) = spec.grid_for(bx, hint, eps);
        under |= u_flag;
        let axes: Vec<AxisGrid> = bx
            .iter()
            .zip(&counts)
            .map(|(&(lo, hi), &n)| AxisGrid::new(lo, hi, n))
            .collect();
        for prep in &preps {
            let mut cell: Vec<(usize, usize)> = counts.iter().map(|&n| (0, n - 1)).collect();
            scan_cell(prep, &axes, &mut cell, &mut acc);
        }
        grids.push(counts);
    }
    Ok(SeminormEntry {
        eps,
        ln_p: acc.ln_max,
        points_per_axis: grids,
        nonfinite: acc.nonfinite,
        undersampled: under,
    })
}

/// Seminorms at every grid point, evaluated in parallel over `eps`.
pub fn seminorm_table(
    u: &FunctionNet,
    k: u32,
    compact: &CompactBox,
    grid: &EpsGrid,
    sampling: &SamplingSpec,
) -> Result<SeminormTable, NetError> {
    grid.validate()?;
    let entries = grid
        .points()
        .into_par_iter()
        .map(|eps| seminorm(u, k, compact, eps, sampling))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(SeminormTable {
        net: u.name().to_string(),
        compact: compact.clone(),
        k,
        entries,
    })
}

pub fn sharp_from_table(table: &SeminormTable, fit: &FitOptions) -> Result<SharpSeminorm, NetError> {
    let estimate = estimate_valuation_ln(&table.samples(), fit)?;
    Ok(SharpSeminorm {
        k: table.k,
        compact: table.compact.clone(),
        p_value: estimate.sharp_value(),
        estimate,
    })
}

/// `P_{k,K}(u)` from a fitted table.
pub fn sharp_seminorm(
    u: &FunctionNet,
    k: u32,
    compact: &CompactBox,
    grid: &EpsGrid,
    sampling: &SamplingSpec,
    fit: &FitOptions,
) -> Result<SharpSeminorm, NetError> {
    sharp_from_table(&seminorm_table(u, k, compact, grid, sampling)?, fit)
}

/// Tolerance absorbed before rounding the fitted exponent up to `N`.
const MODERATE_ROUNDING_SLACK: f64 = 0.1;

pub fn moderate_from_estimate(estimate: ValuationEstimate) -> ModerateVerdict {
    if !estimate.stable || estimate.value.is_nan() {
        return ModerateVerdict {
            evidence: Evidence::Inconclusive,
            n_hat: None,
            estimate,
        };
    }
    if estimate.value == f64::NEG_INFINITY {
        return ModerateVerdict {
            evidence: Evidence::No,
            n_hat: None,
            estimate,
        };
    }
    let n_hat = if estimate.value < 0.0 {
        ((-estimate.value - MODERATE_ROUNDING_SLACK).ceil() as i64).max(0)
    } else {
        0
    };
    ModerateVerdict {
        evidence: Evidence::Yes,
        n_hat: Some(n_hat),
        estimate,
    }
}

pub fn negligible_from_estimate(estimate: ValuationEstimate, m_max: f64) -> NegligibleVerdict {
    let evidence = if estimate.is_negligible() || (estimate.stable && estimate.value > m_max) {
        Evidence::Yes
    } else if !estimate.stable {
        Evidence::Inconclusive
    } else {
        Evidence::No
    };
    NegligibleVerdict { evidence, estimate }
}

pub fn is_moderate(
    u: &FunctionNet,
    compact: &CompactBox,
    k: u32,
    grid: &EpsGrid,
    sampling: &SamplingSpec,
    fit: &FitOptions,
) -> Result<ModerateVerdict, NetError> {
    let s = sharp_seminorm(u, k, compact, grid, sampling, fit)?;
    Ok(moderate_from_estimate(s.estimate))
}

/// Default `m_max` above which a fitted valuation counts as negligible.
pub const DEFAULT_M_MAX: f64 = 40.0;

pub fn is_negligible(
    u: &FunctionNet,
    compact: &CompactBox,
    k: u32,
    grid: &EpsGrid,
    sampling: &SamplingSpec,
    fit: &FitOptions,
) -> Result<NegligibleVerdict, NetError> {
    let s = sharp_seminorm(u, k, compact, grid, sampling, fit)?;
    Ok(negligible_from_estimate(s.estimate, DEFAULT_M_MAX))
}
