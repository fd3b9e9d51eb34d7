//! Power scales, valuations and sharp norms.
//!
//! A [`PowerScale`] is a finite sum `sum c_i eps^{q_i}` with rational
//! exponents; its valuation is the smallest exponent. Sampled magnitude
//! data are turned into a [`ValuationEstimate`] by a tail-window log-log
//! fit.

use crate::fit::fit_line;
use crate::scalar::Real;
use num_rational::Rational64;
use num_traits::ToPrimitive;
use serde::Serialize;
use std::cmp::Ordering;
use std::ops::{Add, Mul};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ScaleError {
    #[error("eps grid needs 0 < eps0 < 1, 0 < ratio < 1 and count >= 1 (got eps0={eps0}, ratio={ratio}, count={count})")]
    InvalidGrid { eps0: f64, ratio: f64, count: usize },
    #[error("valuation fit needs window >= 3 (got {0})")]
    WindowTooSmall(usize),
    #[error("valuation fit needs {window} usable samples, found {usable}")]
    InsufficientSamples { usable: usize, window: usize },
    #[error("numerical floor must be positive (got {0})")]
    InvalidFloor(f64),
}

/// Exact sum of `coefficient * eps^exponent` terms.
#[derive(Clone, Debug, PartialEq)]
pub struct PowerScale<T> {
    terms: Vec<(T, Rational64)>,
}

impl<T: Real> PowerScale<T> {
    pub fn zero() -> Self {
        PowerScale { terms: Vec::new() }
    }

    pub fn monomial(coefficient: T, exponent: Rational64) -> Self {
        Self::from_terms([(coefficient, exponent)])
    }

    /// Sorts by exponent, merges duplicates and drops zero coefficients.
    pub fn from_terms<I: IntoIterator<Item = (T, Rational64)>>(terms: I) -> Self {
        let mut v: Vec<(T, Rational64)> = terms.into_iter().collect();
        v.sort_by_key(|t| t.1);
        let mut out: Vec<(T, Rational64)> = Vec::with_capacity(v.len());
        for (c, q) in v {
            match out.last_mut() {
                Some((acc, last)) if *last == q => *acc = *acc + c,
                _ => out.push((c, q)),
            }
        }
        out.retain(|(c, _)| !c.is_zero());
        PowerScale { terms: out }
    }

    pub fn terms(&self) -> &[(T, Rational64)] {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Smallest exponent; `None` stands for `+inf` (the zero scale).
    pub fn valuation(&self) -> Option<Rational64> {
        self.terms.first().map(|t| t.1)
    }

    /// Valuation as an extended real.
    pub fn valuation_exact(&self) -> f64 {
        self.valuation()
            .map_or(f64::INFINITY, |q| q.to_f64().unwrap_or(f64::NAN))
    }

    pub fn sharp_norm(&self) -> T {
        self.sharp_norm_exact().value()
    }

    pub fn sharp_norm_exact(&self) -> SharpNorm {
        SharpNorm {
            valuation: self.valuation(),
        }
    }

    pub fn eval(&self, eps: T) -> T {
        self.terms.iter().fold(T::zero(), |acc, &(c, q)| {
            acc + c * eps.powf(T::lit(q.to_f64().unwrap_or(f64::NAN)))
        })
    }

    pub fn sample(&self, grid: &EpsGrid) -> Vec<ScaleSample<T>> {
        grid.points()
            .into_iter()
            .map(|eps| {
                let value = self.eval(T::lit(eps));
                ScaleSample {
                    eps,
                    value,
                    overflow: !value.is_finite(),
                }
            })
            .collect()
    }
}

impl<T: Real> Add for &PowerScale<T> {
    type Output = PowerScale<T>;
    fn add(self, rhs: Self) -> PowerScale<T> {
        PowerScale::from_terms(self.terms.iter().chain(&rhs.terms).copied())
    }
}

impl<T: Real> Mul for &PowerScale<T> {
    type Output = PowerScale<T>;
    fn mul(self, rhs: Self) -> PowerScale<T> {
        let mut v = Vec::with_capacity(self.terms.len() * rhs.terms.len());
        for &(a, p) in &self.terms {
            for &(b, q) in &rhs.terms {
                v.push((a * b, p + q));
            }
        }
        PowerScale::from_terms(v)
    }
}

impl<T: Real> Add for PowerScale<T> {
    type Output = PowerScale<T>;
    fn add(self, rhs: Self) -> PowerScale<T> {
        &self + &rhs
    }
}

impl<T: Real> Mul for PowerScale<T> {
    type Output = PowerScale<T>;
    fn mul(self, rhs: Self) -> PowerScale<T> {
        &self * &rhs
    }
}

/// `e^{-v}` held through its exact exponent, so that order and products
/// compare without rounding.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SharpNorm {
    /// `None` is the zero norm (`v = +inf`).
    pub valuation: Option<Rational64>,
}

impl SharpNorm {
    pub fn value<T: Real>(&self) -> T {
        match self.valuation {
            None => T::zero(),
            Some(v) => T::lit(-v.to_f64().unwrap_or(f64::NAN)).exp(),
        }
    }
}

impl PartialOrd for SharpNorm {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for SharpNorm {
    fn cmp(&self, other: &Self) -> Ordering {
        // larger valuation means smaller norm
        match (self.valuation, other.valuation) {
            (None, None) => Ordering::Equal,
            (None, Some(_)) => Ordering::Less,
            (Some(_), None) => Ordering::Greater,
            (Some(a), Some(b)) => b.cmp(&a),
        }
    }
}

impl Mul for SharpNorm {
    type Output = SharpNorm;
    #[allow(clippy::suspicious_arithmetic_impl)]
    fn mul(self, rhs: Self) -> SharpNorm {
        SharpNorm {
            valuation: match (self.valuation, rhs.valuation) {
                (Some(a), Some(b)) => Some(a + b),
                _ => None,
            },
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScaleSample<T> {
    pub eps: f64,
    pub value: T,
    pub overflow: bool,
}

/// Geometric grid `eps_j = eps0 * ratio^j`, `j = 0..count`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EpsGrid {
    pub eps0: f64,
    pub ratio: f64,
    pub count: usize,
}

impl Default for EpsGrid {
    fn default() -> Self {
        EpsGrid {
            eps0: 0.5,
            ratio: 0.5,
            count: 20,
        }
    }
}

impl EpsGrid {
    pub fn new(eps0: f64, ratio: f64, count: usize) -> Result<Self, ScaleError> {
        let g = EpsGrid { eps0, ratio, count };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<(), ScaleError> {
        let ok = self.eps0 > 0.0 && self.eps0 < 1.0 && self.ratio > 0.0 && self.ratio < 1.0;
        if ok && self.count >= 1 && self.point(self.count - 1) > 0.0 {
            Ok(())
        } else {
            Err(ScaleError::InvalidGrid {
                eps0: self.eps0,
                ratio: self.ratio,
                count: self.count,
            })
        }
    }

    pub fn point(&self, j: usize) -> f64 {
        self.eps0 * self.ratio.powi(j as i32)
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.count).map(|j| self.point(j)).collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum EstimateMethod {
    Exact,
    Fitted,
    NegligibleFloor,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ValuationEstimate {
    /// Fitted exponent; `+inf` for negligible data.
    pub value: f64,
    pub method: EstimateMethod,
    pub slope: f64,
    pub residual: f64,
    /// Half-open index range of the samples used.
    pub window: (usize, usize),
    pub stable: bool,
}

impl ValuationEstimate {
    pub fn exact(value: f64) -> Self {
        ValuationEstimate {
            value,
            method: EstimateMethod::Exact,
            slope: value,
            residual: 0.0,
            window: (0, 0),
            stable: true,
        }
    }

    pub fn is_negligible(&self) -> bool {
        self.method == EstimateMethod::NegligibleFloor
    }

    /// `ln P = -v`.
    pub fn ln_sharp(&self) -> f64 {
        -self.value
    }

    /// `P = e^{-v}`, 0 for negligible data.
    pub fn sharp_value(&self) -> f64 {
        if self.value == f64::INFINITY {
            0.0
        } else {
            (-self.value).exp()
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FitOptions {
    pub window: usize,
    pub floor: f64,
    pub residual_threshold: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            window: 8,
            floor: 1e-280,
            residual_threshold: 0.25,
        }
    }
}

/// Fits from `(eps, |value|)` samples ordered by decreasing `eps`.
pub fn estimate_valuation(
    samples: &[(f64, f64)],
    opts: &FitOptions,
) -> Result<ValuationEstimate, ScaleError> {
    let ln: Vec<(f64, f64)> = samples.iter().map(|&(e, v)| (e, v.abs().ln())).collect();
    estimate_valuation_ln(&ln, opts)
}

/// Fits from `(eps, ln |value|)` samples ordered by decreasing `eps`.
pub fn estimate_valuation_ln(
    samples: &[(f64, f64)],
    opts: &FitOptions,
) -> Result<ValuationEstimate, ScaleError> {
    let window = opts.window;
    if window < 3 {
        return Err(ScaleError::WindowTooSmall(window));
    }
    if !(opts.floor > 0.0) {
        return Err(ScaleError::InvalidFloor(opts.floor));
    }
    let ln_floor = opts.floor.ln();
    let n = samples.len();
    let usable = |ln_v: f64| ln_v > ln_floor;
    let tail_start = n.saturating_sub(window);
    if n > 0 && samples[tail_start..].iter().all(|&(_, l)| l <= ln_floor) {
        return Ok(ValuationEstimate {
            value: f64::INFINITY,
            method: EstimateMethod::NegligibleFloor,
            slope: f64::INFINITY,
            residual: 0.0,
            window: (tail_start, n),
            stable: true,
        });
    }
    let picked: Vec<usize> = (0..n).rev().filter(|&i| usable(samples[i].1)).take(window).collect();
    if picked.len() < window {
        return Err(ScaleError::InsufficientSamples {
            usable: picked.len(),
            window,
        });
    }
    // ascending index order keeps the summation order fixed
    let (xs, ys): (Vec<f64>, Vec<f64>) = picked
        .iter()
        .rev()
        .map(|&i| (samples[i].0.ln(), samples[i].1))
        .unzip();
    let fit = fit_line(&xs, &ys).ok_or(ScaleError::InsufficientSamples {
        usable: picked.len(),
        window,
    })?;
    let residual = if fit.rms_residual.is_finite() {
        fit.rms_residual
    } else {
        f64::INFINITY
    };
    let slope = if fit.slope.is_finite() { fit.slope } else { f64::NAN };
    Ok(ValuationEstimate {
        value: slope,
        method: EstimateMethod::Fitted,
        slope,
        residual,
        window: (*picked.last().unwrap(), picked[0] + 1),
        stable: residual <= opts.residual_threshold && slope.is_finite(),
    })
}

impl<T: Real> PowerScale<T> {
    /// Convenience wrapper: sample on `grid` and fit.
    pub fn estimate(&self, grid: &EpsGrid, opts: &FitOptions) -> Result<ValuationEstimate, ScaleError> {
        let s: Vec<(f64, f64)> = self
            .sample(grid)
            .iter()
            .map(|s| (s.eps, s.value.to_f64().unwrap_or(f64::NAN)))
            .collect();
        estimate_valuation(&s, opts)
    }
}

impl<T: Real> Default for PowerScale<T> {
    fn default() -> Self {
        Self::zero()
    }
}

impl<T: Real> PowerScale<T> {
    pub fn leading_coefficient(&self) -> Option<T> {
        self.terms.first().map(|t| t.0)
    }
}
