//! Finite-evidence classification of nets by the growth of `P_{k,K}` in `k`.
//!
//! Every check works on `ln P_k = -v(p_{k,K})` for `k = 0..=k_max`; the
//! negligible verdict is `ln P_k = -inf`.

use crate::nets::{sharp_seminorm, CompactBox, Evidence, FunctionNet, NetError, SamplingSpec, MAX_K};
use crate::scale::{EpsGrid, EstimateMethod, FitOptions, ValuationEstimate};
use serde::Serialize;

pub const DEFAULT_K_MAX: u32 = 6;
pub const DEFAULT_TOL: f64 = 0.1;
pub const LANDAU_TRIGGER: f64 = 0.1;
pub const LANDAU_SLACK: f64 = 0.2;
/// Added to the tail slope to form the sublinear witness `a_K`.
pub const SUBLINEAR_MARGIN: f64 = 0.25;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum RegularityError {
    #[error("k_max = {got} but this check needs at least {need}")]
    KMaxTooSmall { need: u32, got: u32 },
    #[error("k_max = {0} exceeds the cap of {MAX_K}")]
    KMaxTooLarge(u32),
    #[error("P-sequence orders must run 0, 1, 2, ... without gaps")]
    NonConsecutive,
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("no compacts given")]
    NoCompacts,
    #[error(transparent)]
    Net(#[from] NetError),
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PEntry {
    pub k: u32,
    pub estimate: ValuationEstimate,
    pub p_value: f64,
}

impl PEntry {
    pub fn ln_p(&self) -> f64 {
        -self.estimate.value
    }

    pub fn is_null(&self) -> bool {
        self.estimate.value == f64::INFINITY
    }
}

/// `P_{k,K}(u)` for `k = 0..=k_max`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PSequence {
    pub compact: Option<CompactBox>,
    entries: Vec<PEntry>,
}

impl PSequence {
    pub fn new(compact: Option<CompactBox>, entries: Vec<PEntry>) -> Result<Self, RegularityError> {
        if entries.is_empty() || entries.iter().enumerate().any(|(i, e)| e.k as usize != i) {
            return Err(RegularityError::NonConsecutive);
        }
        let k_max = entries.len() as u32 - 1;
        if k_max > MAX_K {
            return Err(RegularityError::KMaxTooLarge(k_max));
        }
        Ok(PSequence { compact, entries })
    }

    /// A synthetic sequence from `ln P_k` values; `-inf` marks a null entry.
    pub fn from_ln(ln_p: &[f64]) -> Result<Self, RegularityError> {
        let entries = ln_p
            .iter()
            .enumerate()
            .map(|(k, &l)| {
                let mut estimate = ValuationEstimate::exact(-l);
                if l == f64::NEG_INFINITY {
                    estimate.method = EstimateMethod::NegligibleFloor;
                }
                PEntry {
                    k: k as u32,
                    p_value: estimate.sharp_value(),
                    estimate,
                }
            })
            .collect();
        Self::new(None, entries)
    }

    pub fn entries(&self) -> &[PEntry] {
        &self.entries
    }

    pub fn k_max(&self) -> u32 {
        self.entries.len() as u32 - 1
    }

    pub fn ln_p(&self, k: u32) -> f64 {
        self.entries[k as usize].ln_p()
    }

    pub fn ln_values(&self) -> Vec<f64> {
        self.entries.iter().map(PEntry::ln_p).collect()
    }

    pub fn all_stable(&self) -> bool {
        self.entries.iter().all(|e| e.estimate.stable)
    }

    /// The prefix `k = 0..=k_max`.
    pub fn truncated(&self, k_max: u32) -> PSequence {
        PSequence {
            compact: self.compact.clone(),
            entries: self.entries[..=(k_max as usize).min(self.entries.len() - 1)].to_vec(),
        }
    }

    /// `max_{k in upper half, k >= 1} (ln P_k - ln P_0) / k`.
    pub fn tail_slope(&self) -> f64 {
        let k_max = self.k_max();
        let l0 = self.ln_p(0);
        (k_max.div_ceil(2).max(1)..=k_max)
            .map(|k| {
                let lk = self.ln_p(k);
                if lk == f64::NEG_INFINITY {
                    f64::NEG_INFINITY
                } else if l0 == f64::NEG_INFINITY {
                    f64::INFINITY
                } else {
                    (lk - l0) / k as f64
                }
            })
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Builds `P_{k,K}(u)` for `k = 0..=k_max` by sharp-seminorm fits.
pub fn p_sequence(
    u: &FunctionNet,
    compact: &CompactBox,
    k_max: u32,
    grid: &EpsGrid,
    sampling: &SamplingSpec,
    fit: &FitOptions,
) -> Result<PSequence, RegularityError> {
    if k_max > MAX_K {
        return Err(RegularityError::KMaxTooLarge(k_max));
    }
    let entries = (0..=k_max)
        .map(|k| {
            let s = sharp_seminorm(u, k, compact, grid, sampling, fit)?;
            Ok(PEntry {
                k,
                p_value: s.p_value,
                estimate: s.estimate,
            })
        })
        .collect::<Result<Vec<_>, NetError>>()?;
    PSequence::new(Some(compact.clone()), entries)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LandauEntry {
    pub k: u32,
    pub triggered: bool,
    /// `ln P_{k-1} + ln P_{k+1} - 2 ln P_k`.
    pub margin: f64,
    pub satisfied: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LandauReport {
    pub trigger: f64,
    pub slack: f64,
    pub entries: Vec<LandauEntry>,
    /// Orders skipped because a neighbouring estimate is unstable.
    pub skipped: Vec<u32>,
}

impl LandauReport {
    pub fn all_satisfied(&self) -> bool {
        self.entries.iter().all(|e| e.satisfied)
    }
}

pub fn landau_check(s: &PSequence, trigger: f64, slack: f64) -> Result<LandauReport, RegularityError> {
    if s.k_max() < 2 {
        return Err(RegularityError::KMaxTooSmall {
            need: 2,
            got: s.k_max(),
        });
    }
    let mut entries = Vec::new();
    let mut skipped = Vec::new();
    for k in 1..s.k_max() {
        let window = &s.entries()[k as usize - 1..=k as usize + 1];
        if window.iter().any(|e| !e.estimate.stable) {
            skipped.push(k);
            continue;
        }
        let (lo, mid, hi) = (s.ln_p(k - 1), s.ln_p(k), s.ln_p(k + 1));
        let rise = mid - lo;
        let triggered = rise > trigger;
        let margin = lo + hi - 2.0 * mid;
        entries.push(LandauEntry {
            k,
            triggered,
            margin,
            satisfied: !triggered || margin >= -slack,
        });
    }
    Ok(LandauReport {
        trigger,
        slack,
        entries,
        skipped,
    })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct NullReport {
    /// First order with a null `P`.
    pub first_null: Option<u32>,
    /// First later order with a non-null `P`.
    pub violation: Option<u32>,
}

impl NullReport {
    pub fn consistent(&self) -> bool {
        self.violation.is_none()
    }
}

pub fn null_propagation_check(s: &PSequence) -> NullReport {
    let first_null = s.entries().iter().find(|e| e.is_null()).map(|e| e.k);
    let violation = first_null.and_then(|k0| {
        s.entries()[k0 as usize..]
            .iter()
            .find(|e| !e.is_null())
            .map(|e| e.k)
    });
    NullReport {
        first_null,
        violation,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GinftyVerdict {
    #[serde(rename = "verdict")]
    pub evidence: Evidence,
    /// `ln P_k <= ln P_0 + tol` for all `k`.
    pub bounded_by_p0: Evidence,
    /// `ln P_{k+1} <= ln P_k + tol` for all `k`.
    pub decreasing: Evidence,
    pub agree: bool,
    pub tol: f64,
    pub k_max: u32,
}

fn evidence(stable: bool, holds: bool) -> Evidence {
    match (stable, holds) {
        (false, _) => Evidence::Inconclusive,
        (true, true) => Evidence::Yes,
        (true, false) => Evidence::No,
    }
}

/// `a <= b + tol`, with `-inf <= -inf`.
fn le_tol(a: f64, b: f64, tol: f64) -> bool {
    a == f64::NEG_INFINITY || a <= b + tol
}

pub fn classify_ginfty(s: &PSequence, tol: f64) -> GinftyVerdict {
    let l = s.ln_values();
    let stable = s.all_stable();
    let bounded = l.iter().all(|&lk| le_tol(lk, l[0], tol));
    let decreasing = l.windows(2).all(|w| le_tol(w[1], w[0], tol));
    let bounded_by_p0 = evidence(stable, bounded);
    let decreasing = evidence(stable, decreasing);
    GinftyVerdict {
        evidence: bounded_by_p0,
        bounded_by_p0,
        decreasing,
        agree: bounded_by_p0 == decreasing,
        tol,
        k_max: s.k_max(),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GlaVerdict {
    pub a: f64,
    #[serde(rename = "verdict")]
    pub evidence: Evidence,
    pub s_hat: f64,
    /// Witness slope `a' < a`, present on yes-evidence.
    pub a_prime: Option<f64>,
    /// Smallest `b` with `ln P_k <= a' k + b` for all `k <= k_max`.
    pub b: Option<f64>,
    pub tol: f64,
    pub k_max: u32,
}

pub fn classify_gla(s: &PSequence, a: f64, tol: f64) -> Result<GlaVerdict, RegularityError> {
    if s.k_max() < 4 {
        return Err(RegularityError::KMaxTooSmall {
            need: 4,
            got: s.k_max(),
        });
    }
    if !(a > 0.0) {
        return Err(RegularityError::InvalidParameter(format!("a must be positive, got {a}")));
    }
    let s_hat = s.tail_slope();
    let verdict = if !s.all_stable() {
        Evidence::Inconclusive
    } else if s_hat + tol < a {
        Evidence::Yes
    } else if s_hat - tol >= a {
        Evidence::No
    } else {
        Evidence::Inconclusive
    };
    let (a_prime, b) = if verdict == Evidence::Yes {
        let ap = if s_hat.is_finite() { s_hat + tol / 2.0 } else { 0.0 };
        let b = s
            .entries()
            .iter()
            .map(|e| e.ln_p() - ap * e.k as f64)
            .fold(f64::NEG_INFINITY, f64::max);
        (Some(ap), Some(b))
    } else {
        (None, None)
    };
    Ok(GlaVerdict {
        a,
        evidence: verdict,
        s_hat,
        a_prime,
        b,
        tol,
        k_max: s.k_max(),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GrowthRecord {
    pub base: f64,
    /// `ln P_k - k ln base` stays below its lower-half maximum plus `tol`.
    pub bound_test: Evidence,
    /// `ln P_{k+1} <= ln P_k + ln base + tol` for all `k`.
    pub ratio_test: Evidence,
    pub agree: bool,
    /// `ln c` fitted on the lower half.
    pub ln_c: f64,
}

pub fn growth_char_check(s: &PSequence, base: f64, tol: f64) -> Result<GrowthRecord, RegularityError> {
    if !(base >= 1.0) || !base.is_finite() {
        return Err(RegularityError::InvalidParameter(format!("base must be >= 1, got {base}")));
    }
    let ln_base = base.ln();
    let l = s.ln_values();
    let r: Vec<f64> = l.iter().enumerate().map(|(k, &lk)| lk - k as f64 * ln_base).collect();
    let half = (s.k_max() / 2) as usize;
    let ln_c = r[..=half].iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let bound = r[half..].iter().all(|&rk| le_tol(rk, ln_c, tol));
    let ratio = l.windows(2).all(|w| le_tol(w[1], w[0] + ln_base, tol));
    let stable = s.all_stable();
    let bound_test = evidence(stable, bound);
    let ratio_test = evidence(stable, ratio);
    Ok(GrowthRecord {
        base,
        bound_test,
        ratio_test,
        agree: bound_test == ratio_test,
        ln_c,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SublinearEntry {
    pub compact: Option<CompactBox>,
    pub s_hat: f64,
    /// Tail slope recomputed on `k <= k_max / 2`.
    pub s_hat_half: f64,
    /// `max(s_hat, 0) + 0.25`.
    pub a_k: f64,
    pub stable: bool,
    pub growing: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SublinearVerdict {
    #[serde(rename = "verdict")]
    pub evidence: Evidence,
    pub entries: Vec<SublinearEntry>,
    pub tol: f64,
    pub k_max: u32,
}

/// Sublinear test on precomputed sequences, one per compact.
pub fn classify_sublinear_sequences(
    sequences: &[PSequence],
    tol: f64,
) -> Result<SublinearVerdict, RegularityError> {
    let first = sequences.first().ok_or(RegularityError::NoCompacts)?;
    if first.k_max() < 4 {
        return Err(RegularityError::KMaxTooSmall {
            need: 4,
            got: first.k_max(),
        });
    }
    let entries: Vec<SublinearEntry> = sequences
        .iter()
        .map(|s| {
            let s_hat = s.tail_slope();
            let s_hat_half = s.truncated(s.k_max() / 2).tail_slope();
            SublinearEntry {
                compact: s.compact.clone(),
                s_hat,
                s_hat_half,
                a_k: s_hat.max(0.0) + SUBLINEAR_MARGIN,
                stable: s.all_stable(),
                growing: s_hat.is_finite() && s_hat_half.is_finite() && s_hat - s_hat_half > tol
                    || s_hat == f64::INFINITY,
            }
        })
        .collect();
    let evidence = if entries.iter().any(|e| e.stable && e.growing) {
        Evidence::No
    } else if entries.iter().all(|e| e.stable && e.s_hat < f64::INFINITY) {
        Evidence::Yes
    } else {
        Evidence::Inconclusive
    };
    Ok(SublinearVerdict {
        evidence,
        entries,
        tol,
        k_max: first.k_max(),
    })
}

#[allow(clippy::too_many_arguments)]
pub fn classify_sublinear(
    u: &FunctionNet,
    compacts: &[CompactBox],
    grid: &EpsGrid,
    sampling: &SamplingSpec,
    fit: &FitOptions,
    k_max: u32,
    tol: f64,
) -> Result<SublinearVerdict, RegularityError> {
    if compacts.is_empty() {
        return Err(RegularityError::NoCompacts);
    }
    let seqs = compacts
        .iter()
        .map(|k| p_sequence(u, k, k_max, grid, sampling, fit))
        .collect::<Result<Vec<_>, _>>()?;
    classify_sublinear_sequences(&seqs, tol)
}

/// All checks for one compact.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RegularityReport {
    pub net: String,
    #[serde(rename = "K")]
    pub compact: Option<CompactBox>,
    pub k_max: u32,
    pub tol: f64,
    pub sequence: Vec<f64>,
    pub ginfty: GinftyVerdict,
    pub gla: Vec<GlaVerdict>,
    pub sublinear: SublinearVerdict,
    pub landau: LandauReport,
    pub null_propagation: NullReport,
    pub growth_char: Vec<GrowthRecord>,
}

/// Bases of the geometric-growth check.
pub fn default_bases() -> [f64; 3] {
    [1.0, std::f64::consts::E, std::f64::consts::E.powi(2)]
}

pub fn regularity_report(
    name: &str,
    s: &PSequence,
    a_values: &[f64],
    tol: f64,
) -> Result<RegularityReport, RegularityError> {
    Ok(RegularityReport {
        net: name.to_string(),
        compact: s.compact.clone(),
        k_max: s.k_max(),
        tol,
        sequence: s.ln_values(),
        ginfty: classify_ginfty(s, tol),
        gla: a_values
            .iter()
            .map(|&a| classify_gla(s, a, tol))
            .collect::<Result<_, _>>()?,
        sublinear: classify_sublinear_sequences(std::slice::from_ref(s), tol)?,
        landau: landau_check(s, LANDAU_TRIGGER, LANDAU_SLACK)?,
        null_propagation: null_propagation_check(s),
        growth_char: default_bases()
            .iter()
            .map(|&b| growth_char_check(s, b, tol))
            .collect::<Result<_, _>>()?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn seq(f: impl Fn(f64) -> f64) -> PSequence {
        let l: Vec<f64> = (0..=6).map(|k| f(k as f64)).collect();
        PSequence::from_ln(&l).unwrap()
    }

    #[test]
    fn landau_on_exponent_sequences() {
        let osc = landau_check(&seq(|k| k), LANDAU_TRIGGER, LANDAU_SLACK).unwrap();
        assert!(osc.all_satisfied());
        assert!(osc.entries.iter().all(|e| e.triggered && e.margin.abs() < 1e-12));
        let multi = landau_check(&seq(|k| k * k), LANDAU_TRIGGER, LANDAU_SLACK).unwrap();
        assert!(multi.entries.iter().all(|e| (e.margin - 2.0).abs() < 1e-12));
        let flat = landau_check(&seq(|_| 4.0), LANDAU_TRIGGER, LANDAU_SLACK).unwrap();
        assert!(flat.entries.iter().all(|e| !e.triggered));
        let concave = landau_check(&seq(|k| k.sqrt() * 3.0), LANDAU_TRIGGER, LANDAU_SLACK).unwrap();
        assert!(!concave.all_satisfied());
    }

    #[test]
    fn null_propagation() {
        let one = PSequence::from_ln(&[0.0, f64::NEG_INFINITY, f64::NEG_INFINITY]).unwrap();
        let r = null_propagation_check(&one);
        assert_eq!(r.first_null, Some(1));
        assert!(r.consistent());
        let bad = PSequence::from_ln(&[0.0, f64::NEG_INFINITY, 1.0]).unwrap();
        assert_eq!(null_propagation_check(&bad).violation, Some(2));
        assert_eq!(null_propagation_check(&seq(|k| k)).first_null, None);
    }

    #[test]
    fn ginfty_examples() {
        assert_eq!(classify_ginfty(&seq(|_| 4.0), 0.1).evidence, Evidence::Yes);
        let osc = classify_ginfty(&seq(|k| k), 0.1);
        assert_eq!(osc.evidence, Evidence::No);
        assert!(osc.agree);
        let mut one = vec![0.0];
        one.extend([f64::NEG_INFINITY; 6]);
        let one = classify_ginfty(&PSequence::from_ln(&one).unwrap(), 0.1);
        assert_eq!(one.evidence, Evidence::Yes);
        assert!(one.agree);
    }

    #[test]
    fn gla_examples() {
        let osc = seq(|k| k);
        let yes = classify_gla(&osc, 1.5, 0.1).unwrap();
        assert_eq!(yes.evidence, Evidence::Yes);
        assert!((yes.a_prime.unwrap() - 1.05).abs() < 1e-12);
        assert!((yes.b.unwrap() - 0.0).abs() < 1e-12);
        assert_eq!(classify_gla(&osc, 0.5, 0.1).unwrap().evidence, Evidence::No);
        assert_eq!(classify_gla(&osc, 1.05, 0.1).unwrap().evidence, Evidence::Inconclusive);
        let delta = seq(|k| k + 1.0);
        assert_eq!(classify_gla(&delta, 1.5, 0.1).unwrap().evidence, Evidence::Yes);
        assert_eq!(classify_gla(&delta, 0.8, 0.1).unwrap().evidence, Evidence::No);
        let multi = seq(|k| (1..=8).map(|j| 2.0 * j as f64 * k - (j * j) as f64).fold(f64::MIN, f64::max));
        for a in [1.0, 2.0, 4.0] {
            assert_eq!(classify_gla(&multi, a, 0.1).unwrap().evidence, Evidence::No);
        }
        assert!(classify_gla(&PSequence::from_ln(&[0.0, 1.0]).unwrap(), 1.0, 0.1).is_err());
    }

    #[test]
    fn growth_examples() {
        let e = std::f64::consts::E;
        let osc = seq(|k| k);
        let r = growth_char_check(&osc, e, 0.1).unwrap();
        assert_eq!((r.bound_test, r.ratio_test), (Evidence::Yes, Evidence::Yes));
        let r = growth_char_check(&osc, 1.0, 0.1).unwrap();
        assert_eq!((r.bound_test, r.ratio_test), (Evidence::No, Evidence::No));
        let multi = seq(|k| (1..=8).map(|j| 2.0 * j as f64 * k - (j * j) as f64).fold(f64::MIN, f64::max));
        let r = growth_char_check(&multi, e * e, 0.1).unwrap();
        assert_eq!((r.bound_test, r.ratio_test), (Evidence::No, Evidence::No));
    }

    #[test]
    fn sublinear_examples() {
        let v = classify_sublinear_sequences(&[seq(|k| k), seq(|k| k)], 0.1).unwrap();
        assert_eq!(v.evidence, Evidence::Yes);
        assert!((v.entries[0].a_k - 1.25).abs() < 1e-12);
        let multi = seq(|k| (1..=8).map(|j| 2.0 * j as f64 * k - (j * j) as f64).fold(f64::MIN, f64::max));
        let v = classify_sublinear_sequences(&[multi], 0.1).unwrap();
        assert_eq!(v.evidence, Evidence::No);
        assert!((v.entries[0].s_hat - 37.0 / 6.0).abs() < 1e-12);
    }

    #[test]
    fn sequence_validation() {
        assert!(PSequence::from_ln(&[]).is_err());
        assert!(PSequence::from_ln(&[0.0; 10]).is_err());
    }
}
