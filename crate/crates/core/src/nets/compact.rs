//! Box-union compacts and multi-indices.

use crate::expr::{Interval, MAX_DIMENSION};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CompactError {
    #[error("compact needs at least one box")]
    Empty,
    #[error("box {index} has dimension {got}, expected {expected}")]
    DimensionMismatch { index: usize, got: usize, expected: usize },
    #[error("dimension {0} outside 1..=3")]
    UnsupportedDimension(usize),
    #[error("box {index} axis {axis} has side {side}, below the minimum {min_side}")]
    SideTooShort {
        index: usize,
        axis: usize,
        side: f64,
        min_side: f64,
    },
    #[error("minimum side must be positive and finite (got {0})")]
    InvalidMinSide(f64),
    #[error("box {index} axis {axis} has non-finite bounds")]
    NonFinite { index: usize, axis: usize },
}

/// Finite union of closed axis-parallel boxes, every side at least
/// `min_side`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompactBox {
    boxes: Vec<Vec<(f64, f64)>>,
    min_side: f64,
}

impl CompactBox {
    pub fn new(boxes: Vec<Vec<(f64, f64)>>, min_side: f64) -> Result<Self, CompactError> {
        if !(min_side > 0.0 && min_side.is_finite()) {
            return Err(CompactError::InvalidMinSide(min_side));
        }
        let d = boxes.first().ok_or(CompactError::Empty)?.len();
        if !(1..=MAX_DIMENSION).contains(&d) {
            return Err(CompactError::UnsupportedDimension(d));
        }
        for (index, b) in boxes.iter().enumerate() {
            if b.len() != d {
                return Err(CompactError::DimensionMismatch {
                    index,
                    got: b.len(),
                    expected: d,
                });
            }
            for (axis, &(lo, hi)) in b.iter().enumerate() {
                if !(lo.is_finite() && hi.is_finite()) {
                    return Err(CompactError::NonFinite { index, axis });
                }
                if hi - lo < min_side {
                    return Err(CompactError::SideTooShort {
                        index,
                        axis,
                        side: hi - lo,
                        min_side,
                    });
                }
            }
        }
        Ok(CompactBox { boxes, min_side })
    }

    /// Union of boxes with `min_side` set to the shortest side present.
    pub fn from_boxes(boxes: Vec<Vec<(f64, f64)>>) -> Result<Self, CompactError> {
        let min = boxes
            .iter()
            .flatten()
            .map(|&(lo, hi)| hi - lo)
            .fold(f64::INFINITY, f64::min);
        Self::new(boxes, min)
    }

    /// The interval `[lo, hi]` in one dimension.
    pub fn interval(lo: f64, hi: f64) -> Result<Self, CompactError> {
        Self::from_boxes(vec![vec![(lo, hi)]])
    }

    /// The cube `[lo, hi]^d`.
    pub fn cube(d: usize, lo: f64, hi: f64) -> Result<Self, CompactError> {
        Self::from_boxes(vec![vec![(lo, hi); d]])
    }

    pub fn dimension(&self) -> usize {
        self.boxes[0].len()
    }

    pub fn boxes(&self) -> &[Vec<(f64, f64)>] {
        &self.boxes
    }

    pub fn min_side(&self) -> f64 {
        self.min_side
    }

    /// Inflates every box by `r` on each axis.
    pub fn enlarge(&self, r: f64) -> CompactBox {
        assert!(r > 0.0, "enlargement radius must be positive");
        CompactBox {
            boxes: self
                .boxes
                .iter()
                .map(|b| b.iter().map(|&(lo, hi)| (lo - r, hi + r)).collect())
                .collect(),
            min_side: self.min_side + 2.0 * r,
        }
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        self.boxes
            .iter()
            .any(|b| b.iter().zip(x).all(|(&(lo, hi), &xi)| lo <= xi && xi <= hi))
    }

    /// Every box of `self` lies inside some box of `other`.
    pub fn is_subset_of(&self, other: &CompactBox) -> bool {
        self.boxes.iter().all(|b| {
            other.boxes.iter().any(|o| {
                b.iter()
                    .zip(o)
                    .all(|(&(lo, hi), &(olo, ohi))| olo <= lo && hi <= ohi)
            })
        })
    }

    /// Bounding box as intervals.
    pub fn hull(&self) -> Vec<Interval> {
        (0..self.dimension())
            .map(|axis| {
                let lo = self.boxes.iter().map(|b| b[axis].0).fold(f64::INFINITY, f64::min);
                let hi = self.boxes.iter().map(|b| b[axis].1).fold(f64::NEG_INFINITY, f64::max);
                Interval::new(lo, hi)
            })
            .collect()
    }

    pub fn label(&self) -> String {
        let parts: Vec<String> = self
            .boxes
            .iter()
            .map(|b| {
                b.iter()
                    .map(|(lo, hi)| format!("[{lo},{hi}]"))
                    .collect::<Vec<_>>()
                    .join("x")
            })
            .collect();
        parts.join("u")
    }
}

/// Multi-index `alpha` in `N^d`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct MultiIndex(pub Vec<u32>);

impl MultiIndex {
    pub fn zero(d: usize) -> Self {
        MultiIndex(vec![0; d])
    }

    pub fn unit(d: usize, axis: usize) -> Self {
        let mut v = vec![0; d];
        v[axis] = 1;
        MultiIndex(v)
    }

    pub fn dimension(&self) -> usize {
        self.0.len()
    }

    pub fn order(&self) -> u32 {
        self.0.iter().sum()
    }

    pub fn components(&self) -> &[u32] {
        &self.0
    }

    pub fn add(&self, other: &MultiIndex) -> MultiIndex {
        MultiIndex(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    /// `self - other`, if componentwise nonnegative.
    pub fn checked_sub(&self, other: &MultiIndex) -> Option<MultiIndex> {
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| a.checked_sub(*b))
            .collect::<Option<Vec<_>>>()
            .map(MultiIndex)
    }

    /// All multi-indices of order `k` in dimension `d`, lexicographically
    /// descending in the first component.
    pub fn all_of_order(d: usize, k: u32) -> Vec<MultiIndex> {
        fn rec(d: usize, k: u32, prefix: &mut Vec<u32>, out: &mut Vec<MultiIndex>) {
            if d == 1 {
                prefix.push(k);
                out.push(MultiIndex(prefix.clone()));
                prefix.pop();
                return;
            }
            for first in (0..=k).rev() {
                prefix.push(first);
                rec(d - 1, k - first, prefix, out);
                prefix.pop();
            }
        }
        let mut out = Vec::new();
        rec(d, k, &mut Vec::with_capacity(d), &mut out);
        out
    }

    /// All `beta <= self` componentwise.
    pub fn below(&self) -> Vec<MultiIndex> {
        let mut out = vec![MultiIndex(Vec::new())];
        for &a in &self.0 {
            out = out
                .into_iter()
                .flat_map(|p| {
                    (0..=a).map(move |b| {
                        let mut v = p.0.clone();
                        v.push(b);
                        MultiIndex(v)
                    })
                })
                .collect();
        }
        out
    }

    /// `prod_i C(alpha_i, beta_i)`.
    pub fn binomial(&self, beta: &MultiIndex) -> f64 {
        self.0
            .iter()
            .zip(&beta.0)
            .map(|(&a, &b)| binomial(a, b))
            .product()
    }

    /// `prod_i alpha_i!`.
    pub fn factorial(&self) -> f64 {
        self.0.iter().map(|&a| (1..=a).map(f64::from).product::<f64>()).product()
    }
}

fn binomial(n: u32, k: u32) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, i| acc * f64::from(n - i) / f64::from(i + 1))
}
