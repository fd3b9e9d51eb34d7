//! Named reference nets with exact `p_k` exponent predictions.

use crate::expr::parse;
use crate::nets::{CompactBox, FunctionNet, NetError, SamplingSpec};
use num_rational::Rational64;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

pub const DEFAULT_CONST_N: u32 = 4;
pub const DEFAULT_MULTISCALE_J: u32 = 8;
pub const MAX_MULTISCALE_J: u32 = 12;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CatalogError {
    #[error("unknown catalog net `{0}`")]
    Unknown(String),
    #[error("invalid parameter for `{name}`: {detail}")]
    InvalidParameter { name: String, detail: String },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "name")]
pub enum CatalogNet {
    Osc,
    ConstGinfty { n: u32 },
    Delta,
    One,
    Multiscale { j: u32 },
    CompactOsc,
}

impl CatalogNet {
    /// Every entry with default parameters.
    pub fn all() -> Vec<CatalogNet> {
        vec![
            CatalogNet::Osc,
            CatalogNet::ConstGinfty { n: DEFAULT_CONST_N },
            CatalogNet::Delta,
            CatalogNet::One,
            CatalogNet::Multiscale {
                j: DEFAULT_MULTISCALE_J,
            },
            CatalogNet::CompactOsc,
        ]
    }

    pub fn formula(&self) -> String {
        match self {
            CatalogNet::Osc => "sin(x1/eps)".into(),
            CatalogNet::ConstGinfty { n } => format!("eps^(-{n})*sin(x1)"),
            CatalogNet::Delta => "bump(x1/eps)/eps".into(),
            CatalogNet::One => "1".into(),
            CatalogNet::Multiscale { j } => (1..=*j)
                .map(|i| format!("eps^({})*sin(x1*eps^(-{}))", i * i, 2 * i))
                .collect::<Vec<_>>()
                .join(" + "),
            CatalogNet::CompactOsc => "cutoff(x1)*sin(x1/eps)".into(),
        }
    }

    pub fn build(&self) -> Result<FunctionNet, NetError> {
        let net = match self {
            CatalogNet::Multiscale { j } => {
                let terms = (1..=*j as i64)
                    .map(|i| parse(&format!("eps^({})*sin(x1*eps^(-{}))", i * i, 2 * i), 1))
                    .collect::<Result<Vec<_>, _>>()?;
                FunctionNet::finite_sum(terms, 1)?
            }
            CatalogNet::Delta => FunctionNet::parse(&self.formula(), 1)?.with_sampling_override(
                SamplingSpec {
                    per_feature: 256.0,
                    cap_points: 1 << 31,
                    max_total: 1 << 40,
                    ..SamplingSpec::default()
                },
            ),
            CatalogNet::CompactOsc => FunctionNet::parse(&self.formula(), 1)?
                .with_support(CompactBox::interval(-2.0, 2.0)?)?,
            _ => FunctionNet::parse(&self.formula(), 1)?,
        };
        Ok(net.with_name(self.to_string()))
    }

    /// Exact valuation of `p_{k,K}` on the reference compacts; `None` for
    /// a negligible seminorm.
    pub fn oracle(&self, k: u32) -> Option<Rational64> {
        let k = k as i64;
        let v = match self {
            CatalogNet::Osc | CatalogNet::CompactOsc => -k,
            CatalogNet::ConstGinfty { n } => -(*n as i64),
            CatalogNet::Delta => -k - 1,
            CatalogNet::One => {
                if k == 0 {
                    0
                } else {
                    return None;
                }
            }
            CatalogNet::Multiscale { j } => (1..=*j as i64).map(|i| i * i - 2 * i * k).min()?,
        };
        Some(Rational64::from_integer(v))
    }

    /// `[0, 1]` and `[0, 2]`.
    pub fn reference_compacts() -> Vec<CompactBox> {
        vec![
            CompactBox::interval(0.0, 1.0).expect("valid interval"),
            CompactBox::interval(0.0, 2.0).expect("valid interval"),
        ]
    }
}

impl fmt::Display for CatalogNet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CatalogNet::Osc => write!(f, "osc"),
            CatalogNet::ConstGinfty { n } => write!(f, "const_ginfty({n})"),
            CatalogNet::Delta => write!(f, "delta"),
            CatalogNet::One => write!(f, "one"),
            CatalogNet::Multiscale { j } => write!(f, "multiscale({j})"),
            CatalogNet::CompactOsc => write!(f, "compact_osc"),
        }
    }
}

impl FromStr for CatalogNet {
    type Err = CatalogError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        let (head, arg) = match s.split_once('(') {
            Some((h, rest)) => {
                let inner = rest.strip_suffix(')').ok_or_else(|| CatalogError::Unknown(s.into()))?;
                let v = inner.trim().parse::<u32>().map_err(|e| CatalogError::InvalidParameter {
                    name: h.into(),
                    detail: e.to_string(),
                })?;
                (h.trim(), Some(v))
            }
            None => (s, None),
        };
        let no_arg = |net: CatalogNet| match arg {
            None => Ok(net),
            Some(_) => Err(CatalogError::InvalidParameter {
                name: head.into(),
                detail: "takes no parameter".into(),
            }),
        };
        match head {
            "osc" => no_arg(CatalogNet::Osc),
            "delta" => no_arg(CatalogNet::Delta),
            "one" => no_arg(CatalogNet::One),
            "compact_osc" => no_arg(CatalogNet::CompactOsc),
            "const_ginfty" => Ok(CatalogNet::ConstGinfty {
                n: arg.unwrap_or(DEFAULT_CONST_N),
            }),
            "multiscale" => {
                let j = arg.unwrap_or(DEFAULT_MULTISCALE_J);
                if !(1..=MAX_MULTISCALE_J).contains(&j) {
                    return Err(CatalogError::InvalidParameter {
                        name: head.into(),
                        detail: format!("J must lie in 1..={MAX_MULTISCALE_J}"),
                    });
                }
                Ok(CatalogNet::Multiscale { j })
            }
            _ => Err(CatalogError::Unknown(s.into())),
        }
    }
}

/// Exponent prediction for `p_{k,K}` of a named net.
pub fn catalog_oracle(name: &str, k: u32) -> Result<Option<Rational64>, CatalogError> {
    Ok(name.parse::<CatalogNet>()?.oracle(k))
}
