//! Experiment configuration, read from a single JSON document.

use colombeau_core::catalog::{CatalogError, CatalogNet};
use colombeau_core::expr::parse;
use colombeau_core::mollify::DEFAULT_QUADRATURE_ORDER;
use colombeau_core::nets::{CompactBox, FunctionNet, NetError, SamplingSpec, MAX_K};
use colombeau_core::regularity::{DEFAULT_K_MAX, DEFAULT_TOL, LANDAU_SLACK, LANDAU_TRIGGER};
use colombeau_core::scale::{EpsGrid, FitOptions};
use serde::{Deserialize, Serialize};
use std::path::Path;

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read config: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed config: {0}")]
    Json(#[from] serde_json::Error),
    #[error("invalid config: {0}")]
    Invalid(String),
    #[error(transparent)]
    Catalog(#[from] CatalogError),
    #[error(transparent)]
    Net(#[from] NetError),
}

fn invalid<T>(msg: impl Into<String>) -> Result<T, ConfigError> {
    Err(ConfigError::Invalid(msg.into()))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum NetSpec {
    /// A catalog name such as `osc` or `multiscale(8)`.
    Catalog(String),
    Expression(String),
    Banded(Vec<BandSpec>),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BandSpec {
    pub lo: f64,
    pub hi: f64,
    pub expr: String,
}

impl NetSpec {
    /// A catalog name if one matches, otherwise an inline expression.
    pub fn from_arg(text: &str) -> NetSpec {
        match text.parse::<CatalogNet>() {
            Ok(_) => NetSpec::Catalog(text.to_string()),
            Err(_) => NetSpec::Expression(text.to_string()),
        }
    }

    pub fn build(&self, dimension: usize) -> Result<FunctionNet, ConfigError> {
        Ok(match self {
            NetSpec::Catalog(name) => {
                let net: CatalogNet = name.parse()?;
                if dimension != 1 {
                    return invalid(format!("catalog nets are one-dimensional, config has d = {dimension}"));
                }
                net.build()?
            }
            NetSpec::Expression(text) => FunctionNet::parse(text, dimension)?,
            NetSpec::Banded(bands) => {
                let bands = bands
                    .iter()
                    .map(|b| Ok((b.lo, b.hi, parse(&b.expr, dimension).map_err(NetError::from)?)))
                    .collect::<Result<Vec<_>, NetError>>()?;
                FunctionNet::banded(bands, dimension)?
            }
        })
    }
}

fn default_a() -> Vec<f64> {
    vec![0.5, 1.0, 1.5, 2.0]
}
fn default_trigger() -> f64 {
    LANDAU_TRIGGER
}
fn default_slack() -> f64 {
    LANDAU_SLACK
}
fn default_converge_k() -> Vec<u32> {
    vec![0, 1]
}
fn default_converge_n() -> Vec<u32> {
    vec![1, 2, 3, 4]
}
fn default_density_n() -> Vec<u32> {
    vec![1, 2, 3]
}
fn default_r() -> f64 {
    0.5
}
fn default_q() -> usize {
    DEFAULT_QUADRATURE_ORDER
}

/// Sampling used by the mollification experiments unless overridden:
/// every sample costs one base evaluation per quadrature node.
pub fn mollify_sampling() -> SamplingSpec {
    SamplingSpec {
        cap_points: 2049,
        ..SamplingSpec::default()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Experiment {
    /// Fitted valuation of `p_k` for `k = 0..=k_max` on every compact.
    Valuation,
    /// Raw seminorm tables.
    Seminorms {
        #[serde(default)]
        k: Option<Vec<u32>>,
    },
    Classify {
        #[serde(default = "default_a")]
        a: Vec<f64>,
    },
    Landau {
        #[serde(default = "default_trigger")]
        trigger: f64,
        #[serde(default = "default_slack")]
        slack: f64,
    },
    MollifyConverge {
        #[serde(default = "default_converge_k")]
        k: Vec<u32>,
        #[serde(default = "default_converge_n")]
        n: Vec<u32>,
        #[serde(default = "default_r")]
        r: f64,
        #[serde(default = "default_q")]
        q: usize,
        #[serde(default)]
        sampling: Option<SamplingSpec>,
    },
    ClassA {
        #[serde(rename = "N")]
        big_n: u32,
    },
    SublinearDensity {
        #[serde(default = "default_density_n")]
        n: Vec<u32>,
        #[serde(default = "default_q")]
        q: usize,
        #[serde(default)]
        sampling: Option<SamplingSpec>,
    },
}

impl Experiment {
    pub fn kind(&self) -> &'static str {
        match self {
            Experiment::Valuation => "valuation",
            Experiment::Seminorms { .. } => "seminorms",
            Experiment::Classify { .. } => "classify",
            Experiment::Landau { .. } => "landau",
            Experiment::MollifyConverge { .. } => "mollify-converge",
            Experiment::ClassA { .. } => "class-a",
            Experiment::SublinearDensity { .. } => "sublinear-density",
        }
    }
}

fn default_dimension() -> usize {
    1
}
fn default_k_max() -> u32 {
    DEFAULT_K_MAX
}
fn default_tol() -> f64 {
    DEFAULT_TOL
}
fn default_compacts() -> Vec<Vec<Vec<(f64, f64)>>> {
    vec![vec![vec![(0.0, 1.0)]]]
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default = "default_dimension")]
    pub dimension: usize,
    pub net: NetSpec,
    /// Optional support box of an inline net, as a box union.
    #[serde(default)]
    pub support: Option<Vec<Vec<(f64, f64)>>>,
    #[serde(default = "default_compacts")]
    pub compacts: Vec<Vec<Vec<(f64, f64)>>>,
    #[serde(default)]
    pub eps_grid: EpsGrid,
    #[serde(default = "default_k_max")]
    pub k_max: u32,
    #[serde(default)]
    pub sampling: SamplingSpec,
    #[serde(default)]
    pub fit: FitOptions,
    #[serde(default = "default_tol")]
    pub tol: f64,
    pub experiments: Vec<Experiment>,
    /// Output path prefix; files are `<output>_<index>_<kind>.csv` and
    /// `<output>_summary.json`.
    #[serde(default)]
    pub output: Option<String>,
}

/// A config checked against every module precondition.
#[derive(Clone, Debug)]
pub struct Validated {
    pub config: ExperimentConfig,
    pub net: FunctionNet,
    pub compacts: Vec<CompactBox>,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn validate(self) -> Result<Validated, ConfigError> {
        if !(1..=3).contains(&self.dimension) {
            return invalid(format!("dimension {} outside 1..=3", self.dimension));
        }
        if self.k_max > MAX_K {
            return invalid(format!("k_max = {} exceeds the cap of {MAX_K}", self.k_max));
        }
        if !(self.tol > 0.0 && self.tol.is_finite()) {
            return invalid("tol must be positive");
        }
        self.eps_grid.validate().map_err(NetError::from)?;
        self.sampling.validate()?;
        if self.fit.window < 2 || self.fit.window > self.eps_grid.count {
            return invalid(format!(
                "fit window {} must lie in 2..={} (grid count)",
                self.fit.window, self.eps_grid.count
            ));
        }
        if self.experiments.is_empty() {
            return invalid("no experiments listed");
        }
        if self.compacts.is_empty() {
            return invalid("no compacts listed");
        }
        let compacts = self
            .compacts
            .iter()
            .map(|c| CompactBox::from_boxes(c.clone()))
            .collect::<Result<Vec<_>, _>>()
            .map_err(NetError::from)?;
        if let Some(c) = compacts.iter().find(|c| c.dimension() != self.dimension) {
            return invalid(format!("compact {} does not have dimension {}", c.label(), self.dimension));
        }
        let mut net = self.net.build(self.dimension)?;
        if let Some(s) = &self.support {
            net = net.with_support(CompactBox::from_boxes(s.clone()).map_err(NetError::from)?)?;
        }
        for e in &self.experiments {
            self.check_experiment(e, &net)?;
        }
        Ok(Validated {
            config: self,
            net,
            compacts,
        })
    }

    fn check_experiment(&self, e: &Experiment, net: &FunctionNet) -> Result<(), ConfigError> {
        let needs_k4 = || {
            if self.k_max < 4 {
                invalid(format!("{} needs k_max >= 4", e.kind()))
            } else {
                Ok(())
            }
        };
        let check_n = |n: &[u32]| {
            if n.is_empty() || n.contains(&0) {
                invalid(format!("{}: n must be a nonempty list of positive integers", e.kind()))
            } else {
                Ok(())
            }
        };
        let check_q = |q: usize, s: &Option<SamplingSpec>| {
            if q < 16 {
                return invalid(format!("{}: quadrature order must be >= 16", e.kind()));
            }
            if let Some(s) = s {
                s.validate()?;
            }
            Ok(())
        };
        match e {
            Experiment::Valuation => Ok(()),
            Experiment::Seminorms { k } => match k {
                Some(ks) if ks.iter().any(|&k| k > MAX_K) => invalid(format!("seminorm order above {MAX_K}")),
                _ => Ok(()),
            },
            Experiment::Classify { a } => {
                needs_k4()?;
                if a.iter().any(|&a| !(a > 0.0 && a.is_finite())) {
                    return invalid("classify: every a must be positive");
                }
                Ok(())
            }
            Experiment::Landau { trigger, slack } => {
                if self.k_max < 2 {
                    return invalid("landau needs k_max >= 2");
                }
                if !(trigger.is_finite() && slack.is_finite() && *slack >= 0.0) {
                    return invalid("landau: trigger and slack must be finite, slack >= 0");
                }
                Ok(())
            }
            Experiment::MollifyConverge { k, n, r, q, sampling } => {
                check_n(n)?;
                check_q(*q, sampling)?;
                if k.is_empty() || k.iter().any(|&k| k + 1 > MAX_K) {
                    return invalid(format!("mollify-converge: k must be nonempty and below {MAX_K}"));
                }
                if !(*r > 0.0 && r.is_finite()) {
                    return invalid("mollify-converge: r must be positive");
                }
                let mut sorted = n.clone();
                sorted.dedup();
                if sorted.windows(2).any(|w| w[0] >= w[1]) || sorted.len() != n.len() {
                    return invalid("mollify-converge: n must be strictly increasing");
                }
                Ok(())
            }
            Experiment::ClassA { big_n } => {
                if *big_n == 0 {
                    return invalid("class-a: N must be >= 1");
                }
                Ok(())
            }
            Experiment::SublinearDensity { n, q, sampling } => {
                needs_k4()?;
                check_n(n)?;
                check_q(*q, sampling)?;
                if net.support_box().is_none() {
                    return invalid("sublinear-density needs a compactly supported net");
                }
                Ok(())
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_minimal_config() {
        let c = ExperimentConfig::from_json(
            r#"{"net": {"catalog": "osc"}, "experiments": [{"kind": "classify", "a": [1.5, 0.5]}]}"#,
        )
        .unwrap();
        assert_eq!(c.k_max, 6);
        assert_eq!(c.eps_grid, EpsGrid::default());
        let v = c.validate().unwrap();
        assert_eq!(v.compacts.len(), 1);
    }

    #[test]
    fn rejects_unknown_keys() {
        assert!(ExperimentConfig::from_json(r#"{"net": {"catalog": "osc"}, "experiments": [], "bogus": 1}"#).is_err());
        assert!(ExperimentConfig::from_json(
            r#"{"net": {"catalog": "osc"}, "experiments": [{"kind": "landau", "bogus": 1}]}"#
        )
        .is_err());
        assert!(ExperimentConfig::from_json(
            r#"{"net": {"catalog": "osc"}, "eps_grid": {"eps0": 0.5, "step": 2}, "experiments": []}"#
        )
        .is_err());
    }

    #[test]
    fn rejects_k_max_above_cap() {
        let c = ExperimentConfig::from_json(
            r#"{"net": {"catalog": "osc"}, "k_max": 12, "experiments": [{"kind": "valuation"}]}"#,
        )
        .unwrap();
        assert!(matches!(c.validate(), Err(ConfigError::Invalid(_))));
    }

    #[test]
    fn net_argument_resolution() {
        assert_eq!(NetSpec::from_arg("multiscale(8)"), NetSpec::Catalog("multiscale(8)".into()));
        assert_eq!(NetSpec::from_arg("sin(x1/eps)"), NetSpec::Expression("sin(x1/eps)".into()));
    }
}
