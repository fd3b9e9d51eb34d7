//! Command-line front end.

use crate::config::{ConfigError, Experiment, ExperimentConfig, NetSpec};
use crate::runner::run;
use clap::{Args, Parser, Subcommand};
use colombeau_core::catalog::{catalog_oracle, CatalogNet};
use colombeau_core::expr::{differentiate, parse};
use colombeau_core::nets::{MultiIndex, SamplingSpec};
use colombeau_core::scale::EpsGrid;
use std::io::Write;
use std::path::PathBuf;

#[derive(Parser, Debug)]
#[command(name = "colombeau", version, about = "Sharp-topology experiments on epsilon-nets")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Parse an expression and print its simplified form.
    ParseCheck {
        expr: String,
        #[arg(long, default_value_t = 1)]
        dim: usize,
        /// Also print the derivative for this multi-index, e.g. `2` or `1,0`.
        #[arg(long, value_delimiter = ',')]
        diff: Option<Vec<u32>>,
    },
    /// List catalog nets, or print one exponent prediction.
    Catalog {
        #[arg(long)]
        oracle: Option<String>,
        #[arg(long, default_value_t = 0)]
        k: u32,
    },
    /// Run a JSON experiment config.
    Run {
        config: PathBuf,
        /// Output prefix; overrides the config's `output`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Classify a net into the regularity classes.
    Classify {
        #[command(flatten)]
        common: Common,
        /// Growth parameters `a` for the sublinear-growth classes.
        #[arg(long = "a", visible_alias = "k", value_delimiter = ',', default_values_t = [0.5, 1.0, 1.5, 2.0])]
        a: Vec<f64>,
    },
    /// Check the Landau inequality and null propagation.
    Landau {
        #[command(flatten)]
        common: Common,
    },
    /// Mollification convergence experiment.
    Mollify {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_delimiter = ',', default_values_t = [1, 2, 3, 4])]
        n: Vec<u32>,
        /// Seminorm orders of the difference net.
        #[arg(long = "order", value_delimiter = ',', default_values_t = [0, 1])]
        order: Vec<u32>,
    },
    /// Class-A membership test with exponent `N`.
    ClassA {
        #[command(flatten)]
        common: Common,
        #[arg(long = "N")]
        big_n: u32,
    },
}

#[derive(Args, Debug)]
pub struct Common {
    /// Catalog name or inline expression.
    #[arg(long)]
    net: String,
    #[arg(long, default_value_t = 1)]
    dim: usize,
    #[arg(long = "kmax", default_value_t = 6)]
    k_max: u32,
    /// Compact as `lo,hi` per axis joined by `;`, e.g. `0,1` or `0,1;0,1`.
    #[arg(long = "compact", default_value = "0,1")]
    compacts: Vec<String>,
    #[arg(long, default_value_t = 0.5)]
    eps0: f64,
    #[arg(long, default_value_t = 0.5)]
    ratio: f64,
    #[arg(long, default_value_t = 20)]
    count: usize,
    /// Output prefix; without it the JSON summary goes to stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_compact(text: &str) -> Result<Vec<Vec<(f64, f64)>>, ConfigError> {
    let axes = text
        .split(';')
        .map(|axis| {
            let parts: Vec<&str> = axis.split(',').map(str::trim).collect();
            match parts.as_slice() {
                [lo, hi] => Ok((
                    lo.parse().map_err(|_| ConfigError::Invalid(format!("bad bound `{lo}`")))?,
                    hi.parse().map_err(|_| ConfigError::Invalid(format!("bad bound `{hi}`")))?,
                )),
                _ => Err(ConfigError::Invalid(format!("compact axis `{axis}` is not `lo,hi`"))),
            }
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(vec![axes])
}

impl Common {
    fn config(&self, experiments: Vec<Experiment>) -> Result<ExperimentConfig, ConfigError> {
        Ok(ExperimentConfig {
            dimension: self.dim,
            net: NetSpec::from_arg(&self.net),
            support: None,
            compacts: self
                .compacts
                .iter()
                .map(|c| parse_compact(c))
                .collect::<Result<_, _>>()?,
            eps_grid: EpsGrid {
                eps0: self.eps0,
                ratio: self.ratio,
                count: self.count,
            },
            k_max: self.k_max,
            sampling: SamplingSpec::default(),
            fit: Default::default(),
            tol: colombeau_core::regularity::DEFAULT_TOL,
            experiments,
            output: self.out.as_ref().map(|p| p.display().to_string()),
        })
    }
}

/// Validates, runs and reports; returns the process exit code.
pub fn execute(config: ExperimentConfig, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let prefix = config.output.clone();
    let validated = match config.validate() {
        Ok(v) => v,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            return 1;
        }
    };
    let result = match run(&validated) {
        Ok(r) => r,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            return e.exit_code();
        }
    };
    match prefix {
        Some(p) => match result.write(&PathBuf::from(p)) {
            Ok(files) => {
                for f in files {
                    let _ = writeln!(out, "{}", f.display());
                }
            }
            Err(e) => {
                let _ = writeln!(err, "error: {e}");
                return 1;
            }
        },
        None => {
            let _ = write!(out, "{}", result.summary_json());
        }
    }
    for e in &result.experiments {
        for f in &e.failures {
            let _ = writeln!(err, "assertion failed [{}]: {f}", e.kind);
        }
    }
    result.status.exit_code()
}

fn catalog_table(out: &mut dyn Write) -> std::io::Result<()> {
    writeln!(out, "{:<16} {:<5} {:<12} {:<34} formula", "name", "hint", "support", "v(p_k), k = 0..6")?;
    for net in CatalogNet::all() {
        let built = net.build().map_err(std::io::Error::other)?;
        let oracle: Vec<String> = (0..=6)
            .map(|k| net.oracle(k).map(|r| r.to_string()).unwrap_or_else(|| "inf".into()))
            .collect();
        writeln!(
            out,
            "{:<16} {:<5} {:<12} {:<34} {}",
            net.to_string(),
            built.oscillation_hint().to_string(),
            built.support_box().map(|b| b.label()).unwrap_or_else(|| "-".into()),
            oracle.join(" "),
            net.formula()
        )?;
    }
    Ok(())
}

pub fn dispatch(cli: Cli, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    match cli.command {
        Command::ParseCheck { expr, dim, diff } => match parse(&expr, dim) {
            Ok(e) => {
                let _ = writeln!(out, "{e}");
                let _ = writeln!(out, "hint: {}", e.oscillation_hint());
                if let Some(alpha) = diff {
                    if alpha.len() != dim {
                        let _ = writeln!(err, "error: --diff needs {dim} components");
                        return 1;
                    }
                    let mut d = e;
                    for (axis, &times) in MultiIndex(alpha).components().iter().enumerate() {
                        for _ in 0..times {
                            d = match differentiate(&d, axis) {
                                Ok(d) => d,
                                Err(e) => {
                                    let _ = writeln!(err, "error: {e}");
                                    return 1;
                                }
                            };
                        }
                    }
                    let _ = writeln!(out, "derivative: {d}");
                }
                0
            }
            Err(e) => {
                let _ = writeln!(err, "error: {e}");
                1
            }
        },
        Command::Catalog { oracle: Some(name), k } => match catalog_oracle(&name, k) {
            Ok(Some(r)) => {
                let _ = writeln!(out, "{r}");
                0
            }
            Ok(None) => {
                let _ = writeln!(out, "inf");
                0
            }
            Err(e) => {
                let _ = writeln!(err, "error: {e}");
                1
            }
        },
        Command::Catalog { oracle: None, .. } => match catalog_table(out) {
            Ok(()) => 0,
            Err(e) => {
                let _ = writeln!(err, "error: {e}");
                1
            }
        },
        Command::Run { config, out: prefix } => match ExperimentConfig::load(&config) {
            Ok(mut c) => {
                if let Some(p) = prefix {
                    c.output = Some(p.display().to_string());
                }
                execute(c, out, err)
            }
            Err(e) => {
                let _ = writeln!(err, "error: {e}");
                1
            }
        },
        Command::Classify { common, a } => with_config(&common, vec![Experiment::Classify { a }], out, err),
        Command::Landau { common } => with_config(
            &common,
            vec![Experiment::Landau {
                trigger: colombeau_core::regularity::LANDAU_TRIGGER,
                slack: colombeau_core::regularity::LANDAU_SLACK,
            }],
            out,
            err,
        ),
        Command::Mollify { common, n, order } => with_config(
            &common,
            vec![Experiment::MollifyConverge {
                k: order,
                n,
                r: 0.5,
                q: colombeau_core::mollify::DEFAULT_QUADRATURE_ORDER,
                sampling: None,
            }],
            out,
            err,
        ),
        Command::ClassA { common, big_n } => with_config(&common, vec![Experiment::ClassA { big_n }], out, err),
    }
}

fn with_config(common: &Common, experiments: Vec<Experiment>, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    match common.config(experiments) {
        Ok(c) => execute(c, out, err),
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            1
        }
    }
}

/// Reads `COLOMBEAU_THREADS` and sizes the global worker pool.
pub fn init_threads() -> Result<(), String> {
    match std::env::var("COLOMBEAU_THREADS") {
        Ok(v) => {
            let n: usize = v
                .trim()
                .parse()
                .ok()
                .filter(|&n| n > 0)
                .ok_or_else(|| format!("COLOMBEAU_THREADS must be a positive integer, got `{v}`"))?;
            rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build_global()
                .map_err(|e| e.to_string())
        }
        Err(_) => Ok(()),
    }
}
