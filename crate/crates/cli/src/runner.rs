//! Executes validated experiments and assembles tables and the JSON summary.

use crate::config::{mollify_sampling, Experiment, NetSpec, Validated};
use crate::report::{fmt_f64, fmt_opt, label, Table};
use colombeau_core::catalog::CatalogNet;
use colombeau_core::mollify::{
    build_mollifier, class_a_membership, convergence_experiment, mollify, MollifyError,
};
use colombeau_core::nets::{seminorm_table, sharp_from_table, CompactBox, Evidence, NetError};
use colombeau_core::regularity::{
    classify_sublinear, landau_check, null_propagation_check, p_sequence, regularity_report,
    PSequence, RegularityError,
};
use serde::Serialize;
use serde_json::{json, Value};
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error(transparent)]
    Net(#[from] NetError),
    #[error(transparent)]
    Regularity(#[from] RegularityError),
    #[error(transparent)]
    Mollify(#[from] MollifyError),
    #[error("cannot write output: {0}")]
    Io(#[from] std::io::Error),
}

impl RunError {
    /// Evaluation failures count as numerical instability, everything
    /// else as a precondition violation.
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Net(NetError::Eval(_)) => 2,
            RunError::Regularity(RegularityError::Net(NetError::Eval(_))) => 2,
            _ => 1,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    Ok,
    Unstable,
    AssertionFailed,
}

impl Status {
    pub fn exit_code(self) -> i32 {
        match self {
            Status::Ok => 0,
            Status::Unstable => 2,
            Status::AssertionFailed => 3,
        }
    }
}

#[derive(Clone, Debug)]
pub struct ExperimentOutput {
    pub index: usize,
    pub kind: &'static str,
    pub tables: Vec<Table>,
    pub result: Value,
    pub unstable: bool,
    pub failures: Vec<String>,
}

#[derive(Clone, Debug)]
pub struct RunOutput {
    pub net: String,
    pub experiments: Vec<ExperimentOutput>,
    pub status: Status,
    pub summary: Value,
}

impl RunOutput {
    /// `(file name, contents)` for every table, given the output stem.
    pub fn csv_files(&self, stem: &str) -> Vec<(String, String)> {
        self.experiments
            .iter()
            .flat_map(|e| {
                e.tables
                    .iter()
                    .map(move |t| (format!("{stem}_{}_{}.csv", e.index, t.name), t.to_csv()))
            })
            .collect()
    }

    pub fn summary_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(&self.summary).expect("summary serializes");
        s.push('\n');
        s
    }

    /// Writes every CSV and `<prefix>_summary.json`, each via a temporary
    /// file and a rename.
    pub fn write(&self, prefix: &Path) -> Result<Vec<PathBuf>, RunError> {
        let dir = prefix.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
        std::fs::create_dir_all(dir)?;
        let stem = prefix
            .file_name()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "run".into());
        let mut files = self.csv_files(&stem);
        files.push((format!("{stem}_summary.json"), self.summary_json()));
        let mut written = Vec::with_capacity(files.len());
        for (name, body) in files {
            let path = dir.join(&name);
            let tmp = dir.join(format!(".{name}.tmp"));
            std::fs::write(&tmp, body)?;
            std::fs::rename(&tmp, &path)?;
            written.push(path);
        }
        Ok(written)
    }
}

struct Ctx<'a> {
    v: &'a Validated,
    catalog: Option<CatalogNet>,
    sequences: BTreeMap<usize, PSequence>,
}

impl Ctx<'_> {
    fn sequence(&mut self, i: usize) -> Result<PSequence, RunError> {
        if let Some(s) = self.sequences.get(&i) {
            return Ok(s.clone());
        }
        let c = &self.v.config;
        let s = p_sequence(&self.v.net, &self.v.compacts[i], c.k_max, &c.eps_grid, &c.sampling, &c.fit)?;
        self.sequences.insert(i, s.clone());
        Ok(s)
    }

    fn oracle(&self, k: u32) -> String {
        match self.catalog.map(|n| n.oracle(k)) {
            Some(Some(r)) => fmt_f64(*r.numer() as f64 / *r.denom() as f64),
            Some(None) => fmt_f64(f64::INFINITY),
            None => String::new(),
        }
    }
}

fn evidence(e: Evidence) -> String {
    label(&e)
}

fn bool_str(b: bool) -> String {
    b.to_string()
}

fn compact_label(c: &Option<CompactBox>) -> String {
    c.as_ref().map(CompactBox::label).unwrap_or_default()
}

/// Runs every experiment in order.
pub fn run(v: &Validated) -> Result<RunOutput, RunError> {
    let catalog = match &v.config.net {
        NetSpec::Catalog(name) => name.parse().ok(),
        _ => None,
    };
    let mut ctx = Ctx {
        v,
        catalog,
        sequences: BTreeMap::new(),
    };
    let mut outputs = Vec::with_capacity(v.config.experiments.len());
    for (index, e) in v.config.experiments.iter().enumerate() {
        outputs.push(run_one(&mut ctx, index, e)?);
    }
    let status = if outputs.iter().any(|o| !o.failures.is_empty()) {
        Status::AssertionFailed
    } else if outputs.iter().any(|o| o.unstable) {
        Status::Unstable
    } else {
        Status::Ok
    };
    let mut echo = v.config.clone();
    echo.output = None;
    let summary = json!({
        "net": v.net.name(),
        "config": echo,
        "status": status,
        "experiments": outputs.iter().map(|o| json!({
            "index": o.index,
            "kind": o.kind,
            "tables": o.tables.iter().map(|t| t.name.clone()).collect::<Vec<_>>(),
            "unstable": o.unstable,
            "failures": o.failures,
            "result": o.result,
        })).collect::<Vec<_>>(),
    });
    Ok(RunOutput {
        net: v.net.name().to_string(),
        experiments: outputs,
        status,
        summary,
    })
}

fn run_one(ctx: &mut Ctx, index: usize, e: &Experiment) -> Result<ExperimentOutput, RunError> {
    let v = ctx.v;
    let c = &v.config;
    let mut out = ExperimentOutput {
        index,
        kind: e.kind(),
        tables: Vec::new(),
        result: Value::Null,
        unstable: false,
        failures: Vec::new(),
    };
    match e {
        Experiment::Valuation => {
            let mut t = Table::new(
                "valuation",
                &["compact", "k", "v_hat", "oracle", "method", "residual", "window_lo", "window_hi", "stable", "p_value"],
            );
            for i in 0..v.compacts.len() {
                let s = ctx.sequence(i)?;
                for en in s.entries() {
                    let est = &en.estimate;
                    out.unstable |= !est.stable;
                    t.push(vec![
                        compact_label(&s.compact),
                        en.k.to_string(),
                        fmt_f64(est.value),
                        ctx.oracle(en.k),
                        label(&est.method),
                        fmt_f64(est.residual),
                        est.window.0.to_string(),
                        est.window.1.to_string(),
                        bool_str(est.stable),
                        fmt_f64(en.p_value),
                    ]);
                }
            }
            out.result = json!({ "rows": t.rows.len() });
            out.tables.push(t);
        }
        Experiment::Seminorms { k } => {
            let ks: Vec<u32> = k.clone().unwrap_or_else(|| (0..=c.k_max).collect());
            let mut t = Table::new("seminorms", &["compact", "k", "eps", "ln_p", "points", "flags"]);
            let mut fits = Vec::new();
            for compact in &v.compacts {
                for &k in &ks {
                    let table = seminorm_table(&v.net, k, compact, &c.eps_grid, &c.sampling)?;
                    for en in &table.entries {
                        let pts: Vec<String> = en
                            .points_per_axis
                            .iter()
                            .map(|b| b.iter().map(usize::to_string).collect::<Vec<_>>().join("x"))
                            .collect();
                        t.push(vec![
                            compact.label(),
                            k.to_string(),
                            fmt_f64(en.eps),
                            fmt_f64(en.ln_p),
                            pts.join(";"),
                            en.flags(),
                        ]);
                    }
                    let sharp = sharp_from_table(&table, &c.fit)?;
                    out.unstable |= !sharp.estimate.stable;
                    fits.push(json!({ "compact": compact.label(), "k": k, "estimate": sharp.estimate }));
                }
            }
            out.result = json!({ "fits": fits });
            out.tables.push(t);
        }
        Experiment::Classify { a } => {
            let mut seq_t = Table::new("pseq", &["compact", "k", "v_hat", "ln_p", "stable"]);
            let mut gla_t = Table::new("gla", &["compact", "a", "verdict", "s_hat", "a_prime", "b"]);
            let mut reports = Vec::new();
            for i in 0..v.compacts.len() {
                let s = ctx.sequence(i)?;
                let r = regularity_report(v.net.name(), &s, a, c.tol)?;
                let label_k = compact_label(&s.compact);
                for en in s.entries() {
                    seq_t.push(vec![
                        label_k.clone(),
                        en.k.to_string(),
                        fmt_f64(en.estimate.value),
                        fmt_f64(en.ln_p()),
                        bool_str(en.estimate.stable),
                    ]);
                }
                for g in &r.gla {
                    gla_t.push(vec![
                        label_k.clone(),
                        fmt_f64(g.a),
                        evidence(g.evidence),
                        fmt_f64(g.s_hat),
                        fmt_opt(g.a_prime),
                        fmt_opt(g.b),
                    ]);
                }
                out.unstable |= !s.all_stable();
                if !r.ginfty.agree {
                    out.failures.push(format!("{label_k}: ginfty criteria disagree"));
                }
                for g in r.growth_char.iter().filter(|g| !g.agree) {
                    out.failures.push(format!("{label_k}: growth tests disagree at base {}", g.base));
                }
                for l in r.landau.entries.iter().filter(|l| !l.satisfied) {
                    out.failures.push(format!("{label_k}: Landau inequality violated at k = {}", l.k));
                }
                if let Some(k) = r.null_propagation.violation {
                    out.failures.push(format!("{label_k}: null propagation violated at k = {k}"));
                }
                reports.push(r);
            }
            out.result = serde_json::to_value(&reports).expect("report serializes");
            out.tables.push(seq_t);
            out.tables.push(gla_t);
        }
        Experiment::Landau { trigger, slack } => {
            let mut t = Table::new("landau", &["compact", "k", "triggered", "margin", "satisfied"]);
            let mut results = Vec::new();
            for i in 0..v.compacts.len() {
                let s = ctx.sequence(i)?;
                let r = landau_check(&s, *trigger, *slack)?;
                let null = null_propagation_check(&s);
                let label_k = compact_label(&s.compact);
                for l in &r.entries {
                    t.push(vec![
                        label_k.clone(),
                        l.k.to_string(),
                        bool_str(l.triggered),
                        fmt_f64(l.margin),
                        bool_str(l.satisfied),
                    ]);
                    if !l.satisfied {
                        out.failures.push(format!("{label_k}: Landau inequality violated at k = {}", l.k));
                    }
                }
                if let Some(k) = null.violation {
                    out.failures.push(format!("{label_k}: null propagation violated at k = {k}"));
                }
                out.unstable |= !r.skipped.is_empty();
                results.push(json!({ "K": label_k, "landau": r, "null_propagation": null }));
            }
            out.result = Value::Array(results);
            out.tables.push(t);
        }
        Experiment::MollifyConverge { k, n, r, q, sampling } => {
            let m = Arc::new(build_mollifier(v.net.dimension(), *q)?);
            let sampling = sampling.clone().unwrap_or_else(mollify_sampling);
            let mut t = Table::new(
                "converge",
                &["compact", "k", "n", "v_hat", "reference", "margin", "satisfied", "stable"],
            );
            let mut records = Vec::new();
            for compact in &v.compacts {
                for &k in k {
                    let rec = convergence_experiment(
                        &v.net, compact, k, n, *r, &m, &c.eps_grid, &sampling, &c.fit,
                    )?;
                    for en in &rec.entries {
                        t.push(vec![
                            compact.label(),
                            k.to_string(),
                            en.n.to_string(),
                            fmt_f64(en.estimate.value),
                            fmt_f64(rec.reference.value),
                            fmt_f64(en.margin),
                            bool_str(en.satisfied),
                            bool_str(en.estimate.stable),
                        ]);
                        out.unstable |= !en.estimate.stable;
                        if !en.satisfied && en.estimate.stable {
                            out.failures.push(format!(
                                "{}: convergence bound violated at k = {k}, n = {}",
                                compact.label(),
                                en.n
                            ));
                        }
                    }
                    out.unstable |= !rec.reference.stable;
                    records.push(rec);
                }
            }
            out.result = serde_json::to_value(&records).expect("record serializes");
            out.tables.push(t);
        }
        Experiment::ClassA { big_n } => {
            let verdict = class_a_membership(
                &v.net, *big_n, &v.compacts, c.k_max, &c.eps_grid, &c.sampling, &c.fit,
            )?;
            let mut t = Table::new("class_a", &["compact", "k", "v_hat", "bound", "ok", "stable"]);
            for en in &verdict.entries {
                out.unstable |= !en.estimate.stable;
                t.push(vec![
                    compact_label(&en.compact),
                    en.k.to_string(),
                    fmt_f64(en.estimate.value),
                    fmt_f64(en.bound),
                    bool_str(en.ok),
                    bool_str(en.estimate.stable),
                ]);
            }
            out.result = json!({ "N": big_n, "verdict": verdict.evidence });
            out.tables.push(t);
        }
        Experiment::SublinearDensity { n, q, sampling } => {
            let m = Arc::new(build_mollifier(v.net.dimension(), *q)?);
            let sampling = sampling.clone().unwrap_or_else(mollify_sampling);
            let mut t = Table::new(
                "density",
                &["n", "compact", "s_hat", "s_hat_half", "a_k", "stable", "verdict"],
            );
            let mut results = Vec::new();
            for &n in n {
                let mu = mollify(&v.net, n, &m)?;
                let verdict =
                    classify_sublinear(&mu, &v.compacts, &c.eps_grid, &sampling, &c.fit, c.k_max, c.tol)?;
                for en in &verdict.entries {
                    out.unstable |= !en.stable;
                    t.push(vec![
                        n.to_string(),
                        compact_label(&en.compact),
                        fmt_f64(en.s_hat),
                        fmt_f64(en.s_hat_half),
                        fmt_f64(en.a_k),
                        bool_str(en.stable),
                        evidence(verdict.evidence),
                    ]);
                }
                results.push(json!({ "n": n, "sublinear": verdict }));
            }
            out.result = Value::Array(results);
            out.tables.push(t);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::ExperimentConfig;

    fn quick(net: &str, experiments: &str) -> RunOutput {
        let text = format!(
            r#"{{"net": {{"catalog": "{net}"}}, "eps_grid": {{"eps0": 0.5, "ratio": 0.5, "count": 12}},
               "k_max": 4, "experiments": {experiments}}}"#
        );
        let v = ExperimentConfig::from_json(&text).unwrap().validate().unwrap();
        run(&v).unwrap()
    }

    #[test]
    fn classify_osc_verdicts() {
        let out = quick("osc", r#"[{"kind": "classify", "a": [1.5, 0.5]}]"#);
        assert_eq!(out.status, Status::Ok);
        let r = &out.experiments[0].result[0];
        assert_eq!(r["ginfty"]["verdict"], "no");
        assert_eq!(r["gla"][0]["verdict"], "yes");
        assert_eq!(r["gla"][1]["verdict"], "no");
    }

    #[test]
    fn file_names_follow_prefix() {
        let out = quick("one", r#"[{"kind": "valuation"}, {"kind": "landau"}]"#);
        let names: Vec<String> = out.csv_files("r").into_iter().map(|f| f.0).collect();
        assert_eq!(names, ["r_0_valuation.csv", "r_1_landau.csv"]);
        assert_eq!(out.status, Status::Ok);
    }
}
