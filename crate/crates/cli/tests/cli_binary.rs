use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn colombeau(args: &[&str], threads: Option<&str>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_colombeau"));
    cmd.args(args);
    match threads {
        Some(t) => cmd.env("COLOMBEAU_THREADS", t),
        None => cmd.env_remove("COLOMBEAU_THREADS"),
    };
    cmd.output().unwrap()
}

fn write_config(dir: &Path, name: &str, json: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, json).unwrap();
    p
}

fn run_config(dir: &Path, json: &str) -> Output {
    let p = write_config(dir, "config.json", json);
    colombeau(&["run", p.to_str().unwrap()], None)
}

#[test]
fn classify_osc_reports_expected_verdicts() {
    let out = colombeau(&["classify", "--net", "osc", "--a", "0.5,1.5"], None);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let report = &v["experiments"][0]["result"][0];
    assert_eq!(report["ginfty"]["verdict"], "no");
    assert_eq!(report["gla"][0]["verdict"], "no");
    assert_eq!(report["gla"][1]["verdict"], "yes");
    assert_eq!(v["status"], "ok");
}

#[test]
fn legacy_k_flag_still_selects_growth_parameters() {
    let out = colombeau(&["classify", "--net", "osc", "--k", "1.5"], None);
    assert_eq!(out.status.code(), Some(0));
}

#[test]
fn landau_on_multiscale_passes() {
    let out = colombeau(&["landau", "--net", "multiscale(8)"], None);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn config_errors_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let too_deep = r#"{"net": {"catalog": "osc"}, "k_max": 12, "experiments": [{"kind": "landau"}]}"#;
    assert_eq!(run_config(dir.path(), too_deep).status.code(), Some(1));
    let unknown = r#"{"net": {"catalog": "osc"}, "experiments": [{"kind": "landau"}], "bogus": 1}"#;
    let out = run_config(dir.path(), unknown);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("bogus"));
    let unknown_net = r#"{"net": {"catalog": "nope(3)"}, "experiments": [{"kind": "valuation"}]}"#;
    assert_eq!(run_config(dir.path(), unknown_net).status.code(), Some(1));
    assert_eq!(colombeau(&["run", "/nonexistent/config.json"], None).status.code(), Some(1));
    assert_eq!(colombeau(&["classify", "--net", "osc"], Some("zero")).status.code(), Some(1));
}

#[test]
fn unstable_fit_exits_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let switch = 2f64.powi(-16);
    let json = format!(
        r#"{{"net": {{"banded": [
            {{"lo": 0.0, "hi": {switch}, "expr": "eps^(-6)*sin(x1)"}},
            {{"lo": {switch}, "hi": 1.0, "expr": "sin(x1)"}}]}},
          "experiments": [{{"kind": "classify"}}]}}"#
    );
    let out = run_config(dir.path(), &json);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn violated_inequality_exits_with_three() {
    let dir = tempfile::tempdir().unwrap();
    let json = r#"{"net": {"catalog": "osc"}, "experiments": [{"kind": "landau", "slack": 0.0}]}"#;
    let out = run_config(dir.path(), json);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("assertion failed [landau]"));
}

fn output_bytes(dir: &Path, stem: &str) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<(String, Vec<u8>)> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.file_name().unwrap().to_str().unwrap().starts_with(stem))
        .map(|p| (p.file_name().unwrap().to_str().unwrap().to_string(), fs::read(&p).unwrap()))
        .collect();
    files.sort();
    files
}

#[test]
fn outputs_are_identical_across_thread_counts() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(
        dir.path(),
        "det.json",
        r#"{"net": {"catalog": "delta"},
            "compacts": [[[[0.0, 1.0]]], [[[0.0, 1.0]], [[2.0, 3.0]]]],
            "experiments": [{"kind": "valuation"}, {"kind": "seminorms", "k": [0, 2]},
                            {"kind": "classify"}, {"kind": "landau"}]}"#,
    );
    let mut runs = Vec::new();
    for (i, threads) in ["1", "8"].iter().enumerate() {
        let prefix = dir.path().join(format!("run{i}"));
        let out = colombeau(&["run", config.to_str().unwrap(), "--out", prefix.to_str().unwrap()], Some(threads));
        assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
        let files = output_bytes(dir.path(), &format!("run{i}_"));
        assert!(files.iter().any(|(n, _)| n.ends_with("_summary.json")));
        assert!(files.len() > 4);
        runs.push(files);
    }
    assert_eq!(runs[0].len(), runs[1].len());
    for ((na, a), (nb, b)) in runs[0].iter().zip(&runs[1]) {
        assert_eq!(na.replacen("run0", "", 1), nb.replacen("run1", "", 1));
        assert!(a == b, "{na} differs from {nb}");
    }
}

#[test]
fn csv_tables_have_headers_and_full_precision() {
    let dir = tempfile::tempdir().unwrap();
    let prefix = dir.path().join("osc");
    let out = colombeau(&["classify", "--net", "osc", "--out", prefix.to_str().unwrap()], None);
    assert_eq!(out.status.code(), Some(0));
    let listed = String::from_utf8(out.stdout).unwrap();
    let csv_path = listed.lines().find(|l| l.ends_with(".csv")).unwrap();
    let text = fs::read_to_string(csv_path).unwrap();
    let mut lines = text.lines();
    let header = lines.next().unwrap();
    assert!(header.contains(','));
    let row = lines.next().unwrap();
    let number = row.split(',').find(|f| f.contains('e')).unwrap();
    let mantissa = number.trim_start_matches('-').split('e').next().unwrap();
    assert_eq!(mantissa.chars().filter(char::is_ascii_digit).count(), 17, "{row}");
}

#[test]
fn parse_check_and_catalog_subcommands() {
    let out = colombeau(&["parse-check", "eps^(-3/2)*exp(x1)"], None);
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stdout).starts_with("eps^(-3/2)*exp(x1)\n"));
    let out = colombeau(&["catalog", "--oracle", "multiscale(8)", "--k", "4"], None);
    assert_eq!(String::from_utf8_lossy(&out.stdout), "-16\n");
    assert_eq!(colombeau(&["parse-check", "sin(y)"], None).status.code(), Some(1));
}
