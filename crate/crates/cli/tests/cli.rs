use std::path::PathBuf;
use std::process::{Command, Output};

use singular_svar_cli::AnalyzeReport;

fn data(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/data").join(name)
}

fn svar(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_svar-ident"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn path_str(p: &std::path::Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn analyze_new_keynesian_model() {
    let o = svar(&["analyze", path_str(&data("nk_model.json"))]);
    let out = stdout(&o);
    assert_eq!(o.status.code(), Some(0), "{out}{}", stderr(&o));
    assert!(out.contains("compatible: true"));
    assert!(out.contains("jacobian rank: 6/6"));
    assert!(out.contains("order condition: met"));
    assert!(out.contains("verdict: identified"));
}

#[test]
fn analyze_square_model_warns() {
    let o = svar(&["analyze", path_str(&data("square_model.json"))]);
    let out = stdout(&o);
    assert!(out.contains("singular-specific checks degenerate"), "{out}");
    assert_eq!(o.status.code(), Some(0));
}

#[test]
fn analyze_counterexample() {
    let o = svar(&["analyze", path_str(&data("counterexample_bad.json"))]);
    assert!(stdout(&o).contains("unique: false, over-identifying: true"), "{}", stdout(&o));
    assert_eq!(o.status.code(), Some(2));
    let o = svar(&["analyze", path_str(&data("counterexample_good.json"))]);
    assert!(stdout(&o).contains("unique: true, over-identifying: false"), "{}", stdout(&o));
    assert_eq!(o.status.code(), Some(0));
}

#[test]
fn malformed_json_reports_position() {
    let o = svar(&["analyze", path_str(&data("malformed.json"))]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("line 3"), "{}", stderr(&o));
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(svar(&["analyze"]).status.code(), Some(1));
    assert_eq!(svar(&["no-such-command"]).status.code(), Some(1));
    assert_eq!(svar(&["--help"]).status.code(), Some(0));
}

#[test]
fn golden_reproduction_command() {
    let o = svar(&["reproduce-paper"]);
    let out = stdout(&o);
    assert_eq!(o.status.code(), Some(0), "{out}");
    assert!(!out.contains("FAIL"));
    assert!(out.lines().filter(|l| l.starts_with("PASS")).count() >= 10);
    let o = svar(&["reproduce-paper", "--tau", "0"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stdout(&o).contains("FAIL"));
}

#[test]
fn detect_on_population_autocovariances() {
    let dir = tempfile::tempdir().unwrap();
    let cov = dir.path().join("cov.json");
    let o = svar(&["autocov", path_str(&data("nk_model.json")), "--horizon", "6", "--out", path_str(&cov)]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let o = svar(&["detect", path_str(&cov)]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).contains("q_hat = 2"), "{}", stdout(&o));

    let cov2 = dir.path().join("cov2.json");
    svar(&["autocov", path_str(&data("var2_model.json")), "--horizon", "8", "--out", path_str(&cov2)]);
    let o = svar(&["detect", path_str(&cov2)]);
    assert!(stdout(&o).contains("p_hat = 2, q_hat = 2"), "{}", stdout(&o));
}

#[test]
fn simulate_is_deterministic() {
    let model = data("var2_model.json");
    let a = svar(&["simulate", path_str(&model), "-T", "200", "--seed", "7"]);
    let b = svar(&["simulate", path_str(&model), "-T", "200", "--seed", "7"]);
    let c = svar(&["simulate", path_str(&model), "-T", "200", "--seed", "8"]);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    assert_ne!(a.stdout, c.stdout);
    let text = stdout(&a);
    assert_eq!(text.lines().next(), Some("y1,y2,y3"));
    assert_eq!(text.lines().count(), 201);
}

#[test]
fn solve_yw_and_genericity_on_overfitted_order() {
    let dir = tempfile::tempdir().unwrap();
    let cov = dir.path().join("cov.json");
    svar(&["autocov", path_str(&data("var2_model.json")), "--horizon", "4", "--out", path_str(&cov)]);
    let o = svar(&["solve-yw", path_str(&cov), "--p", "3", "--format", "json"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["rank_deficiency"], 1);
    assert_eq!(v["same_projection"], true);

    let o = svar(&["genericity", path_str(&cov), "--p", "3", "--trials", "40", "--seed", "3"]);
    assert_eq!(o.status.code(), Some(0), "{}{}", stdout(&o), stderr(&o));
    assert!(stdout(&o).contains("40/40"));
    let o = svar(&["genericity", path_str(&cov), "--p", "2", "--trials", "5"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn json_report_regenerates_text_summary() {
    for file in ["nk_model.json", "counterexample_bad.json", "square_model.json"] {
        let path = data(file);
        let text = stdout(&svar(&["analyze", path_str(&path)]));
        let json = stdout(&svar(&["analyze", path_str(&path), "--format", "json"]));
        let report: AnalyzeReport = serde_json::from_str(&json).unwrap();
        assert_eq!(report.summary(), text);
        assert_eq!(serde_json::to_string_pretty(&report).unwrap() + "\n", json);
    }
}

#[test]
fn out_flag_writes_json() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("report.json");
    let o = svar(&["analyze", path_str(&data("nk_model.json")), "--out", path_str(&out)]);
    assert_eq!(o.status.code(), Some(0));
    let report: AnalyzeReport = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert!(report.identified);
    assert_eq!(report.noise.unwrap().jacobian_rank, 6);
}
