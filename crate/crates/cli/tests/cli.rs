use std::path::Path;
use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mpesplit"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn write_config(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.display().to_string()
}

#[test]
fn coeffs_prints_fractions_and_decimals() {
    let o = run(&["coeffs", "--k", "1,2", "--rational"]);
    assert!(o.status.success());
    let s = stdout(&o);
    assert!(s.contains("-1/3") && s.contains("4/3"), "{s}");
    assert!(s.contains("order 4"));
    let plain = stdout(&run(&["coeffs", "--k", "1,2,3"]));
    assert!(!plain.contains('/'));
    assert_eq!(plain.lines().count(), 4);
}

#[test]
fn coeffs_solve_mode_agrees() {
    let a = stdout(&run(&["coeffs", "--k", "1,3,4", "--rational"]));
    let b = stdout(&run(&["coeffs", "--k", "1,3,4", "--rational", "--solve"]));
    assert_eq!(a, b);
}

#[test]
fn step_reports_small_error() {
    let o = run(&["step", "--problem", "logistic", "--scheme", "t6", "--h", "0.05", "--t-end", "1.0", "--u0", "0.1"]);
    assert!(o.status.success());
    let s = stdout(&o);
    let err: f64 = s
        .lines()
        .find_map(|l| l.strip_prefix("err_max "))
        .expect("error line")
        .parse()
        .unwrap();
    assert!(err < 1e-12, "{s}");
    assert!(s.contains("2.3196931668"), "{s}");
}

#[test]
fn step_harmonic_and_linear() {
    for problem in ["harmonic", "linear"] {
        let o = run(&["step", "--problem", problem, "--scheme", "strang-bab", "--h", "0.01"]);
        assert!(o.status.success(), "{problem}");
        assert!(stdout(&o).contains("state ["));
    }
}

#[test]
fn config_errors_exit_one() {
    assert_eq!(run(&["coeffs", "--k", "3,1"]).status.code(), Some(1));
    assert_eq!(run(&["step", "--problem", "logistic", "--scheme", "t5", "--h", "0.1"]).status.code(), Some(1));
    assert_eq!(run(&["step", "--problem", "logistic", "--scheme", "t4", "--h", "-0.1"]).status.code(), Some(1));
    assert_eq!(run(&["bogus"]).status.code(), Some(1));
    assert_eq!(run(&["converge", "--config", "/nonexistent/cfg.json"]).status.code(), Some(1));
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "bad.json",
        r#"{"problem": {"id": "logistic"}, "scheme": {"id": "t4"}, "ladder": {"steps": [{"dt": 0.1}, {"dt": 0.2}]}}"#,
    );
    assert_eq!(run(&["converge", "--config", &cfg]).status.code(), Some(1));
}

#[test]
fn help_and_version_exit_zero() {
    assert_eq!(run(&["--help"]).status.code(), Some(0));
    assert_eq!(run(&["--version"]).status.code(), Some(0));
    assert_eq!(run(&["converge", "--help"]).status.code(), Some(0));
}

#[test]
fn numerical_failure_exits_two() {
    // A large step breaks the explicit convection stepping on the finest grid.
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "cfl.json",
        r#"{"problem": {"id": "burgers2d", "mu": 0.05, "implicit": "convection"},
            "scheme": {"id": "iter-one"},
            "ladder": {"steps": [{"dx": 0.025, "dt": 0.1}, {"dx": 0.025, "dt": 0.05}]}}"#,
    );
    let out = dir.path().join("r.csv");
    let o = run(&["converge", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    // The report is still written.
    let csv = std::fs::read_to_string(&out).unwrap();
    assert_eq!(csv.lines().count(), 3);
}

#[test]
fn converge_writes_csv_and_json() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "cfg.json",
        r#"{"problem": {"id": "logistic"}, "scheme": {"id": "t4"}, "ladder": {"dt0": 0.25, "halvings": 3}}"#,
    );
    let o = run(&["converge", "--config", &cfg]);
    assert!(o.status.success());
    let csv = stdout(&o);
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("dx,dt,err_l1,err_max,rho_l1,rho_max,wall_ms"));
    assert_eq!(lines.count(), 4);

    let json_path = dir.path().join("r.json");
    let o = run(&["converge", "--config", &cfg, "--format", "json", "--out", json_path.to_str().unwrap()]);
    assert!(o.status.success());
    let report = mpesplit::harness::ConvergenceReport::from_json(&std::fs::read_to_string(&json_path).unwrap()).unwrap();
    assert_eq!(report.rows.len(), 4);
    let fit = report.fitted_order[0].expect("fitted order");
    assert!((fit.order - 4.0).abs() < 0.2, "{fit:?}");
}

#[test]
fn converge_uses_config_output_path() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("from_cfg.json");
    let text = format!(
        r#"{{"problem": {{"id": "zero"}}, "scheme": {{"id": "ab"}}, "ladder": {{"dt0": 0.5, "halvings": 1}},
            "output": {{"path": {:?}, "format": "json"}}}}"#,
        out.display().to_string()
    );
    let cfg = write_config(dir.path(), "cfg.json", &text);
    assert!(run(&["converge", "--config", &cfg]).status.success());
    let report = mpesplit::harness::ConvergenceReport::from_json(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert!(report.rows.iter().all(|r| r.err_max == Some(0.0) && r.rho_max.is_none()));
}

#[test]
fn table1_prints_labeled_grid() {
    let o = run(&["table1", "--mu", "0.05"]);
    assert!(o.status.success());
    let s = stdout(&o);
    assert!(s.starts_with("methodology reproduction, not bit reproduction"));
    assert_eq!(s.lines().filter(|l| l.trim_start().starts_with("1/")).count(), 9);
}
