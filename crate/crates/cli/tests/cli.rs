use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> PathBuf {
    PathBuf::from(env!("CARGO_BIN_EXE_varcalc"))
}

fn run(args: &[&str], threads: Option<&str>) -> Output {
    let mut cmd = Command::new(bin());
    cmd.args(args);
    match threads {
        Some(n) => cmd.env("VARCALC_THREADS", n),
        None => cmd.env_remove("VARCALC_THREADS"),
    };
    cmd.output().expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

const QUADRATIC: &str =
    r#"{"kind":"lagrange","lagrangian":"quadratic","a":0,"b":1,"xa":[0],"xb":[1]}"#;

fn single_line_stderr(out: &Output) {
    let err = String::from_utf8_lossy(&out.stderr);
    assert_eq!(err.trim_end().lines().count(), 1, "stderr: {err}");
}

#[test]
fn catalog_lists_entries() {
    let out = run(&["catalog"], None);
    assert_eq!(out.status.code(), Some(0));
    let entries: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(entries.as_array().unwrap().len() >= 7);
}

#[test]
fn solve_writes_one_row_per_node() {
    let dir = tempfile::tempdir().unwrap();
    let p = write(dir.path(), "quadratic.json", QUADRATIC);
    let out_dir = dir.path().join("out");
    let out = run(
        &[
            "solve",
            "-p",
            &p,
            "-N",
            "50",
            "--out",
            out_dir.to_str().unwrap(),
        ],
        None,
    );
    assert_eq!(out.status.code(), Some(0));
    let csv = std::fs::read_to_string(out_dir.join("trajectory.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("t,y_1,u_1"));
    assert_eq!(lines.count(), 51);
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out_dir.join("manifest.json")).unwrap())
            .unwrap();
    for name in manifest["outputs"].as_array().unwrap() {
        assert!(out_dir.join(name.as_str().unwrap()).exists());
    }
    assert_eq!(manifest["problem_hash"].as_str().unwrap().len(), 64);
}

#[test]
fn erdmann_constant_for_quadratic() {
    let dir = tempfile::tempdir().unwrap();
    let p = write(dir.path(), "quadratic.json", QUADRATIC);
    let out = run(&["dbr", "--variant", "erdmann", "-p", &p], None);
    assert_eq!(out.status.code(), Some(0));
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!((report["c"].as_f64().unwrap() + 1.0).abs() <= 1e-2);
}

#[test]
fn reports_are_identical_across_thread_counts() {
    let dir = tempfile::tempdir().unwrap();
    let p = write(dir.path(), "quadratic.json", QUADRATIC);
    let args = [
        "dbr",
        "--variant",
        "convex",
        "-p",
        &p,
        "-N",
        "40",
        "--resolution",
        "81",
    ];
    let one = run(&args, Some("1"));
    let four = run(&args, Some("4"));
    assert_eq!(one.status.code(), Some(0));
    assert_eq!(one.stdout, four.stdout);
}

#[test]
fn malformed_inputs_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let good = write(dir.path(), "quadratic.json", QUADRATIC);
    let cases = [
        ("broken.json", "{not json"),
        (
            "nokind.json",
            r#"{"lagrangian":"quadratic","a":0,"b":1,"xa":[0],"xb":[1]}"#,
        ),
        (
            "badspan.json",
            r#"{"kind":"lagrange","lagrangian":"quadratic","a":1,"b":0,"xa":[0],"xb":[1]}"#,
        ),
        (
            "unknown.json",
            r#"{"kind":"lagrange","lagrangian":"nope","a":0,"b":1,"xa":[0],"xb":[1]}"#,
        ),
        (
            "dims.json",
            r#"{"kind":"lagrange","lagrangian":"quadratic","a":0,"b":1,"xa":[0,1],"xb":[1]}"#,
        ),
    ];
    for (name, text) in cases {
        let p = write(dir.path(), name, text);
        let out = run(&["solve", "-p", &p], None);
        assert_eq!(out.status.code(), Some(2), "{name}");
        assert!(out.stdout.is_empty());
        single_line_stderr(&out);
    }
    for args in [
        vec!["frobnicate"],
        vec!["solve"],
        vec!["dbr", "--variant", "nonsense", "-p", good.as_str()],
        vec!["solve", "-p", good.as_str(), "-N", "zero"],
        vec!["value", "-p", good.as_str()],
        vec!["solve", "-p", "/definitely/missing.json"],
    ] {
        let out = run(&args, None);
        assert_eq!(out.status.code(), Some(2), "{args:?}");
        single_line_stderr(&out);
    }
    let out = run(&["catalog"], Some("zero"));
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn hypothesis_failure_is_a_finding() {
    let dir = tempfile::tempdir().unwrap();
    let p = write(
        dir.path(),
        "understated.json",
        r#"{"kind":"lagrange","lagrangian":"quadratic","a":0,"b":1,"xa":[0],"xb":[1],
            "bounds":{"A":1,"B":0.5,"alpha":1,"beta":1}}"#,
    );
    let out = run(&["bound", "-p", &p, "-N", "20", "--resolution", "81"], None);
    assert_eq!(out.status.code(), Some(1));
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(report["finding"].as_str().unwrap().contains("action"));
}

#[test]
fn value_grid_for_bolza_problem() {
    let dir = tempfile::tempdir().unwrap();
    let p = write(
        dir.path(),
        "bolza.json",
        r#"{"kind":"bolza","lagrangian":"quadratic","t":1,"x":[1],"phi":"quadratic_phi"}"#,
    );
    let out_dir = dir.path().join("v");
    let out = run(
        &[
            "value",
            "-p",
            &p,
            "--layers",
            "50",
            "--resolution",
            "401",
            "--out",
            out_dir.to_str().unwrap(),
        ],
        None,
    );
    assert_eq!(out.status.code(), Some(0));
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!((report["value"].as_f64().unwrap() - 0.5).abs() <= 3e-2);
    let csv = std::fs::read_to_string(out_dir.join("value.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 51 * 401);
}
