use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn run(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_depthstream"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

const AR_GARCH: &str = r#"
[model]
model = "ar_garch"
c = 5.0
phi = 0.1
omega = 1.0
alpha = 0.75
beta = 0.1
innovation = { family = "normal" }
"#;

#[test]
fn simulate_writes_requested_rows_deterministically() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("spec.toml"), AR_GARCH).unwrap();
    for out in ["a.csv", "b.csv"] {
        let o = run(dir.path(), &["simulate", "--spec", "spec.toml", "--n", "1000", "--seed", "3", "-o", out]);
        assert_eq!(code(&o), 0, "{}", stderr(&o));
    }
    let a = fs::read_to_string(dir.path().join("a.csv")).unwrap();
    assert_eq!(a.lines().count(), 1001);
    assert!(a.starts_with("index"));
    assert_eq!(a, fs::read_to_string(dir.path().join("b.csv")).unwrap());
    assert!(dir.path().join("a.csv.meta.json").exists());
}

#[test]
fn bad_transition_row_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let spec = r#"
[model]
model = "charme"
transition = [[0.8, 0.1], [0.5, 0.5]]

[[model.models]]
kind = "setar"
rows = [[1.0, 0.9], [5.0, -0.9]]
thresholds = [3.0]
delay = 2
innovation = { family = "normal" }

[[model.models]]
kind = "setar"
rows = [[1.0, 0.9], [10.0, -0.9]]
thresholds = [3.0]
delay = 2
innovation = { family = "normal" }
"#;
    fs::write(dir.path().join("spec.toml"), spec).unwrap();
    let o = run(dir.path(), &["simulate", "--spec", "spec.toml", "-o", "x.csv"]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("row 0"), "{}", stderr(&o));
}

#[test]
fn missing_input_is_an_io_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), &["depth", "-i", "nope.csv", "-o", "d.csv"]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("nope.csv"));
}

#[test]
fn malformed_row_reports_its_line() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("s.csv"), "index,x\n0,1.0\n1,abc\n").unwrap();
    let o = run(dir.path(), &["depth", "-i", "s.csv", "-o", "d.csv"]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("line 3"), "{}", stderr(&o));
}

#[test]
fn depth_of_identical_samples_lies_on_the_diagonal() {
    let dir = tempfile::tempdir().unwrap();
    let rows: String = (0..20).map(|i| format!("{i},{}\n", (i as f64 * 0.37).sin())).collect();
    fs::write(dir.path().join("s.csv"), format!("index,x\n{rows}")).unwrap();
    let o = run(dir.path(), &["depth", "-i", "s.csv", "--second", "s.csv", "-o", "dd.csv"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let text = fs::read_to_string(dir.path().join("dd.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("depth_first,depth_second"));
    let mut count = 0;
    for line in lines {
        let (a, b) = line.split_once(',').unwrap();
        assert_eq!(a, b);
        count += 1;
    }
    // the plot covers the combined sample
    assert_eq!(count, 40);
}

#[test]
fn dimension_mismatch_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("a.csv"), "index,x\n0,1\n1,2\n").unwrap();
    fs::write(dir.path().join("b.csv"), "index,x,y\n0,1,1\n1,2,2\n").unwrap();
    let o = run(dir.path(), &["depth", "-i", "a.csv", "--second", "b.csv", "-o", "dd.csv"]);
    assert_eq!(code(&o), 2, "{}", stderr(&o));
}

#[test]
fn short_stream_warns_and_succeeds() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("s.csv"), "index,x\n0,1\n1,2\n2,3\n").unwrap();
    let rows: String = (0..200).map(|i| format!("{i},{}\n", (i as f64 * 0.61).sin())).collect();
    fs::write(dir.path().join("ref.csv"), format!("index,x\n{rows}")).unwrap();
    let o = run(
        dir.path(),
        &[
            "monitor", "-i", "s.csv", "--reference", "ref.csv", "--proposal", "2", "--window", "50",
            "--reference-len", "50", "--reports", "r.jsonl", "--series", "s_out.csv",
        ],
    );
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(stderr(&o).to_lowercase().contains("warning"));
    assert_eq!(fs::read_to_string(dir.path().join("r.jsonl")).unwrap(), "");
}

#[test]
fn degenerate_reference_is_a_numerical_error() {
    let dir = tempfile::tempdir().unwrap();
    let flat: String = (0..200).map(|i| format!("{i},1.5\n")).collect();
    fs::write(dir.path().join("ref.csv"), format!("index,x\n{flat}")).unwrap();
    let o = run(
        dir.path(),
        &["monitor", "-i", "ref.csv", "--reference", "ref.csv", "--reference", "ref.csv", "--proposal", "1", "--window", "50"],
    );
    assert_eq!(code(&o), 3, "{}", stderr(&o));
}

#[test]
fn unknown_estimator_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), &["evaluate", "--estimators", "prop1,magic", "--reps", "1"]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("magic"));
}

#[test]
fn evaluate_writes_one_row_per_scenario_and_estimator() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = r#"
[evaluate]
estimators = ["kern_baseline", "prop1"]
reps = 1
n = 300
out = "table.csv"

[[evaluate.scenarios]]
name = "low"
shares = [1.0]
n = 300

[[evaluate.scenarios.models]]
kind = "ar_garch"
c = 5.0
phi = 0.1
omega = 1.0
alpha = 0.75
beta = 0.1
innovation = { family = "normal" }
"#;
    fs::write(dir.path().join("run.toml"), cfg).unwrap();
    let o = run(dir.path(), &["--config", "run.toml", "evaluate", "--grid-points", "60", "--conditions", "5"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let table = fs::read_to_string(dir.path().join("table.csv")).unwrap();
    assert_eq!(table.lines().count(), 3, "{table}");
}
