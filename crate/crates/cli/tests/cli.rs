use std::path::Path;
use std::process::{Command, Output};

use drqcp::problem::io;

const HAND_QP: &str = r#"{"n":1,"m":1,
  "P":{"ncols":1,"colptr":[0,1],"rowidx":[0],"values":[1.0]},
  "A":{"ncols":1,"colptr":[0,1],"rowidx":[0],"values":[1.0]},
  "c":[1.0],"b":[0.0],"cones":[{"type":"zero","dim":1}]}"#;

fn drqcp(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_drqcp"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

#[test]
fn solve_hand_qp() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("hand.json"), HAND_QP).unwrap();
    let out = drqcp(
        dir.path(),
        &["solve", "hand.json", "--algorithm", "homogeneous", "--eps-abs", "1e-9", "--eps-rel", "0"],
    );
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let line = stdout(&out);
    assert_eq!(line.lines().count(), 1);
    assert!(line.starts_with("status=solved "), "{line}");

    let result = io::read_result(dir.path().join("hand.result.json")).unwrap();
    let x = result.x.unwrap()[0];
    let y = result.y.unwrap()[0];
    assert!(x.abs() < 1e-6 && (y + 1.0).abs() < 1e-6, "x = {x}, y = {y}");
}

#[test]
fn solve_writes_result_and_trace_where_asked() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("hand.json"), HAND_QP).unwrap();
    let out = drqcp(
        dir.path(),
        &[
            "solve", "hand.json", "--algorithm", "direct", "--linsys", "indirect", "--out",
            "r.json", "--trace", "t.csv", "--check-interval", "1",
        ],
    );
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let doc: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("r.json")).unwrap()).unwrap();
    assert_eq!(doc["status"], "solved");
    let trace = std::fs::read_to_string(dir.path().join("t.csv")).unwrap();
    assert!(trace.starts_with("schema_version,1\n"));
    assert!(trace.lines().count() > 2);
}

#[test]
fn iteration_limit_exits_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let gen = drqcp(dir.path(), &["gen", "--kind", "infeasible", "--n", "50", "--m", "75", "--seed", "1"]);
    assert_eq!(code(&gen), 0, "{}", stderr(&gen));
    let out = drqcp(
        dir.path(),
        &["solve", "infeasible_50x75_1.json", "--algorithm", "direct", "--max-iters", "100"],
    );
    assert_eq!(code(&out), 2, "{}", stdout(&out));
    assert!(stdout(&out).starts_with("status=max_iterations "));
}

#[test]
fn certified_infeasible_exits_with_zero() {
    let dir = tempfile::tempdir().unwrap();
    drqcp(dir.path(), &["gen", "--kind", "infeasible", "--n", "10", "--m", "15", "--seed", "3"]);
    let out = drqcp(dir.path(), &["solve", "infeasible_10x15_3.json", "--eps-infeas", "1e-6"]);
    assert_eq!(code(&out), 0, "{}", stdout(&out));
    assert!(stdout(&out).starts_with("status=primal_infeasible "));
}

#[test]
fn usage_errors_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let out = drqcp(dir.path(), &["solve", "--bogus", "x.json"]);
    assert_eq!(code(&out), 1);
    assert!(stderr(&out).contains("Usage"));

    let out = drqcp(dir.path(), &["solve", "missing.json"]);
    assert_eq!(code(&out), 1);
    assert!(stderr(&out).contains("missing.json"));

    std::fs::write(dir.path().join("bad.json"), "{\"n\": 1}").unwrap();
    let out = drqcp(dir.path(), &["solve", "bad.json"]);
    assert_eq!(code(&out), 1);
    assert!(stderr(&out).contains("schema"));
}

#[test]
fn help_exits_with_zero() {
    let dir = tempfile::tempdir().unwrap();
    let out = drqcp(dir.path(), &["--help"]);
    assert_eq!(code(&out), 0);
    assert!(stdout(&out).contains("bench"));
}

#[test]
fn gen_is_deterministic_and_valid() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["gen", "--kind", "feasible", "--n", "10", "--m", "15", "--seed", "7"];
    assert_eq!(code(&drqcp(dir.path(), &args)), 0);
    let path = dir.path().join("feasible_10x15_7.json");
    let first = std::fs::read(&path).unwrap();
    let problem = io::read_problem(&path).unwrap();
    assert_eq!((problem.n(), problem.m()), (10, 15));

    assert_eq!(code(&drqcp(dir.path(), &args)), 0);
    assert_eq!(std::fs::read(&path).unwrap(), first);
}

#[test]
fn gen_writes_count_files_into_out() {
    let dir = tempfile::tempdir().unwrap();
    let out = drqcp(
        dir.path(),
        &["gen", "--kind", "unbounded", "--n", "6", "--m", "9", "--seed", "4", "--count", "3", "--out", "probs"],
    );
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    for seed in 4..7 {
        assert!(dir.path().join(format!("probs/unbounded_6x9_{seed}.json")).exists());
    }
}

#[test]
fn gen_infeasible_needs_more_rows_than_columns() {
    let dir = tempfile::tempdir().unwrap();
    let out = drqcp(dir.path(), &["gen", "--kind", "infeasible", "--n", "10", "--m", "10"]);
    assert_eq!(code(&out), 1);
    assert!(stderr(&out).contains("m > n"));
    assert!(!dir.path().join("infeasible_10x10_0.json").exists());
}

#[test]
fn bench_outputs_are_reproducible_from_records() {
    let dir = tempfile::tempdir().unwrap();
    let out = drqcp(
        dir.path(),
        &["bench", "--n", "12", "--m", "18", "--count", "2", "--out", "b", "--trace", "traces"],
    );
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    assert_eq!(stdout(&out).lines().filter(|l| l.contains("geomean_ratio")).count(), 3);
    for name in ["records.csv", "summary.csv", "histogram.csv"] {
        let text = std::fs::read_to_string(dir.path().join("b").join(name)).unwrap();
        assert!(text.starts_with("schema_version,1\n"), "{name}");
    }
    let traces = std::fs::read_dir(dir.path().join("traces")).unwrap().count();
    assert_eq!(traces, 3 * 2 * 2);

    let out = drqcp(dir.path(), &["summarize", "b/records.csv", "--out", "s"]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    for name in ["summary.csv", "histogram.csv"] {
        assert_eq!(
            std::fs::read(dir.path().join("b").join(name)).unwrap(),
            std::fs::read(dir.path().join("s").join(name)).unwrap(),
            "{name}"
        );
    }
}
