mod common;

use std::process::{Command, Output};

use vartrace_core::export::from_json;
use vartrace_core::tracegraph::canonical_form;

fn vartrace(args: &[&str]) -> Output {
    Command::new(common::bin())
        .args(args)
        .current_dir(common::root())
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn subject_exception_exits_with_one_and_still_prints() {
    let o = vartrace(&["run", "corpus/geterr.vl", "--format", "json"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains(r#""context":"!flag & ipv4""#));
}

#[test]
fn clean_program_exits_with_zero() {
    let o = vartrace(&["run", "corpus/discount.vl"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).starts_with("MethodBox main"));
}

#[test]
fn baseline_prints_the_same_trace() {
    // Node ids are numbered by each generator, so JSON is compared through
    // the id-free canonical form.
    let v = vartrace(&["run", "corpus/elevator.vl"]);
    let b = vartrace(&["run", "corpus/elevator.vl", "--baseline"]);
    assert_eq!(stdout(&v), stdout(&b));
    assert_eq!(v.status.code(), b.status.code());
    let v = vartrace(&["run", "corpus/elevator.vl", "--format", "json"]);
    let b = vartrace(&["run", "corpus/elevator.vl", "--format", "json", "--baseline"]);
    let canon = |o: &Output| canonical_form(&from_json(&stdout(o)).unwrap());
    assert_eq!(canon(&v), canon(&b));
}

#[test]
fn parse_errors_are_usage_errors() {
    let dir = tempdir();
    let path = dir.join("bad.vl");
    std::fs::write(&path, "fun main() { x = }").unwrap();
    let o = vartrace(&["run", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("bad.vl:1:18: syntax error"), "{}", stderr(&o));

    let o = vartrace(&["run", "corpus/missing.vl"]);
    assert_eq!(o.status.code(), Some(2));
    let o = vartrace(&["run", "corpus/geterr.vl", "--format", "xml"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn unknown_focus_option_is_a_usage_error() {
    let o = vartrace(&["run", "corpus/geterr.vl", "--project", "flag,nope"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("unknown option `nope`"));
}

#[test]
fn projection_from_the_command_line() {
    let o = vartrace(&["run", "corpus/geterr.vl", "--project", "flag"]);
    assert_eq!(o.status.code(), Some(1), "exceptions of the full trace still count");
    assert!(!stdout(&o).contains("Exception"));
    assert!(!stdout(&o).contains("ipv4"));
    let o = vartrace(&["run", "corpus/geterr.vl", "--project", ""]);
    assert!(stdout(&o).is_empty(), "{}", stdout(&o));
}

#[test]
fn limits_exit_with_three() {
    let o = vartrace(&["run", "corpus/stress/wide13.vl", "--baseline"]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("2^12"), "{}", stderr(&o));
    let o = vartrace(&["run", "corpus/stress/wide13.vl"]);
    assert_eq!(o.status.code(), Some(0));

    let o = vartrace(&["run", "corpus/loopsum.vl", "--max-steps", "20"]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("step budget"), "{}", stderr(&o));
    let o = vartrace(&["run", "corpus/loopsum.vl", "--max-steps", "20", "--baseline"]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn dump_logs_writes_one_file_per_configuration() {
    let dir = tempdir();
    let logs = dir.join("logs");
    let o = vartrace(&["run", "corpus/geterr.vl", "--baseline", "--dump-logs", logs.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    let mut names: Vec<_> = std::fs::read_dir(&logs)
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .collect();
    names.sort();
    assert_eq!(names, ["cfg-00.jsonl", "cfg-01.jsonl", "cfg-10.jsonl", "cfg-11.jsonl"]);
    let text = std::fs::read_to_string(logs.join("cfg-01.jsonl")).unwrap();
    let last: serde_json::Value = serde_json::from_str(text.lines().last().unwrap()).unwrap();
    assert_eq!(last["kind"], "exception");
    assert_eq!(last["outcome"]["kind"], "null-dereference");
    assert_eq!(last["loc"]["line"], 17);
}

#[test]
fn projection_report_table_and_csv() {
    let dir = tempdir();
    let csv = dir.join("report.csv");
    let o = vartrace(&["run", "corpus/geterr.vl", "--project-report", "1", "--out", csv.to_str().unwrap()]);
    let table = stdout(&o);
    assert!(table.lines().next().unwrap().contains("decisions"));
    assert!(table.lines().any(|l| l.starts_with("flag ")));
    assert!(table.lines().any(|l| l.starts_with("ipv4 ")));
    assert!(table.lines().last().unwrap().starts_with("mean"));
    let csv = std::fs::read_to_string(csv).unwrap();
    assert!(csv.starts_with("focus,decisions,statements\nflag,"));
}

#[test]
fn stats_go_to_stderr() {
    let o = vartrace(&["run", "corpus/geterr.vl", "--stats", "--format", "json"]);
    let err = stderr(&o);
    assert!(err.contains("decisions: 3"), "{err}");
    assert!(err.contains("variational steps: 9"), "{err}");
    serde_json::from_str::<serde_json::Value>(&stdout(&o)).unwrap();
}

#[test]
fn output_file() {
    let dir = tempdir();
    let out = dir.join("t.dot");
    let o = vartrace(&["run", "corpus/geterr.vl", "--format", "dot", "--out", out.to_str().unwrap()]);
    assert!(stdout(&o).is_empty());
    let golden = std::fs::read_to_string(common::golden_dir().join("geterr.dot")).unwrap();
    assert_eq!(std::fs::read_to_string(out).unwrap(), golden);
}

fn tempdir() -> std::path::PathBuf {
    use std::sync::atomic::{AtomicUsize, Ordering};
    static N: AtomicUsize = AtomicUsize::new(0);
    let dir = std::env::temp_dir().join(format!(
        "vartrace-cli-{}-{}",
        std::process::id(),
        N.fetch_add(1, Ordering::SeqCst)
    ));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}
