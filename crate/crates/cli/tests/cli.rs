use std::io::Write;
use std::process::{Command, Output};

use auxcheck::explorer::Verdict;

fn auxcheck(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_auxcheck"))
        .args(args)
        .env_remove("AUXCHECK_STATE_CAP")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn config_file(body: &str) -> tempfile::NamedTempFile {
    let mut f = tempfile::NamedTempFile::new().unwrap();
    f.write_all(body.as_bytes()).unwrap();
    f
}

#[test]
fn list_names_every_example() {
    let o = auxcheck(&["list"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    for name in ["MinMax1", "SendSeqUndoP", "HourS", "NewLinearSnapshotPS", "AfekSimplifiedH"] {
        assert!(text.lines().any(|l| l.starts_with(name)), "{name}");
    }
}

#[test]
fn refinement_with_a_config_file_passes() {
    let cfg = config_file(r#"{"substitutions": {"Int": [0, 1]}}"#);
    let o = auxcheck(&[
        "check-refinement",
        "--spec",
        "SendInt1P",
        "--mapping",
        "to-SendInt2",
        "--config",
        cfg.path().to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    assert!(stdout(&o).contains("PASS"));
}

#[test]
fn invariant_by_formula_passes() {
    let o = auxcheck(&["check-invariant", "--spec", "Hour", "--inv", "h ∈ 0..23"]);
    assert_eq!(o.status.code(), Some(0));
}

#[test]
fn find_trace_prints_23_steps() {
    let o = auxcheck(&["find-trace", "--spec", "Hour", "--target", "h=23", "--json"]);
    assert_eq!(o.status.code(), Some(1));
    let j: serde_json::Value = serde_json::from_str(stdout(&o).trim()).unwrap();
    let v = Verdict::from_json(&j).unwrap();
    assert_eq!(v.trace_steps(), Some(23));
    assert_eq!(v.to_json(), j);
}

#[test]
fn json_output_is_byte_identical_across_worker_counts() {
    let run = |w: &str| {
        stdout(&auxcheck(&[
            "check-refinement",
            "--spec",
            "SendSeqUndoP",
            "--mapping",
            "to-SendSeq",
            "--json",
            "--workers",
            w,
        ]))
    };
    let one = run("1");
    assert_eq!(one, run("4"));
    assert_eq!(one, run("1"));
}

#[test]
fn errors_exit_with_2() {
    let o = auxcheck(&["check-refinement", "--spec", "NoSuchSpec", "--mapping", "x"]);
    assert_eq!(o.status.code(), Some(2));
    let o = auxcheck(&["check-refinement", "--spec", "MinMax1", "--mapping", "nope"]);
    assert_eq!(o.status.code(), Some(2));
    let cfg = config_file(r#"{"substitutions": {}}"#);
    let o = auxcheck(&["check-invariant", "--spec", "MinMax1", "--inv", "TypeOK", "--config", cfg.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("Int"));
    let o = auxcheck(&["no-such-command"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn state_cap_comes_from_the_environment() {
    let o = Command::new(env!("CARGO_BIN_EXE_auxcheck"))
        .args(["check-invariant", "--spec", "Hour", "--inv", "TypeOK"])
        .env("AUXCHECK_STATE_CAP", "5")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
    let o = auxcheck(&["check-invariant", "--spec", "Hour", "--inv", "TypeOK", "--state-cap", "5"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn prophecy_stuttering_equivalence_and_action_checks() {
    let cases: [&[&str]; 4] = [
        &["check-proph-conditions", "--spec", "SendSetUndoP"],
        &["check-stutter-conditions", "--spec", "HourS"],
        &[
            "check-equivalence",
            "--spec",
            "NewLinearSnapshot",
            "--mapping",
            "to-NewLinearSnapshotNxt",
            "--reverse-mapping",
            "to-NewLinearSnapshot",
        ],
        &["check-action-prop", "--spec", "SendInt1", "--prop", "OnePrediction"],
    ];
    for args in cases {
        let o = auxcheck(args);
        assert_eq!(o.status.code(), Some(0), "{args:?}: {}", stdout(&o));
    }
}

#[test]
fn failing_check_exits_with_1_and_prints_a_trace() {
    let o = auxcheck(&["check-refinement", "--spec", "AfekSimplified", "--mapping", "to-LinearSnapshot-naive"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("trace of"));
}
