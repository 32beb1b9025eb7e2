mod common;

use common::corpus_path;
use x10clocks_core::cli::{main, ExitStatus};

fn cli(args: &[&str]) -> (ExitStatus, String, String) {
    let mut argv = vec!["x10clocks".to_string()];
    argv.extend(args.iter().map(|s| s.to_string()));
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let status = main(&argv, &mut out, &mut err);
    (
        status,
        String::from_utf8(out).unwrap(),
        String::from_utf8(err).unwrap(),
    )
}

fn corpus(name: &str) -> String {
    corpus_path(name).display().to_string()
}

#[test]
fn check_reports_ok_and_errors() {
    let (s, out, _) = cli(&["check", &corpus("ex1")]);
    assert_eq!(s, ExitStatus::Success);
    assert!(out.contains("ok: unit"));

    let (s, _, err) = cli(&["check", &corpus("ex4")]);
    assert_eq!(s.code(), 1);
    assert!(err.contains("ex4.xc:4:3: error:"), "{err}");
    assert!(err.contains("already quiescent"));
}

#[test]
fn annotate_prints_positions() {
    let (s, out, _) = cli(&["check", "--annotate", &corpus("ex2")]);
    assert_eq!(s, ExitStatus::Success);
    assert!(out.lines().any(|l| l.starts_with("3:") && l.ends_with("{alpha1},{alpha1}")), "{out}");
}

#[test]
fn run_refuses_ill_typed_programs_unless_unchecked() {
    let (s, _, _) = cli(&["run", &corpus("ex5")]);
    assert_eq!(s, ExitStatus::TypeError);
    let (s, out, _) = cli(&["run", "--unchecked", &corpus("ex5")]);
    assert_eq!(s.code(), 2);
    assert!(out.contains("E-act"), "{out}");
}

#[test]
fn run_reports_verdicts_and_limits() {
    let (s, out, _) = cli(&["run", "--policy", "random", "--seed", "7", "--typed-exec", &corpus("ex3")]);
    assert_eq!(s, ExitStatus::Success, "{out}");
    assert!(out.starts_with("finished with ()"));

    let (s, out, _) = cli(&["run", "--max-steps", "3", &corpus("ex3")]);
    assert_eq!(s.code(), 4);
    assert!(out.contains("steps: 3"));

    let (s, _, _) = cli(&["run", "--unchecked", &corpus("ex6")]);
    assert_eq!(s.code(), 3);
}

#[test]
fn trace_file_replays() {
    let dir = std::env::temp_dir().join(format!("x10clocks-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let trace = dir.join("ex7.jsonl");
    let t = trace.display().to_string();
    let (s, _, _) = cli(&["run", "--policy", "random", "--seed", "3", "--trace", &t, &corpus("ex7")]);
    assert_eq!(s, ExitStatus::Success);
    let (s, out, _) = cli(&["replay", &corpus("ex7"), "--trace", &t]);
    assert_eq!(s, ExitStatus::Success);
    assert!(out.starts_with("replayed "));

    let text = std::fs::read_to_string(&trace).unwrap();
    let mut lines: Vec<&str> = text.lines().collect();
    lines.swap(0, 1);
    std::fs::write(&trace, lines.join("\n")).unwrap();
    let (s, _, err) = cli(&["replay", &corpus("ex7"), "--trace", &t]);
    assert_eq!(s.code(), 2, "{err}");
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn explore_and_equiv_exit_codes() {
    let (s, out, _) = cli(&["explore", &corpus("ex1")]);
    assert_eq!(s, ExitStatus::Success, "{out}");
    let (s, _, _) = cli(&["explore", "--unchecked", &corpus("ex4")]);
    assert_eq!(s.code(), 2);
    let (s, _, _) = cli(&["explore", "--unchecked", &corpus("ex6")]);
    assert_eq!(s.code(), 3);
    let (s, _, _) = cli(&["explore", "--max-states", "5", &corpus("ex3")]);
    assert_eq!(s.code(), 4);
    let (s, out, _) = cli(&["equiv", "--seeds", "5", &corpus("ex2")]);
    assert_eq!(s, ExitStatus::Success);
    assert!(out.contains("divergences: 0"));
}

#[test]
fn usage_and_parse_errors() {
    assert_eq!(cli(&[]).0.code(), 5);
    assert_eq!(cli(&["frobnicate"]).0.code(), 5);
    assert_eq!(cli(&["check", "/nonexistent/file.xc"]).0.code(), 5);
    assert_eq!(cli(&["--help"]).0, ExitStatus::Success);

    let dir = std::env::temp_dir().join(format!("x10clocks-parse-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let bad = dir.join("bad.xc");
    std::fs::write(&bad, "let x = in ()").unwrap();
    let (s, _, err) = cli(&["check", &bad.display().to_string()]);
    assert_eq!(s.code(), 5);
    assert!(err.contains("bad.xc:1:"), "{err}");
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn fmt_output_reparses() {
    let (s, out, _) = cli(&["fmt", &corpus("syntax")]);
    assert_eq!(s, ExitStatus::Success);
    assert!(x10clocks_core::parse(&out).is_ok());
}
