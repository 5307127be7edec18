use std::io::Write;
use std::path::Path;
use std::process::{Command, Output, Stdio};

use serde_json::Value;
use tempfile::NamedTempFile;

const SUBCRITICAL: &str =
    r#"{"builtin": {"name": "paper-example", "p": 0.5, "alpha": 0.5}, "marks": "pure-death"}"#;
const SUPERCRITICAL: &str =
    r#"{"builtin": {"name": "paper-example", "p": 0.2, "alpha": 0.2}, "marks": "pure-death"}"#;
const SUBCRITICAL_EXPLICIT: &str = r#"{
  "d": 2,
  "types": [
    {"theta": 1, "offspring": [{"j": [0, 2], "p": 0.5}, {"j": [0, 0], "p": 0.5}]},
    {"theta": 1.0, "offspring": [{"j": [0, 0], "p": 0.5}, {"j": [1, 0], "p": 0.5}]}
  ],
  "marks": [[[0, 0]], [[0, 0]]]
}"#;

fn config(text: &str) -> NamedTempFile {
    let mut f = NamedTempFile::new().unwrap();
    f.write_all(text.as_bytes()).unwrap();
    f
}

fn bmarks(args: &[&str], cfg: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bmarks"))
        .args(args)
        .arg("-c")
        .arg(cfg)
        .output()
        .unwrap()
}

fn report(out: &Output) -> Value {
    assert!(
        out.status.success(),
        "exit {:?}: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).unwrap()
}

fn f(v: &Value) -> f64 {
    v.as_f64().unwrap()
}

#[test]
fn classify_subcritical_example() {
    let cfg = config(SUBCRITICAL);
    let r = report(&bmarks(&["classify"], cfg.path()));
    assert_eq!(r["results"]["class"], "subcritical");
    assert!((f(&r["results"]["rho"]) + 0.2928932).abs() < 1e-7);
    assert_eq!(r["command"], "classify");
}

#[test]
fn extinction_supercritical_example() {
    let cfg = config(SUPERCRITICAL);
    let r = report(&bmarks(&["extinction"], cfg.path()));
    let q = r["results"]["q"].as_array().unwrap();
    assert!((f(&q[0]) - 0.453125).abs() < 1e-9);
    assert!((f(&q[1]) - 0.5625).abs() < 1e-9);
}

#[test]
fn marked_root_and_extinction_pgf() {
    let cfg = config(SUBCRITICAL);
    let r = report(&bmarks(
        &["marked-root", "--values", "1:(0,0)=0.5;2:(0,0)=0.5"],
        cfg.path(),
    ));
    let q = r["results"]["q_marked"].as_array().unwrap();
    assert!((f(&q[0]) - 0.3377223).abs() < 1e-7);
    assert!((f(&q[1]) - 0.4188612).abs() < 1e-7);

    let cfg = config(SUPERCRITICAL);
    let r = report(&bmarks(
        &[
            "extinction-pgf",
            "--start",
            "0,1",
            "--values",
            "1:(0,0)=0.5;2:(0,0)=0.5",
        ],
        cfg.path(),
    ));
    assert_eq!(r["results"]["conditioned"], true);
    assert!((f(&r["results"]["value"]) - 0.369024).abs() < 1e-6);

    // every marked vector needs a value below one here
    let out = bmarks(
        &[
            "extinction-pgf",
            "--start",
            "0,1",
            "--values",
            "1:(0,0)=0.5",
        ],
        cfg.path(),
    );
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn compare_reports_pass_field() {
    let cfg = config(SUBCRITICAL);
    let r = report(&bmarks(
        &[
            "compare",
            "--t",
            "2",
            "--start",
            "0,1",
            "--values",
            "1:(0,0)=0.5;2:(0,0)=0.5",
            "--reps",
            "100000",
            "--seed",
            "42",
        ],
        cfg.path(),
    ));
    let res = &r["results"];
    let diff = (f(&res["mc_mean"]) - f(&res["analytic"])).abs();
    assert_eq!(res["pass"], diff <= 4.0 * f(&res["std_error"]));
    assert_eq!(res["pass"], true);
}

#[test]
fn unsupported_mark_names_field_path() {
    let cfg = config(
        r#"{"builtin": {"name": "paper-example", "p": 0.5, "alpha": 0.5}, "marks": [[[1, 1]], []]}"#,
    );
    let out = bmarks(&["validate"], cfg.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("marks[0][0]"));
}

#[test]
fn exit_codes() {
    let cfg = config("{not json");
    assert_eq!(bmarks(&["validate"], cfg.path()).status.code(), Some(1));
    let cfg = config(r#"{"builtin": {"name": "nope", "p": 0.5, "alpha": 0.5}}"#);
    let out = bmarks(&["validate"], cfg.path());
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("builtin.name"));
    let cfg = config(
        r#"{"d": 1, "types": [{"theta": 1, "offspring": [{"j": [0], "p": 0.4}, {"j": [2], "p": 0.5}]}]}"#,
    );
    let out = bmarks(&["validate"], cfg.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("types[0].offspring"));
    let cfg = config(SUBCRITICAL);
    assert_eq!(
        bmarks(&["pgf", "--start", "1,0"], cfg.path()).status.code(),
        Some(1)
    );
    assert_eq!(bmarks(&["bogus"], cfg.path()).status.code(), Some(1));

    // supercritical horizon run with a tiny cap truncates most replicas
    let cfg = config(SUPERCRITICAL);
    let out = bmarks(
        &[
            "simulate",
            "--t",
            "20",
            "--start",
            "1,1",
            "--reps",
            "200",
            "--max-pop",
            "3",
        ],
        cfg.path(),
    );
    assert_eq!(out.status.code(), Some(4));
}

#[test]
fn builtin_and_explicit_share_digest() {
    let a = config(SUBCRITICAL);
    let b = config(SUBCRITICAL_EXPLICIT);
    let ra = report(&bmarks(&["validate"], a.path()));
    let rb = report(&bmarks(&["validate"], b.path()));
    assert_eq!(ra["input_digest"], rb["input_digest"]);
    assert_eq!(ra["results"]["canonical"], rb["results"]["canonical"]);

    let c = config(
        r#"{"builtin": {"name": "paper-example", "p": 0.5, "alpha": 0.5}, "d": 2, "marks": "pure-death"}"#,
    );
    assert_eq!(bmarks(&["validate"], c.path()).status.code(), Some(1));
}

#[test]
fn canonical_form_round_trips() {
    let cfg = config(
        r#"{"d": 2, "types": [
            {"theta": 0.7, "offspring": [{"j": [1, 1], "p": 0.1}, {"j": [0, 0], "p": 0.3}, {"j": [2, 0], "p": 0.6}]},
            {"theta": 2.5, "offspring": [{"j": [0, 0], "p": 0.25}, {"j": [0, 2], "p": 0.75}]}],
           "marks": [[[2, 0], [0, 0]], [[0, 2]]]}"#,
    );
    let first = report(&bmarks(&["validate"], cfg.path()));
    let canonical = serde_json::to_string(&first["results"]["canonical"]).unwrap();
    let again = config(&canonical);
    let second = report(&bmarks(&["validate"], again.path()));
    assert_eq!(first["input_digest"], second["input_digest"]);
    assert_eq!(
        first["results"]["canonical"],
        second["results"]["canonical"]
    );
    let p = &first["results"]["canonical"]["types"][0]["offspring"][0]["p"];
    assert_eq!(f(p), 0.3);
}

#[test]
fn reads_config_from_stdin() {
    let mut child = Command::new(env!("CARGO_BIN_EXE_bmarks"))
        .arg("classify")
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .spawn()
        .unwrap();
    child
        .stdin
        .take()
        .unwrap()
        .write_all(SUPERCRITICAL.as_bytes())
        .unwrap();
    let out = child.wait_with_output().unwrap();
    assert_eq!(report(&out)["results"]["class"], "supercritical");
}

fn strip_wall_time(body: &[u8]) -> String {
    String::from_utf8_lossy(body)
        .lines()
        .filter(|l| !l.contains("wall_time_s"))
        .collect::<Vec<_>>()
        .join("\n")
}

#[test]
fn reports_are_deterministic() {
    let cfg = config(SUPERCRITICAL);
    let args = [
        "simulate",
        "--start",
        "1,0",
        "--reps",
        "3000",
        "--seed",
        "9",
        "--max-pop",
        "200",
        "--values",
        "1:(0,0)=0.5;2:(0,0)=0.5",
    ];
    let a = bmarks(&args, cfg.path());
    let b = bmarks(&args, cfg.path());
    assert!(a.status.success());
    assert_eq!(strip_wall_time(&a.stdout), strip_wall_time(&b.stdout));

    let base = report(&a);
    for threads in ["1", "3"] {
        let mut with_threads = args.to_vec();
        with_threads.extend(["--threads", threads]);
        let r = report(&bmarks(&with_threads, cfg.path()));
        assert_eq!(r["results"], base["results"]);
        assert_eq!(r["diagnostics"], base["diagnostics"]);
    }
}

#[test]
fn writes_report_to_file() {
    let cfg = config(SUBCRITICAL);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("report.json");
    let out = bmarks(
        &[
            "pgf",
            "--t",
            "1.5",
            "--start",
            "2,1",
            "--out",
            path.to_str().unwrap(),
        ],
        cfg.path(),
    );
    assert!(out.status.success());
    assert!(out.stdout.is_empty());
    let r: Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    // no values given: every mark defaults to 1
    assert_eq!(f(&r["results"]["value"]), 1.0);
}
