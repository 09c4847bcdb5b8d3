use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::{Command, Stdio};

use erc::{run_cli, Exit};

fn scenario(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../scenarios")
        .join(name)
}

fn erc(args: &[&str]) -> (Exit, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let argv = std::iter::once("erc").chain(args.iter().copied());
    let code = run_cli(argv, &mut out, &mut err);
    (
        code,
        String::from_utf8(out).unwrap(),
        String::from_utf8(err).unwrap(),
    )
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

const TWO_FLOWS: &str = r#"
[params]
duration = 20

[[links]]
from = "a"
to = "b"
capacity = 30
delay = 1
duplex = true

[[flows]]
id = "A"
route = ["a", "b"]

[[flows]]
id = "B"
route = ["a", "b"]
"#;

#[test]
fn oracle_output_verifies_through_a_pipe() {
    let s = scenario("chain.toml");
    let (code, rates, _) = erc(&["oracle", "--scenario", path(&s)]);
    assert_eq!(code, Exit::Success);
    assert!(rates.starts_with("# explicit-rate rates v1\n"));

    let mut child = Command::new(env!("CARGO_BIN_EXE_erc"))
        .args(["verify", "--scenario", path(&s), "-"])
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .spawn()
        .unwrap();
    child
        .stdin
        .take()
        .unwrap()
        .write_all(rates.as_bytes())
        .unwrap();
    let done = child.wait_with_output().unwrap();
    assert_eq!(done.status.code(), Some(0));
    assert_eq!(String::from_utf8(done.stdout).unwrap(), "pass\n");
}

#[test]
fn verify_rejects_wrong_vectors() {
    let dir = tempfile::tempdir().unwrap();
    let s = write(dir.path(), "s.toml", TWO_FLOWS);
    let cases = [
        ("flow A 16\nflow B 14\n", "flow B"),
        ("flow A 10\nflow B 10\n", "flow A"),
        ("flow A 15\n", "B"),
    ];
    for (text, needle) in cases {
        let rates = write(dir.path(), "r.txt", text);
        let (code, out, _) = erc(&["verify", "--scenario", path(&s), path(&rates)]);
        assert_eq!(code, Exit::Violation, "{text}");
        assert!(out.starts_with("fail: "), "{out}");
        assert!(out.contains(needle), "{out} lacks {needle}");
    }
    let ok = write(dir.path(), "r.txt", "flow A 15\nflow B 30/2\n");
    assert_eq!(
        erc(&["verify", "--scenario", path(&s), path(&ok)]).0,
        Exit::Success
    );
}

#[test]
fn infeasible_vector_names_the_saturated_link() {
    let dir = tempfile::tempdir().unwrap();
    let s = write(dir.path(), "s.toml", TWO_FLOWS);
    let rates = write(dir.path(), "r.txt", "flow A 20\nflow B 20\n");
    let (code, out, _) = erc(&["verify", "--scenario", path(&s), path(&rates)]);
    assert_eq!(code, Exit::Violation);
    assert!(out.contains("a->b"), "{out}");
}

#[test]
fn syntax_error_reports_position() {
    let dir = tempfile::tempdir().unwrap();
    let s = write(dir.path(), "s.toml", "[params]\nduration = 20\nk = = 1\n");
    let (code, _, err) = erc(&["oracle", "--scenario", path(&s)]);
    assert_eq!(code, Exit::Usage);
    assert!(err.contains("line 3"), "{err}");
}

#[test]
fn negative_k_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let s = write(
        dir.path(),
        "s.toml",
        &TWO_FLOWS.replace("duration = 20", "duration = 20\nk = -1"),
    );
    let (code, _, err) = erc(&["simulate", "--scenario", path(&s)]);
    assert_eq!(code, Exit::Usage);
    assert!(!err.is_empty());
}

#[test]
fn bad_flags_are_usage_errors() {
    let s = scenario("chain.toml");
    assert_eq!(erc(&["simulate"]).0, Exit::Usage);
    assert_eq!(
        erc(&["simulate", "--scenario", path(&s), "--seeds", "5..2"]).0,
        Exit::Usage
    );
    assert_eq!(
        erc(&["simulate", "--scenario", path(&s), "--policy-4-1", "maybe"]).0,
        Exit::Usage
    );
    assert_eq!(erc(&["frobnicate"]).0, Exit::Usage);
    assert_eq!(erc(&["--help"]).0, Exit::Success);
}

#[test]
fn zero_duration_writes_empty_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let s = scenario("single_link.toml");
    let (code, _, _) = erc(&[
        "simulate",
        "--scenario",
        path(&s),
        "--duration",
        "0",
        "--out",
        path(&out),
    ]);
    assert_eq!(code, Exit::Success);
    let trace = std::fs::read_to_string(out.join("trace.txt")).unwrap();
    assert_eq!(trace, "# explicit-rate trace v1\n");
    let report = std::fs::read_to_string(out.join("report.txt")).unwrap();
    assert!(report.starts_with("# explicit-rate report v1\n"));
    assert!(!report.contains("[epoch"));
    let series = std::fs::read_to_string(out.join("series.tsv")).unwrap();
    assert!(series.starts_with("# explicit-rate series v1\n"));
}

#[test]
fn perturbed_run_converges() {
    let s = scenario("chain.toml");
    let (code, report, _) = erc(&[
        "simulate",
        "--scenario",
        path(&s),
        "--perturb",
        "--seed",
        "7",
    ]);
    assert_eq!(code, Exit::Success, "{report}");
    assert!(report.contains("[summary]"));
}

#[test]
fn too_short_run_is_not_converged() {
    let s = scenario("chain.toml");
    let (code, _, _) = erc(&["simulate", "--scenario", path(&s), "--duration", "1/2"]);
    assert_eq!(code, Exit::NotConverged);
}

#[test]
fn seed_range_fans_out() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("runs");
    let s = scenario("demand.toml");
    let (code, stdout, _) = erc(&[
        "simulate",
        "--scenario",
        path(&s),
        "--seeds",
        "3..5",
        "--out",
        path(&out),
    ]);
    assert_eq!(code, Exit::Success);
    assert_eq!(
        stdout,
        "seed 3: converged\nseed 4: converged\nseed 5: converged\n"
    );
    for seed in 3..=5 {
        assert!(out.join(format!("seed-{seed}")).join("trace.txt").is_file());
    }
}

#[test]
fn same_seed_gives_identical_files() {
    let dir = tempfile::tempdir().unwrap();
    let s = scenario("demand.toml");
    let mut traces = Vec::new();
    for name in ["a", "b"] {
        let out = dir.path().join(name);
        let (code, _, _) = erc(&[
            "simulate",
            "--scenario",
            path(&s),
            "--seed",
            "11",
            "--out",
            path(&out),
        ]);
        assert_eq!(code, Exit::Success);
        traces.push(std::fs::read(out.join("trace.txt")).unwrap());
    }
    assert_eq!(traces[0], traces[1]);
}

#[test]
fn policy_off_overloads_the_dynamic_scenario() {
    let s = scenario("dynamic.toml");
    let (_, on, _) = erc(&["simulate", "--scenario", path(&s)]);
    let (_, off, _) = erc(&["simulate", "--scenario", path(&s), "--policy-4-1", "off"]);
    assert!(on.contains("feasibility_violations = 0\n"), "{on}");
    assert!(!off.contains("feasibility_violations = 0\n"), "{off}");
}

#[test]
fn dynamic_scenario_has_three_levels_at_start() {
    let s = scenario("dynamic.toml");
    let (code, out, _) = erc(&["oracle", "--scenario", path(&s), "--at", "0"]);
    assert_eq!(code, Exit::Success);
    assert!(out.ends_with("levels N=3\n"), "{out}");
    let (_, later, _) = erc(&["oracle", "--scenario", path(&s), "--at", "50"]);
    assert!(later.contains("flow 4 60 60"), "{later}");
    assert!(!later.contains("flow 1 "), "{later}");
}
