//! End-to-end tests against the compiled binary: exit codes, report shape,
//! byte-stable stdout, registry override precedence, and the generate/verify
//! certificate pipeline.

use std::io::Write;
use std::path::PathBuf;
use std::process::{Command, Stdio};

use serde_json::Value;

fn bin() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_decaykit"));
    // isolate from ambient configuration
    cmd.env_remove("DECAYKIT_REGISTRY");
    cmd
}

struct Run {
    code: i32,
    stdout: String,
    stderr: String,
}

fn run(args: &[&str]) -> Run {
    let out = bin().args(args).output().expect("binary runs");
    Run {
        code: out.status.code().expect("no signal"),
        stdout: String::from_utf8(out.stdout).expect("utf8 stdout"),
        stderr: String::from_utf8(out.stderr).expect("utf8 stderr"),
    }
}

fn json(run: &Run) -> Value {
    serde_json::from_str(&run.stdout).expect("stdout is one JSON document")
}

fn fixture(name: &str) -> String {
    format!("{}/tests/fixtures/{name}", env!("CARGO_MANIFEST_DIR"))
}

fn temp_path(name: &str) -> PathBuf {
    std::env::temp_dir().join(format!("decaykit-cli-{}-{name}", std::process::id()))
}

#[test]
fn cable_decayed_report() {
    let r = run(&["cable", "--p", "2", "--q", "11", "--of", "torus:2,3"]);
    assert_eq!(r.code, 0, "stderr: {}", r.stderr);
    let v = json(&r);
    assert_eq!(v["verdict"], "decayed");
    assert_eq!(v["details"]["u"], 6);
    assert_eq!(v["details"]["v"], 1);
    assert_eq!(v["details"]["decay_bound"], "22");
    assert_eq!(v["details"]["window"]["orderable_below"], "9");
    assert_eq!(v["details"]["window"]["obstructed_from"], "22");
    assert_eq!(v["details"]["cable_meridian"], "m^6 l^1 t^-1");
    assert!(
        !r.stdout.contains("elapsed") && !r.stdout.contains("duration"),
        "stdout must not carry timing"
    );
}

#[test]
fn cable_inapplicable_is_success_with_reason() {
    let r = run(&["cable", "--p", "5", "--q", "2", "--of", "torus:2,3"]);
    assert_eq!(r.code, 0);
    let v = json(&r);
    assert_eq!(v["verdict"], "inapplicable");
    assert_eq!(v["details"]["reason"], "q/p <= companion decay bound");
    assert_eq!(v["details"]["companion_decay"], "5");
}

#[test]
fn cable_input_errors_exit_two() {
    assert_eq!(run(&["cable", "--p", "2", "--q", "4", "--of", "torus:2,3"]).code, 2);
    assert_eq!(run(&["cable", "--p", "2", "--q", "11", "--of", "torus:2,4"]).code, 2);
    assert_eq!(run(&["cable", "--p", "2", "--q", "11", "--of", "gibberish"]).code, 2);
}

#[test]
fn generate_then_verify_roundtrip() {
    let path = temp_path("roundtrip.json");
    let arg = path.to_str().unwrap();
    let gen = run(&["gen-cert", "--p", "2", "--q", "11", "--r", "5", "--out", arg]);
    assert_eq!(gen.code, 0, "stderr: {}", gen.stderr);
    assert_eq!(json(&gen)["verdict"], "written");

    let ver = run(&["verify-cert", "--cert", arg]);
    assert_eq!(ver.code, 0, "stderr: {}", ver.stderr);
    let v = json(&ver);
    assert_eq!(v["verdict"], "accept");
    let conclusion = v["details"]["conclusion"].as_str().unwrap();
    assert!(conclusion.contains("22-decayed"), "got: {conclusion}");
    std::fs::remove_file(&path).ok();
}

#[test]
fn generated_certificate_pipes_through_stdin() {
    let gen = run(&["gen-cert", "--p", "3", "--q", "4", "--r", "1"]);
    assert_eq!(gen.code, 0);
    assert_eq!(json(&gen)["p"], 3, "bare gen-cert prints the raw certificate");

    let mut child = bin()
        .args(["verify-cert", "--cert", "-"])
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .spawn()
        .expect("spawn");
    child
        .stdin
        .take()
        .unwrap()
        .write_all(gen.stdout.as_bytes())
        .expect("feed stdin");
    let out = child.wait_with_output().expect("wait");
    assert_eq!(out.status.code(), Some(0));
    let v: Value = serde_json::from_slice(&out.stdout).expect("json");
    assert_eq!(v["verdict"], "accept");
}

#[test]
fn verify_cert_grid_zero_accepts_and_reports_limit() {
    let path = temp_path("grid0.json");
    let arg = path.to_str().unwrap();
    run(&["gen-cert", "--p", "2", "--q", "11", "--r", "5", "--out", arg]);
    let r = run(&["verify-cert", "--cert", arg, "--grid", "0"]);
    assert_eq!(r.code, 0);
    let v = json(&r);
    assert_eq!(v["verdict"], "accept");
    assert_eq!(v["details"]["grid_bound"], 0);
    assert_eq!(v["details"]["grid_limited"], true);
    std::fs::remove_file(&path).ok();
}

#[test]
fn tampered_certificate_rejects_and_names_location() {
    let gen = run(&["gen-cert", "--p", "3", "--q", "4", "--r", "1"]);
    let mut cert: Value = serde_json::from_str(&gen.stdout).unwrap();
    // break one declared word: bump the first digit of the first judgment
    let word = cert["judgments"][0]["word"].as_str().unwrap().to_string();
    let mut done = false;
    let tampered: String = word
        .chars()
        .map(|c| match c {
            '0'..='8' if !done => {
                done = true;
                char::from(c as u8 + 1)
            }
            '9' if !done => {
                done = true;
                '8'
            }
            _ => c,
        })
        .collect();
    assert_ne!(word, tampered);
    cert["judgments"][0]["word"] = Value::String(tampered);

    let path = temp_path("tampered.json");
    std::fs::write(&path, serde_json::to_string(&cert).unwrap()).unwrap();
    let r = run(&["verify-cert", "--cert", path.to_str().unwrap()]);
    assert_eq!(r.code, 1);
    let v = json(&r);
    assert_eq!(v["verdict"], "reject");
    let failures = v["details"]["failures"].as_array().unwrap();
    assert!(!failures.is_empty());
    let blamed = failures.iter().any(|f| f["judgment"].is_number());
    assert!(blamed, "failures must name the offending judgment: {failures:?}");
    std::fs::remove_file(&path).ok();
}

#[test]
fn verify_cert_bad_input_exits_two() {
    assert_eq!(run(&["verify-cert", "--cert", "/nonexistent/cert.json"]).code, 2);
    let path = temp_path("notjson.json");
    std::fs::write(&path, "not json").unwrap();
    assert_eq!(run(&["verify-cert", "--cert", path.to_str().unwrap()]).code, 2);
    std::fs::remove_file(&path).ok();
}

#[test]
fn registry_lookup_exit_codes() {
    let hit = run(&["registry", "lookup", "--id", "pretzel:-2,3,7"]);
    assert_eq!(hit.code, 0);
    assert_eq!(json(&hit)["details"]["decay"], "17");

    let miss = run(&["registry", "lookup", "--id", "torus:2,4"]);
    assert_eq!(miss.code, 1);
    assert_eq!(json(&miss)["verdict"], "no-rule");

    assert_eq!(run(&["registry", "lookup", "--id", "nonsense"]).code, 2);
}

#[test]
fn registry_list_reports_embedded_table() {
    let r = run(&["registry", "list"]);
    assert_eq!(r.code, 0);
    let v = json(&r);
    let count = v["details"]["count"].as_u64().unwrap();
    assert!(count >= 10);
    assert_eq!(
        v["details"]["records"].as_array().unwrap().len(),
        count as usize
    );
}

#[test]
fn registry_override_precedence() {
    let mini = fixture("mini_registry.json");
    let env_run = bin()
        .args(["registry", "list"])
        .env("DECAYKIT_REGISTRY", &mini)
        .output()
        .expect("binary runs");
    let v: Value = serde_json::from_slice(&env_run.stdout).unwrap();
    assert_eq!(v["details"]["count"], 1, "env var replaces the embedded table");

    let flag_beats_env = bin()
        .args(["--registry", &mini, "registry", "list"])
        .env("DECAYKIT_REGISTRY", "/nonexistent/registry.json")
        .output()
        .expect("binary runs");
    let v: Value = serde_json::from_slice(&flag_beats_env.stdout).unwrap();
    assert_eq!(v["details"]["count"], 1, "flag wins over the env var");

    let broken_env = bin()
        .args(["registry", "list"])
        .env("DECAYKIT_REGISTRY", "/nonexistent/registry.json")
        .output()
        .expect("binary runs");
    assert_eq!(broken_env.status.code(), Some(2));
}

#[test]
fn lo_window_classifies_slopes() {
    for (slope, expect) in [
        ("7", "left-orderable"),
        ("19/2", "unknown"),
        ("22", "not-left-orderable"),
        ("100", "not-left-orderable"),
    ] {
        let r = run(&[
            "lo-window", "--p", "2", "--q", "11", "--of", "torus:2,3", "--r", slope,
        ]);
        assert_eq!(r.code, 0);
        assert_eq!(json(&r)["details"]["classification"], *expect, "slope {slope}");
    }
}

#[test]
fn lo_window_without_companion_never_obstructs() {
    let r = run(&["lo-window", "--p", "2", "--q", "11", "--r", "100"]);
    assert_eq!(r.code, 0);
    let v = json(&r);
    assert_eq!(v["details"]["obstructed_from"], Value::Null);
    assert_eq!(v["details"]["classification"], "unknown");
}

#[test]
fn lo_window_rejects_conflicting_sources() {
    let r = run(&[
        "lo-window", "--p", "2", "--q", "11", "--of", "torus:2,3", "--decay", "5",
    ]);
    assert_eq!(r.code, 2);
}

#[test]
fn search_contradiction_exits_one_and_replays() {
    for fix in ["cyclic3.json", "free_product.json"] {
        let r = run(&["search", "--presentation", &fixture(fix), "--radius", "3"]);
        assert_eq!(r.code, 1, "{fix}");
        let v = json(&r);
        assert_eq!(v["verdict"], "contradiction");
        assert_eq!(v["details"]["replay_verified"], true);
        assert_eq!(v["details"]["heuristic"], false);
    }
}

#[test]
fn search_assignment_exits_zero() {
    for (fix, radius) in [("z2.json", "3"), ("klein.json", "3"), ("trefoil.json", "2")] {
        let r = run(&["search", "--presentation", &fixture(fix), "--radius", radius]);
        assert_eq!(r.code, 0, "{fix}: {}", r.stdout);
        let v = json(&r);
        assert_eq!(v["verdict"], "assignment");
        assert_eq!(v["details"]["heuristic"], false);
        assert!(!v["details"]["signs"].as_array().unwrap().is_empty());
    }
}

#[test]
fn search_heuristic_assignment_exits_three() {
    let r = run(&[
        "search", "--presentation", &fixture("three_gen.json"), "--radius", "1",
    ]);
    assert_eq!(r.code, 3, "{}", r.stdout);
    let v = json(&r);
    assert_eq!(v["verdict"], "no-obstruction");
    assert_eq!(v["details"]["heuristic"], true);
}

#[test]
fn search_bad_input_exits_two() {
    assert_eq!(run(&["search", "--presentation", "/nonexistent.json"]).code, 2);
    let r = run(&["search", "--presentation", &fixture("bad_relator.json")]);
    assert_eq!(r.code, 2, "relator over unknown generator");
}

#[test]
fn quotient_reports_peripheral_images() {
    let r = run(&["quotient", "--p", "2", "--q", "11"]);
    assert_eq!(r.code, 0);
    let v = json(&r);
    assert_eq!(v["details"]["generator_images"]["l"], "1");
    assert_eq!(v["details"]["cable_meridian_abelianized"], 1);
    assert_eq!(v["details"]["cable_longitude_abelianized"], 0);
    assert_eq!(v["details"]["target"]["relators"][0], "t^-2 m^11");

    let w = run(&["quotient", "--p", "2", "--q", "11", "--word", "l^5 t^1"]);
    assert_eq!(w.code, 0);
    let wv = json(&w);
    assert_eq!(wv["details"]["word_image"], "t^1");
    assert_eq!(wv["details"]["word_abelianized"], 11);

    assert_eq!(run(&["quotient", "--p", "2", "--q", "11", "--word", "x^1"]).code, 2);
    assert_eq!(run(&["quotient", "--p", "2", "--q", "4"]).code, 2);
}

#[test]
fn stdout_is_byte_stable_across_runs() {
    for args in [
        vec!["cable", "--p", "2", "--q", "11", "--of", "torus:2,3"],
        vec!["registry", "list"],
        vec!["search", "--presentation", &fixture("z2.json"), "--radius", "3"],
        vec!["gen-cert", "--p", "2", "--q", "5", "--r", "2"],
    ] {
        let a = run(&args);
        let b = run(&args);
        assert_eq!(a.stdout, b.stdout, "args: {args:?}");
        assert_eq!(a.code, b.code);
    }
}

#[test]
fn verbose_goes_to_stderr_only() {
    let quiet = run(&["registry", "lookup", "--id", "torus:2,3"]);
    let loud = run(&["--verbose", "registry", "lookup", "--id", "torus:2,3"]);
    assert_eq!(quiet.stdout, loud.stdout);
    assert!(quiet.stderr.is_empty());
    assert!(loud.stderr.contains("exit 0"));
}

#[test]
fn unknown_flags_exit_two() {
    assert_eq!(run(&["cable", "--p", "2"]).code, 2, "missing required flags");
    assert_eq!(run(&["no-such-command"]).code, 2);
}
