use std::path::PathBuf;
use std::process::Command;

use seqc_cli::{run, EXIT_FAILURE, EXIT_FINDINGS, EXIT_OK, TEMPLATE_PATH_VAR};

fn fixture(rel: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../fixtures")
        .join(rel)
        .to_string_lossy()
        .into_owned()
}

struct Outcome {
    code: i32,
    stdout: String,
    stderr: String,
}

fn seqc(args: &[&str]) -> Outcome {
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let argv = std::iter::once("seqc").chain(args.iter().copied());
    let code = run(argv, &mut out, &mut err);
    Outcome {
        code,
        stdout: String::from_utf8(out).unwrap(),
        stderr: String::from_utf8(err).unwrap(),
    }
}

#[test]
fn validate_exit_codes() {
    let cases = [
        ("generic", "fork_join", EXIT_OK),
        ("vacuum", "vacuum_parallel", EXIT_FINDINGS),
        ("vacuum", "vacuum_ordered", EXIT_OK),
        ("service_robot", "grasp_parallel", EXIT_FINDINGS),
        ("nxt", "nxt_braitenberg", EXIT_OK),
    ];
    for (dsl, program, code) in cases {
        let dsl = fixture(&format!("dsl/{dsl}.xml"));
        let o = seqc(&[
            "validate",
            "--dsl",
            &dsl,
            &fixture(&format!("programs/{program}.xml")),
        ]);
        assert_eq!(o.code, code, "{program}: {}{}", o.stdout, o.stderr);
    }
}

#[test]
fn validate_json_lists_the_mutex_pair() {
    let dsl = fixture("dsl/vacuum.xml");
    let o = seqc(&[
        "validate",
        "--dsl",
        &dsl,
        &fixture("programs/vacuum_parallel.xml"),
        "--json",
    ]);
    assert_eq!(o.code, EXIT_FINDINGS);
    let v: serde_json::Value = serde_json::from_str(&o.stdout).unwrap();
    let text = v.to_string();
    assert!(
        text.contains("MutexViolation") && text.contains("Discharge1") && text.contains("MoveFwd1"),
        "{text}"
    );
}

#[test]
fn missing_inputs_are_failures() {
    let o = seqc(&[
        "validate",
        "--dsl",
        "/nonexistent.xml",
        &fixture("programs/fork_join.xml"),
    ]);
    assert_eq!(o.code, EXIT_FAILURE);
    assert!(o.stderr.starts_with("seqc: "), "{}", o.stderr);
    assert_eq!(seqc(&["frobnicate"]).code, EXIT_FAILURE);
    assert_eq!(seqc(&["--help"]).code, EXIT_OK);
}

#[test]
fn malformed_xml_reports_a_line() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.xml");
    std::fs::write(
        &bad,
        "<Program name=\"x\" robotClass=\"Generic\">\n<Actions>\n</Program>\n",
    )
    .unwrap();
    let o = seqc(&[
        "validate",
        "--dsl",
        &fixture("dsl/generic.xml"),
        bad.to_str().unwrap(),
    ]);
    assert_eq!(o.code, EXIT_FAILURE);
    assert!(o.stderr.contains("bad.xml:"), "{}", o.stderr);
}

#[test]
fn simulate_fork_join() {
    let dsl = fixture("dsl/generic.xml");
    let o = seqc(&[
        "simulate",
        "--dsl",
        &dsl,
        &fixture("programs/fork_join.xml"),
    ]);
    assert_eq!(o.code, EXIT_OK, "{}", o.stderr);
    assert!(o.stdout.contains("makespan: 3"), "{}", o.stdout);

    let o = seqc(&[
        "simulate",
        "--dsl",
        &dsl,
        &fixture("programs/fork_join.xml"),
        "--duration",
        "C=5",
    ]);
    assert!(o.stdout.contains("makespan: 6"), "{}", o.stdout);

    let o = seqc(&[
        "simulate",
        "--dsl",
        &dsl,
        &fixture("programs/fork_join.xml"),
        "--duration",
        "Z=5",
    ]);
    assert_eq!(o.code, EXIT_FAILURE);
}

#[test]
fn simulate_writes_trace_and_reads_duration_files() {
    let dir = tempfile::tempdir().unwrap();
    let durations = dir.path().join("d.json");
    std::fs::write(&durations, r#"{"default": 2, "durations": {"E": 4}}"#).unwrap();
    let trace = dir.path().join("trace.json");
    let o = seqc(&[
        "simulate",
        "--dsl",
        &fixture("dsl/generic.xml"),
        &fixture("programs/fork_join.xml"),
        "--durations",
        durations.to_str().unwrap(),
        "--trace",
        trace.to_str().unwrap(),
    ]);
    assert_eq!(o.code, EXIT_OK, "{}", o.stderr);
    let v: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&trace).unwrap()).unwrap();
    assert_eq!(v["makespan"], 8);
    assert_eq!(v["events"].as_array().unwrap().len(), 10);
}

#[test]
fn simulate_refuses_invalid_programs_unless_forced() {
    let dsl = fixture("dsl/vacuum.xml");
    let program = fixture("programs/vacuum_parallel.xml");
    assert_eq!(
        seqc(&["simulate", "--dsl", &dsl, &program]).code,
        EXIT_FINDINGS
    );
    let o = seqc(&["simulate", "--dsl", &dsl, &program, "--force"]);
    assert_eq!(o.code, EXIT_OK, "{}", o.stderr);
    assert!(o.stdout.contains("makespan: 3"), "{}", o.stdout);
    assert!(
        o.stdout.contains("Discharge1  cleaner  |#..|"),
        "{}",
        o.stdout
    );
}

#[test]
fn graph_dot() {
    let o = seqc(&["graph", &fixture("programs/fork_join.xml")]);
    assert_eq!(o.code, EXIT_OK);
    assert!(o.stdout.starts_with("digraph ForkJoin {"));
    assert_eq!(o.stdout.matches(" -> ").count(), 5);
}

#[test]
fn generate_writes_once_and_refuses_to_overwrite() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let args = [
        "generate",
        "--dsl",
        &fixture("dsl/service_robot.xml"),
        &fixture("programs/grasp.xml"),
        "--templates",
        &fixture("generators/service.xml"),
        "--out",
        out,
    ];
    let o = seqc(&args);
    assert_eq!(o.code, EXIT_OK, "{}", o.stderr);
    let text = std::fs::read_to_string(dir.path().join("GraspDemo.cs")).unwrap();
    assert!(text.contains("ExecutionElement MoveMani ="), "{text}");
    assert_eq!(seqc(&args).code, EXIT_FAILURE);
    let mut forced = args.to_vec();
    forced.push("--force");
    assert_eq!(seqc(&forced).code, EXIT_OK);
}

#[test]
fn generate_rejects_invalid_programs() {
    let dir = tempfile::tempdir().unwrap();
    let o = seqc(&[
        "generate",
        "--dsl",
        &fixture("dsl/service_robot.xml"),
        &fixture("programs/grasp_parallel.xml"),
        "--templates",
        &fixture("generators/service.xml"),
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(o.code, EXIT_FINDINGS);
    assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 0);
}

#[test]
fn binary_uses_template_search_path() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("gen.xml");
    std::fs::write(
        &config,
        r#"<Generator><Main file="nxt/main.vt" output="out.txt"/>
  <ActionTemplate actionType="ReadSonar" file="nxt/read_sonar.vt"/>
  <ActionTemplate actionType="SetMotorSpeed" file="nxt/set_motor_speed.vt"/></Generator>"#,
    )
    .unwrap();
    let out = dir.path().join("out");
    let status = Command::new(env!("CARGO_BIN_EXE_seqc"))
        .args([
            "generate",
            "--dsl",
            &fixture("dsl/nxt.xml"),
            &fixture("programs/nxt_braitenberg.xml"),
        ])
        .arg("--templates")
        .arg(&config)
        .arg("--out")
        .arg(&out)
        .env(TEMPLATE_PATH_VAR, fixture("templates"))
        .output()
        .unwrap();
    assert!(
        status.status.success(),
        "{}",
        String::from_utf8_lossy(&status.stderr)
    );
    assert!(out.join("out.txt").is_file());

    let status = Command::new(env!("CARGO_BIN_EXE_seqc"))
        .args([
            "generate",
            "--dsl",
            &fixture("dsl/nxt.xml"),
            &fixture("programs/nxt_braitenberg.xml"),
        ])
        .arg("--templates")
        .arg(&config)
        .arg("--out")
        .arg(&out)
        .env_remove(TEMPLATE_PATH_VAR)
        .output()
        .unwrap();
    assert_eq!(status.status.code(), Some(EXIT_FAILURE));
}
