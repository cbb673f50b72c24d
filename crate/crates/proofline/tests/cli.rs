mod common;

use std::path::Path;
use std::process::{Command, Output};

use common::*;
use proofline::orchestrator::artifact_tree;
use proofline::run_state::{CrashPoint, FaultPlan};

fn proofline(args: &[&str], cwd: Option<&Path>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_proofline"));
    cmd.args(args).env("NO_COLOR", "1").env("PROOFLINE_OFFLINE", "1");
    if let Some(dir) = cwd {
        cmd.current_dir(dir);
    }
    cmd.output().unwrap()
}

fn text(bytes: &[u8]) -> String {
    String::from_utf8_lossy(bytes).into_owned()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn prove(name: &str, out: &Path, extra: &[&str]) -> Output {
    let problem = scenario("files/problem.md");
    let config = scenario(name).join("config.yaml");
    let mut args = vec!["prove", "--problem", s(&problem), "--config", s(&config), "--out", s(out)];
    args.extend_from_slice(extra);
    proofline(&args, None)
}

#[test]
fn prove_exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("pass");
    let pass = prove("always_pass", &out, &[]);
    assert_eq!(pass.status.code(), Some(0), "{}", text(&pass.stderr));
    assert!(text(&pass.stdout).contains("round_001/prover_001/proof.md"));

    let fail = prove("always_fail", &tmp.path().join("fail"), &[]);
    assert_eq!(fail.status.code(), Some(2), "{}", text(&fail.stderr));
    assert!(text(&fail.stdout).contains("exhausted"));
}

#[test]
fn prove_mode_flag_overrides_config() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("run");
    let run = prove("always_pass", &out, &["--mode", "decomposition"]);
    assert_eq!(run.status.code(), Some(0), "{}", text(&run.stderr));
    assert!(out.join("attempt_001/plan_rev_000/plan.yaml").is_file());
}

#[test]
fn prove_with_missing_problem_names_it() {
    let tmp = tempfile::tempdir().unwrap();
    let missing = tmp.path().join("no_such_problem.md");
    let config = scenario("always_pass").join("config.yaml");
    let out = tmp.path().join("run");
    let run = proofline(&["prove", "--problem", s(&missing), "--config", s(&config), "--out", s(&out)], None);
    assert_eq!(run.status.code(), Some(1));
    assert!(text(&run.stderr).contains(s(&missing)));
}

#[test]
fn bad_config_names_the_field() {
    let tmp = tempfile::tempdir().unwrap();
    let config = tmp.path().join("bad.yaml");
    std::fs::write(&config, "n_provers: 0\nbackends:\n  default: {kind: scripted, script: x}\n").unwrap();
    let problem = scenario("files/problem.md");
    let out = tmp.path().join("run");
    let run = proofline(&["prove", "--problem", s(&problem), "--config", s(&config), "--out", s(&out)], None);
    assert_eq!(run.status.code(), Some(1));
    assert!(text(&run.stderr).contains("n_provers"), "{}", text(&run.stderr));
}

#[test]
fn usage_errors_print_the_synopsis() {
    let run = proofline(&["prove", "--problem"], None);
    assert_eq!(run.status.code(), Some(1));
    assert!(text(&run.stderr).contains("Usage"));
}

#[test]
fn resume_finishes_an_interrupted_run() {
    let tmp = tempfile::tempdir().unwrap();
    assert!(run_with_crash("c1", tmp.path(), FaultPlan { after_writes: 9, point: CrashPoint::AfterContent }).is_err());
    let run = proofline(&["resume", s(tmp.path())], None);
    assert_eq!(run.status.code(), Some(0), "{}", text(&run.stderr));
    assert_eq!(artifact_tree(tmp.path()), artifact_tree(run_scenario("c1", None).dir.path()));
}

#[test]
fn resume_of_a_plain_directory_fails() {
    let tmp = tempfile::tempdir().unwrap();
    let run = proofline(&["resume", s(tmp.path())], None);
    assert_eq!(run.status.code(), Some(1));
    assert!(text(&run.stderr).contains("not a run directory"));
}

#[test]
fn status_mid_round_two_and_never_writes() {
    let reference = run_scenario("two_rounds", None);
    let total = reference.run().completed_artifacts().len();
    let (dir, out) = (0..total)
        .find_map(|after_writes| {
            let dir = tempfile::tempdir().unwrap();
            let _ = run_with_crash("two_rounds", dir.path(), FaultPlan { after_writes, point: CrashPoint::BeforeContent });
            let out = proofline(&["status", s(dir.path())], None);
            let stdout = text(&out.stdout);
            stdout.contains("structural_verification pending at round 2").then_some((dir, out))
        })
        .expect("a crash point leaving round 2 structural verification pending");
    assert_eq!(out.status.code(), Some(0));
    let stdout = text(&out.stdout);
    assert!(stdout.contains("round: 2 of 3"), "{stdout}");

    let before = artifact_tree(dir.path());
    let events = std::fs::read(dir.path().join("events.log")).unwrap();
    proofline(&["status", s(dir.path())], None);
    assert_eq!(artifact_tree(dir.path()), before);
    assert_eq!(std::fs::read(dir.path().join("events.log")).unwrap(), events);
}

#[test]
fn status_shows_budget_counters() {
    let tmp = tempfile::tempdir().unwrap();
    let _ = run_with_crash("c2", tmp.path(), FaultPlan { after_writes: 8, point: CrashPoint::BeforeContent });
    let out = proofline(&["status", s(tmp.path())], None);
    assert_eq!(out.status.code(), Some(0));
    let stdout = text(&out.stdout);
    assert!(stdout.contains("budget: decomposition 1/3, plan revision 0/2, proof 2/3"), "{stdout}");

    let done = run_scenario("c2", None);
    let out = text(&proofline(&["status", s(done.dir.path())], None).stdout);
    assert!(out.contains("outcome: proved"), "{out}");
    assert!(out.contains("tally: attempts=1 revisions=2 proofs=5"), "{out}");
}

#[test]
fn verify_easy_pass_prints_the_report_path() {
    let tmp = tempfile::tempdir().unwrap();
    let proof = tmp.path().join("proof.md");
    std::fs::copy(scenario("files/proof_good.md"), &proof).unwrap();
    let config = scenario("standalone_easy").join("config.yaml");
    let problem = scenario("files/problem.md");
    let out = proofline(&["verify", "--problem", s(&problem), "--proof", s(&proof), "--config", s(&config)], None);
    assert_eq!(out.status.code(), Some(0), "{}", text(&out.stderr));
    let report = tmp.path().join("proof.md.report.yaml");
    assert!(text(&out.stdout).contains(s(&report)));
    assert!(text(&out.stdout).contains("PASS (EASY)"));
    let stored = proofline::report_file::report_from_yaml(&std::fs::read_to_string(report).unwrap()).unwrap();
    assert!(stored.passed());
}

#[test]
fn verify_hard_fail_exits_two() {
    let tmp = tempfile::tempdir().unwrap();
    let report = tmp.path().join("r.yaml");
    let out = proofline(
        &[
            "verify",
            "--problem",
            s(&scenario("files/problem.md")),
            "--proof",
            s(&scenario("files/proof_good.md")),
            "--config",
            s(&scenario("standalone_hard").join("config.yaml")),
            "--report",
            s(&report),
        ],
        None,
    );
    assert_eq!(out.status.code(), Some(2), "{}", text(&out.stderr));
    assert!(text(&out.stdout).contains("FAIL (HARD)"));
    assert!(report.is_file());
}

#[test]
fn verify_uses_the_working_directory_config() {
    let tmp = tempfile::tempdir().unwrap();
    let problem = scenario("files/problem.md");
    let proof = tmp.path().join("p.md");
    std::fs::copy(scenario("files/proof_good.md"), &proof).unwrap();
    let missing = proofline(&["verify", "--problem", s(&problem), "--proof", s(&proof)], Some(tmp.path()));
    assert_eq!(missing.status.code(), Some(1));
    assert!(text(&missing.stderr).contains("proofline.yaml"));

    let script = scenario("standalone_easy");
    std::fs::write(
        tmp.path().join("proofline.yaml"),
        format!("backends:\n  default:\n    kind: scripted\n    script: {}\n", s(&script)),
    )
    .unwrap();
    let found = proofline(&["verify", "--problem", s(&problem), "--proof", s(&proof)], Some(tmp.path()));
    assert_eq!(found.status.code(), Some(0), "{}", text(&found.stderr));
}

#[test]
fn init_writes_a_commented_config() {
    let tmp = tempfile::tempdir().unwrap();
    let config = tmp.path().join("proofline.yaml");
    let out = proofline(&["init", "--out", s(&config)], None);
    assert_eq!(out.status.code(), Some(0));
    assert!(std::fs::read_to_string(&config).unwrap().starts_with("# proofline"));
    let again = proofline(&["init", "--out", s(&config)], None);
    assert_eq!(again.status.code(), Some(1));
}

#[test]
fn no_colour_codes_when_piped() {
    let tmp = tempfile::tempdir().unwrap();
    let out = prove("always_pass", &tmp.path().join("run"), &[]);
    assert!(!out.stdout.contains(&0x1b));
}
