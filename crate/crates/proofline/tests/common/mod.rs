#![allow(dead_code)]

pub mod server;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use proofline::agent::RecordedRequest;
use proofline::agent::Agents;
use proofline::config::{load_config, BackendConfig, RunConfig};
use proofline::orchestrator::{execute, prepare_run, RunError, RunOutcome};
use proofline::run_state::{FaultPlan, RunDir};
use proofline_core::{AgentRole, RunMode};
use tempfile::TempDir;

pub fn scenario(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/scenarios").join(name)
}

pub fn problem() -> String {
    std::fs::read_to_string(scenario("files/problem.md")).unwrap()
}

pub fn config(name: &str) -> RunConfig {
    load_config(&scenario(name).join("config.yaml")).unwrap()
}

pub struct Finished {
    pub dir: TempDir,
    pub outcome: RunOutcome,
    pub log: Vec<RecordedRequest>,
}

impl Finished {
    pub fn run(&self) -> RunDir {
        RunDir::new(self.dir.path())
    }

    pub fn calls(&self, role: AgentRole) -> usize {
        self.log.iter().filter(|r| r.role == role).count()
    }

    pub fn events(&self, kind: &str) -> Vec<serde_json::Value> {
        self.run().read_events().into_iter().filter(|e| e["event"] == kind).collect()
    }
}

pub fn agents(config: &RunConfig) -> Agents {
    Agents::from_config(config).unwrap()
}

pub fn log(agents: &Agents) -> Vec<RecordedRequest> {
    agents.scripted().iter().flat_map(|s| s.log()).collect()
}

/// Runs a scenario to the end in a fresh directory, in the config's mode
/// unless `mode` overrides it.
pub fn run_scenario(name: &str, mode: Option<RunMode>) -> Finished {
    let mut config = config(name);
    if let Some(mode) = mode {
        config.mode = mode;
    }
    let dir = tempfile::tempdir().unwrap();
    let run = RunDir::new(dir.path());
    prepare_run(&run, &config, &problem()).unwrap();
    let agents = agents(&config);
    let outcome = execute(&run, &config, &problem(), &agents).unwrap();
    Finished { dir, outcome, log: log(&agents) }
}

/// Starts a scenario in `dir` with a crash after `after_writes` writes.
pub fn run_with_crash(name: &str, dir: &Path, faults: FaultPlan) -> Result<RunOutcome, RunError> {
    let config = config(name);
    let run = RunDir::new(dir).with_faults(faults);
    prepare_run(&run, &config, &problem())?;
    execute(&run, &config, &problem(), &agents(&config))
}

pub fn count_by_role(log: &[RecordedRequest]) -> BTreeMap<AgentRole, usize> {
    let mut counts = BTreeMap::new();
    for r in log {
        *counts.entry(r.role).or_insert(0) += 1;
    }
    counts
}

pub const ALL_SCENARIOS: [&str; 12] = [
    "always_pass",
    "always_fail",
    "fail_twice_then_pass",
    "c1",
    "c2",
    "c3",
    "fanout",
    "two_rounds",
    "prover_crash",
    "malformed_proof",
    "brainstorm",
    "plan_revisions",
];

/// Crashes a scenario at every write boundary, at both points inside a write,
/// then finishes it with `resume` (or a fresh start when not even the config
/// and problem made it to disk) and compares the artifact tree with an uninterrupted
/// run. Returns the number of crash runs checked.
pub fn check_resume_equivalence(name: &str) -> Result<usize, String> {
    use proofline::orchestrator::{artifact_tree, resume, CONFIG_FILE, PROBLEM_FILE};
    use proofline::run_state::CrashPoint;

    let reference = run_scenario(name, None);
    let expected = artifact_tree(reference.dir.path());
    let total_writes = reference.run().completed_artifacts().len();
    let mut checked = 0;
    for after_writes in 0..total_writes {
        for point in [CrashPoint::BeforeContent, CrashPoint::AfterContent] {
            let dir = tempfile::tempdir().unwrap();
            let faults = FaultPlan { after_writes, point };
            if run_with_crash(name, dir.path(), faults).is_ok() {
                return Err(format!("{name}: no crash after {after_writes} writes ({point:?})"));
            }
            let started = RunDir::new(dir.path());
            let finished = if started.is_complete(CONFIG_FILE) && started.is_complete(PROBLEM_FILE) {
                resume(dir.path())
            } else {
                run_with_crash(name, dir.path(), FaultPlan { after_writes: usize::MAX, point })
            };
            let outcome = finished.map_err(|e| format!("{name}: resume after {after_writes} writes ({point:?}): {e}"))?;
            if outcome != reference.outcome {
                return Err(format!("{name}: outcome differs after crash at {after_writes} ({point:?})"));
            }
            let got = artifact_tree(dir.path());
            if got != expected {
                let differing: Vec<&String> = expected
                    .keys()
                    .chain(got.keys())
                    .filter(|k| expected.get(*k) != got.get(*k))
                    .collect();
                return Err(format!("{name}: tree differs after crash at {after_writes} ({point:?}): {differing:?}"));
            }
            checked += 1;
        }
    }
    Ok(checked)
}

/// Every role served by `tests/stub/agent.sh` through the subprocess backend.
pub fn stub_config(mode: RunMode) -> RunConfig {
    let command = format!(
        "sh {} {{workspace}} {{prompt}} {}",
        scenario("../stub/agent.sh").display(),
        scenario("files").display()
    );
    let mut config = RunConfig::with_backend(BackendConfig::subprocess(command));
    config.mode = mode;
    config.n_provers = 2;
    config
}
