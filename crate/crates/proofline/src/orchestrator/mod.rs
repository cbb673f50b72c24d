//! Run driver for both proof modes, resume and progress scanning.
//!
//! A run is replayed from the top every time it is driven. Each step first
//! looks for its completed artifact and reuses it; only missing steps call an
//! agent. Resuming is therefore the same as running again, and scanning is a
//! replay that stops at the first missing artifact instead of calling agents.
//!
//! Each agent call gets the role's next ordinal in canonical run order,
//! whether the step executes or is replayed, so a scripted backend answers a
//! resumed run exactly as it answered the original.

mod decomposition;
pub mod layout;
mod select;
mod simple;
mod steering;

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::Path;
use std::sync::Mutex;
use std::thread;

use proofline_core::{
    AgentRole, AttemptTally, Coordinates, InputKind, PipelineStep, ProgressPoint, RetryBudget, RunMode,
    VerificationReport,
};
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::agent::{AgentCall, AgentError, AgentResult, Agents};
use crate::config::{parse_config, ConfigError, RunConfig};
use crate::report_file::report_from_yaml;
use crate::run_state::{RunDir, StorageError};
use crate::verification::CheckOptions;

pub use select::{
    decide_verdict, fallback_choice, parse_selection, reports_text, select_best, Candidate, RoundVerdict, Selection,
    SelectionMethod, VerdictRecord,
};
pub use steering::{read_steering, SteeringInput};

pub const CONFIG_FILE: &str = "config.yaml";
pub const PROBLEM_FILE: &str = "problem.md";
pub const SUMMARY_FILE: &str = "summary.md";

/// Contents of a `failure.yaml` left where an agent's artifact should be.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FailureRecord {
    pub role: String,
    pub status: String,
    pub message: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutcomeKind {
    Proved,
    Exhausted,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunOutcome {
    pub kind: OutcomeKind,
    pub mode: RunMode,
    /// Simple mode: rounds started.
    pub rounds: u32,
    /// Run-relative path of the accepted proof.
    pub accepted: Option<String>,
    /// Decomposition mode: the budget of every proof attempt, in order.
    pub budget_history: Vec<RetryBudget>,
    /// Decomposition mode: the budget when the run ended.
    pub final_budget: Option<RetryBudget>,
}

impl RunOutcome {
    pub fn tally(&self) -> AttemptTally {
        AttemptTally::from_history(&self.budget_history)
    }

    pub fn proved(&self) -> bool {
        self.kind == OutcomeKind::Proved
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum RunError {
    #[error(transparent)]
    Storage(#[from] StorageError),
    #[error(transparent)]
    Agent(#[from] AgentError),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{role} failed and the run cannot continue without it: {message}")]
    Backend { role: AgentRole, message: String },
    #[error("corrupt run directory at {path}: {reason}")]
    CorruptLayout { path: String, reason: String },
    #[error("{0} is not a run directory (no completed config.yaml and problem.md)")]
    NotARunDir(String),
    #[error("{0} differs from the one the run was started with")]
    Mismatch(&'static str),
}

/// Why a drive stopped before the end of the run.
#[derive(Debug)]
pub(crate) enum Stop {
    Pending(ProgressPoint),
    Error(RunError),
}

impl From<StorageError> for Stop {
    fn from(e: StorageError) -> Self {
        Self::Error(RunError::Storage(e))
    }
}

impl From<AgentError> for Stop {
    fn from(e: AgentError) -> Self {
        Self::Error(RunError::Agent(e))
    }
}

impl From<RunError> for Stop {
    fn from(e: RunError) -> Self {
        Self::Error(e)
    }
}

pub(crate) fn corrupt(path: &str, reason: impl Into<String>) -> Stop {
    Stop::Error(RunError::CorruptLayout { path: path.to_string(), reason: reason.into() })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum DriveMode {
    Execute,
    Scan,
}

type Produce<'a> = Box<dyn FnOnce(&Agents) -> Result<(String, String), Stop> + Send + 'a>;

/// A step that persists one artifact. `candidates` are the alternative
/// artifacts that complete it (e.g. `proof.md` or `failure.yaml`).
pub(crate) struct Job<'a> {
    pub candidates: Vec<String>,
    pub point: ProgressPoint,
    pub produce: Produce<'a>,
}

/// A completed step: which candidate, its content, and whether this drive wrote it.
#[derive(Debug, Clone)]
pub(crate) struct Done {
    pub path: String,
    pub content: String,
    pub fresh: bool,
}

pub(crate) struct Driver<'a> {
    pub run: &'a RunDir,
    pub config: &'a RunConfig,
    pub problem: &'a str,
    pub options: CheckOptions,
    agents: Option<&'a Agents>,
    mode: DriveMode,
    consumed: Mutex<BTreeSet<String>>,
    ordinals: Mutex<BTreeMap<AgentRole, u32>>,
}

impl<'a> Driver<'a> {
    fn new(run: &'a RunDir, config: &'a RunConfig, problem: &'a str, agents: Option<&'a Agents>) -> Self {
        let mode = if agents.is_some() { DriveMode::Execute } else { DriveMode::Scan };
        let consumed = [CONFIG_FILE, PROBLEM_FILE].into_iter().map(String::from).collect();
        Self {
            run,
            config,
            problem,
            options: CheckOptions::from_config(config),
            agents,
            mode,
            consumed: Mutex::new(consumed),
            ordinals: Mutex::new(BTreeMap::new()),
        }
    }

    pub fn point(&self, coordinates: Coordinates, next_step: PipelineStep) -> ProgressPoint {
        ProgressPoint { mode: self.config.mode, coordinates, next_step }
    }

    pub fn next_ordinal(&self, role: AgentRole) -> u32 {
        let mut ordinals = self.ordinals.lock().unwrap();
        let n = ordinals.entry(role).or_insert(0);
        *n += 1;
        *n
    }

    pub fn event(&self, event: serde_json::Value) {
        if self.mode == DriveMode::Execute {
            self.run.append_event(event);
        }
    }

    fn completed(&self, candidates: &[String]) -> Result<Option<Done>, Stop> {
        for path in candidates {
            if let Some(content) = self.run.read_complete(path)? {
                self.consumed.lock().unwrap().insert(path.clone());
                return Ok(Some(Done { path: path.clone(), content, fresh: false }));
            }
        }
        Ok(None)
    }

    fn persist(&self, path: String, content: String) -> Result<Done, Stop> {
        self.run.persist_artifact(&path, content.as_bytes())?;
        self.consumed.lock().unwrap().insert(path.clone());
        self.event(json!({"event": "artifact", "path": path}));
        Ok(Done { path, content, fresh: true })
    }

    pub fn step(&self, job: Job<'_>) -> Result<Done, Stop> {
        Ok(self.fan_out(vec![job])?.remove(0))
    }

    /// Runs independent steps, up to `parallelism` at a time. In scan mode
    /// every completed sibling is consumed before the earliest pending one is
    /// reported.
    pub fn fan_out(&self, jobs: Vec<Job<'_>>) -> Result<Vec<Done>, Stop> {
        let mut results: Vec<Option<Done>> = Vec::with_capacity(jobs.len());
        let mut pending = Vec::new();
        for (i, job) in jobs.into_iter().enumerate() {
            match self.completed(&job.candidates)? {
                Some(done) => results.push(Some(done)),
                None => {
                    results.push(None);
                    pending.push((i, job));
                }
            }
        }
        if let Some((_, first)) = pending.first() {
            let Some(agents) = self.agents else { return Err(Stop::Pending(first.point)) };
            let width = self.config.parallelism.max(1) as usize;
            let mut outcomes: Vec<(usize, Result<Done, Stop>)> = Vec::new();
            let mut queue = pending.into_iter();
            loop {
                let batch: Vec<(usize, Job<'_>)> = queue.by_ref().take(width).collect();
                if batch.is_empty() {
                    break;
                }
                let done: Vec<(usize, Result<Done, Stop>)> = thread::scope(|scope| {
                    let handles: Vec<_> = batch
                        .into_iter()
                        .map(|(i, job)| {
                            (i, scope.spawn(move || (job.produce)(agents).and_then(|(p, c)| self.persist(p, c))))
                        })
                        .collect();
                    handles.into_iter().map(|(i, h)| (i, h.join().expect("step thread panicked"))).collect()
                });
                outcomes.extend(done);
            }
            let mut first_error = None;
            for (i, outcome) in outcomes {
                match outcome {
                    Ok(done) => results[i] = Some(done),
                    Err(e) => {
                        first_error.get_or_insert((i, e));
                    }
                }
            }
            if let Some((_, e)) = first_error {
                return Err(e);
            }
        }
        Ok(results.into_iter().map(|r| r.expect("every job resolved")).collect())
    }

    pub fn note_call(&self, role: AgentRole, call_index: Option<u32>) {
        self.event(json!({"event": "agent_call", "role": role.name(), "call": call_index}));
    }

    /// Calls an agent and logs the call.
    pub fn call(&self, agents: &Agents, call: AgentCall) -> Result<AgentResult, AgentError> {
        self.note_call(call.role, call.call_index);
        agents.call(call)
    }

    /// Runs an agent whose failure is recoverable. A crash, timeout or missing
    /// output becomes a failure record at `failure_path` instead of stopping
    /// the run. The expected output is named by the last segment of `path`.
    pub fn attempt_output(
        &self,
        agents: &Agents,
        call: AgentCall,
        path: String,
        failure_path: String,
    ) -> Result<(String, String), Stop> {
        let role = call.role;
        let file = path.rsplit('/').next().unwrap_or(&path).to_string();
        let failure = |status: &str, message: String| {
            self.event(json!({"event": "agent_failure", "role": role.name(), "path": failure_path, "status": status}));
            let record = FailureRecord { role: role.name().to_string(), status: status.to_string(), message };
            (failure_path.clone(), serde_yaml::to_string(&record).expect("record serialises"))
        };
        match self.call(agents, call) {
            Ok(result) if result.ok() => match result.file(&file) {
                Some(text) => Ok((path.clone(), text.to_string())),
                None => Ok(failure("crashed", format!("no {file}"))),
            },
            Ok(result) => {
                let status = match result.exit_status {
                    crate::agent::ExitStatus::Timeout => "timeout",
                    _ => "crashed",
                };
                Ok(failure(status, format!("agent exited with status {status}")))
            }
            Err(e) if e.is_agent_failure() => Ok(failure("crashed", e.to_string())),
            Err(e) => Err(e.into()),
        }
    }

    pub fn attempt_proof(
        &self,
        agents: &Agents,
        call: AgentCall,
        proof_path: String,
        failure_path: String,
    ) -> Result<(String, String), Stop> {
        self.attempt_output(agents, call, proof_path, failure_path)
    }

    pub fn report(&self, done: &Done) -> Result<VerificationReport, Stop> {
        report_from_yaml(&done.content).map_err(|e| corrupt(&done.path, e.to_string()))
    }

    pub fn hints_and_rules(&self) -> (Option<String>, Vec<String>) {
        let steering = read_steering(self.run.root());
        for warning in &steering.warnings {
            self.event(json!({"event": "steering_warning", "message": warning.message}));
        }
        let mut rules = self.config.rules.clone();
        rules.extend(steering.extra_rules);
        ((!steering.hints.is_empty()).then_some(steering.hints), rules)
    }

    /// Literature survey, then the optional brainstorm fan-out. Returns the
    /// survey and the joined strategy notes.
    pub fn stage0(&self) -> Result<(String, Option<String>), Stop> {
        let (hints, _) = self.hints_and_rules();
        let ordinal = self.next_ordinal(AgentRole::LiteratureSurveyor);
        let survey = self.step(Job {
            candidates: vec![layout::SURVEY.to_string()],
            point: self.point(Coordinates::Run, PipelineStep::Stage0Survey),
            produce: Box::new(|agents| {
                let call = AgentCall::new(AgentRole::LiteratureSurveyor)
                    .input(InputKind::Problem, self.problem)
                    .input_if(InputKind::Hints, hints.clone())
                    .at(ordinal);
                let text = self.required_output(agents, call, "survey.md")?;
                Ok((layout::SURVEY.to_string(), text))
            }),
        })?;
        if !self.config.brainstorm_enabled {
            return Ok((survey.content, None));
        }
        let jobs = (1..=self.config.brainstormers)
            .map(|i| {
                let ordinal = self.next_ordinal(AgentRole::Brainstormer);
                let path = layout::strategy(i);
                let survey = survey.content.clone();
                let hints = hints.clone();
                Job {
                    candidates: vec![path.clone()],
                    point: self.point(Coordinates::Slot { index: i }, PipelineStep::Brainstorm),
                    produce: Box::new(move |agents| {
                        let call = AgentCall::new(AgentRole::Brainstormer)
                            .input(InputKind::Problem, self.problem)
                            .input(InputKind::LiteratureSurvey, survey)
                            .input_if(InputKind::Hints, hints)
                            .at(ordinal)
                            .slot(i);
                        Ok((path, self.required_output(agents, call, "strategy.md")?))
                    }),
                }
            })
            .collect();
        let strategies = self
            .fan_out(jobs)?
            .into_iter()
            .enumerate()
            .map(|(i, d)| format!("### Strategy {}\n\n{}\n", i + 1, d.content.trim_end()))
            .collect::<Vec<_>>()
            .join("\n");
        Ok((survey.content, Some(strategies)))
    }

    /// Calls a role that has no degraded path; any failure stops the run.
    pub fn required_output(&self, agents: &Agents, call: AgentCall, file: &str) -> Result<String, Stop> {
        let role = call.role;
        let fail = |message: String| Stop::Error(RunError::Backend { role, message });
        match self.call(agents, call) {
            Ok(result) if result.ok() => {
                result.file(file).map(str::to_string).ok_or_else(|| fail(format!("no {file}")))
            }
            Ok(result) => Err(fail(format!("exit status {:?}", result.exit_status))),
            Err(e) if e.is_agent_failure() => Err(fail(e.to_string())),
            Err(e) => Err(e.into()),
        }
    }

    pub fn summary(&self, digest: String) -> Result<(), Stop> {
        let ordinal = self.next_ordinal(AgentRole::Summarizer);
        self.step(Job {
            candidates: vec![SUMMARY_FILE.to_string()],
            point: self.point(Coordinates::Run, PipelineStep::Summary),
            produce: Box::new(move |agents| {
                let call = AgentCall::new(AgentRole::Summarizer)
                    .input(InputKind::Problem, self.problem)
                    .input(InputKind::RunDigest, digest)
                    .at(ordinal);
                Ok((SUMMARY_FILE.to_string(), self.required_output(agents, call, "summary.md")?))
            }),
        })?;
        Ok(())
    }

    fn drive(&self) -> Result<RunOutcome, Stop> {
        match self.config.mode {
            RunMode::Simple => simple::run(self),
            RunMode::Decomposition => decomposition::run(self),
        }
    }

    /// Markers the replay never reached, or markers without content.
    fn layout_check(&self) -> Result<(), RunError> {
        let consumed = self.consumed.lock().unwrap();
        for path in self.run.completed_artifacts() {
            if !consumed.contains(&path) {
                return Err(RunError::CorruptLayout { path, reason: "completed artifact outside the run's step order".into() });
            }
            if !self.run.path(&path).is_file() {
                return Err(RunError::CorruptLayout { path, reason: "marker without artifact".into() });
            }
        }
        Ok(())
    }
}

pub(crate) fn outcome_digest(outcome: &RunOutcome) -> String {
    let mut out = format!("mode: {}\n", outcome.mode.name());
    match outcome.kind {
        OutcomeKind::Proved => out.push_str("outcome: proved\n"),
        OutcomeKind::Exhausted => out.push_str("outcome: budget exhausted\n"),
    }
    match outcome.mode {
        RunMode::Simple => out.push_str(&format!("rounds: {}\n", outcome.rounds)),
        RunMode::Decomposition => {
            let t = outcome.tally();
            out.push_str(&format!(
                "proof attempts: {}\ndecompositions: {}, plan versions in the last: {}, proofs in the last: {}\n",
                outcome.budget_history.len(),
                t.attempts,
                t.revisions,
                t.proofs
            ));
        }
    }
    if let Some(path) = &outcome.accepted {
        out.push_str(&format!("accepted proof: {path}\n"));
    }
    out
}

/// Writes `config.yaml` and `problem.md` into a new run directory, or checks
/// that an existing run was started with the same ones.
pub fn prepare_run(run: &RunDir, config: &RunConfig, problem: &str) -> Result<(), RunError> {
    let config_yaml = config.to_yaml();
    for (path, content, what) in [(CONFIG_FILE, config_yaml.as_str(), "config"), (PROBLEM_FILE, problem, "problem")] {
        match run.read_complete(path)? {
            Some(existing) if existing == content => {}
            Some(_) => return Err(RunError::Mismatch(what)),
            None => run.persist_artifact(path, content.as_bytes())?,
        }
    }
    Ok(())
}

/// The config and problem a run directory was started with.
pub fn load_run(run: &RunDir) -> Result<(RunConfig, String), RunError> {
    let not_a_run = || RunError::NotARunDir(run.root().display().to_string());
    let raw = run.read_complete(CONFIG_FILE)?.ok_or_else(not_a_run)?;
    let problem = run.read_complete(PROBLEM_FILE)?.ok_or_else(not_a_run)?;
    let config = parse_config(&raw, run.root())?;
    Ok((config, problem))
}

/// Drives a prepared run to its end with the given agents, under the run lock.
pub fn execute(run: &RunDir, config: &RunConfig, problem: &str, agents: &Agents) -> Result<RunOutcome, RunError> {
    let _lock = run.lock()?;
    let driver = Driver::new(run, config, problem, Some(agents));
    match driver.drive() {
        Ok(outcome) => {
            driver.event(json!({"event": "outcome", "kind": outcome.kind, "accepted": outcome.accepted}));
            Ok(outcome)
        }
        Err(Stop::Error(e)) => Err(e),
        Err(Stop::Pending(point)) => unreachable!("execute never leaves {point} pending"),
    }
}

fn start(problem: &str, config: &RunConfig, run_dir: &Path, mode: RunMode) -> Result<RunOutcome, RunError> {
    let mut config = config.clone();
    config.mode = mode;
    let run = RunDir::new(run_dir);
    prepare_run(&run, &config, problem)?;
    let agents = Agents::from_config(&config)?;
    execute(&run, &config, problem, &agents)
}

pub fn run_simple_mode(problem: &str, config: &RunConfig, run_dir: &Path) -> Result<RunOutcome, RunError> {
    start(problem, config, run_dir, RunMode::Simple)
}

pub fn run_decomposition_mode(problem: &str, config: &RunConfig, run_dir: &Path) -> Result<RunOutcome, RunError> {
    start(problem, config, run_dir, RunMode::Decomposition)
}

/// Continues a run from wherever it stopped. A finished run makes no agent
/// calls and reports its outcome again.
pub fn resume(run_dir: &Path) -> Result<RunOutcome, RunError> {
    let run = RunDir::new(run_dir);
    let (config, problem) = load_run(&run)?;
    let agents = Agents::from_config(&config)?;
    execute(&run, &config, &problem, &agents)
}

/// Progress of a run directory and, if finished, its outcome. Never writes.
pub fn scan_run(run: &RunDir) -> Result<(ProgressPoint, Option<RunOutcome>), RunError> {
    let (config, problem) = load_run(run)?;
    let driver = Driver::new(run, &config, &problem, None);
    let result = match driver.drive() {
        Ok(outcome) => (driver.point(Coordinates::Run, PipelineStep::Complete), Some(outcome)),
        Err(Stop::Pending(point)) => (point, None),
        Err(Stop::Error(RunError::Storage(e))) => {
            return Err(RunError::CorruptLayout { path: run.root().display().to_string(), reason: e.to_string() })
        }
        Err(Stop::Error(e)) => return Err(e),
    };
    driver.layout_check()?;
    Ok(result)
}

pub fn scan_progress(run_dir: &Path) -> Result<ProgressPoint, RunError> {
    scan_run(&RunDir::new(run_dir)).map(|(point, _)| point)
}

/// Every file of a run directory except the event log and lock, for
/// byte-level comparisons between runs.
pub fn artifact_tree(run_dir: &Path) -> BTreeMap<String, Vec<u8>> {
    fn walk(dir: &Path, prefix: &str, out: &mut BTreeMap<String, Vec<u8>>) {
        let Ok(entries) = fs::read_dir(dir) else { return };
        for entry in entries.flatten() {
            let name = entry.file_name().to_string_lossy().into_owned();
            let rel = if prefix.is_empty() { name.clone() } else { format!("{prefix}/{name}") };
            if entry.path().is_dir() {
                walk(&entry.path(), &rel, out);
            } else if rel != crate::run_state::EVENTS_FILE && rel != crate::run_state::LOCK_FILE {
                out.insert(rel, fs::read(entry.path()).unwrap_or_default());
            }
        }
    }
    let mut out = BTreeMap::new();
    walk(run_dir, "", &mut out);
    out
}
