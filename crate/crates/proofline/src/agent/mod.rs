//! Agent invocation: requests, results, backends and the isolation check.
//!
//! Every call goes through [`Agents::call`], which checks the request against
//! the role's isolation matrix, renders the prompt, creates a fresh workspace
//! outside the run directory, runs the backend and collects the role's output
//! files from the workspace.

mod scripted;
mod subprocess;
mod template;

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Duration;

use proofline_core::{parse_verdict_line, AgentRole, InputKind};
use serde::{Deserialize, Serialize};

use crate::config::{BackendConfig, BackendKind, RunConfig};

pub use scripted::{RecordedRequest, ScriptError, ScriptedBackend};
pub use subprocess::SubprocessBackend;
pub use template::{render_prompt, Templates};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExitStatus {
    Ok,
    Timeout,
    Crashed,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AgentRequest {
    pub role: AgentRole,
    pub inputs: BTreeMap<InputKind, String>,
    pub workspace: PathBuf,
    pub timeout: Duration,
    pub network_allowed: bool,
    pub model: Option<String>,
    /// Position of this call among all calls to the role in canonical run
    /// order. Scripted backends key responses on it so a resumed run replays
    /// the same answers.
    pub call_index: Option<u32>,
}

/// What a backend reports about one run of the agent.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BackendRun {
    pub exit_status: ExitStatus,
    pub transcript: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AgentResult {
    pub output_files: BTreeMap<String, String>,
    pub transcript: String,
    pub exit_status: ExitStatus,
    /// Token of the last `VERDICT:` line in `decision.md`, if any.
    pub structured_verdict: Option<String>,
}

impl AgentResult {
    pub fn ok(&self) -> bool {
        self.exit_status == ExitStatus::Ok
    }

    pub fn file(&self, name: &str) -> Option<&str> {
        self.output_files.get(name).map(String::as_str)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum AgentError {
    #[error("no prompt template for role {0}")]
    MissingTemplate(AgentRole),
    #[error("prompt placeholder `{0}` has no value")]
    UnresolvedPlaceholder(String),
    #[error("role {role} may not receive {input:?}")]
    Isolation { role: AgentRole, input: InputKind },
    #[error("no backend configured for role {0}")]
    NoBackend(AgentRole),
    #[error("could not start agent: {0}")]
    SpawnFailure(String),
    #[error("{role} left no `{file}` in its workspace")]
    MissingRequiredOutput { role: AgentRole, file: String },
    #[error("workspace error: {0}")]
    Workspace(String),
    #[error(transparent)]
    Script(#[from] ScriptError),
}

impl AgentError {
    /// Failures of the agent itself, as opposed to configuration or programming errors.
    pub fn is_agent_failure(&self) -> bool {
        matches!(self, Self::SpawnFailure(_) | Self::MissingRequiredOutput { .. })
    }
}

pub trait AgentBackend: Send + Sync {
    fn label(&self) -> &str;
    /// Runs the agent with `prompt` inside `request.workspace`. Output files
    /// are left in the workspace.
    fn run(&self, request: &AgentRequest, prompt: &str) -> Result<BackendRun, AgentError>;
}

pub fn check_isolation(role: AgentRole, inputs: &BTreeMap<InputKind, String>) -> Result<(), AgentError> {
    match inputs.keys().find(|k| !role.allows(**k)) {
        Some(input) => Err(AgentError::Isolation { role, input: *input }),
        None => Ok(()),
    }
}

fn collect_outputs(role: AgentRole, workspace: &Path, run: BackendRun) -> Result<AgentResult, AgentError> {
    let mut output_files = BTreeMap::new();
    for name in role.required_outputs().iter().chain(role.optional_outputs()) {
        if let Ok(text) = fs::read_to_string(workspace.join(name)) {
            output_files.insert(name.to_string(), text);
        }
    }
    if run.exit_status == ExitStatus::Ok {
        for name in role.required_outputs() {
            if output_files.get(*name).is_none_or(|t| t.trim().is_empty()) {
                return Err(AgentError::MissingRequiredOutput { role, file: name.to_string() });
            }
        }
    }
    let structured_verdict =
        output_files.get("decision.md").and_then(|d| parse_verdict_line(d)).map(|l| l.token.to_string());
    Ok(AgentResult { output_files, transcript: run.transcript, exit_status: run.exit_status, structured_verdict })
}

/// Checks, renders and runs one request whose workspace already exists and is empty.
pub fn invoke(
    backend: &dyn AgentBackend,
    request: &AgentRequest,
    templates: &Templates,
) -> Result<AgentResult, AgentError> {
    check_isolation(request.role, &request.inputs)?;
    let prompt = render_prompt(request.role, request, templates)?;
    let empty = fs::read_dir(&request.workspace)
        .map_err(|e| AgentError::Workspace(e.to_string()))?
        .next()
        .is_none();
    if !empty {
        return Err(AgentError::Workspace(format!("{} is not empty", request.workspace.display())));
    }
    let run = backend.run(request, &prompt)?;
    collect_outputs(request.role, &request.workspace, run)
}

/// One agent call as the orchestrator describes it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AgentCall {
    pub role: AgentRole,
    pub inputs: BTreeMap<InputKind, String>,
    pub call_index: Option<u32>,
    /// 1-based fan-out slot, used to pick a model label.
    pub slot: Option<u32>,
}

impl AgentCall {
    pub fn new(role: AgentRole) -> Self {
        Self { role, inputs: BTreeMap::new(), call_index: None, slot: None }
    }

    pub fn input(mut self, kind: InputKind, text: impl Into<String>) -> Self {
        self.inputs.insert(kind, text.into());
        self
    }

    pub fn input_if(self, kind: InputKind, text: Option<String>) -> Self {
        match text {
            Some(text) if !text.is_empty() => self.input(kind, text),
            _ => self,
        }
    }

    pub fn at(mut self, call_index: u32) -> Self {
        self.call_index = Some(call_index);
        self
    }

    pub fn slot(mut self, slot: u32) -> Self {
        self.slot = Some(slot);
        self
    }
}

struct Binding {
    config: BackendConfig,
    backend: Arc<dyn AgentBackend>,
}

/// Backends bound per role plus the shared prompt templates.
pub struct Agents {
    bindings: BTreeMap<AgentRole, Binding>,
    scripted: Vec<Arc<ScriptedBackend>>,
    templates: Templates,
    network_allowed: bool,
}

impl Agents {
    pub fn from_config(config: &RunConfig) -> Result<Self, AgentError> {
        let mut bindings = BTreeMap::new();
        let mut scripted: BTreeMap<PathBuf, Arc<ScriptedBackend>> = BTreeMap::new();
        for role in AgentRole::ALL {
            let config = config.backend_for(role).ok_or(AgentError::NoBackend(role))?.clone();
            let backend: Arc<dyn AgentBackend> = match config.kind {
                BackendKind::Scripted => {
                    let path = config.script.clone().ok_or(AgentError::NoBackend(role))?;
                    let shared = match scripted.get(&path) {
                        Some(b) => b.clone(),
                        None => {
                            let b = Arc::new(ScriptedBackend::load(&path)?);
                            scripted.insert(path, b.clone());
                            b
                        }
                    };
                    shared
                }
                BackendKind::Subprocess => {
                    Arc::new(SubprocessBackend::new(config.command.clone().ok_or(AgentError::NoBackend(role))?))
                }
            };
            bindings.insert(role, Binding { config, backend });
        }
        Ok(Self {
            bindings,
            scripted: scripted.into_values().collect(),
            templates: Templates::new(config.template_dir.clone()),
            network_allowed: config.network_allowed,
        })
    }

    /// Every role served by `backend`, with default timeouts.
    pub fn uniform(backend: Arc<dyn AgentBackend>, config: BackendConfig) -> Self {
        let bindings = AgentRole::ALL
            .into_iter()
            .map(|role| (role, Binding { config: config.clone(), backend: backend.clone() }))
            .collect();
        Self { bindings, scripted: Vec::new(), templates: Templates::new(None), network_allowed: false }
    }

    /// Scripted backends in use, for request-log audits.
    pub fn scripted(&self) -> &[Arc<ScriptedBackend>] {
        &self.scripted
    }

    pub fn templates(&self) -> &Templates {
        &self.templates
    }

    /// Label recorded in verification reports: backend label plus model.
    pub fn label(&self, role: AgentRole, slot: Option<u32>) -> String {
        match self.bindings.get(&role) {
            Some(b) => match b.config.model_for(slot) {
                Some(model) => format!("{}:{model}", b.backend.label()),
                None => b.backend.label().to_string(),
            },
            None => "unbound".to_string(),
        }
    }

    pub fn call(&self, call: AgentCall) -> Result<AgentResult, AgentError> {
        let binding = self.bindings.get(&call.role).ok_or(AgentError::NoBackend(call.role))?;
        check_isolation(call.role, &call.inputs)?;
        let workspace = tempfile::Builder::new()
            .prefix(&format!("proofline-{}-", call.role.name()))
            .tempdir()
            .map_err(|e| AgentError::Workspace(e.to_string()))?;
        let request = AgentRequest {
            role: call.role,
            inputs: call.inputs,
            workspace: workspace.path().to_path_buf(),
            timeout: Duration::from_secs(binding.config.timeout_secs),
            network_allowed: self.network_allowed,
            model: binding.config.model_for(call.slot),
            call_index: call.call_index,
        };
        invoke(binding.backend.as_ref(), &request, &self.templates)
    }
}
