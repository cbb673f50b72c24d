//! Deterministic replay backend driven by a scenario directory.
//!
//! `manifest.yaml` maps each role to canned responses keyed by call number
//! (1-based, per role), with an optional default:
//!
//! ```yaml
//! label: always-pass
//! responses:
//!   good_proof:
//!     outputs:
//!       proof.md: files/proof_good.md      # path relative to the scenario
//! roles:
//!   prover:
//!     default: good_proof                  # a named response...
//!     calls:
//!       2: {status: crashed, transcript: "segfault"}   # ...or an inline one
//!   verdict:
//!     default:
//!       outputs:
//!         decision.md: {text: "VERDICT: DONE"}
//! ```
//!
//! Every request is recorded so tests can audit what each agent was shown.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use proofline_core::{AgentRole, InputKind};
use serde::Deserialize;

use super::{AgentBackend, AgentError, AgentRequest, BackendRun, ExitStatus};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ScriptError {
    #[error("cannot read scenario file {path}: {message}")]
    Io { path: String, message: String },
    #[error("invalid scenario manifest {path}: {message}")]
    Manifest { path: String, message: String },
    #[error("scenario has no response for {role} call {call}")]
    NoResponse { role: AgentRole, call: u32 },
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum OutputSource {
    Inline { text: String },
    Path(String),
}

fn ok_status() -> ExitStatus {
    ExitStatus::Ok
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ResponseSpec {
    #[serde(default = "ok_status")]
    status: ExitStatus,
    #[serde(default)]
    transcript: String,
    #[serde(default)]
    outputs: BTreeMap<String, OutputSource>,
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum ResponseRef {
    Named(String),
    Inline(ResponseSpec),
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RoleSpec {
    #[serde(default)]
    default: Option<ResponseRef>,
    #[serde(default)]
    calls: BTreeMap<u32, ResponseRef>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct Manifest {
    #[serde(default)]
    label: Option<String>,
    #[serde(default)]
    responses: BTreeMap<String, ResponseSpec>,
    #[serde(default)]
    roles: BTreeMap<String, RoleSpec>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
struct Response {
    status: ExitStatus,
    transcript: String,
    outputs: BTreeMap<String, String>,
}

#[derive(Debug, Default)]
struct RoleScript {
    default: Option<Response>,
    calls: BTreeMap<u32, Response>,
}

/// One request as the scripted backend received it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RecordedRequest {
    pub role: AgentRole,
    pub call: u32,
    pub inputs: BTreeMap<InputKind, String>,
    pub workspace: PathBuf,
    pub model: Option<String>,
    pub prompt: String,
}

#[derive(Debug, Default)]
struct State {
    counters: BTreeMap<AgentRole, u32>,
    log: Vec<RecordedRequest>,
}

#[derive(Debug)]
pub struct ScriptedBackend {
    label: String,
    roles: BTreeMap<AgentRole, RoleScript>,
    state: Mutex<State>,
}

fn manifest_error(path: &Path, message: impl Into<String>) -> ScriptError {
    ScriptError::Manifest { path: path.display().to_string(), message: message.into() }
}

impl ScriptedBackend {
    /// A backend with no responses, useful when only the request log matters.
    pub fn empty() -> Self {
        Self { label: "scripted".into(), roles: BTreeMap::new(), state: Mutex::new(State::default()) }
    }

    /// Loads `<dir>/manifest.yaml`, reading every referenced file up front.
    pub fn load(dir: &Path) -> Result<Self, ScriptError> {
        let path = dir.join("manifest.yaml");
        let raw = fs::read_to_string(&path)
            .map_err(|e| ScriptError::Io { path: path.display().to_string(), message: e.to_string() })?;
        let manifest: Manifest = serde_yaml::from_str(&raw).map_err(|e| manifest_error(&path, e.to_string()))?;

        let resolve_spec = |spec: &ResponseSpec| -> Result<Response, ScriptError> {
            let mut outputs = BTreeMap::new();
            for (name, source) in &spec.outputs {
                let text = match source {
                    OutputSource::Inline { text } => text.clone(),
                    OutputSource::Path(rel) => {
                        let file = dir.join(rel);
                        fs::read_to_string(&file)
                            .map_err(|e| ScriptError::Io { path: file.display().to_string(), message: e.to_string() })?
                    }
                };
                outputs.insert(name.clone(), text);
            }
            Ok(Response { status: spec.status, transcript: spec.transcript.clone(), outputs })
        };
        let mut named = BTreeMap::new();
        for (name, spec) in &manifest.responses {
            named.insert(name.clone(), resolve_spec(spec)?);
        }
        let resolve = |r: &ResponseRef| -> Result<Response, ScriptError> {
            match r {
                ResponseRef::Named(name) => named
                    .get(name)
                    .cloned()
                    .ok_or_else(|| manifest_error(&path, format!("unknown response `{name}`"))),
                ResponseRef::Inline(spec) => resolve_spec(spec),
            }
        };

        let mut roles = BTreeMap::new();
        for (name, spec) in &manifest.roles {
            let role = AgentRole::from_name(name).ok_or_else(|| manifest_error(&path, format!("unknown role `{name}`")))?;
            let mut script = RoleScript::default();
            if let Some(default) = &spec.default {
                script.default = Some(resolve(default)?);
            }
            for (call, r) in &spec.calls {
                if *call == 0 {
                    return Err(manifest_error(&path, format!("{name}: call numbers start at 1")));
                }
                script.calls.insert(*call, resolve(r)?);
            }
            roles.insert(role, script);
        }
        let label = manifest
            .label
            .unwrap_or_else(|| format!("scripted:{}", dir.file_name().unwrap_or_default().to_string_lossy()));
        Ok(Self { label, roles, state: Mutex::new(State::default()) })
    }

    pub fn log(&self) -> Vec<RecordedRequest> {
        self.state.lock().unwrap().log.clone()
    }

    pub fn calls(&self, role: AgentRole) -> usize {
        self.state.lock().unwrap().log.iter().filter(|r| r.role == role).count()
    }

    fn response(&self, role: AgentRole, call: u32) -> Result<Response, ScriptError> {
        let script = self.roles.get(&role);
        script
            .and_then(|s| s.calls.get(&call).or(s.default.as_ref()))
            .cloned()
            .ok_or(ScriptError::NoResponse { role, call })
    }
}

impl AgentBackend for ScriptedBackend {
    fn label(&self) -> &str {
        &self.label
    }

    fn run(&self, request: &AgentRequest, prompt: &str) -> Result<BackendRun, AgentError> {
        let call = {
            let mut state = self.state.lock().unwrap();
            let counter = state.counters.entry(request.role).or_insert(0);
            *counter += 1;
            let call = request.call_index.unwrap_or(*counter);
            state.log.push(RecordedRequest {
                role: request.role,
                call,
                inputs: request.inputs.clone(),
                workspace: request.workspace.clone(),
                model: request.model.clone(),
                prompt: prompt.to_string(),
            });
            call
        };
        let response = self.response(request.role, call)?;
        fs::write(request.workspace.join("prompt.md"), prompt).map_err(|e| AgentError::Workspace(e.to_string()))?;
        for (name, text) in &response.outputs {
            fs::write(request.workspace.join(name), text).map_err(|e| AgentError::Workspace(e.to_string()))?;
        }
        Ok(BackendRun { exit_status: response.status, transcript: response.transcript })
    }
}

#[cfg(test)]
mod tests {
    use std::time::Duration;

    use super::*;

    fn scenario(manifest: &str, files: &[(&str, &str)]) -> tempfile::TempDir {
        let dir = tempfile::tempdir().unwrap();
        fs::write(dir.path().join("manifest.yaml"), manifest).unwrap();
        for (name, text) in files {
            let path = dir.path().join(name);
            fs::create_dir_all(path.parent().unwrap()).unwrap();
            fs::write(path, text).unwrap();
        }
        dir
    }

    fn request(role: AgentRole, call_index: Option<u32>) -> (tempfile::TempDir, AgentRequest) {
        let ws = tempfile::tempdir().unwrap();
        let request = AgentRequest {
            role,
            inputs: BTreeMap::new(),
            workspace: ws.path().to_path_buf(),
            timeout: Duration::from_secs(5),
            network_allowed: false,
            model: None,
            call_index,
        };
        (ws, request)
    }

    const FAIL_TWICE: &str = "
responses:
  fail: {outputs: {decision.md: {text: \"VERDICT: FAIL\"}}}
roles:
  verdict:
    default: {outputs: {decision.md: files/pass.md}}
    calls: {1: fail, 2: fail}
";

    #[test]
    fn fail_twice_then_pass() {
        let dir = scenario(FAIL_TWICE, &[("files/pass.md", "VERDICT: PASS\n")]);
        let backend = ScriptedBackend::load(dir.path()).unwrap();
        let mut seen = Vec::new();
        for _ in 0..3 {
            let (ws, req) = request(AgentRole::Verdict, None);
            backend.run(&req, "prompt").unwrap();
            seen.push(fs::read_to_string(ws.path().join("decision.md")).unwrap());
        }
        assert_eq!(seen, ["VERDICT: FAIL", "VERDICT: FAIL", "VERDICT: PASS\n"]);
        assert_eq!(backend.calls(AgentRole::Verdict), 3);
    }

    #[test]
    fn explicit_call_index_wins_over_counter() {
        let dir = scenario(FAIL_TWICE, &[("files/pass.md", "VERDICT: PASS\n")]);
        let backend = ScriptedBackend::load(dir.path()).unwrap();
        let (ws, req) = request(AgentRole::Verdict, Some(3));
        backend.run(&req, "p").unwrap();
        assert_eq!(fs::read_to_string(ws.path().join("decision.md")).unwrap(), "VERDICT: PASS\n");
        assert_eq!(backend.log()[0].call, 3);
    }

    #[test]
    fn missing_response_is_an_error() {
        let dir = scenario("roles: {}\n", &[]);
        let backend = ScriptedBackend::load(dir.path()).unwrap();
        let (_ws, req) = request(AgentRole::Prover, None);
        assert!(matches!(backend.run(&req, "p"), Err(AgentError::Script(ScriptError::NoResponse { call: 1, .. }))));
    }

    #[test]
    fn bad_manifests_are_rejected() {
        let dir = scenario("roles:\n  wizard: {}\n", &[]);
        assert!(matches!(ScriptedBackend::load(dir.path()), Err(ScriptError::Manifest { .. })));
        let dir = scenario("roles:\n  prover: {default: nope}\n", &[]);
        assert!(matches!(ScriptedBackend::load(dir.path()), Err(ScriptError::Manifest { .. })));
        let dir = scenario("roles:\n  prover: {default: {outputs: {proof.md: missing.md}}}\n", &[]);
        assert!(matches!(ScriptedBackend::load(dir.path()), Err(ScriptError::Io { .. })));
    }
}
