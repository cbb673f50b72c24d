//! `config.yaml`: run parameters and per-role agent backends.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use proofline_core::{AgentRole, BudgetLimits, RunMode, TreeCheckOptions, DEFAULT_VAGUE_LEXICON};
use serde::{Deserialize, Serialize};

use crate::plan_yaml::classify;

pub const LAYOUT_VERSION: u32 = 1;
pub const DEFAULT_TIMEOUT_SECS: u64 = 1800;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {message}")]
    Io { path: String, message: String },
    #[error("config syntax error: {0}")]
    Syntax(String),
    #[error("config is missing `{0}`")]
    MissingField(String),
    #[error("config has unknown key `{0}`")]
    UnknownField(String),
    #[error("invalid config value `{path}`: {message}")]
    Invalid { path: String, message: String },
}

impl ConfigError {
    /// The offending key path, when there is one.
    pub fn path(&self) -> Option<&str> {
        match self {
            Self::MissingField(p) | Self::UnknownField(p) | Self::Invalid { path: p, .. } => Some(p),
            _ => None,
        }
    }

    fn invalid(path: impl Into<String>, message: impl Into<String>) -> Self {
        Self::Invalid { path: path.into(), message: message.into() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BackendKind {
    Subprocess,
    Scripted,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BackendConfig {
    pub kind: BackendKind,
    /// Shell command for `subprocess`; `{workspace}`, `{prompt}`, `{model}`
    /// and `{role}` are substituted, shell-quoted.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub command: Option<String>,
    /// Scenario directory (holding `manifest.yaml`) for `scripted`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub script: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<String>,
    /// Model labels cycled across fan-out slots (prover k, verifier j).
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub fanout_models: Vec<String>,
    #[serde(default = "default_timeout")]
    pub timeout_secs: u64,
}

impl BackendConfig {
    pub fn scripted(script: impl Into<PathBuf>) -> Self {
        Self {
            kind: BackendKind::Scripted,
            command: None,
            script: Some(script.into()),
            model: None,
            fanout_models: Vec::new(),
            timeout_secs: DEFAULT_TIMEOUT_SECS,
        }
    }

    pub fn subprocess(command: impl Into<String>) -> Self {
        Self { kind: BackendKind::Subprocess, command: Some(command.into()), script: None, ..Self::scripted("") }
    }

    /// Model label for a fan-out slot (1-based), falling back to `model`.
    pub fn model_for(&self, slot: Option<u32>) -> Option<String> {
        match slot {
            Some(k) if !self.fanout_models.is_empty() => {
                Some(self.fanout_models[(k as usize - 1) % self.fanout_models.len()].clone())
            }
            _ => self.model.clone(),
        }
    }
}

fn default_timeout() -> u64 {
    DEFAULT_TIMEOUT_SECS
}
fn default_layout() -> u32 {
    LAYOUT_VERSION
}
fn default_mode() -> RunMode {
    RunMode::Simple
}
fn one() -> u32 {
    1
}
fn default_rounds() -> u32 {
    8
}
fn default_proofs() -> u32 {
    BudgetLimits::default().max_proofs_per_plan
}
fn default_revisions() -> u32 {
    BudgetLimits::default().max_plan_revisions
}
fn default_decompositions() -> u32 {
    BudgetLimits::default().max_decompositions
}
fn default_brainstormers() -> u32 {
    2
}
fn default_parallelism() -> u32 {
    4
}
fn yes() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default = "default_layout")]
    pub layout_version: u32,
    #[serde(default = "default_mode")]
    pub mode: RunMode,
    #[serde(default = "one")]
    pub n_provers: u32,
    #[serde(default = "one")]
    pub m_verifiers: u32,
    #[serde(default = "default_rounds")]
    pub max_rounds: u32,
    #[serde(default = "default_proofs")]
    pub max_proofs_per_plan: u32,
    #[serde(default = "default_revisions")]
    pub max_plan_revisions: u32,
    #[serde(default = "default_decompositions")]
    pub max_decompositions: u32,
    #[serde(default)]
    pub brainstorm_enabled: bool,
    #[serde(default = "default_brainstormers")]
    pub brainstormers: u32,
    #[serde(default)]
    pub network_allowed: bool,
    #[serde(default = "default_parallelism")]
    pub parallelism: u32,
    #[serde(default)]
    pub rules: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub template_dir: Option<PathBuf>,
    /// Added to the built-in vague-language lexicon.
    #[serde(default)]
    pub vague_phrases: Vec<String>,
    #[serde(default = "yes")]
    pub citation_coverage: bool,
    /// Keyed by role name, or `default` for every role not listed.
    pub backends: BTreeMap<String, BackendConfig>,
}

impl RunConfig {
    /// Every role bound to the same backend, all other fields defaulted.
    pub fn with_backend(backend: BackendConfig) -> Self {
        let mut backends = BTreeMap::new();
        backends.insert("default".to_string(), backend);
        Self {
            layout_version: LAYOUT_VERSION,
            mode: RunMode::Simple,
            n_provers: 1,
            m_verifiers: 1,
            max_rounds: default_rounds(),
            max_proofs_per_plan: default_proofs(),
            max_plan_revisions: default_revisions(),
            max_decompositions: default_decompositions(),
            brainstorm_enabled: false,
            brainstormers: default_brainstormers(),
            network_allowed: false,
            parallelism: default_parallelism(),
            rules: Vec::new(),
            template_dir: None,
            vague_phrases: Vec::new(),
            citation_coverage: true,
            backends,
        }
    }

    pub fn limits(&self) -> BudgetLimits {
        BudgetLimits {
            max_proofs_per_plan: self.max_proofs_per_plan,
            max_plan_revisions: self.max_plan_revisions,
            max_decompositions: self.max_decompositions,
        }
    }

    pub fn backend_for(&self, role: AgentRole) -> Option<&BackendConfig> {
        self.backends.get(role.name()).or_else(|| self.backends.get("default"))
    }

    pub fn lexicon(&self) -> Vec<String> {
        let mut lexicon: Vec<String> = DEFAULT_VAGUE_LEXICON.iter().map(|s| s.to_string()).collect();
        for phrase in &self.vague_phrases {
            let phrase = phrase.to_lowercase();
            if !lexicon.contains(&phrase) {
                lexicon.push(phrase);
            }
        }
        lexicon
    }

    pub fn tree_options(&self) -> TreeCheckOptions {
        TreeCheckOptions { require_citation_coverage: self.citation_coverage }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.layout_version != LAYOUT_VERSION {
            return Err(ConfigError::invalid("layout_version", format!("only version {LAYOUT_VERSION} is supported")));
        }
        for (name, value) in [
            ("n_provers", self.n_provers),
            ("m_verifiers", self.m_verifiers),
            ("max_rounds", self.max_rounds),
            ("max_proofs_per_plan", self.max_proofs_per_plan),
            ("max_decompositions", self.max_decompositions),
            ("parallelism", self.parallelism),
            ("brainstormers", self.brainstormers),
        ] {
            if value == 0 {
                return Err(ConfigError::invalid(name, "must be at least 1"));
            }
        }
        for (key, backend) in &self.backends {
            if key != "default" && AgentRole::from_name(key).is_none() {
                return Err(ConfigError::invalid(format!("backends.{key}"), "not a role name or `default`"));
            }
            let path = format!("backends.{key}");
            match backend.kind {
                BackendKind::Subprocess => {
                    let command = backend
                        .command
                        .as_deref()
                        .ok_or_else(|| ConfigError::MissingField(format!("{path}.command")))?;
                    for placeholder in ["{workspace}", "{prompt}"] {
                        if !command.contains(placeholder) {
                            return Err(ConfigError::invalid(
                                format!("{path}.command"),
                                format!("must contain {placeholder}"),
                            ));
                        }
                    }
                }
                BackendKind::Scripted => {
                    if backend.script.is_none() {
                        return Err(ConfigError::MissingField(format!("{path}.script")));
                    }
                }
            }
            if backend.timeout_secs == 0 {
                return Err(ConfigError::invalid(format!("{path}.timeout_secs"), "must be at least 1"));
            }
        }
        for role in AgentRole::ALL {
            if self.backend_for(role).is_none() {
                return Err(ConfigError::invalid("backends", format!("no backend for role {role} and no default")));
            }
        }
        Ok(())
    }

    /// Makes relative paths absolute against `base`.
    pub fn resolve_paths(&mut self, base: &Path) {
        let absolute = |p: &PathBuf| if p.is_absolute() { p.clone() } else { base.join(p) };
        if let Some(dir) = &self.template_dir {
            self.template_dir = Some(absolute(dir));
        }
        for backend in self.backends.values_mut() {
            if let Some(script) = &backend.script {
                backend.script = Some(absolute(script));
            }
        }
    }

    pub fn to_yaml(&self) -> String {
        serde_yaml::to_string(self).expect("config serialises")
    }
}

/// Parses and validates config text; relative paths resolve against `base`.
pub fn parse_config(raw: &str, base: &Path) -> Result<RunConfig, ConfigError> {
    serde_yaml::from_str::<serde_yaml::Value>(raw).map_err(|e| ConfigError::Syntax(e.to_string()))?;
    let deserializer = serde_yaml::Deserializer::from_str(raw);
    let mut config: RunConfig = serde_path_to_error::deserialize(deserializer).map_err(|err| {
        let path = err.path().to_string();
        let inner = err.into_inner();
        match classify(&path, &inner) {
            (Some(missing), _, _) => ConfigError::MissingField(missing),
            (_, Some(unknown), _) => ConfigError::UnknownField(unknown),
            (None, None, message) if path.is_empty() || path == "." => ConfigError::Syntax(message),
            (None, None, message) => ConfigError::Invalid { path, message },
        }
    })?;
    config.validate()?;
    config.resolve_paths(base);
    Ok(config)
}

pub fn load_config(path: &Path) -> Result<RunConfig, ConfigError> {
    let raw = fs::read_to_string(path)
        .map_err(|e| ConfigError::Io { path: path.display().to_string(), message: e.to_string() })?;
    let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
    parse_config(&raw, &base)
}

/// The file written by `proofline init`.
pub const DEFAULT_CONFIG: &str = r#"# proofline run configuration
layout_version: 1

# simple: parallel provers, verifiers, selector and verdict per round.
# decomposition: planner, single prover and regulator under a retry budget.
mode: simple

# Simple mode fan-out: n provers per round, m verifiers per proof.
n_provers: 1
m_verifiers: 1
max_rounds: 8

# Decomposition retry budget.
max_proofs_per_plan: 3
max_plan_revisions: 2
max_decompositions: 3

brainstorm_enabled: false
brainstormers: 2

# Citation URLs are only fetched when this is true (PROOFLINE_OFFLINE=1 overrides).
network_allowed: false

# Concurrent agent invocations within one step.
parallelism: 4

# Hard requirements checked in phase 5; steering/verifier_rules.md adds more.
rules: []

# Directory with <role>.md prompt templates overriding the built-in ones.
# template_dir: templates

# Extra phrases banned inside key-original-step tags.
vague_phrases: []

# Require every citation to be referenced from the subgoal tree.
citation_coverage: true

# Backend per role name, or `default`. Roles: literature_surveyor, brainstormer,
# decomposer, prover, structural_verifier, detailed_verifier, selector,
# regulator, verdict, difficulty_judge, summarizer.
backends:
  default:
    kind: subprocess
    command: "my-agent --workdir {workspace} --prompt-file {prompt} --model {model}"
    model: default
    timeout_secs: 1800
  # prover:
  #   kind: subprocess
  #   command: "other-agent {workspace} {prompt}"
  #   fanout_models: [model-a, model-b, model-c]
  # Deterministic replay from a scenario directory:
  #   kind: scripted
  #   script: scenarios/always_pass
"#;
