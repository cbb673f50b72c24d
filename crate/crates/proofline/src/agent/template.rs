//! Prompt templates: one markdown file per role with `{{name}}` placeholders.
//!
//! `{{name}}` must be filled from the request inputs; `{{name?}}` renders as
//! empty text when the input is absent. Names are the input kind names
//! (`problem`, `proof`, `previous_reports`, ...). Substitution is a single
//! pass, so braces inside input text are never expanded.

use std::borrow::Cow;
use std::fs;
use std::path::PathBuf;

use proofline_core::{AgentRole, InputKind};

use super::{AgentError, AgentRequest};

fn builtin(role: AgentRole) -> &'static str {
    match role {
        AgentRole::LiteratureSurveyor => include_str!("../../templates/literature_surveyor.md"),
        AgentRole::Brainstormer => include_str!("../../templates/brainstormer.md"),
        AgentRole::Decomposer => include_str!("../../templates/decomposer.md"),
        AgentRole::Prover => include_str!("../../templates/prover.md"),
        AgentRole::StructuralVerifier => include_str!("../../templates/structural_verifier.md"),
        AgentRole::DetailedVerifier => include_str!("../../templates/detailed_verifier.md"),
        AgentRole::Selector => include_str!("../../templates/selector.md"),
        AgentRole::Regulator => include_str!("../../templates/regulator.md"),
        AgentRole::Verdict => include_str!("../../templates/verdict.md"),
        AgentRole::DifficultyJudge => include_str!("../../templates/difficulty_judge.md"),
        AgentRole::Summarizer => include_str!("../../templates/summarizer.md"),
    }
}

/// Built-in templates, or `<dir>/<role>.md` when a directory is configured.
#[derive(Debug, Clone, Default)]
pub struct Templates {
    dir: Option<PathBuf>,
}

impl Templates {
    pub fn new(dir: Option<PathBuf>) -> Self {
        Self { dir }
    }

    pub fn get(&self, role: AgentRole) -> Result<Cow<'static, str>, AgentError> {
        match &self.dir {
            None => Ok(Cow::Borrowed(builtin(role))),
            Some(dir) => fs::read_to_string(dir.join(format!("{}.md", role.name())))
                .map(Cow::Owned)
                .map_err(|_| AgentError::MissingTemplate(role)),
        }
    }
}

pub fn render_prompt(role: AgentRole, request: &AgentRequest, templates: &Templates) -> Result<String, AgentError> {
    let template = templates.get(role)?;
    let mut out = String::with_capacity(template.len());
    let mut rest: &str = &template;
    while let Some(start) = rest.find("{{") {
        out.push_str(&rest[..start]);
        let after = &rest[start + 2..];
        let end = after.find("}}").ok_or_else(|| AgentError::UnresolvedPlaceholder(after.to_string()))?;
        let raw = after[..end].trim();
        let (name, optional) = match raw.strip_suffix('?') {
            Some(name) => (name, true),
            None => (raw, false),
        };
        let kind = InputKind::from_name(name).ok_or_else(|| AgentError::UnresolvedPlaceholder(name.to_string()))?;
        match request.inputs.get(&kind) {
            Some(text) => out.push_str(text),
            None if optional => {}
            None => return Err(AgentError::UnresolvedPlaceholder(name.to_string())),
        }
        rest = &after[end + 2..];
    }
    out.push_str(rest);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use std::collections::BTreeMap;
    use std::time::Duration;

    use super::*;

    fn request(role: AgentRole, inputs: &[(InputKind, &str)]) -> AgentRequest {
        AgentRequest {
            role,
            inputs: inputs.iter().map(|(k, v)| (*k, v.to_string())).collect::<BTreeMap<_, _>>(),
            workspace: PathBuf::from("/tmp/ws"),
            timeout: Duration::from_secs(1),
            network_allowed: false,
            model: None,
            call_index: None,
        }
    }

    #[test]
    fn every_role_has_a_builtin_template() {
        for role in AgentRole::ALL {
            let t = Templates::default().get(role).unwrap();
            assert!(t.contains("{{"), "{role}");
        }
    }

    #[test]
    fn builtin_templates_only_name_allowed_inputs() {
        for role in AgentRole::ALL {
            let t = Templates::default().get(role).unwrap();
            for chunk in t.split("{{").skip(1) {
                let name = chunk.split("}}").next().unwrap().trim().trim_end_matches('?');
                let kind = InputKind::from_name(name).unwrap_or_else(|| panic!("{role}: {name}"));
                assert!(role.allows(kind), "{role} template names {name}");
            }
        }
    }

    #[test]
    fn problem_appears_exactly_once() {
        let problem = "Show that 7 divides 8^n - 1 for all n >= 1.";
        let prompt = render_prompt(
            AgentRole::Prover,
            &request(AgentRole::Prover, &[(InputKind::Problem, problem), (InputKind::LiteratureSurvey, "s")]),
            &Templates::default(),
        )
        .unwrap();
        assert_eq!(prompt.matches(problem).count(), 1);
    }

    #[test]
    fn previous_round_artifacts_are_rendered() {
        let prompt = render_prompt(
            AgentRole::Prover,
            &request(
                AgentRole::Prover,
                &[
                    (InputKind::Problem, "P"),
                    (InputKind::LiteratureSurvey, "S"),
                    (InputKind::PreviousProof, "OLD PROOF TEXT"),
                    (InputKind::PreviousReports, "OLD REPORT TEXT"),
                ],
            ),
            &Templates::default(),
        )
        .unwrap();
        assert!(prompt.contains("OLD PROOF TEXT") && prompt.contains("OLD REPORT TEXT"));
    }

    #[test]
    fn missing_required_input_is_an_error() {
        let err = render_prompt(AgentRole::Verdict, &request(AgentRole::Verdict, &[]), &Templates::default());
        assert_eq!(err, Err(AgentError::UnresolvedPlaceholder("reports".into())));
    }

    #[test]
    fn braces_in_inputs_are_not_expanded() {
        let dir = tempfile::tempdir().unwrap();
        fs::write(dir.path().join("verdict.md"), "R: {{reports}} H: {{hints?}}.").unwrap();
        let templates = Templates::new(Some(dir.path().to_path_buf()));
        let prompt =
            render_prompt(AgentRole::Verdict, &request(AgentRole::Verdict, &[(InputKind::Reports, "{{problem}}")]), &templates)
                .unwrap();
        assert_eq!(prompt, "R: {{problem}} H: .");
        assert_eq!(
            render_prompt(AgentRole::Prover, &request(AgentRole::Prover, &[]), &templates),
            Err(AgentError::MissingTemplate(AgentRole::Prover))
        );
    }
}
