//! Two-stage verification: deterministic pre-checks merged with the
//! structural verifier agent (phases 1 to 5), then the detailed verifier
//! (phase 6) only on a structural pass, plus the standalone verifier.
//!
//! Merging takes the worst verdict per phase, so a deterministic failure can
//! never be overturned by an agent.

use std::time::Duration;

use proofline_core::{
    integrity_prefilter, lint_key_steps, parse_proof_document, parse_structured_verdict, validate_subgoal_tree,
    AgentRole, CitationVerdict, DecompositionPlan, Finding, InputKind, LintFinding, ParseError, PhaseId, PhaseResult,
    ProofDocument, TreeCheckOptions, UrlStatus, Verdict, VerificationReport,
};

use crate::agent::{AgentCall, AgentError, AgentResult, Agents};
use crate::config::RunConfig;
use crate::plan_yaml::plan_to_yaml;
use crate::report_file::{parse_agent_report, report_to_yaml, AgentAssessment};
use crate::urls::resolve_citation_urls;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CheckOptions {
    pub lexicon: Vec<String>,
    pub tree: TreeCheckOptions,
    pub network_allowed: bool,
    pub url_timeout: Duration,
}

impl CheckOptions {
    pub fn from_config(config: &RunConfig) -> Self {
        Self {
            lexicon: config.lexicon(),
            tree: config.tree_options(),
            network_allowed: config.network_allowed,
            url_timeout: Duration::from_secs(10),
        }
    }
}

impl Default for CheckOptions {
    fn default() -> Self {
        Self {
            lexicon: proofline_core::DEFAULT_VAGUE_LEXICON.iter().map(|s| s.to_string()).collect(),
            tree: TreeCheckOptions::default(),
            network_allowed: false,
            url_timeout: Duration::from_secs(10),
        }
    }
}

/// Which proof a verifier call is about and where it sits in the run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Target<'a> {
    pub proof_id: &'a str,
    pub call_index: Option<u32>,
    pub slot: Option<u32>,
}

impl AgentCall {
    fn placed(mut self, target: Target<'_>) -> Self {
        self.call_index = target.call_index;
        self.slot = target.slot;
        self
    }
}

/// Phases 1 to 4 as far as they can be decided without an agent.
pub fn structural_prechecks(
    problem: &str,
    doc: &ProofDocument,
    options: &CheckOptions,
) -> (Vec<PhaseResult>, Vec<CitationVerdict>) {
    let integrity = integrity_prefilter(problem, doc);

    let lint = lint_key_steps(doc, &options.lexicon)
        .into_iter()
        .map(|f| match &f {
            LintFinding::VaguePhrase { step_id, offset, .. } => {
                Finding::new("VaguePhrase", f.to_string()).at(format!("key step {step_id}, byte {offset}"))
            }
            LintFinding::MissingKeyStep => Finding::new("MissingKeyStep", f.to_string()),
        })
        .collect();

    let urls = resolve_citation_urls(&doc.citations, options.network_allowed, options.url_timeout);
    let url_findings = urls
        .iter()
        .filter(|c| c.url_resolves == UrlStatus::No)
        .map(|c| Finding::new("UrlUnresolved", "citation URL does not resolve").at(format!("citation {}", c.citation_id)))
        .collect();

    let tree = validate_subgoal_tree(doc, options.tree)
        .into_iter()
        .map(|f| Finding::new(f.code(), f.to_string()))
        .collect();

    let phases = vec![
        integrity,
        PhaseResult::from_findings(PhaseId::Completeness, lint),
        PhaseResult::from_findings(PhaseId::Citations, url_findings),
        PhaseResult::from_findings(PhaseId::SubgoalTree, tree),
    ];
    (phases, urls)
}

/// Structural report for a proof that does not parse. No agent is consulted.
pub fn malformed_report(proof_id: &str, verifier_label: &str, err: &ParseError) -> VerificationReport {
    let finding = Finding::new("MalformedDocument", err.to_string()).at(format!("byte {}", err.offset()));
    VerificationReport::assemble(
        proof_id,
        verifier_label,
        vec![PhaseResult::new(PhaseId::Completeness, Verdict::Fail, vec![finding])],
        Vec::new(),
        "",
    )
}

fn backend_failure(covered: &[PhaseId], message: String) -> AgentAssessment {
    AgentAssessment::failed(covered, Finding::new("BackendFailure", message), String::new())
}

/// Turns an agent call into an assessment of `covered`, keeping
/// configuration errors as errors.
fn assess(
    outcome: Result<AgentResult, AgentError>,
    file: &str,
    covered: &[PhaseId],
    default_pass: &[PhaseId],
) -> Result<AgentAssessment, AgentError> {
    match outcome {
        Err(err) if err.is_agent_failure() => Ok(backend_failure(covered, err.to_string())),
        Err(err) => Err(err),
        Ok(result) if !result.ok() => {
            Ok(backend_failure(covered, format!("agent exited with status {:?}", result.exit_status)))
        }
        Ok(result) => match result.file(file) {
            Some(raw) => Ok(parse_agent_report(raw, covered, default_pass)),
            None => Ok(backend_failure(covered, format!("agent wrote no {file}"))),
        },
    }
}

fn merge_citations(urls: Vec<CitationVerdict>, agent: Vec<CitationVerdict>) -> Vec<CitationVerdict> {
    urls.into_iter()
        .map(|url| match agent.iter().find(|a| a.citation_id == url.citation_id) {
            Some(a) => CitationVerdict { url_resolves: url.url_resolves, ..a.clone() },
            None => url,
        })
        .collect()
}

pub fn rules_text(rules: &[String]) -> Option<String> {
    (!rules.is_empty()).then(|| rules.iter().map(|r| format!("- {r}\n")).collect())
}

/// Phases 1 to 5. One structural verifier call.
#[allow(clippy::too_many_arguments)]
pub fn run_structural_verification(
    problem: &str,
    doc: &ProofDocument,
    plan: Option<&DecompositionPlan>,
    rules: &[String],
    agents: &Agents,
    options: &CheckOptions,
    target: Target<'_>,
) -> Result<VerificationReport, AgentError> {
    let (mut phases, urls) = structural_prechecks(problem, doc, options);
    let call = AgentCall::new(AgentRole::StructuralVerifier)
        .input(InputKind::Problem, problem)
        .input(InputKind::Proof, doc.raw_text.clone())
        .input_if(InputKind::Plan, plan.map(plan_to_yaml))
        .input_if(InputKind::Rules, rules_text(rules))
        .placed(target);
    let default_pass: &[PhaseId] = if rules.is_empty() { &[PhaseId::HumanRules] } else { &[] };
    let assessment = assess(agents.call(call), "report.yaml", &PhaseId::STRUCTURAL, default_pass)?;
    phases.extend(assessment.phases);
    Ok(VerificationReport::assemble(
        target.proof_id,
        agents.label(AgentRole::StructuralVerifier, target.slot),
        phases,
        merge_citations(urls, assessment.citations),
        assessment.appendix,
    ))
}

/// Adds phase 6. Must only be called with a passing structural report.
pub fn run_detailed_verification(
    problem: &str,
    doc: &ProofDocument,
    plan: Option<&DecompositionPlan>,
    structural: &VerificationReport,
    agents: &Agents,
    target: Target<'_>,
) -> Result<VerificationReport, AgentError> {
    assert!(structural.passed(), "detailed verification requires a passing structural report");
    let call = AgentCall::new(AgentRole::DetailedVerifier)
        .input(InputKind::Problem, problem)
        .input(InputKind::Proof, doc.raw_text.clone())
        .input_if(InputKind::Plan, plan.map(plan_to_yaml))
        .input(InputKind::StructuralReport, report_to_yaml(structural))
        .placed(target);
    let assessment = assess(agents.call(call), "report.yaml", &[PhaseId::Detailed], &[])?;
    let mut phases = structural.phase_results.clone();
    phases.extend(assessment.phases);
    let mut citations = structural.citations.clone();
    for agent in assessment.citations {
        if let Some(c) = citations.iter_mut().find(|c| c.citation_id == agent.citation_id) {
            *c = CitationVerdict { url_resolves: c.url_resolves, ..agent };
        }
    }
    Ok(VerificationReport::assemble(
        target.proof_id,
        agents.label(AgentRole::DetailedVerifier, target.slot),
        phases,
        citations,
        assessment.appendix,
    ))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StandaloneOutcome {
    pub report: VerificationReport,
    /// `EASY` or `HARD` as judged; `None` when no judge ran.
    pub difficulty: Option<String>,
    pub structural: Option<VerificationReport>,
}

/// The difficulty judge either verifies in one pass (EASY) or hands off to
/// structural and, on a pass, detailed verification (HARD). An unparseable
/// judgement counts as HARD.
pub fn run_standalone_verifier(
    problem: &str,
    proof_raw: &str,
    rules: &[String],
    agents: &Agents,
    options: &CheckOptions,
) -> Result<StandaloneOutcome, AgentError> {
    let proof_id = "standalone";
    let doc = match parse_proof_document(proof_raw) {
        Ok(doc) => doc,
        Err(err) => {
            let report = malformed_report(proof_id, "deterministic", &err);
            return Ok(StandaloneOutcome { report, difficulty: None, structural: None });
        }
    };
    let judge = agents.call(
        AgentCall::new(AgentRole::DifficultyJudge)
            .input(InputKind::Problem, problem)
            .input(InputKind::Proof, proof_raw),
    );
    let difficulty = match &judge {
        Ok(result) if result.ok() => result
            .file("decision.md")
            .and_then(|d| parse_structured_verdict(d, &["EASY", "HARD"]).ok())
            .unwrap_or_else(|| "HARD".to_string()),
        Err(err) if !err.is_agent_failure() => return Err(err.clone()),
        _ => "HARD".to_string(),
    };

    if difficulty == "EASY" {
        let (mut phases, urls) = structural_prechecks(problem, &doc, options);
        let all: Vec<PhaseId> = PhaseId::STRUCTURAL.into_iter().chain([PhaseId::Detailed]).collect();
        let default_pass: &[PhaseId] = if rules.is_empty() { &[PhaseId::HumanRules] } else { &[] };
        let assessment = assess(judge, "report.yaml", &all, default_pass)?;
        phases.extend(assessment.phases);
        let report = VerificationReport::assemble(
            proof_id,
            agents.label(AgentRole::DifficultyJudge, None),
            phases,
            merge_citations(urls, assessment.citations),
            assessment.appendix,
        );
        return Ok(StandaloneOutcome { report, difficulty: Some(difficulty), structural: None });
    }

    let target = Target { proof_id, ..Target::default() };
    let structural = run_structural_verification(problem, &doc, None, rules, agents, options, target)?;
    let report = if structural.passed() {
        run_detailed_verification(problem, &doc, None, &structural, agents, target)?
    } else {
        structural.clone()
    };
    Ok(StandaloneOutcome { report, difficulty: Some(difficulty), structural: Some(structural) })
}
