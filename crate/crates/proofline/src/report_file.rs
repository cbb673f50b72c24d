//! `report.yaml`: what verifier agents write, and what the run directory stores.
//!
//! Agents write per-phase verdicts plus a free-text appendix that must end
//! with a `VERDICT: PASS` or `VERDICT: FAIL` line:
//!
//! ```yaml
//! phases:
//!   - phase: P1_integrity
//!     verdict: pass          # pass | fail | uncertain
//!     findings: []
//!   - phase: P3_citations
//!     verdict: fail
//!     findings:
//!       - code: StatementNotFound
//!         message: Theorem 3.2 does not appear on p. 14
//!         location: citation c2
//! citations:                 # optional, per-citation checks
//!   - id: c2
//!     title_author_match: pass
//!     statement_exists: fail
//! appendix: |
//!   Notes...
//!   VERDICT: FAIL
//! ```
//!
//! The stored form is a serialised [`VerificationReport`].

use std::collections::BTreeMap;

use proofline_core::{
    parse_verdict_line, CitationVerdict, Finding, PhaseId, PhaseResult, UrlStatus, Verdict, VerificationReport,
};
use serde::Deserialize;

#[derive(Debug, Deserialize)]
struct AgentReportFile {
    #[serde(default)]
    phases: Vec<AgentPhase>,
    #[serde(default)]
    citations: Vec<AgentCitation>,
    #[serde(default)]
    appendix: String,
}

#[derive(Debug, Deserialize)]
struct AgentPhase {
    phase: String,
    verdict: Verdict,
    #[serde(default)]
    findings: Vec<Finding>,
}

fn uncertain() -> Verdict {
    Verdict::Uncertain
}

#[derive(Debug, Deserialize)]
struct AgentCitation {
    id: String,
    #[serde(default = "uncertain")]
    title_author_match: Verdict,
    #[serde(default = "uncertain")]
    statement_exists: Verdict,
    #[serde(default = "uncertain")]
    statement_verbatim: Verdict,
    #[serde(default = "uncertain")]
    conditions_applied: Verdict,
}

/// An agent's report reduced to per-phase results for the phases it covers.
#[derive(Debug, Clone, PartialEq)]
pub struct AgentAssessment {
    pub phases: Vec<PhaseResult>,
    pub citations: Vec<CitationVerdict>,
    pub appendix: String,
}

impl AgentAssessment {
    /// Every covered phase fails with the given finding on the first one.
    pub fn failed(covered: &[PhaseId], finding: Finding, appendix: String) -> Self {
        let mut phases: Vec<PhaseResult> =
            covered.iter().map(|p| PhaseResult::new(*p, Verdict::Uncertain, vec![])).collect();
        if let Some(first) = phases.first_mut() {
            *first = PhaseResult::new(first.phase, Verdict::Fail, vec![finding]);
        }
        Self { phases, citations: Vec::new(), appendix }
    }
}

/// Reads an agent-written report. `covered` lists the phases this agent is
/// responsible for; `default_pass` lists covered phases that pass when the
/// agent does not mention them (nothing to check). Problems with the file
/// become findings rather than errors.
pub fn parse_agent_report(raw: &str, covered: &[PhaseId], default_pass: &[PhaseId]) -> AgentAssessment {
    let file: AgentReportFile = match serde_yaml::from_str(raw) {
        Ok(file) => file,
        Err(err) => {
            return AgentAssessment::failed(
                covered,
                Finding::new("MalformedAgentReport", format!("report.yaml could not be read: {err}")),
                raw.to_string(),
            )
        }
    };
    let overall = parse_verdict_line(&file.appendix)
        .or_else(|| parse_verdict_line(raw))
        .map(|line| line.token.to_ascii_uppercase());
    let mut by_phase: BTreeMap<PhaseId, PhaseResult> = BTreeMap::new();
    for entry in file.phases {
        let Some(phase) = PhaseId::parse(&entry.phase) else { continue };
        if !covered.contains(&phase) {
            continue;
        }
        let result = PhaseResult::new(phase, entry.verdict, entry.findings);
        let merged = match by_phase.remove(&phase) {
            Some(existing) => existing.merge(result),
            None => result,
        };
        by_phase.insert(phase, merged);
    }
    for phase in covered {
        by_phase.entry(*phase).or_insert_with(|| {
            if default_pass.contains(phase) {
                PhaseResult::pass(*phase)
            } else {
                PhaseResult::new(
                    *phase,
                    Verdict::Uncertain,
                    vec![Finding::new("PhaseNotReported", format!("agent report has no {} entry", phase.name()))],
                )
            }
        });
    }

    let mut phases: Vec<PhaseResult> = by_phase.into_values().collect();
    let last = phases.len().saturating_sub(1);
    match overall.as_deref() {
        Some("PASS") => {}
        Some("FAIL") => {
            if phases.iter().all(|p| p.verdict == Verdict::Pass) {
                if let Some(p) = phases.get_mut(last) {
                    *p = PhaseResult::new(
                        p.phase,
                        Verdict::Fail,
                        vec![Finding::new("AgentOverallFail", "agent rejected the proof without a failing phase")],
                    );
                }
            }
        }
        other => {
            let message = match other {
                Some(token) => format!("unexpected overall verdict `{token}`"),
                None => "report has no `VERDICT:` line".to_string(),
            };
            if let Some(p) = phases.first_mut() {
                *p = p.clone().merge(PhaseResult::new(p.phase, Verdict::Fail, vec![Finding::new("MissingVerdict", message)]));
            }
        }
    }

    let citations = file
        .citations
        .into_iter()
        .map(|c| CitationVerdict {
            citation_id: c.id,
            url_resolves: UrlStatus::Skipped,
            title_author_match: c.title_author_match,
            statement_exists: c.statement_exists,
            statement_verbatim: c.statement_verbatim,
            conditions_applied: c.conditions_applied,
        })
        .collect();
    AgentAssessment { phases, citations, appendix: file.appendix }
}

pub fn report_to_yaml(report: &VerificationReport) -> String {
    serde_yaml::to_string(report).expect("report serialises")
}

pub fn report_from_yaml(raw: &str) -> Result<VerificationReport, serde_yaml::Error> {
    serde_yaml::from_str(raw)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proofline_core::Overall;

    const STRUCTURAL: [PhaseId; 5] = PhaseId::STRUCTURAL;

    #[test]
    fn full_pass() {
        let raw = "phases:\n  - {phase: P1, verdict: pass}\n  - {phase: P2, verdict: pass}\n  - {phase: P3, verdict: pass}\n  - {phase: P4_subgoal_tree, verdict: pass}\nappendix: |\n  fine\n  VERDICT: PASS\n";
        let a = parse_agent_report(raw, &STRUCTURAL, &[PhaseId::HumanRules]);
        assert!(a.phases.iter().all(|p| p.verdict == Verdict::Pass));
        assert_eq!(a.phases.len(), 5);
    }

    #[test]
    fn missing_phase_and_verdict() {
        let raw = "phases:\n  - {phase: P1, verdict: pass}\n";
        let a = parse_agent_report(raw, &[PhaseId::Integrity, PhaseId::Completeness], &[]);
        assert_eq!(a.phases[0].verdict, Verdict::Fail);
        assert_eq!(a.phases[0].findings[0].code, "MissingVerdict");
        assert_eq!(a.phases[1].verdict, Verdict::Uncertain);
    }

    #[test]
    fn overall_fail_without_failing_phase() {
        let raw = "phases:\n  - {phase: P6, verdict: pass}\nappendix: \"VERDICT: FAIL\"\n";
        let a = parse_agent_report(raw, &[PhaseId::Detailed], &[]);
        assert_eq!(a.phases[0].verdict, Verdict::Fail);
        assert_eq!(a.phases[0].findings[0].code, "AgentOverallFail");
    }

    #[test]
    fn garbage_is_a_failure() {
        let a = parse_agent_report("phases: [", &[PhaseId::Detailed], &[]);
        assert_eq!(a.phases[0].verdict, Verdict::Fail);
        assert_eq!(a.phases[0].findings[0].code, "MalformedAgentReport");
    }

    #[test]
    fn stored_report_round_trips() {
        let report = VerificationReport::assemble(
            "p1",
            "scripted",
            vec![PhaseResult::pass(PhaseId::Integrity)],
            vec![CitationVerdict::url_only("c1", UrlStatus::Yes)],
            "notes",
        );
        let back = report_from_yaml(&report_to_yaml(&report)).unwrap();
        assert_eq!(back, report);
        assert_eq!(back.overall, Overall::Pass);
    }
}
