//! Choosing among parallel proofs and deciding whether a round is done.

use proofline_core::{parse_structured_verdict, parse_verdict_line, AgentRole, InputKind, VerificationReport};
use serde::{Deserialize, Serialize};

use crate::agent::{AgentCall, AgentError, AgentResult};
use crate::report_file::report_to_yaml;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SelectionMethod {
    /// The only proof of the round; no selector call.
    Only,
    Agent,
    Fallback,
}

/// Contents of `selection.yaml`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Selection {
    pub proof_id: String,
    pub prover: u32,
    pub method: SelectionMethod,
}

impl Selection {
    fn new(prover: u32, method: SelectionMethod) -> Self {
        Self { proof_id: format!("p{prover}"), prover, method }
    }
}

/// A proof with the final report of each of its verifiers.
#[derive(Debug, Clone)]
pub struct Candidate<'a> {
    pub prover: u32,
    pub proof: &'a str,
    pub reports: Vec<&'a VerificationReport>,
}

impl Candidate<'_> {
    pub fn score(&self) -> usize {
        self.reports.iter().map(|r| r.passing_phases()).sum()
    }
}

/// Reads `VERDICT: SELECT pK` (also `K` or `#K`), accepting only listed provers.
pub fn parse_selection(decision: &str, provers: &[u32]) -> Option<u32> {
    let line = parse_verdict_line(decision)?;
    if !line.token.eq_ignore_ascii_case("SELECT") {
        return None;
    }
    let arg = line.argument?.split_whitespace().next()?;
    let digits = arg.trim_start_matches(['p', 'P', '#']);
    let k: u32 = digits.parse().ok()?;
    provers.contains(&k).then_some(k)
}

/// Most passing phases wins; ties go to the lowest prover index.
pub fn fallback_choice(candidates: &[Candidate<'_>]) -> u32 {
    candidates
        .iter()
        .max_by(|a, b| a.score().cmp(&b.score()).then(b.prover.cmp(&a.prover)))
        .map(|c| c.prover)
        .expect("at least one candidate")
}

pub fn reports_text(reports: &[&VerificationReport]) -> String {
    reports.iter().map(|r| report_to_yaml(r)).collect::<Vec<_>>().join("---\n")
}

fn pairs_text(candidates: &[Candidate<'_>]) -> String {
    candidates
        .iter()
        .map(|c| {
            format!(
                "## Candidate p{}\n\n### Proof\n\n{}\n\n### Reports\n\n```yaml\n{}```\n",
                c.prover,
                c.proof.trim_end(),
                reports_text(&c.reports)
            )
        })
        .collect::<Vec<_>>()
        .join("\n")
}

/// Picks the best proof. A single candidate is taken without asking the
/// selector; an unusable selector answer falls back to [`fallback_choice`].
pub fn select_best(
    problem: &str,
    candidates: &[Candidate<'_>],
    invoke: &dyn Fn(AgentCall) -> Result<AgentResult, AgentError>,
    call_index: Option<u32>,
) -> Result<Selection, AgentError> {
    assert!(!candidates.is_empty(), "selection needs at least one proof");
    if candidates.len() == 1 {
        return Ok(Selection::new(candidates[0].prover, SelectionMethod::Only));
    }
    let mut call = AgentCall::new(AgentRole::Selector)
        .input(InputKind::Problem, problem)
        .input(InputKind::ProofReportPairs, pairs_text(candidates));
    call.call_index = call_index;
    let provers: Vec<u32> = candidates.iter().map(|c| c.prover).collect();
    let picked = match invoke(call) {
        Ok(result) if result.ok() => result.file("decision.md").and_then(|d| parse_selection(d, &provers)),
        Err(e) if !e.is_agent_failure() => return Err(e),
        _ => None,
    };
    Ok(match picked {
        Some(k) => Selection::new(k, SelectionMethod::Agent),
        None => Selection::new(fallback_choice(candidates), SelectionMethod::Fallback),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RoundVerdict {
    Done,
    Continue,
}

/// Contents of a `verdict.yaml`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VerdictRecord {
    pub verdict: RoundVerdict,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub proof_id: Option<String>,
    /// The agent's own token, when it gave a valid one.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub agent: Option<String>,
    /// True when an agent DONE was overridden because a report failed.
    #[serde(default)]
    pub guard: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
}

impl VerdictRecord {
    pub fn done(&self) -> bool {
        self.verdict == RoundVerdict::Done
    }

    pub fn no_proofs() -> Self {
        Self { verdict: RoundVerdict::Continue, proof_id: None, agent: None, guard: false, reason: Some("no_proofs".into()) }
    }
}

/// Asks the verdict agent, which sees the reports only. DONE on a report set
/// that does not fully pass is overridden to CONTINUE.
pub fn decide_verdict(
    reports: &[&VerificationReport],
    invoke: &dyn Fn(AgentCall) -> Result<AgentResult, AgentError>,
    call_index: Option<u32>,
) -> Result<VerdictRecord, AgentError> {
    let mut call = AgentCall::new(AgentRole::Verdict).input(InputKind::Reports, reports_text(reports));
    call.call_index = call_index;
    let agent = match invoke(call) {
        Ok(result) if result.ok() => {
            result.file("decision.md").and_then(|d| parse_structured_verdict(d, &["DONE", "CONTINUE"]).ok())
        }
        Err(e) if !e.is_agent_failure() => return Err(e),
        _ => None,
    };
    let all_pass = !reports.is_empty() && reports.iter().all(|r| r.passed());
    let proof_id = reports.first().map(|r| r.proof_id.clone());
    let record = match agent.as_deref() {
        Some("DONE") if all_pass => {
            VerdictRecord { verdict: RoundVerdict::Done, proof_id, agent, guard: false, reason: None }
        }
        Some("DONE") => VerdictRecord {
            verdict: RoundVerdict::Continue,
            proof_id,
            agent,
            guard: true,
            reason: Some("reports do not all pass".into()),
        },
        Some(_) => VerdictRecord { verdict: RoundVerdict::Continue, proof_id, agent, guard: false, reason: None },
        None => VerdictRecord {
            verdict: RoundVerdict::Continue,
            proof_id,
            agent: None,
            guard: false,
            reason: Some("no usable verdict".into()),
        },
    };
    Ok(record)
}

#[cfg(test)]
mod tests {
    use std::collections::BTreeMap;

    use proofline_core::{Finding, PhaseId, PhaseResult, Verdict};

    use super::*;
    use crate::agent::ExitStatus;

    fn report(id: &str, passing: usize) -> VerificationReport {
        let phases = [
            PhaseId::Integrity,
            PhaseId::Completeness,
            PhaseId::Citations,
            PhaseId::SubgoalTree,
            PhaseId::HumanRules,
            PhaseId::Detailed,
        ]
        .into_iter()
        .enumerate()
        .map(|(i, p)| {
            if i < passing {
                PhaseResult::pass(p)
            } else {
                PhaseResult::new(p, Verdict::Fail, vec![Finding::new("X", "x")])
            }
        })
        .collect();
        VerificationReport::assemble(id, "t", phases, vec![], "")
    }

    fn answering(decision: &'static str) -> impl Fn(AgentCall) -> Result<AgentResult, AgentError> {
        move |_| {
            let mut output_files = BTreeMap::new();
            output_files.insert("decision.md".to_string(), decision.to_string());
            Ok(AgentResult { output_files, transcript: String::new(), exit_status: ExitStatus::Ok, structured_verdict: None })
        }
    }

    #[test]
    fn one_candidate_needs_no_agent() {
        let r = report("p1", 6);
        let c = [Candidate { prover: 1, proof: "x", reports: vec![&r] }];
        let never = |_: AgentCall| -> Result<AgentResult, AgentError> { panic!("selector called") };
        assert_eq!(select_best("P", &c, &never, None).unwrap(), Selection::new(1, SelectionMethod::Only));
    }

    #[test]
    fn agent_choice_and_fallback() {
        let (r1, r2) = (report("p1", 5), report("p2", 6));
        let c = [
            Candidate { prover: 1, proof: "a", reports: vec![&r1] },
            Candidate { prover: 2, proof: "b", reports: vec![&r2] },
        ];
        assert_eq!(select_best("P", &c, &answering("VERDICT: SELECT p1"), None).unwrap().prover, 1);
        let garbage = select_best("P", &c, &answering("I like both"), None).unwrap();
        assert_eq!(garbage, Selection::new(2, SelectionMethod::Fallback));
        assert_eq!(select_best("P", &c, &answering("VERDICT: SELECT p7"), None).unwrap().method, SelectionMethod::Fallback);
    }

    #[test]
    fn fallback_ties_go_to_lowest_index() {
        let (r1, r2, r3) = (report("a", 4), report("b", 6), report("c", 6));
        let c = [
            Candidate { prover: 1, proof: "", reports: vec![&r1] },
            Candidate { prover: 2, proof: "", reports: vec![&r2] },
            Candidate { prover: 3, proof: "", reports: vec![&r3] },
        ];
        assert_eq!(fallback_choice(&c), 2);
    }

    #[test]
    fn verdict_guard() {
        let (pass, fail) = (report("p1", 6), report("p1", 3));
        assert!(decide_verdict(&[&pass], &answering("VERDICT: DONE"), None).unwrap().done());
        let guarded = decide_verdict(&[&fail], &answering("VERDICT: DONE"), None).unwrap();
        assert!(!guarded.done() && guarded.guard);
        let cont = decide_verdict(&[&pass], &answering("VERDICT: CONTINUE"), None).unwrap();
        assert!(!cont.done() && !cont.guard);
        assert!(!decide_verdict(&[&pass], &answering("looks fine"), None).unwrap().done());
    }
}
