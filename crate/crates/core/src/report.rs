//! Verification phases, per-phase results and the report merge rules.
//!
//! Every phase verdict is the worst of the deterministic pre-check verdict
//! and the agent's verdict, with `pass < uncertain < fail`. A report passes
//! only when every present phase passes.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};
use unicode_normalization::UnicodeNormalization;

use crate::document::ProofDocument;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum PhaseId {
    #[serde(rename = "P1_integrity")]
    Integrity,
    #[serde(rename = "P2_completeness")]
    Completeness,
    #[serde(rename = "P3_citations")]
    Citations,
    #[serde(rename = "P4_subgoal_tree")]
    SubgoalTree,
    #[serde(rename = "P5_human_rules")]
    HumanRules,
    #[serde(rename = "P6_detailed")]
    Detailed,
}

impl PhaseId {
    pub const STRUCTURAL: [Self; 5] =
        [Self::Integrity, Self::Completeness, Self::Citations, Self::SubgoalTree, Self::HumanRules];

    pub fn name(self) -> &'static str {
        match self {
            Self::Integrity => "P1_integrity",
            Self::Completeness => "P2_completeness",
            Self::Citations => "P3_citations",
            Self::SubgoalTree => "P4_subgoal_tree",
            Self::HumanRules => "P5_human_rules",
            Self::Detailed => "P6_detailed",
        }
    }

    /// Accepts the full name (`P3_citations`) or the short form (`P3`), any case.
    pub fn parse(name: &str) -> Option<Self> {
        let name = name.trim();
        [
            Self::Integrity,
            Self::Completeness,
            Self::Citations,
            Self::SubgoalTree,
            Self::HumanRules,
            Self::Detailed,
        ]
        .into_iter()
        .find(|p| p.name().eq_ignore_ascii_case(name) || p.name()[..2].eq_ignore_ascii_case(name))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Uncertain,
    Fail,
}

impl Verdict {
    pub fn worst(self, other: Self) -> Self {
        self.max(other)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Overall {
    Pass,
    Fail,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Finding {
    pub code: String,
    pub message: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub location: Option<String>,
}

impl Finding {
    pub fn new(code: impl Into<String>, message: impl Into<String>) -> Self {
        Self { code: code.into(), message: message.into(), location: None }
    }

    pub fn at(mut self, location: impl Into<String>) -> Self {
        self.location = Some(location.into());
        self
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PhaseResult {
    pub phase: PhaseId,
    pub verdict: Verdict,
    #[serde(default)]
    pub findings: Vec<Finding>,
}

impl PhaseResult {
    /// Builds a result, adding a placeholder finding to a bare `fail`.
    pub fn new(phase: PhaseId, verdict: Verdict, mut findings: Vec<Finding>) -> Self {
        if verdict == Verdict::Fail && findings.is_empty() {
            findings.push(Finding::new("UnexplainedFailure", "phase failed without itemised findings"));
        }
        Self { phase, verdict, findings }
    }

    pub fn pass(phase: PhaseId) -> Self {
        Self { phase, verdict: Verdict::Pass, findings: Vec::new() }
    }

    /// Pass when there are no findings, fail otherwise.
    pub fn from_findings(phase: PhaseId, findings: Vec<Finding>) -> Self {
        let verdict = if findings.is_empty() { Verdict::Pass } else { Verdict::Fail };
        Self { phase, verdict, findings }
    }

    /// Worst-of merge; `self` findings come first.
    pub fn merge(mut self, other: PhaseResult) -> Self {
        debug_assert_eq!(self.phase, other.phase);
        self.verdict = self.verdict.worst(other.verdict);
        self.findings.extend(other.findings);
        Self::new(self.phase, self.verdict, self.findings)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum UrlStatus {
    Yes,
    No,
    Skipped,
}

/// Outcome of the five per-citation checks. Only `url_resolves` is decided
/// in-process; the rest come from the verifier agent.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CitationVerdict {
    pub citation_id: String,
    pub url_resolves: UrlStatus,
    pub title_author_match: Verdict,
    pub statement_exists: Verdict,
    pub statement_verbatim: Verdict,
    pub conditions_applied: Verdict,
}

impl CitationVerdict {
    pub fn url_only(citation_id: impl Into<String>, url_resolves: UrlStatus) -> Self {
        Self {
            citation_id: citation_id.into(),
            url_resolves,
            title_author_match: Verdict::Uncertain,
            statement_exists: Verdict::Uncertain,
            statement_verbatim: Verdict::Uncertain,
            conditions_applied: Verdict::Uncertain,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub proof_id: String,
    pub verifier_label: String,
    pub phase_results: Vec<PhaseResult>,
    pub overall: Overall,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub citations: Vec<CitationVerdict>,
    #[serde(default)]
    pub appendix: String,
}

impl VerificationReport {
    /// Sorts phases, merges duplicates and derives `overall`.
    pub fn assemble(
        proof_id: impl Into<String>,
        verifier_label: impl Into<String>,
        phases: Vec<PhaseResult>,
        citations: Vec<CitationVerdict>,
        appendix: impl Into<String>,
    ) -> Self {
        let mut by_phase: BTreeMap<PhaseId, PhaseResult> = BTreeMap::new();
        for result in phases {
            let merged = match by_phase.remove(&result.phase) {
                Some(existing) => existing.merge(result),
                None => PhaseResult::new(result.phase, result.verdict, result.findings),
            };
            by_phase.insert(merged.phase, merged);
        }
        let phase_results: Vec<PhaseResult> = by_phase.into_values().collect();
        let overall = if !phase_results.is_empty() && phase_results.iter().all(|p| p.verdict == Verdict::Pass) {
            Overall::Pass
        } else {
            Overall::Fail
        };
        Self {
            proof_id: proof_id.into(),
            verifier_label: verifier_label.into(),
            phase_results,
            overall,
            citations,
            appendix: appendix.into(),
        }
    }

    pub fn passed(&self) -> bool {
        self.overall == Overall::Pass
    }

    pub fn phase(&self, phase: PhaseId) -> Option<&PhaseResult> {
        self.phase_results.iter().find(|p| p.phase == phase)
    }

    pub fn passing_phases(&self) -> usize {
        self.phase_results.iter().filter(|p| p.verdict == Verdict::Pass).count()
    }

    /// True when the invariants of a well-formed report hold.
    pub fn is_consistent(&self) -> bool {
        let sorted = self.phase_results.windows(2).all(|w| w[0].phase < w[1].phase);
        let fail_explained = self
            .phase_results
            .iter()
            .all(|p| p.verdict != Verdict::Fail || !p.findings.is_empty());
        let all_pass = !self.phase_results.is_empty()
            && self.phase_results.iter().all(|p| p.verdict == Verdict::Pass);
        let gated = match self.phase(PhaseId::Detailed) {
            Some(_) => PhaseId::STRUCTURAL
                .iter()
                .all(|ph| self.phase(*ph).is_some_and(|r| r.verdict == Verdict::Pass)),
            None => true,
        };
        sorted && fail_explained && gated && (all_pass == (self.overall == Overall::Pass))
    }
}

fn normalized_words(text: &str) -> Vec<String> {
    let normalized: String = text.nfc().collect();
    normalized.split_whitespace().map(|w| w.to_string()).collect()
}

/// Word-by-word comparison of the restatement against the original problem
/// after NFC normalisation and whitespace collapsing.
pub fn integrity_prefilter(original_problem: &str, doc: &ProofDocument) -> PhaseResult {
    let phase = PhaseId::Integrity;
    let restated = normalized_words(doc.problem_restatement.as_deref().unwrap_or(""));
    if restated.is_empty() {
        return PhaseResult::new(
            phase,
            Verdict::Fail,
            vec![Finding::new("MissingRestatement", "the proof does not restate the problem")],
        );
    }
    let original = normalized_words(original_problem);
    let first_difference = (0..original.len().max(restated.len()))
        .find(|&i| original.get(i) != restated.get(i));
    match first_difference {
        None => PhaseResult::pass(phase),
        Some(i) => {
            let expected = original.get(i).map(String::as_str).unwrap_or("<end of problem>");
            let found = restated.get(i).map(String::as_str).unwrap_or("<end of restatement>");
            PhaseResult::new(
                phase,
                Verdict::Fail,
                vec![Finding::new(
                    "RestatementMismatch",
                    format!("restatement diverges from the problem: expected \"{expected}\", found \"{found}\""),
                )
                .at(format!("word {}", i + 1))],
            )
        }
    }
}
