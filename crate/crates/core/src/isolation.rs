//! Agent roles and which artifacts each role is allowed to see.
//!
//! Provers never share context with verifiers: a verifier request may carry
//! the problem and the finished proof (plus the plan in decomposition mode),
//! never the prover's prompt, transcript or sibling attempts. The verdict
//! agent sees reports only.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AgentRole {
    LiteratureSurveyor,
    Brainstormer,
    Decomposer,
    Prover,
    StructuralVerifier,
    DetailedVerifier,
    Selector,
    Regulator,
    Verdict,
    DifficultyJudge,
    Summarizer,
}

impl AgentRole {
    pub const ALL: [Self; 11] = [
        Self::LiteratureSurveyor,
        Self::Brainstormer,
        Self::Decomposer,
        Self::Prover,
        Self::StructuralVerifier,
        Self::DetailedVerifier,
        Self::Selector,
        Self::Regulator,
        Self::Verdict,
        Self::DifficultyJudge,
        Self::Summarizer,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Self::LiteratureSurveyor => "literature_surveyor",
            Self::Brainstormer => "brainstormer",
            Self::Decomposer => "decomposer",
            Self::Prover => "prover",
            Self::StructuralVerifier => "structural_verifier",
            Self::DetailedVerifier => "detailed_verifier",
            Self::Selector => "selector",
            Self::Regulator => "regulator",
            Self::Verdict => "verdict",
            Self::DifficultyJudge => "difficulty_judge",
            Self::Summarizer => "summarizer",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|r| r.name() == name)
    }

    pub fn is_verifier(self) -> bool {
        matches!(self, Self::StructuralVerifier | Self::DetailedVerifier | Self::DifficultyJudge)
    }

    /// Files the agent must leave in its workspace on success.
    pub fn required_outputs(self) -> &'static [&'static str] {
        match self {
            Self::LiteratureSurveyor => &["survey.md"],
            Self::Brainstormer => &["strategy.md"],
            Self::Decomposer => &["plan.yaml"],
            Self::Prover => &["proof.md"],
            Self::StructuralVerifier | Self::DetailedVerifier => &["report.yaml"],
            Self::Selector | Self::Regulator | Self::Verdict | Self::DifficultyJudge => &["decision.md"],
            Self::Summarizer => &["summary.md"],
        }
    }

    /// Files collected when present but not required.
    pub fn optional_outputs(self) -> &'static [&'static str] {
        match self {
            Self::DifficultyJudge => &["report.yaml"],
            _ => &[],
        }
    }

    pub fn allows(self, input: InputKind) -> bool {
        use InputKind as I;
        match self {
            Self::LiteratureSurveyor => matches!(input, I::Problem | I::Hints),
            Self::Brainstormer => matches!(input, I::Problem | I::LiteratureSurvey | I::Hints),
            Self::Decomposer => matches!(
                input,
                I::Problem
                    | I::LiteratureSurvey
                    | I::Strategies
                    | I::Hints
                    | I::PreviousPlans
                    | I::RegulatorAnalyses
            ),
            Self::Prover => matches!(
                input,
                I::Problem
                    | I::LiteratureSurvey
                    | I::Strategies
                    | I::Plan
                    | I::PreviousProof
                    | I::PreviousReports
                    | I::RegulatorAnalyses
                    | I::Hints
            ),
            Self::StructuralVerifier => matches!(input, I::Problem | I::Proof | I::Plan | I::Rules),
            Self::DetailedVerifier => {
                matches!(input, I::Problem | I::Proof | I::Plan | I::StructuralReport)
            }
            Self::DifficultyJudge => matches!(input, I::Problem | I::Proof),
            Self::Selector => matches!(input, I::Problem | I::ProofReportPairs),
            Self::Regulator => matches!(input, I::Reports | I::Plan),
            Self::Verdict => matches!(input, I::Reports),
            Self::Summarizer => matches!(input, I::Problem | I::RunDigest),
        }
    }
}

impl core::fmt::Display for AgentRole {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str(self.name())
    }
}

/// Named artifact slots an agent request can carry. Each name doubles as the
/// prompt-template placeholder for that slot.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InputKind {
    Problem,
    LiteratureSurvey,
    Strategies,
    Hints,
    Plan,
    PreviousPlans,
    RegulatorAnalyses,
    PreviousProof,
    PreviousReports,
    Proof,
    Rules,
    StructuralReport,
    Reports,
    ProofReportPairs,
    RunDigest,
    /// The prover's own reasoning trace. No role may receive it.
    ProverTranscript,
    /// The prompt a prover was given. No role may receive it.
    ProverPrompt,
    /// Another prover's attempt from the same round. No role may receive it.
    SiblingAttempt,
}

impl InputKind {
    pub const ALL: [Self; 18] = [
        Self::Problem,
        Self::LiteratureSurvey,
        Self::Strategies,
        Self::Hints,
        Self::Plan,
        Self::PreviousPlans,
        Self::RegulatorAnalyses,
        Self::PreviousProof,
        Self::PreviousReports,
        Self::Proof,
        Self::Rules,
        Self::StructuralReport,
        Self::Reports,
        Self::ProofReportPairs,
        Self::RunDigest,
        Self::ProverTranscript,
        Self::ProverPrompt,
        Self::SiblingAttempt,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Self::Problem => "problem",
            Self::LiteratureSurvey => "literature_survey",
            Self::Strategies => "strategies",
            Self::Hints => "hints",
            Self::Plan => "plan",
            Self::PreviousPlans => "previous_plans",
            Self::RegulatorAnalyses => "regulator_analyses",
            Self::PreviousProof => "previous_proof",
            Self::PreviousReports => "previous_reports",
            Self::Proof => "proof",
            Self::Rules => "rules",
            Self::StructuralReport => "structural_report",
            Self::Reports => "reports",
            Self::ProofReportPairs => "proof_report_pairs",
            Self::RunDigest => "run_digest",
            Self::ProverTranscript => "prover_transcript",
            Self::ProverPrompt => "prover_prompt",
            Self::SiblingAttempt => "sibling_attempt",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.name() == name)
    }

    /// Prover-side context that must never reach another agent.
    pub fn is_prover_context(self) -> bool {
        matches!(self, Self::ProverTranscript | Self::ProverPrompt | Self::SiblingAttempt)
    }
}
