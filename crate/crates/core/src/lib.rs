//! Pure building blocks for the proofline orchestrator.
//!
//! Everything here works on in-memory text and values and needs only an
//! allocator: the proof document grammar and its checks, the decomposition
//! plan DAG, the retry budget state machine, the `VERDICT:` line protocol,
//! verification report merging and the agent isolation matrix. The `proofline`
//! crate layers IO, agents, the run directory and the CLI on top.

#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod budget;
pub mod document;
pub mod isolation;
pub mod plan;
pub mod progress;
pub mod report;
pub mod verdict;

pub use budget::{apply_budget, AttemptTally, BudgetLimits, EffectiveAction, RegulatorDecision, RetryBudget};
pub use document::{
    extract_problem_restatement, lint_key_steps, parse_proof_document, validate_subgoal_tree,
    CitationBlock, KeyOriginalStep, LintFinding, ParseError, ProofDocument, Resolution, Section,
    SubgoalNode, SubgoalTree, TreeCheckOptions, TreeFinding, DEFAULT_VAGUE_LEXICON,
};
pub use isolation::{AgentRole, InputKind};
pub use plan::{
    plan_diff, topological_order, validate_plan, CitedSource, DecompositionPlan, Difficulty,
    PlanDiff, PlanFinding, PlanStep,
};
pub use progress::{Coordinates, PipelineStep, ProgressPoint, RunMode};
pub use report::{
    integrity_prefilter, CitationVerdict, Finding, Overall, PhaseId, PhaseResult, UrlStatus,
    Verdict, VerificationReport,
};
pub use verdict::{parse_structured_verdict, parse_verdict_line, VerdictLine, VerdictParseError};
