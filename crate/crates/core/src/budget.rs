//! Decomposition-mode retry budget and the regulator's three-level hierarchy.
//!
//! Counters are `(attempt, revision, proof)`: attempt and proof count from 1,
//! revision from 0. A decision whose level is exhausted escalates to the next
//! level; escalating past the last decomposition exhausts the budget.

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BudgetLimits {
    pub max_decompositions: u32,
    pub max_plan_revisions: u32,
    pub max_proofs_per_plan: u32,
}

impl Default for BudgetLimits {
    fn default() -> Self {
        Self { max_decompositions: 3, max_plan_revisions: 2, max_proofs_per_plan: 3 }
    }
}

impl BudgetLimits {
    /// Upper bound on prover invocations in one decomposition-mode run.
    pub fn max_proof_attempts(&self) -> u32 {
        self.max_decompositions * (1 + self.max_plan_revisions) * self.max_proofs_per_plan
    }

    /// Upper bound on decomposer invocations in one run.
    pub fn max_plans(&self) -> u32 {
        self.max_decompositions * (1 + self.max_plan_revisions)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct RetryBudget {
    pub attempt: u32,
    pub revision: u32,
    pub proof: u32,
}

impl RetryBudget {
    pub const START: Self = Self { attempt: 1, revision: 0, proof: 1 };

    pub fn within(&self, limits: &BudgetLimits) -> bool {
        (1..=limits.max_decompositions).contains(&self.attempt)
            && self.revision <= limits.max_plan_revisions
            && (1..=limits.max_proofs_per_plan).contains(&self.proof)
    }
}

impl Default for RetryBudget {
    fn default() -> Self {
        Self::START
    }
}

impl core::fmt::Display for RetryBudget {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        write!(f, "(d={}, r={}, p={})", self.attempt, self.revision, self.proof)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RegulatorDecision {
    ReviseProof,
    RevisePlan,
    Rewrite,
}

impl RegulatorDecision {
    pub const ALL: [Self; 3] = [Self::ReviseProof, Self::RevisePlan, Self::Rewrite];
    pub const TOKENS: [&'static str; 3] = ["REVISE_PROOF", "REVISE_PLAN", "REWRITE"];

    pub fn token(self) -> &'static str {
        match self {
            Self::ReviseProof => "REVISE_PROOF",
            Self::RevisePlan => "REVISE_PLAN",
            Self::Rewrite => "REWRITE",
        }
    }

    pub fn from_token(token: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|d| d.token() == token)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EffectiveAction {
    ReviseProof,
    RevisePlan,
    Rewrite,
    Exhausted,
}

/// Applies a regulator decision to the budget, escalating when the requested
/// level has no room left. An exhausted result leaves the budget unchanged.
pub fn apply_budget(
    budget: RetryBudget,
    decision: RegulatorDecision,
    limits: &BudgetLimits,
) -> (RetryBudget, EffectiveAction) {
    let mut level = decision;
    loop {
        match level {
            RegulatorDecision::ReviseProof => {
                if budget.proof < limits.max_proofs_per_plan {
                    let next = RetryBudget { proof: budget.proof + 1, ..budget };
                    return (next, EffectiveAction::ReviseProof);
                }
                level = RegulatorDecision::RevisePlan;
            }
            RegulatorDecision::RevisePlan => {
                if budget.revision < limits.max_plan_revisions {
                    let next = RetryBudget { revision: budget.revision + 1, proof: 1, ..budget };
                    return (next, EffectiveAction::RevisePlan);
                }
                level = RegulatorDecision::Rewrite;
            }
            RegulatorDecision::Rewrite => {
                if budget.attempt < limits.max_decompositions {
                    let next = RetryBudget { attempt: budget.attempt + 1, revision: 0, proof: 1 };
                    return (next, EffectiveAction::Rewrite);
                }
                return (budget, EffectiveAction::Exhausted);
            }
        }
    }
}

/// Per-run accounting in the shape of a per-attempt breakdown row: the number
/// of decompositions, the number of plan versions in the final decomposition,
/// and the number of proofs written in the final decomposition.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct AttemptTally {
    pub attempts: u32,
    pub revisions: u32,
    pub proofs: u32,
}

impl AttemptTally {
    /// Builds the tally from the budget of every proof attempt, in order.
    pub fn from_history(history: &[RetryBudget]) -> Self {
        let Some(last) = history.last() else { return Self::default() };
        let final_attempt: Vec<&RetryBudget> =
            history.iter().filter(|b| b.attempt == last.attempt).collect();
        let mut revisions: Vec<u32> = final_attempt.iter().map(|b| b.revision).collect();
        revisions.sort_unstable();
        revisions.dedup();
        Self {
            attempts: history.iter().map(|b| b.attempt).max().unwrap_or(0),
            revisions: revisions.len() as u32,
            proofs: final_attempt.len() as u32,
        }
    }
}
