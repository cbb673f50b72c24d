//! Where a run stands: the earliest pipeline step whose artifact is not yet complete.

use serde::{Deserialize, Serialize};

use crate::budget::RetryBudget;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RunMode {
    Simple,
    Decomposition,
}

impl RunMode {
    pub fn name(self) -> &'static str {
        match self {
            Self::Simple => "simple",
            Self::Decomposition => "decomposition",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PipelineStep {
    Stage0Survey,
    Brainstorm,
    Plan,
    Prove,
    StructuralVerification,
    DetailedVerification,
    Select,
    Verdict,
    Regulate,
    Summary,
    Complete,
}

impl PipelineStep {
    pub fn name(self) -> &'static str {
        match self {
            Self::Stage0Survey => "stage0_survey",
            Self::Brainstorm => "brainstorm",
            Self::Plan => "plan",
            Self::Prove => "prove",
            Self::StructuralVerification => "structural_verification",
            Self::DetailedVerification => "detailed_verification",
            Self::Select => "select",
            Self::Verdict => "verdict",
            Self::Regulate => "regulate",
            Self::Summary => "summary",
            Self::Complete => "complete",
        }
    }
}

/// Position of a step. Prover and verifier indices are 1-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Coordinates {
    Run,
    Slot { index: u32 },
    Round { round: u32, prover: Option<u32>, verifier: Option<u32> },
    Decomposition { budget: RetryBudget },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProgressPoint {
    pub mode: RunMode,
    pub coordinates: Coordinates,
    pub next_step: PipelineStep,
}

impl ProgressPoint {
    /// Position in the canonical step order of a run; later steps compare greater.
    pub fn order_key(&self) -> [u32; 6] {
        use PipelineStep as S;
        match (self.next_step, self.coordinates) {
            (S::Stage0Survey, _) => [0, 0, 0, 0, 0, 0],
            (S::Brainstorm, Coordinates::Slot { index }) => [1, index, 0, 0, 0, 0],
            (S::Brainstorm, _) => [1, 0, 0, 0, 0, 0],
            (S::Summary, _) => [3, 0, 0, 0, 0, 0],
            (S::Complete, _) => [4, 0, 0, 0, 0, 0],
            (step, Coordinates::Round { round, prover, verifier }) => {
                let k = prover.unwrap_or(0);
                let j = verifier.unwrap_or(0);
                match step {
                    S::Prove => [2, round, 0, k, 0, 0],
                    S::StructuralVerification => [2, round, 1, k, j, 0],
                    S::DetailedVerification => [2, round, 2, k, j, 0],
                    S::Select => [2, round, 3, 0, 0, 0],
                    _ => [2, round, 4, 0, 0, 0],
                }
            }
            (step, Coordinates::Decomposition { budget }) => {
                let rank = match step {
                    S::Plan => 0,
                    S::Prove => 1,
                    S::StructuralVerification => 2,
                    S::DetailedVerification => 3,
                    S::Verdict => 4,
                    _ => 5,
                };
                let proof = if step == S::Plan { 0 } else { budget.proof };
                [2, budget.attempt, budget.revision, proof, rank, 0]
            }
            (_, _) => [2, 0, 0, 0, 0, 0],
        }
    }
}

impl core::fmt::Display for ProgressPoint {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        write!(f, "mode {}: {} pending", self.mode.name(), self.next_step.name())?;
        match self.coordinates {
            Coordinates::Run => Ok(()),
            Coordinates::Slot { index } => write!(f, " (slot {index})"),
            Coordinates::Round { round, prover, verifier } => {
                write!(f, " at round {round}")?;
                if let Some(k) = prover {
                    write!(f, ", prover {k}")?;
                }
                if let Some(j) = verifier {
                    write!(f, ", verifier {j}")?;
                }
                Ok(())
            }
            Coordinates::Decomposition { budget } => write!(
                f,
                " at attempt {}, revision {}, proof {}",
                budget.attempt, budget.revision, budget.proof
            ),
        }
    }
}
