//! Paths inside a run directory. Every index is 1-based except plan
//! revisions, and all are zero-padded to three digits.

use proofline_core::RetryBudget;

pub const SURVEY: &str = "stage0/survey.md";

pub fn strategy(i: u32) -> String {
    format!("stage0/brainstorm_{i:03}/strategy.md")
}

pub fn round(r: u32) -> String {
    format!("round_{r:03}")
}

pub fn prover(r: u32, k: u32) -> String {
    format!("{}/prover_{k:03}", round(r))
}

pub fn proof(r: u32, k: u32) -> String {
    format!("{}/proof.md", prover(r, k))
}

pub fn prover_failure(r: u32, k: u32) -> String {
    format!("{}/failure.yaml", prover(r, k))
}

pub fn sv_report(r: u32, k: u32, j: u32) -> String {
    format!("{}/sv_{j:03}/report.yaml", prover(r, k))
}

pub fn dv_report(r: u32, k: u32, j: u32) -> String {
    format!("{}/dv_{j:03}/report.yaml", prover(r, k))
}

pub fn selection(r: u32) -> String {
    format!("{}/selection.yaml", round(r))
}

pub fn round_verdict(r: u32) -> String {
    format!("{}/verdict.yaml", round(r))
}

pub fn plan_dir(b: RetryBudget) -> String {
    format!("attempt_{:03}/plan_rev_{:03}", b.attempt, b.revision)
}

pub fn plan(b: RetryBudget) -> String {
    format!("{}/plan.yaml", plan_dir(b))
}

pub fn plan_failure(b: RetryBudget) -> String {
    format!("{}/failure.yaml", plan_dir(b))
}

pub fn attempt_dir(b: RetryBudget) -> String {
    format!("{}/proof_{:03}", plan_dir(b), b.proof)
}

pub fn attempt_proof(b: RetryBudget) -> String {
    format!("{}/proof.md", attempt_dir(b))
}

pub fn attempt_failure(b: RetryBudget) -> String {
    format!("{}/failure.yaml", attempt_dir(b))
}

pub fn attempt_sv(b: RetryBudget) -> String {
    format!("{}/sv/report.yaml", attempt_dir(b))
}

pub fn attempt_dv(b: RetryBudget) -> String {
    format!("{}/dv/report.yaml", attempt_dir(b))
}

pub fn attempt_verdict(b: RetryBudget) -> String {
    format!("{}/verdict.yaml", attempt_dir(b))
}

pub fn attempt_regulator(b: RetryBudget) -> String {
    format!("{}/regulator.yaml", attempt_dir(b))
}

/// Report id of prover `k`'s proof in round `r`.
pub fn simple_proof_id(r: u32, k: u32) -> String {
    format!("r{r}-p{k}")
}

pub fn decomposition_proof_id(b: RetryBudget) -> String {
    format!("d{}-r{}-p{}", b.attempt, b.revision, b.proof)
}
