//! Decomposition mode: one prover works through a plan, and the regulator
//! decides how to spend the retry budget after every failed proof.

use proofline_core::{
    apply_budget, parse_proof_document, parse_structured_verdict, plan_diff, validate_plan, AgentRole, Coordinates,
    DecompositionPlan, EffectiveAction, InputKind, PipelineStep, RegulatorDecision, RetryBudget, RunMode,
    VerificationReport,
};
use serde::{Deserialize, Serialize};
use serde_json::json;

use super::select::{decide_verdict, VerdictRecord};
use super::simple::yaml;
use super::{corrupt, layout, outcome_digest, Driver, Job, OutcomeKind, RunOutcome, Stop};
use crate::agent::AgentCall;
use crate::plan_yaml::parse_plan;
use crate::report_file::report_to_yaml;
use crate::verification::{malformed_report, run_detailed_verification, run_structural_verification, Target};

/// Contents of `regulator.yaml`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RegulatorRecord {
    pub decision: RegulatorDecision,
    /// The agent's own token; absent when it gave none and the default applied.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub agent: Option<String>,
    pub analysis: String,
}

/// A regulator answer without a usable token asks for another proof.
const DEFAULT_DECISION: RegulatorDecision = RegulatorDecision::ReviseProof;

fn at(budget: RetryBudget) -> Coordinates {
    Coordinates::Decomposition { budget }
}

/// Why the decomposer's output cannot be used, if it cannot.
fn plan_problem(path: &str, raw: &str) -> Result<DecompositionPlan, String> {
    if path.ends_with("failure.yaml") {
        return Err(format!("decomposer failed: {}", raw.trim()));
    }
    let plan = parse_plan(raw).map_err(|e| format!("plan does not parse: {e}"))?;
    let findings = validate_plan(&plan);
    if findings.is_empty() {
        Ok(plan)
    } else {
        let list: Vec<String> = findings.iter().map(|f| f.to_string()).collect();
        Err(format!("plan is invalid: {}", list.join("; ")))
    }
}

fn numbered(title: &str, items: &[String]) -> Option<String> {
    (!items.is_empty()).then(|| {
        items.iter().enumerate().map(|(i, t)| format!("### {title} {}\n\n{}\n", i + 1, t.trim_end())).collect::<Vec<_>>().join("\n")
    })
}

pub(crate) fn run(d: &Driver<'_>) -> Result<RunOutcome, Stop> {
    let (survey, strategies) = d.stage0()?;
    let limits = d.config.limits();
    let mut outcome = RunOutcome {
        kind: OutcomeKind::Exhausted,
        mode: RunMode::Decomposition,
        rounds: 0,
        accepted: None,
        budget_history: Vec::new(),
        final_budget: None,
    };
    let mut budget = RetryBudget::START;
    let mut plans: Vec<String> = Vec::new();
    let mut analyses: Vec<String> = Vec::new();
    let mut plan: Option<(DecompositionPlan, String)> = None;
    let mut last_action: Option<EffectiveAction> = None;
    // The failed proof and its reports, when the regulator asked to revise it.
    let mut previous: Option<(String, String)> = None;

    'run: loop {
        let (hints, rules) = d.hints_and_rules();

        // A fresh decomposition or plan revision starts at proof 1.
        if budget.proof == 1 {
            let ordinal = d.next_ordinal(AgentRole::Decomposer);
            let b = budget;
            let call = AgentCall::new(AgentRole::Decomposer)
                .input(InputKind::Problem, d.problem)
                .input(InputKind::LiteratureSurvey, survey.clone())
                .input_if(InputKind::Strategies, strategies.clone())
                .input_if(InputKind::Hints, hints.clone())
                .input_if(InputKind::PreviousPlans, numbered("Plan", &plans))
                .input_if(InputKind::RegulatorAnalyses, numbered("Analysis", &analyses))
                .at(ordinal);
            let done = d.step(Job {
                candidates: vec![layout::plan(b), layout::plan_failure(b)],
                point: d.point(at(b), PipelineStep::Plan),
                produce: Box::new(move |agents| d.attempt_output(agents, call, layout::plan(b), layout::plan_failure(b))),
            })?;
            match plan_problem(&done.path, &done.content) {
                Ok(new) => {
                    if let (Some(EffectiveAction::RevisePlan), Some((old, _))) = (last_action, &plan) {
                        if done.fresh && plan_diff(old, &new).is_empty() {
                            d.event(json!({"event": "ignored_revision", "budget": b}));
                        }
                    }
                    plans.push(done.content.clone());
                    plan = Some((new, done.content));
                }
                Err(reason) => {
                    // An unusable plan spends a plan revision without a proof.
                    let (next, action) = apply_budget(b, RegulatorDecision::RevisePlan, &limits);
                    if done.fresh {
                        d.event(json!({"event": "invalid_plan", "budget": b, "reason": reason, "action": action, "to": next}));
                    }
                    analyses.push(reason);
                    if !done.path.ends_with("failure.yaml") {
                        plans.push(done.content);
                    }
                    if action == EffectiveAction::Exhausted {
                        outcome.final_budget = Some(b);
                        break 'run;
                    }
                    last_action = Some(action);
                    previous = None;
                    budget = next;
                    continue;
                }
            }
        }
        let b = budget;
        let (plan_doc, plan_raw) = plan.as_ref().ok_or_else(|| corrupt(&layout::plan(b), "proof attempt without a plan"))?;
        outcome.budget_history.push(b);

        let ordinal = d.next_ordinal(AgentRole::Prover);
        let (prev_proof, prev_reports) = previous.take().unzip();
        let call = AgentCall::new(AgentRole::Prover)
            .input(InputKind::Problem, d.problem)
            .input(InputKind::LiteratureSurvey, survey.clone())
            .input_if(InputKind::Strategies, strategies.clone())
            .input(InputKind::Plan, plan_raw.clone())
            .input_if(InputKind::Hints, hints)
            .input_if(InputKind::PreviousProof, prev_proof)
            .input_if(InputKind::PreviousReports, prev_reports)
            .input_if(InputKind::RegulatorAnalyses, analyses.last().cloned())
            .at(ordinal);
        let proof = d.step(Job {
            candidates: vec![layout::attempt_proof(b), layout::attempt_failure(b)],
            point: d.point(at(b), PipelineStep::Prove),
            produce: Box::new(move |agents| {
                d.attempt_proof(agents, call, layout::attempt_proof(b), layout::attempt_failure(b))
            }),
        })?;

        // The last report of the verification chain, or the prover's failure.
        let mut evidence = proof.content.clone();
        if proof.path.ends_with("proof.md") {
            let id = layout::decomposition_proof_id(b);
            let doc = parse_proof_document(&proof.content);
            let sv_ordinal = doc.is_ok().then(|| d.next_ordinal(AgentRole::StructuralVerifier));
            let sv_done = d.step(Job {
                candidates: vec![layout::attempt_sv(b)],
                point: d.point(at(b), PipelineStep::StructuralVerification),
                produce: Box::new(|agents| {
                    let target = Target { proof_id: &id, call_index: sv_ordinal, slot: None };
                    let report = match &doc {
                        Ok(doc) => {
                            d.note_call(AgentRole::StructuralVerifier, sv_ordinal);
                            run_structural_verification(d.problem, doc, Some(plan_doc), &rules, agents, &d.options, target)?
                        }
                        Err(err) => malformed_report(&id, "deterministic", err),
                    };
                    Ok((layout::attempt_sv(b), report_to_yaml(&report)))
                }),
            })?;
            let sv = d.report(&sv_done)?;
            let mut last: VerificationReport = sv.clone();
            if sv.passed() {
                let doc = doc.as_ref().map_err(|_| corrupt(&sv_done.path, "structural pass on an unparseable proof"))?;
                let dv_ordinal = d.next_ordinal(AgentRole::DetailedVerifier);
                let dv_done = d.step(Job {
                    candidates: vec![layout::attempt_dv(b)],
                    point: d.point(at(b), PipelineStep::DetailedVerification),
                    produce: Box::new(|agents| {
                        let target = Target { proof_id: &id, call_index: Some(dv_ordinal), slot: None };
                        d.note_call(AgentRole::DetailedVerifier, Some(dv_ordinal));
                        let report = run_detailed_verification(d.problem, doc, Some(plan_doc), &sv, agents, target)?;
                        Ok((layout::attempt_dv(b), report_to_yaml(&report)))
                    }),
                })?;
                last = d.report(&dv_done)?;
                if last.passed() {
                    let ordinal = d.next_ordinal(AgentRole::Verdict);
                    let dv = &last;
                    let verdict_done = d.step(Job {
                        candidates: vec![layout::attempt_verdict(b)],
                        point: d.point(at(b), PipelineStep::Verdict),
                        produce: Box::new(move |agents| {
                            let invoke = |call| d.call(agents, call);
                            let record = decide_verdict(&[dv], &invoke, Some(ordinal))?;
                            if record.guard {
                                d.event(json!({"event": "guard", "budget": b, "agent": record.agent}));
                            }
                            Ok((layout::attempt_verdict(b), yaml(&record)))
                        }),
                    })?;
                    let verdict: VerdictRecord = serde_yaml::from_str(&verdict_done.content)
                        .map_err(|e| corrupt(&verdict_done.path, e.to_string()))?;
                    if verdict.done() {
                        outcome.kind = OutcomeKind::Proved;
                        outcome.accepted = Some(layout::attempt_proof(b));
                        outcome.final_budget = Some(b);
                        break 'run;
                    }
                }
            }
            evidence = report_to_yaml(&last);
        }

        let ordinal = d.next_ordinal(AgentRole::Regulator);
        let call = AgentCall::new(AgentRole::Regulator)
            .input(InputKind::Reports, evidence.clone())
            .input(InputKind::Plan, plan_raw.clone())
            .at(ordinal);
        let reg_done = d.step(Job {
            candidates: vec![layout::attempt_regulator(b)],
            point: d.point(at(b), PipelineStep::Regulate),
            produce: Box::new(move |agents| {
                let answer = match d.call(agents, call) {
                    Ok(result) if result.ok() => result.file("decision.md").map(str::to_string),
                    Err(e) if !e.is_agent_failure() => return Err(e.into()),
                    _ => None,
                };
                let analysis = answer.clone().unwrap_or_default();
                let agent = answer.and_then(|a| parse_structured_verdict(&a, &RegulatorDecision::TOKENS).ok());
                let decision = agent.as_deref().and_then(RegulatorDecision::from_token).unwrap_or(DEFAULT_DECISION);
                let record = RegulatorRecord { decision, agent, analysis };
                Ok((layout::attempt_regulator(b), yaml(&record)))
            }),
        })?;
        let record: RegulatorRecord =
            serde_yaml::from_str(&reg_done.content).map_err(|e| corrupt(&reg_done.path, e.to_string()))?;
        let (next, action) = apply_budget(b, record.decision, &limits);
        if reg_done.fresh {
            d.event(json!({"event": "budget", "from": b, "decision": record.decision, "action": action, "to": next}));
        }
        if action == EffectiveAction::Exhausted {
            outcome.final_budget = Some(b);
            break;
        }
        if !record.analysis.trim().is_empty() {
            analyses.push(record.analysis);
        }
        previous = (action == EffectiveAction::ReviseProof).then(|| (proof.content.clone(), evidence));
        last_action = Some(action);
        budget = next;
    }

    d.summary(outcome_digest(&outcome))?;
    Ok(outcome)
}
