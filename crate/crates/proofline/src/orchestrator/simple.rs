//! Simple mode: rounds of parallel provers, m verifiers per proof, a selector
//! and a verdict agent, bracketed by the survey and the summary.

use std::collections::BTreeMap;

use proofline_core::{
    parse_proof_document, AgentRole, Coordinates, InputKind, ParseError, PipelineStep, ProofDocument, RunMode,
    VerificationReport,
};
use serde_json::json;

use super::select::{decide_verdict, reports_text, select_best, Candidate, Selection, VerdictRecord};
use super::{corrupt, layout, outcome_digest, Driver, Job, OutcomeKind, RunOutcome, Stop};
use crate::agent::AgentCall;
use crate::report_file::report_to_yaml;
use crate::verification::{malformed_report, run_detailed_verification, run_structural_verification, Target};

fn at(round: u32, prover: Option<u32>, verifier: Option<u32>) -> Coordinates {
    Coordinates::Round { round, prover, verifier }
}

pub(crate) fn run(d: &Driver<'_>) -> Result<RunOutcome, Stop> {
    let (survey, strategies) = d.stage0()?;
    let config = d.config;
    let (n, m) = (config.n_provers, config.m_verifiers);
    let mut outcome = RunOutcome {
        kind: OutcomeKind::Exhausted,
        mode: RunMode::Simple,
        rounds: 0,
        accepted: None,
        budget_history: Vec::new(),
        final_budget: None,
    };
    // Prover k's proof and reports from the previous round.
    let mut previous: BTreeMap<u32, (String, String)> = BTreeMap::new();

    for round in 1..=config.max_rounds {
        outcome.rounds = round;
        let (hints, rules) = d.hints_and_rules();

        let jobs = (1..=n)
            .map(|k| {
                let ordinal = d.next_ordinal(AgentRole::Prover);
                let prev = previous.get(&k).cloned();
                let (survey, strategies, hints) = (survey.clone(), strategies.clone(), hints.clone());
                Job {
                    candidates: vec![layout::proof(round, k), layout::prover_failure(round, k)],
                    point: d.point(at(round, Some(k), None), PipelineStep::Prove),
                    produce: Box::new(move |agents| {
                        let (prev_proof, prev_reports) = prev.unzip();
                        let call = AgentCall::new(AgentRole::Prover)
                            .input(InputKind::Problem, d.problem)
                            .input(InputKind::LiteratureSurvey, survey)
                            .input_if(InputKind::Strategies, strategies)
                            .input_if(InputKind::Hints, hints)
                            .input_if(InputKind::PreviousProof, prev_proof)
                            .input_if(InputKind::PreviousReports, prev_reports)
                            .at(ordinal)
                            .slot(k);
                        d.attempt_proof(agents, call, layout::proof(round, k), layout::prover_failure(round, k))
                    }),
                }
            })
            .collect();
        let proofs: Vec<(u32, String)> = d
            .fan_out(jobs)?
            .into_iter()
            .zip(1..)
            .filter(|(done, _)| done.path.ends_with("proof.md"))
            .map(|(done, k)| (k, done.content))
            .collect();
        let parsed: Vec<(u32, Result<ProofDocument, ParseError>)> =
            proofs.iter().map(|(k, raw)| (*k, parse_proof_document(raw))).collect();

        // Structural verification of every proof by every verifier.
        let mut jobs = Vec::new();
        for (k, doc) in &parsed {
            for j in 1..=m {
                let ordinal = doc.is_ok().then(|| d.next_ordinal(AgentRole::StructuralVerifier));
                let path = layout::sv_report(round, *k, j);
                let rules = &rules;
                let k = *k;
                jobs.push(Job {
                    candidates: vec![path.clone()],
                    point: d.point(at(round, Some(k), Some(j)), PipelineStep::StructuralVerification),
                    produce: Box::new(move |agents| {
                        let id = layout::simple_proof_id(round, k);
                        let target = Target { proof_id: &id, call_index: ordinal, slot: Some(j) };
                        let report = match doc {
                            Ok(doc) => {
                                d.note_call(AgentRole::StructuralVerifier, ordinal);
                                run_structural_verification(d.problem, doc, None, rules, agents, &d.options, target)?
                            }
                            Err(err) => malformed_report(&id, "deterministic", err),
                        };
                        Ok((path, report_to_yaml(&report)))
                    }),
                });
            }
        }
        let mut sv: BTreeMap<(u32, u32), VerificationReport> = BTreeMap::new();
        let keys: Vec<(u32, u32)> = parsed.iter().flat_map(|(k, _)| (1..=m).map(move |j| (*k, j))).collect();
        for (key, done) in keys.into_iter().zip(d.fan_out(jobs)?) {
            sv.insert(key, d.report(&done)?);
        }

        // Detailed verification only where the structural report passed.
        let docs: BTreeMap<u32, &ProofDocument> =
            parsed.iter().filter_map(|(k, doc)| doc.as_ref().ok().map(|doc| (*k, doc))).collect();
        let passing: Vec<(u32, u32)> = sv.iter().filter(|(_, r)| r.passed()).map(|(key, _)| *key).collect();
        let mut jobs = Vec::new();
        for &(k, j) in &passing {
            let ordinal = d.next_ordinal(AgentRole::DetailedVerifier);
            let path = layout::dv_report(round, k, j);
            let doc = docs.get(&k).copied().ok_or_else(|| corrupt(&path, "structural pass on an unparseable proof"))?;
            let structural = &sv[&(k, j)];
            jobs.push(Job {
                candidates: vec![path.clone()],
                point: d.point(at(round, Some(k), Some(j)), PipelineStep::DetailedVerification),
                produce: Box::new(move |agents| {
                    let id = layout::simple_proof_id(round, k);
                    let target = Target { proof_id: &id, call_index: Some(ordinal), slot: Some(j) };
                    d.note_call(AgentRole::DetailedVerifier, Some(ordinal));
                    let report = run_detailed_verification(d.problem, doc, None, structural, agents, target)?;
                    Ok((path, report_to_yaml(&report)))
                }),
            });
        }
        let mut dv: BTreeMap<(u32, u32), VerificationReport> = BTreeMap::new();
        for (key, done) in passing.into_iter().zip(d.fan_out(jobs)?) {
            dv.insert(key, d.report(&done)?);
        }

        // Each verifier's last word on each proof.
        let finals = |k: u32| -> Vec<&VerificationReport> {
            (1..=m).filter_map(|j| dv.get(&(k, j)).or_else(|| sv.get(&(k, j)))).collect()
        };

        if proofs.is_empty() {
            let path = layout::round_verdict(round);
            d.step(Job {
                candidates: vec![path.clone()],
                point: d.point(at(round, None, None), PipelineStep::Verdict),
                produce: Box::new(move |_| Ok((path, yaml(&VerdictRecord::no_proofs())))),
            })?;
            previous.clear();
            continue;
        }

        let candidates: Vec<Candidate<'_>> =
            proofs.iter().map(|(k, raw)| Candidate { prover: *k, proof: raw, reports: finals(*k) }).collect();
        let ordinal = (candidates.len() > 1).then(|| d.next_ordinal(AgentRole::Selector));
        let path = layout::selection(round);
        let selection_done = d.step(Job {
            candidates: vec![path.clone()],
            point: d.point(at(round, None, None), PipelineStep::Select),
            produce: Box::new(|agents| {
                let invoke = |call| d.call(agents, call);
                let selection = select_best(d.problem, &candidates, &invoke, ordinal)?;
                if selection.method == super::SelectionMethod::Fallback {
                    d.event(json!({"event": "selection_fallback", "round": round, "prover": selection.prover}));
                }
                Ok((path, yaml(&selection)))
            }),
        })?;
        let selection: Selection =
            serde_yaml::from_str(&selection_done.content).map_err(|e| corrupt(&selection_done.path, e.to_string()))?;
        let chosen = finals(selection.prover);
        if !proofs.iter().any(|(k, _)| *k == selection.prover) {
            return Err(corrupt(&selection_done.path, "selection names a prover without a proof"));
        }

        let ordinal = d.next_ordinal(AgentRole::Verdict);
        let path = layout::round_verdict(round);
        let verdict_done = d.step(Job {
            candidates: vec![path.clone()],
            point: d.point(at(round, None, None), PipelineStep::Verdict),
            produce: Box::new(|agents| {
                let invoke = |call| d.call(agents, call);
                let record = decide_verdict(&chosen, &invoke, Some(ordinal))?;
                if record.guard {
                    d.event(json!({"event": "guard", "round": round, "proof_id": record.proof_id, "agent": record.agent}));
                }
                Ok((path, yaml(&record)))
            }),
        })?;
        let verdict: VerdictRecord =
            serde_yaml::from_str(&verdict_done.content).map_err(|e| corrupt(&verdict_done.path, e.to_string()))?;
        if verdict.done() {
            outcome.kind = OutcomeKind::Proved;
            outcome.accepted = Some(layout::proof(round, selection.prover));
            break;
        }
        previous = proofs.iter().map(|(k, raw)| (*k, (raw.clone(), reports_text(&finals(*k))))).collect();
    }

    d.summary(outcome_digest(&outcome))?;
    Ok(outcome)
}

pub(crate) fn yaml<T: serde::Serialize>(value: &T) -> String {
    serde_yaml::to_string(value).expect("record serialises")
}
