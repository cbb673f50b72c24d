use std::collections::{BTreeMap, BTreeSet};

use proofline_core::budget::{apply_budget, BudgetLimits, EffectiveAction, RegulatorDecision, RetryBudget};
use proofline_core::document::{
    lint_key_steps, parse_proof_document, validate_subgoal_tree, TreeCheckOptions, TreeFinding, DEFAULT_VAGUE_LEXICON,
};
use proofline_core::plan::{
    plan_diff, topological_order, validate_plan, DecompositionPlan, Difficulty, PlanFinding, PlanStep,
};
use proptest::prelude::*;

// ---------------------------------------------------------------------------
// documents

fn word() -> impl Strategy<Value = String> {
    prop_oneof![
        "[a-z]{1,8}",
        Just("Clearly".to_string()),
        Just("OBVIOUSLY".to_string()),
        Just("nontrivially".to_string()),
        Just("x²".to_string()),
        Just("∑".to_string()),
    ]
}

fn sentence() -> impl Strategy<Value = String> {
    prop::collection::vec(word(), 1..8).prop_map(|w| w.join(" "))
}

#[derive(Debug, Clone)]
enum Piece {
    Heading(u8, String, bool),
    Para(String),
    KeyStep(Option<String>, String),
    Fence(String),
}

fn piece() -> impl Strategy<Value = Piece> {
    prop_oneof![
        (1u8..4, "[A-Z][a-z]{0,6}", any::<bool>()).prop_map(|(l, t, a)| Piece::Heading(l, t, a)),
        sentence().prop_map(Piece::Para),
        (prop::option::of("[a-z]{3}"), sentence()).prop_map(|(id, s)| Piece::KeyStep(id, s)),
        sentence().prop_map(Piece::Fence),
    ]
}

fn render(pieces: &[Piece]) -> (String, usize) {
    let mut out = String::from("# Problem Restatement\n\nShow that P holds.\n\n");
    let mut steps = 0;
    let mut anchor_n = 0;
    for p in pieces {
        match p {
            Piece::Heading(level, title, anchor) => {
                out.push_str(&"#".repeat(*level as usize));
                out.push(' ');
                out.push_str(title);
                if *anchor {
                    anchor_n += 1;
                    out.push_str(&format!(" {{#h{anchor_n}}}"));
                }
                out.push_str("\n\n");
            }
            Piece::Para(s) => {
                out.push_str(s);
                out.push_str("\n\n");
            }
            Piece::KeyStep(id, s) => {
                steps += 1;
                match id {
                    Some(id) => out.push_str(&format!("<key-original-step id=\"x{steps}{id}\">")),
                    None => out.push_str("<key-original-step>"),
                }
                out.push_str(s);
                out.push_str("</key-original-step>\n\n");
            }
            Piece::Fence(s) => {
                out.push_str("```text\n<key-original-step>\n");
                out.push_str(s);
                out.push_str("\n```\n\n");
            }
        }
    }
    out.push_str("```subgoal-tree\nid: main\nclaim: P.\nresolution: children\n\nid: a\nparent: main\nresolution: anchor:missing\n```\n");
    (out, steps)
}

#[derive(Debug, Clone, Copy)]
enum Tok {
    Open,
    Close,
    Text,
}

proptest! {
    #[test]
    fn round_trip(pieces in prop::collection::vec(piece(), 0..14)) {
        let (raw, steps) = render(&pieces);
        let doc = parse_proof_document(&raw).unwrap();
        prop_assert_eq!(doc.to_markdown(), raw.clone());
        prop_assert_eq!(doc.key_steps.len(), steps);
        for s in &doc.key_steps {
            prop_assert!(s.span.1 <= raw.len());
            prop_assert_eq!(&raw[s.content_offset..s.content_offset + s.content.len()], s.content.as_str());
        }
    }

    #[test]
    fn lint_offsets_slice_to_lexicon_phrases(pieces in prop::collection::vec(piece(), 0..14)) {
        let (raw, _) = render(&pieces);
        let doc = parse_proof_document(&raw).unwrap();
        for f in lint_key_steps(&doc, DEFAULT_VAGUE_LEXICON) {
            if let proofline_core::LintFinding::VaguePhrase { phrase, offset, .. } = f {
                let slice = &raw[offset..offset + phrase.len()];
                prop_assert_eq!(slice.to_lowercase(), phrase.clone());
                prop_assert!(DEFAULT_VAGUE_LEXICON.contains(&phrase.as_str()));
            }
        }
    }

    #[test]
    fn tag_balance(tokens in prop::collection::vec(prop_oneof![Just(Tok::Open), Just(Tok::Close), Just(Tok::Text)], 0..10)) {
        let mut raw = String::from("# Proof\n\n");
        for t in &tokens {
            raw.push_str(match t {
                Tok::Open => "<key-original-step>",
                Tok::Close => "</key-original-step>",
                Tok::Text => "words ",
            });
        }
        raw.push_str("\n\n```subgoal-tree\nid: a\nresolution: children\n```\n");
        // balanced, depth <= 1, and every step has content
        let mut open = false;
        let mut content = false;
        let mut ok = true;
        for t in &tokens {
            match t {
                Tok::Open if open => ok = false,
                Tok::Open => { open = true; content = false; }
                Tok::Close if !open || !content => ok = false,
                Tok::Close => open = false,
                Tok::Text => content = true,
            }
        }
        if open { ok = false; }
        prop_assert_eq!(parse_proof_document(&raw).is_ok(), ok);
    }
}

// Brute-force tree oracle: iterate the parent function up to n times per node.
fn tree_oracle(nodes: &[(String, Option<String>, u8)]) -> BTreeSet<TreeFinding> {
    let n = nodes.len();
    let ids: BTreeSet<&str> = nodes.iter().map(|x| x.0.as_str()).collect();
    let parent: BTreeMap<&str, Option<&str>> = nodes.iter().map(|x| (x.0.as_str(), x.1.as_deref())).collect();
    let mut out = BTreeSet::new();
    let roots: Vec<String> = nodes.iter().filter(|x| x.1.is_none()).map(|x| x.0.clone()).collect();
    if roots.is_empty() {
        out.insert(TreeFinding::NoRoot);
    } else if roots.len() > 1 {
        let mut r = roots.clone();
        r.sort();
        out.insert(TreeFinding::MultipleRoots(r));
    }
    let step = |x: &str| -> Option<&str> { parent[x].filter(|p| ids.contains(p)) };
    for (id, p, res) in nodes {
        let orphan = p.as_deref().is_some_and(|p| !ids.contains(p));
        if orphan {
            out.insert(TreeFinding::Orphan(id.clone()));
        }
        // on a cycle iff p^k(x) == x for some 1 <= k <= n
        let mut cur = Some(id.as_str());
        let mut on_cycle = false;
        let mut reaches_root = parent[id.as_str()].is_none();
        for _ in 0..n {
            cur = cur.and_then(step);
            match cur {
                Some(c) if c == id => on_cycle = true,
                Some(c) if parent[c].is_none() => reaches_root = true,
                _ => {}
            }
        }
        if on_cycle {
            let mut orbit = vec![id.clone()];
            let mut c = step(id).unwrap();
            while c != id {
                orbit.push(c.to_string());
                c = step(c).unwrap();
            }
            let min = orbit.iter().enumerate().min_by_key(|(_, s)| s.as_str()).unwrap().0;
            orbit.rotate_left(min);
            out.insert(TreeFinding::Cycle(orbit));
        } else if !reaches_root && !orphan {
            out.insert(TreeFinding::Detached(id.clone()));
        }
        match res {
            0 => {
                out.insert(TreeFinding::Unresolved(id.clone()));
            }
            1 => {
                out.insert(TreeFinding::DanglingResolution { node: id.clone(), target: "nowhere".into() });
            }
            2 if !nodes.iter().any(|c| c.1.as_deref() == Some(id.as_str())) => {
                out.insert(TreeFinding::EmptyComposition(id.clone()));
            }
            _ => {}
        }
    }
    out
}

fn tree_nodes() -> impl Strategy<Value = Vec<(String, Option<String>, u8)>> {
    (1usize..=8).prop_flat_map(|n| {
        prop::collection::vec((prop::option::of(0usize..=n), 0u8..4), n).prop_map(move |spec| {
            spec.into_iter()
                .enumerate()
                .map(|(i, (p, res))| {
                    // index n stands for a missing parent
                    let parent = p.map(|p| if p == n { "ghost".to_string() } else { format!("n{p}") });
                    (format!("n{i}"), parent, res)
                })
                .collect()
        })
    })
}

proptest! {
    #[test]
    fn tree_validator_matches_brute_force(nodes in tree_nodes()) {
        let mut block = String::new();
        for (id, parent, res) in &nodes {
            block.push_str(&format!("id: {id}\nclaim: c\n"));
            if let Some(p) = parent {
                block.push_str(&format!("parent: {p}\n"));
            }
            match res {
                0 => {}
                1 => block.push_str("resolution: anchor:nowhere\n"),
                2 => block.push_str("resolution: children\n"),
                _ => block.push_str("resolution: anchor:top\n"),
            }
            block.push('\n');
        }
        let raw = format!("# Proof {{#top}}\n\n<key-original-step>x</key-original-step>\n\n```subgoal-tree\n{block}```\n");
        let doc = parse_proof_document(&raw).unwrap();
        let got: BTreeSet<TreeFinding> =
            validate_subgoal_tree(&doc, TreeCheckOptions::default()).into_iter().collect();
        prop_assert_eq!(got, tree_oracle(&nodes));
    }
}

// ---------------------------------------------------------------------------
// plans

fn plan_from_edges(n: usize, deps: &[Vec<usize>], key: bool) -> DecompositionPlan {
    DecompositionPlan {
        steps: (0..n)
            .map(|i| PlanStep {
                id: format!("s{i}"),
                statement: format!("claim {i}"),
                depends_on: deps[i].iter().map(|d| format!("s{d}")).collect(),
                difficulty: Difficulty::Easy,
                key_step: key && i == 0,
            })
            .collect(),
        sources: vec![],
        self_critique: "weakest link is s0".into(),
        version: Default::default(),
    }
}

/// Enumerates simple paths to find every node that lies on a cycle (self loops included).
fn nodes_on_cycles(n: usize, deps: &[Vec<usize>]) -> BTreeSet<usize> {
    fn walk(start: usize, cur: usize, deps: &[Vec<usize>], path: &mut Vec<usize>, found: &mut BTreeSet<usize>) {
        for &next in &deps[cur] {
            if next == start {
                found.extend(path.iter().copied());
            } else if !path.contains(&next) {
                path.push(next);
                walk(start, next, deps, path, found);
                path.pop();
            }
        }
    }
    let mut found = BTreeSet::new();
    for s in 0..n {
        let mut path = vec![s];
        walk(s, s, deps, &mut path, &mut found);
    }
    found
}

fn plan_graph() -> impl Strategy<Value = (usize, Vec<Vec<usize>>)> {
    (1usize..=8).prop_flat_map(|n| {
        prop::collection::vec(prop::collection::btree_set(0..n, 0..3), n)
            .prop_map(move |d| (n, d.into_iter().map(|s| s.into_iter().collect()).collect()))
    })
}

proptest! {
    #[test]
    fn plan_cycle_iff_topo_fails((n, deps) in plan_graph()) {
        let plan = plan_from_edges(n, &deps, true);
        let findings = validate_plan(&plan);
        let cyclic = findings.iter().any(|f| matches!(f, PlanFinding::Cycle(_) | PlanFinding::SelfDependency(_)));
        let on_cycle = nodes_on_cycles(n, &deps);
        prop_assert_eq!(cyclic, topological_order(&plan).is_err());
        prop_assert_eq!(cyclic, !on_cycle.is_empty());

        let reported: BTreeSet<String> = findings.iter().flat_map(|f| match f {
            PlanFinding::Cycle(ids) => ids.clone(),
            PlanFinding::SelfDependency(id) => vec![id.clone()],
            _ => vec![],
        }).collect();
        let expected: BTreeSet<String> = on_cycle.iter().map(|i| format!("s{i}")).collect();
        prop_assert_eq!(reported, expected);
    }

    #[test]
    fn plan_diff_is_symmetric((n, deps) in plan_graph(), (m, deps2) in plan_graph()) {
        let a = plan_from_edges(n, &deps, true);
        let b = plan_from_edges(m, &deps2, false);
        let ab = plan_diff(&a, &b);
        let ba = plan_diff(&b, &a);
        prop_assert_eq!(&ab.added, &ba.removed);
        prop_assert_eq!(&ab.removed, &ba.added);
        prop_assert_eq!(&ab.modified, &ba.modified);
        prop_assert!(plan_diff(&a, &a).is_empty());
    }
}

// ---------------------------------------------------------------------------
// budget

/// Independent oracle: budget states in lexicographic order. REVISE_PROOF moves
/// to the successor state, REVISE_PLAN to the successor of the last proof slot
/// of the current revision, REWRITE to the successor of the last slot of the
/// current decomposition.
fn lexicographic_oracle(
    limits: &BudgetLimits,
    b: RetryBudget,
    decision: RegulatorDecision,
) -> (RetryBudget, EffectiveAction) {
    let mut states = Vec::new();
    for d in 1..=limits.max_decompositions {
        for r in 0..=limits.max_plan_revisions {
            for p in 1..=limits.max_proofs_per_plan {
                states.push(RetryBudget { attempt: d, revision: r, proof: p });
            }
        }
    }
    let from = match decision {
        RegulatorDecision::ReviseProof => b,
        RegulatorDecision::RevisePlan => RetryBudget { proof: limits.max_proofs_per_plan, ..b },
        RegulatorDecision::Rewrite => RetryBudget {
            revision: limits.max_plan_revisions,
            proof: limits.max_proofs_per_plan,
            ..b
        },
    };
    let idx = states.iter().position(|s| *s == from).unwrap();
    match states.get(idx + 1) {
        None => (b, EffectiveAction::Exhausted),
        Some(next) => {
            let action = if next.attempt != b.attempt {
                EffectiveAction::Rewrite
            } else if next.revision != b.revision {
                EffectiveAction::RevisePlan
            } else {
                EffectiveAction::ReviseProof
            };
            (*next, action)
        }
    }
}

proptest! {
    #[test]
    fn budget_matches_lexicographic_oracle(
        d_max in 1u32..5, r_max in 0u32..4, p_max in 1u32..5,
        d in 1u32..5, r in 0u32..4, p in 1u32..5, which in 0usize..3,
    ) {
        let limits = BudgetLimits { max_decompositions: d_max, max_plan_revisions: r_max, max_proofs_per_plan: p_max };
        let b = RetryBudget { attempt: d, revision: r, proof: p };
        prop_assume!(b.within(&limits));
        let decision = RegulatorDecision::ALL[which];
        let got = apply_budget(b, decision, &limits);
        prop_assert_eq!(got, lexicographic_oracle(&limits, b, decision));
        if got.1 != EffectiveAction::Exhausted {
            prop_assert!(got.0.within(&limits));
        }
    }
}
