//! Decomposition plans: a DAG of claim-steps produced by the decomposer.

use alloc::collections::{BTreeMap, BTreeSet, VecDeque};
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Difficulty {
    Easy,
    Medium,
    Hard,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlanStep {
    pub id: String,
    pub statement: String,
    #[serde(default)]
    pub depends_on: Vec<String>,
    pub difficulty: Difficulty,
    #[serde(default)]
    pub key_step: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CitedSource {
    pub title: String,
    #[serde(default)]
    pub authors: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub url: Option<String>,
    #[serde(default)]
    pub location: String,
}

/// Which decomposition attempt and plan revision produced a plan.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct PlanVersion {
    pub attempt: u32,
    pub revision: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DecompositionPlan {
    pub steps: Vec<PlanStep>,
    pub sources: Vec<CitedSource>,
    pub self_critique: String,
    /// Set by the orchestrator, not part of the file format.
    #[serde(skip)]
    pub version: PlanVersion,
}

impl DecompositionPlan {
    pub fn step(&self, id: &str) -> Option<&PlanStep> {
        self.steps.iter().find(|s| s.id == id)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum PlanFinding {
    DuplicateId(String),
    EmptyStatement(String),
    UnknownDependency { step: String, dependency: String },
    SelfDependency(String),
    /// Steps of one strongly connected component, sorted by id.
    Cycle(Vec<String>),
    NoKeyStep,
    EmptySelfCritique,
    /// Index into `sources`.
    EmptySourceTitle(usize),
}

impl core::fmt::Display for PlanFinding {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            Self::DuplicateId(id) => write!(f, "step id `{id}` is used more than once"),
            Self::EmptyStatement(id) => write!(f, "step `{id}` has an empty statement"),
            Self::UnknownDependency { step, dependency } => {
                write!(f, "step `{step}` depends on unknown step `{dependency}`")
            }
            Self::SelfDependency(id) => write!(f, "step `{id}` depends on itself"),
            Self::Cycle(ids) => write!(f, "dependency cycle among {}", ids.join(", ")),
            Self::NoKeyStep => write!(f, "no step is flagged as a key step"),
            Self::EmptySelfCritique => write!(f, "self_critique is empty"),
            Self::EmptySourceTitle(i) => write!(f, "source #{i} has an empty title"),
        }
    }
}

/// Dependency edges between known, distinct steps (`dependency -> dependent`).
fn edges(plan: &DecompositionPlan) -> (Vec<&str>, Vec<Vec<usize>>) {
    let ids: Vec<&str> = plan.steps.iter().map(|s| s.id.as_str()).collect();
    let mut index: BTreeMap<&str, usize> = BTreeMap::new();
    for (i, id) in ids.iter().enumerate() {
        index.entry(id).or_insert(i);
    }
    let mut out = vec![Vec::new(); ids.len()];
    for (i, step) in plan.steps.iter().enumerate() {
        for dep in &step.depends_on {
            if let Some(&d) = index.get(dep.as_str()) {
                out[d].push(i);
            }
        }
    }
    (ids, out)
}

/// Kahn's algorithm, breaking ties by plan order. On failure returns the ids
/// of the steps that could not be ordered.
pub fn topological_order(plan: &DecompositionPlan) -> Result<Vec<String>, Vec<String>> {
    let (ids, out) = edges(plan);
    let mut indegree = vec![0usize; ids.len()];
    for targets in &out {
        for &t in targets {
            indegree[t] += 1;
        }
    }
    let mut ready: VecDeque<usize> = (0..ids.len()).filter(|&i| indegree[i] == 0).collect();
    let mut order = Vec::with_capacity(ids.len());
    while let Some(i) = ready.pop_front() {
        order.push(i);
        for &t in &out[i] {
            indegree[t] -= 1;
            if indegree[t] == 0 {
                ready.push_back(t);
            }
        }
    }
    if order.len() == ids.len() {
        Ok(order.into_iter().map(|i| String::from(ids[i])).collect())
    } else {
        let done: BTreeSet<usize> = order.into_iter().collect();
        Err((0..ids.len()).filter(|i| !done.contains(i)).map(|i| String::from(ids[i])).collect())
    }
}

fn reachable(out: &[Vec<usize>], from: usize) -> Vec<bool> {
    let mut seen = vec![false; out.len()];
    let mut stack = out[from].clone();
    while let Some(n) = stack.pop() {
        if !seen[n] {
            seen[n] = true;
            stack.extend(out[n].iter().copied());
        }
    }
    seen
}

/// Itemised problems with a parsed plan; empty means the plan is usable.
pub fn validate_plan(plan: &DecompositionPlan) -> Vec<PlanFinding> {
    let mut findings = Vec::new();
    let mut seen = BTreeSet::new();
    for step in &plan.steps {
        if !seen.insert(step.id.as_str()) {
            findings.push(PlanFinding::DuplicateId(step.id.clone()));
        }
    }
    for step in &plan.steps {
        if step.statement.trim().is_empty() {
            findings.push(PlanFinding::EmptyStatement(step.id.clone()));
        }
        for dep in &step.depends_on {
            if dep == &step.id {
                findings.push(PlanFinding::SelfDependency(step.id.clone()));
            } else if !seen.contains(dep.as_str()) {
                findings.push(PlanFinding::UnknownDependency {
                    step: step.id.clone(),
                    dependency: dep.clone(),
                });
            }
        }
    }

    // Strongly connected components with more than one member are cycles;
    // self loops are reported above.
    let (ids, mut out) = edges(plan);
    for (i, targets) in out.iter_mut().enumerate() {
        targets.retain(|&t| t != i);
    }
    let reach: Vec<Vec<bool>> = (0..ids.len()).map(|i| reachable(&out, i)).collect();
    let mut assigned = vec![false; ids.len()];
    let mut cycles = Vec::new();
    for i in 0..ids.len() {
        if assigned[i] || !reach[i][i] {
            continue;
        }
        let mut members: Vec<String> = (0..ids.len())
            .filter(|&j| reach[i][j] && reach[j][i])
            .inspect(|&j| assigned[j] = true)
            .map(|j| String::from(ids[j]))
            .collect();
        members.sort();
        members.dedup();
        cycles.push(PlanFinding::Cycle(members));
    }
    cycles.sort();
    findings.extend(cycles);

    if !plan.steps.iter().any(|s| s.key_step) {
        findings.push(PlanFinding::NoKeyStep);
    }
    if plan.self_critique.trim().is_empty() {
        findings.push(PlanFinding::EmptySelfCritique);
    }
    for (i, source) in plan.sources.iter().enumerate() {
        if source.title.trim().is_empty() {
            findings.push(PlanFinding::EmptySourceTitle(i));
        }
    }
    findings
}

/// Step-level differences between two plans. `self_critique` changes are
/// not counted: a decomposer that only rewrites its critique has not revised
/// the plan.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct PlanDiff {
    pub added: BTreeSet<String>,
    pub removed: BTreeSet<String>,
    pub modified: BTreeSet<String>,
    pub sources_changed: bool,
}

impl PlanDiff {
    pub fn is_empty(&self) -> bool {
        self.added.is_empty() && self.removed.is_empty() && self.modified.is_empty() && !self.sources_changed
    }
}

pub fn plan_diff(old: &DecompositionPlan, new: &DecompositionPlan) -> PlanDiff {
    let old_steps: BTreeMap<&str, &PlanStep> = old.steps.iter().map(|s| (s.id.as_str(), s)).collect();
    let new_steps: BTreeMap<&str, &PlanStep> = new.steps.iter().map(|s| (s.id.as_str(), s)).collect();
    let mut diff = PlanDiff { sources_changed: old.sources != new.sources, ..PlanDiff::default() };
    for (id, step) in &new_steps {
        match old_steps.get(id) {
            None => {
                diff.added.insert(String::from(*id));
            }
            Some(prev) if prev != step => {
                diff.modified.insert(String::from(*id));
            }
            Some(_) => {}
        }
    }
    for id in old_steps.keys() {
        if !new_steps.contains_key(id) {
            diff.removed.insert(String::from(*id));
        }
    }
    diff
}
