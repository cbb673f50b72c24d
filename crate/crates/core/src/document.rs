//! Prover output format: markdown with tagged key steps and fenced structured blocks.
//!
//! A proof document is UTF-8 markdown. The grammar recognised here:
//!
//! * Level-1 headings (`# Title`) split the document into [`Section`]s. The
//!   section titled `Problem Restatement` holds the prover's verbatim copy of
//!   the problem.
//! * Any heading may end with an anchor attribute, `## Step 2 {#step-2}`.
//! * `<key-original-step>` / `<key-original-step id="x">` ... `</key-original-step>`
//!   wraps an original step. Tags do not nest. Steps without an explicit id are
//!   numbered `ks-1`, `ks-2`, ... in document order. Key step ids are anchors.
//! * A fenced block with info string `citation` holds one citation as
//!   `key: value` lines (`id`, `statement`, `source_title`, `authors`,
//!   `location`, `url`, `conditions_check`). Indented lines continue the
//!   previous value.
//! * Exactly one fenced block with info string `subgoal-tree` holds the
//!   subgoal nodes, each starting at an `id:` line and carrying `claim`,
//!   `parent` and `resolution` keys. A resolution is `anchor:<id>`,
//!   `citation:<id>` or `children`.
//!
//! Tags inside fenced blocks are literal text.

use alloc::borrow::ToOwned;
use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

const OPEN_TAG: &str = "<key-original-step";
const CLOSE_TAG: &str = "</key-original-step>";
const RESTATEMENT_HEADING: &str = "Problem Restatement";
const SUBGOAL_BLOCK: &str = "subgoal-tree";
const CITATION_BLOCK: &str = "citation";

/// Phrases flagged inside key steps unless the caller supplies its own lexicon.
pub const DEFAULT_VAGUE_LEXICON: &[&str] = &[
    "clearly",
    "obviously",
    "straightforward",
    "it is easy to see",
    "trivially",
    "evidently",
];

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ParseError {
    #[error("unclosed <key-original-step> tag at byte {offset}")]
    UnclosedTag { offset: usize },
    #[error("closing </key-original-step> without an open tag at byte {offset}")]
    UnexpectedCloseTag { offset: usize },
    #[error("nested <key-original-step> tag at byte {offset}")]
    NestedTag { offset: usize },
    #[error("malformed <key-original-step> tag at byte {offset}")]
    MalformedTag { offset: usize },
    #[error("empty key-original-step at byte {offset}")]
    EmptyKeyStep { offset: usize },
    #[error("unclosed code fence at byte {offset}")]
    UnclosedFence { offset: usize },
    #[error("duplicate id `{id}` at byte {offset}")]
    DuplicateId { id: String, offset: usize },
    #[error("missing section `{name}` (checked up to byte {offset})")]
    MissingSection { name: String, offset: usize },
    #[error("section `{name}` appears twice, second at byte {offset}")]
    DuplicateSection { name: String, offset: usize },
    #[error("malformed citation `{id}` at byte {offset}: {reason}")]
    MalformedCitation { id: String, offset: usize, reason: String },
    #[error("malformed subgoal tree at byte {offset}: {reason}")]
    MalformedSubgoal { offset: usize, reason: String },
}

impl ParseError {
    pub fn offset(&self) -> usize {
        match self {
            Self::UnclosedTag { offset }
            | Self::UnexpectedCloseTag { offset }
            | Self::NestedTag { offset }
            | Self::MalformedTag { offset }
            | Self::EmptyKeyStep { offset }
            | Self::UnclosedFence { offset }
            | Self::DuplicateId { offset, .. }
            | Self::MissingSection { offset, .. }
            | Self::DuplicateSection { offset, .. }
            | Self::MalformedCitation { offset, .. }
            | Self::MalformedSubgoal { offset, .. } => *offset,
        }
    }
}

/// A run of the document between two level-1 headings. `text` includes the
/// heading line, so concatenating every section's text yields the raw input.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Section {
    pub heading: Option<String>,
    pub offset: usize,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct KeyOriginalStep {
    pub id: String,
    /// Byte range of the whole tagged region, tags included.
    pub span: (usize, usize),
    /// Byte offset at which `content` starts.
    pub content_offset: usize,
    pub content: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CitationBlock {
    pub id: String,
    pub statement: String,
    pub source_title: String,
    pub authors: String,
    pub location: String,
    pub url: Option<String>,
    pub conditions_check: String,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Resolution {
    Anchor(String),
    Citation(String),
    /// Resolved by composing the node's children.
    Children,
}

impl Resolution {
    fn parse(value: &str) -> Option<Self> {
        let value = value.trim();
        if value == "children" {
            return Some(Self::Children);
        }
        let (kind, target) = value.split_once(':')?;
        let target = target.trim();
        if target.is_empty() {
            return None;
        }
        match kind.trim() {
            "anchor" => Some(Self::Anchor(target.to_string())),
            "citation" => Some(Self::Citation(target.to_string())),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubgoalNode {
    pub id: String,
    pub claim: String,
    pub parent: Option<String>,
    pub resolution: Option<Resolution>,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct SubgoalTree {
    pub nodes: Vec<SubgoalNode>,
    /// First parentless node, if any. Multiple roots are a validation finding.
    pub root_id: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProofDocument {
    pub problem_restatement: Option<String>,
    pub body: Vec<Section>,
    pub key_steps: Vec<KeyOriginalStep>,
    pub citations: Vec<CitationBlock>,
    pub subgoal_tree: SubgoalTree,
    /// Heading anchors and key step ids, in document order.
    pub anchors: Vec<String>,
    pub raw_text: String,
}

impl ProofDocument {
    /// Re-assembles the document from its sections.
    pub fn to_markdown(&self) -> String {
        self.body.iter().map(|s| s.text.as_str()).collect()
    }

    pub fn has_anchor(&self, id: &str) -> bool {
        self.anchors.iter().any(|a| a == id)
    }

    pub fn citation(&self, id: &str) -> Option<&CitationBlock> {
        self.citations.iter().find(|c| c.id == id)
    }
}

struct Fence {
    start: usize,
    end: usize,
    info: String,
    content_start: usize,
    content_end: usize,
}

fn lines_with_offsets(raw: &str) -> impl Iterator<Item = (usize, &str)> {
    let mut offset = 0;
    raw.split_inclusive('\n').map(move |line| {
        let at = offset;
        offset += line.len();
        (at, line)
    })
}

fn fence_marker(line: &str) -> Option<(usize, &str)> {
    let trimmed = line.trim_start_matches([' ', '\t']);
    let ticks = trimmed.bytes().take_while(|b| *b == b'`').count();
    if ticks >= 3 {
        Some((ticks, trimmed[ticks..].trim()))
    } else {
        None
    }
}

fn find_fences(raw: &str) -> Result<Vec<Fence>, ParseError> {
    let mut fences = Vec::new();
    let mut open: Option<(usize, usize, String, usize)> = None;
    for (at, line) in lines_with_offsets(raw) {
        match (&open, fence_marker(line)) {
            (None, Some((ticks, info))) => {
                open = Some((at, ticks, info.to_string(), at + line.len()));
            }
            (Some((start, ticks, _, content_start)), Some((close_ticks, rest)))
                if close_ticks >= *ticks && rest.is_empty() =>
            {
                let (start, content_start) = (*start, *content_start);
                let (_, _, info, _) = open.take().unwrap();
                fences.push(Fence {
                    start,
                    end: at + line.len(),
                    info,
                    content_start,
                    content_end: at,
                });
            }
            _ => {}
        }
    }
    if let Some((start, ..)) = open {
        return Err(ParseError::UnclosedFence { offset: start });
    }
    Ok(fences)
}

fn in_fence(fences: &[Fence], offset: usize) -> bool {
    fences.iter().any(|f| offset >= f.start && offset < f.end)
}

/// Splits `## Title {#anchor}` into title text and anchor.
fn split_heading(text: &str) -> (&str, Option<&str>) {
    let text = text.trim();
    if let Some(stripped) = text.strip_suffix('}') {
        if let Some(idx) = stripped.rfind("{#") {
            let anchor = stripped[idx + 2..].trim();
            if !anchor.is_empty() && !anchor.contains(char::is_whitespace) {
                return (stripped[..idx].trim_end(), Some(anchor));
            }
        }
    }
    (text, None)
}

fn heading_level(line: &str) -> Option<(usize, &str)> {
    let hashes = line.bytes().take_while(|b| *b == b'#').count();
    if hashes == 0 || hashes > 6 {
        return None;
    }
    let rest = &line[hashes..];
    let rest_trim = rest.trim_end_matches(['\n', '\r']);
    if rest_trim.is_empty() {
        return Some((hashes, ""));
    }
    if rest.starts_with([' ', '\t']) {
        Some((hashes, rest_trim))
    } else {
        None
    }
}

struct Field<'a> {
    key: &'a str,
    value: String,
    offset: usize,
}

/// `key: value` lines with indented continuation lines.
fn parse_fields(raw: &str, start: usize, end: usize) -> Result<Vec<Field<'_>>, (usize, String)> {
    let mut fields: Vec<Field<'_>> = Vec::new();
    for (at, line) in lines_with_offsets(&raw[start..end]) {
        let at = start + at;
        let line = line.trim_end_matches(['\n', '\r']);
        if line.trim().is_empty() {
            continue;
        }
        if line.starts_with([' ', '\t']) {
            match fields.last_mut() {
                Some(last) => {
                    if !last.value.is_empty() {
                        last.value.push('\n');
                    }
                    last.value.push_str(line.trim());
                }
                None => return Err((at, "continuation line before any key".to_string())),
            }
            continue;
        }
        let Some((key, value)) = line.split_once(':') else {
            return Err((at, format!("expected `key: value`, found `{line}`")));
        };
        let key = key.trim();
        if key.is_empty() || key.contains(char::is_whitespace) {
            return Err((at, format!("invalid key `{key}`")));
        }
        fields.push(Field { key, value: value.trim().to_string(), offset: at });
    }
    Ok(fields)
}

fn parse_citation(raw: &str, fence: &Fence, index: usize) -> Result<CitationBlock, ParseError> {
    let placeholder = format!("#{index}");
    let malformed = |id: &str, offset: usize, reason: String| ParseError::MalformedCitation {
        id: id.to_string(),
        offset,
        reason,
    };
    let fields = parse_fields(raw, fence.content_start, fence.content_end)
        .map_err(|(offset, reason)| malformed(&placeholder, offset, reason))?;
    let mut map: BTreeMap<&str, (String, usize)> = BTreeMap::new();
    for field in fields {
        if !matches!(
            field.key,
            "id" | "statement" | "source_title" | "authors" | "location" | "url" | "conditions_check"
        ) {
            return Err(malformed(&placeholder, field.offset, format!("unknown key `{}`", field.key)));
        }
        if map.contains_key(field.key) {
            return Err(malformed(&placeholder, field.offset, format!("repeated key `{}`", field.key)));
        }
        map.insert(field.key, (field.value, field.offset));
    }
    let id = match map.get("id") {
        Some((id, _)) if !id.is_empty() => id.clone(),
        _ => return Err(malformed(&placeholder, fence.start, "missing `id`".to_string())),
    };
    let mut take = |key: &str, required: bool| -> Result<String, ParseError> {
        match map.remove(key) {
            Some((v, offset)) if required && v.is_empty() => {
                Err(malformed(&id, offset, format!("empty `{key}`")))
            }
            Some((v, _)) => Ok(v),
            None if required => Err(malformed(&id, fence.start, format!("missing `{key}`"))),
            None => Ok(String::new()),
        }
    };
    let statement = take("statement", true)?;
    let source_title = take("source_title", true)?;
    let location = take("location", true)?;
    let authors = take("authors", false)?;
    let conditions_check = take("conditions_check", false)?;
    let url = take("url", false)?;
    Ok(CitationBlock {
        id,
        statement,
        source_title,
        authors,
        location,
        url: if url.is_empty() { None } else { Some(url) },
        conditions_check,
    })
}

fn parse_subgoal_tree(raw: &str, fence: &Fence) -> Result<SubgoalTree, ParseError> {
    let fields = parse_fields(raw, fence.content_start, fence.content_end)
        .map_err(|(offset, reason)| ParseError::MalformedSubgoal { offset, reason })?;
    let mut nodes: Vec<(SubgoalNode, BTreeSet<&str>)> = Vec::new();
    let mut seen: BTreeSet<String> = BTreeSet::new();
    for field in fields {
        if field.key == "id" {
            if field.value.is_empty() {
                return Err(ParseError::MalformedSubgoal {
                    offset: field.offset,
                    reason: "empty node id".to_string(),
                });
            }
            if !seen.insert(field.value.clone()) {
                return Err(ParseError::DuplicateId { id: field.value, offset: field.offset });
            }
            nodes.push((
                SubgoalNode { id: field.value, claim: String::new(), parent: None, resolution: None },
                BTreeSet::new(),
            ));
            continue;
        }
        let Some((node, keys)) = nodes.last_mut() else {
            return Err(ParseError::MalformedSubgoal {
                offset: field.offset,
                reason: format!("`{}` before the first `id:`", field.key),
            });
        };
        if !keys.insert(field.key) {
            return Err(ParseError::MalformedSubgoal {
                offset: field.offset,
                reason: format!("repeated key `{}` in node `{}`", field.key, node.id),
            });
        }
        match field.key {
            "claim" => node.claim = field.value,
            "parent" => node.parent = (!field.value.is_empty()).then_some(field.value),
            "resolution" => {
                if !field.value.is_empty() {
                    node.resolution = Some(Resolution::parse(&field.value).ok_or_else(|| {
                        ParseError::MalformedSubgoal {
                            offset: field.offset,
                            reason: format!("unrecognised resolution `{}`", field.value),
                        }
                    })?);
                }
            }
            other => {
                return Err(ParseError::MalformedSubgoal {
                    offset: field.offset,
                    reason: format!("unknown key `{other}`"),
                })
            }
        }
    }
    let nodes: Vec<SubgoalNode> = nodes.into_iter().map(|(n, _)| n).collect();
    let root_id = nodes.iter().find(|n| n.parent.is_none()).map(|n| n.id.clone());
    Ok(SubgoalTree { nodes, root_id })
}

fn parse_open_tag(raw: &str, at: usize) -> Result<(Option<String>, usize), ParseError> {
    let rest = &raw[at + OPEN_TAG.len()..];
    let malformed = ParseError::MalformedTag { offset: at };
    let close = rest.find('>').ok_or(ParseError::MalformedTag { offset: at })?;
    let attrs = &rest[..close];
    if attrs.contains(['\n', '<']) {
        return Err(malformed);
    }
    let end = at + OPEN_TAG.len() + close + 1;
    let attrs_trim = attrs.trim();
    if attrs_trim.is_empty() {
        if !attrs.is_empty() && !attrs.starts_with(char::is_whitespace) {
            return Err(malformed);
        }
        return Ok((None, end));
    }
    if !attrs.starts_with(char::is_whitespace) {
        return Err(malformed);
    }
    let value = attrs_trim
        .strip_prefix("id=\"")
        .and_then(|v| v.strip_suffix('"'))
        .filter(|v| !v.is_empty() && !v.contains(['"', ' ']))
        .ok_or(malformed)?;
    Ok((Some(value.to_string()), end))
}

fn parse_key_steps(raw: &str, fences: &[Fence]) -> Result<Vec<KeyOriginalStep>, ParseError> {
    let mut steps = Vec::new();
    let mut open: Option<(usize, Option<String>, usize)> = None;
    let mut pos = 0;
    while let Some(rel) = raw[pos..].find('<') {
        let at = pos + rel;
        pos = at + 1;
        if in_fence(fences, at) {
            continue;
        }
        let rest = &raw[at..];
        if rest.starts_with(CLOSE_TAG) {
            let Some((start, id, content_start)) = open.take() else {
                return Err(ParseError::UnexpectedCloseTag { offset: at });
            };
            let content = &raw[content_start..at];
            if content.trim().is_empty() {
                return Err(ParseError::EmptyKeyStep { offset: start });
            }
            let id = id.unwrap_or_else(|| format!("ks-{}", steps.len() + 1));
            steps.push(KeyOriginalStep {
                id,
                span: (start, at + CLOSE_TAG.len()),
                content_offset: content_start,
                content: content.to_string(),
            });
            pos = at + CLOSE_TAG.len();
        } else if rest.starts_with(OPEN_TAG)
            && rest[OPEN_TAG.len()..].starts_with(['>', ' ', '\t'])
        {
            if open.is_some() {
                return Err(ParseError::NestedTag { offset: at });
            }
            let (id, end) = parse_open_tag(raw, at)?;
            open = Some((at, id, end));
            pos = end;
        }
    }
    if let Some((start, ..)) = open {
        return Err(ParseError::UnclosedTag { offset: start });
    }
    Ok(steps)
}

/// Parses prover output into a [`ProofDocument`].
pub fn parse_proof_document(raw: &str) -> Result<ProofDocument, ParseError> {
    let fences = find_fences(raw)?;

    let mut body: Vec<Section> = Vec::new();
    let mut anchors: Vec<(String, usize)> = Vec::new();
    let mut current = Section { heading: None, offset: 0, text: String::new() };
    for (at, line) in lines_with_offsets(raw) {
        if !in_fence(&fences, at) {
            if let Some((level, text)) = heading_level(line) {
                let (title, anchor) = split_heading(text);
                if let Some(anchor) = anchor {
                    anchors.push((anchor.to_string(), at));
                }
                if level == 1 {
                    let finished = core::mem::replace(
                        &mut current,
                        Section { heading: Some(title.to_string()), offset: at, text: String::new() },
                    );
                    if !(finished.heading.is_none() && finished.text.is_empty()) {
                        body.push(finished);
                    }
                }
            }
        }
        current.text.push_str(line);
    }
    if !(current.heading.is_none() && current.text.is_empty() && !body.is_empty()) {
        body.push(current);
    }

    let mut problem_restatement = None;
    for section in &body {
        if section.heading.as_deref().is_some_and(|h| h.eq_ignore_ascii_case(RESTATEMENT_HEADING)) {
            if problem_restatement.is_some() {
                return Err(ParseError::DuplicateSection {
                    name: RESTATEMENT_HEADING.to_string(),
                    offset: section.offset,
                });
            }
            let content = match section.text.find('\n') {
                Some(nl) => &section.text[nl + 1..],
                None => "",
            };
            problem_restatement = Some(content.to_string());
        }
    }

    let key_steps = parse_key_steps(raw, &fences)?;
    for step in &key_steps {
        anchors.push((step.id.clone(), step.span.0));
    }
    anchors.sort_by_key(|(_, at)| *at);
    let mut seen = BTreeSet::new();
    for (id, at) in &anchors {
        if !seen.insert(id.as_str()) {
            return Err(ParseError::DuplicateId { id: id.clone(), offset: *at });
        }
    }

    let mut citations: Vec<CitationBlock> = Vec::new();
    let mut subgoal_tree = None;
    for fence in &fences {
        let kind = fence.info.split_whitespace().next().unwrap_or("");
        if kind == CITATION_BLOCK {
            let citation = parse_citation(raw, fence, citations.len() + 1)?;
            if citations.iter().any(|c| c.id == citation.id) {
                return Err(ParseError::DuplicateId { id: citation.id, offset: fence.start });
            }
            citations.push(citation);
        } else if kind == SUBGOAL_BLOCK {
            if subgoal_tree.is_some() {
                return Err(ParseError::DuplicateSection {
                    name: SUBGOAL_BLOCK.to_string(),
                    offset: fence.start,
                });
            }
            subgoal_tree = Some(parse_subgoal_tree(raw, fence)?);
        }
    }
    let subgoal_tree = subgoal_tree.ok_or_else(|| ParseError::MissingSection {
        name: SUBGOAL_BLOCK.to_string(),
        offset: raw.len(),
    })?;

    Ok(ProofDocument {
        problem_restatement,
        body,
        key_steps,
        citations,
        subgoal_tree,
        anchors: anchors.into_iter().map(|(id, _)| id).collect(),
        raw_text: raw.to_owned(),
    })
}

/// The restatement section verbatim, or `""` when the document has none.
pub fn extract_problem_restatement(doc: &ProofDocument) -> &str {
    doc.problem_restatement.as_deref().unwrap_or("")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TreeCheckOptions {
    /// Require every citation to be referenced by some subgoal, either as a
    /// `citation:<id>` resolution or as `[<id>]` / `citation:<id>` in a claim.
    pub require_citation_coverage: bool,
}

impl Default for TreeCheckOptions {
    fn default() -> Self {
        Self { require_citation_coverage: true }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum TreeFinding {
    NoRoot,
    MultipleRoots(Vec<String>),
    Orphan(String),
    /// Parent chain loop, listed in parent order starting from its smallest id.
    Cycle(Vec<String>),
    /// Node whose parent chain never reaches a root (it runs into a cycle or an orphan).
    Detached(String),
    Unresolved(String),
    DanglingResolution { node: String, target: String },
    /// `children` resolution on a node that has no children.
    EmptyComposition(String),
    UncitedCitation(String),
}

impl TreeFinding {
    pub fn code(&self) -> &'static str {
        match self {
            Self::NoRoot => "NoRoot",
            Self::MultipleRoots(_) => "MultipleRoots",
            Self::Orphan(_) => "Orphan",
            Self::Cycle(_) => "Cycle",
            Self::Detached(_) => "Detached",
            Self::Unresolved(_) => "Unresolved",
            Self::DanglingResolution { .. } => "DanglingResolution",
            Self::EmptyComposition(_) => "EmptyComposition",
            Self::UncitedCitation(_) => "UncitedCitation",
        }
    }
}

impl core::fmt::Display for TreeFinding {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            Self::NoRoot => write!(f, "subgoal tree has no root"),
            Self::MultipleRoots(ids) => write!(f, "subgoal tree has several roots: {}", ids.join(", ")),
            Self::Orphan(id) => write!(f, "node `{id}` names a parent that does not exist"),
            Self::Cycle(ids) => write!(f, "parent links form a cycle: {}", ids.join(" -> ")),
            Self::Detached(id) => write!(f, "node `{id}` is not connected to the root"),
            Self::Unresolved(id) => write!(f, "node `{id}` has no resolution"),
            Self::DanglingResolution { node, target } => {
                write!(f, "node `{node}` resolves to `{target}`, which does not exist")
            }
            Self::EmptyComposition(id) => {
                write!(f, "node `{id}` is resolved by its children but has none")
            }
            Self::UncitedCitation(id) => write!(f, "citation `{id}` is not used by any subgoal"),
        }
    }
}

/// Checks shape and resolution targets of the subgoal tree. An empty result
/// means the tree is well formed.
pub fn validate_subgoal_tree(doc: &ProofDocument, options: TreeCheckOptions) -> Vec<TreeFinding> {
    let tree = &doc.subgoal_tree;
    let mut findings = Vec::new();
    let index: BTreeMap<&str, &SubgoalNode> =
        tree.nodes.iter().map(|n| (n.id.as_str(), n)).collect();

    let roots: Vec<String> =
        tree.nodes.iter().filter(|n| n.parent.is_none()).map(|n| n.id.clone()).collect();
    match roots.len() {
        0 => findings.push(TreeFinding::NoRoot),
        1 => {}
        _ => {
            let mut sorted = roots.clone();
            sorted.sort();
            findings.push(TreeFinding::MultipleRoots(sorted));
        }
    }

    // Follow each parent chain until it ends at a root, at a missing parent,
    // or revisits a node.
    let mut cycles: BTreeSet<Vec<String>> = BTreeSet::new();
    let mut on_cycle: BTreeSet<&str> = BTreeSet::new();
    let mut detached: Vec<&str> = Vec::new();
    for node in &tree.nodes {
        let mut path: Vec<&str> = vec![node.id.as_str()];
        let mut current = node;
        let reaches_root = loop {
            let Some(parent) = current.parent.as_deref() else { break true };
            let Some(next) = index.get(parent) else { break false };
            if let Some(pos) = path.iter().position(|id| *id == parent) {
                let cycle = &path[pos..];
                on_cycle.extend(cycle.iter().copied());
                cycles.insert(canonical_cycle(cycle));
                break false;
            }
            path.push(parent);
            current = next;
        };
        if !reaches_root {
            detached.push(node.id.as_str());
        }
    }
    for node in &tree.nodes {
        if let Some(parent) = node.parent.as_deref() {
            if !index.contains_key(parent) {
                findings.push(TreeFinding::Orphan(node.id.clone()));
            }
        }
    }
    findings.extend(cycles.into_iter().map(TreeFinding::Cycle));
    for id in detached {
        let orphan = index[id].parent.as_deref().is_some_and(|p| !index.contains_key(p));
        if !on_cycle.contains(id) && !orphan {
            findings.push(TreeFinding::Detached(id.to_string()));
        }
    }

    let mut cited: BTreeSet<&str> = BTreeSet::new();
    for node in &tree.nodes {
        match &node.resolution {
            None => findings.push(TreeFinding::Unresolved(node.id.clone())),
            Some(Resolution::Anchor(target)) => {
                if !doc.has_anchor(target) {
                    findings.push(TreeFinding::DanglingResolution {
                        node: node.id.clone(),
                        target: target.clone(),
                    });
                }
            }
            Some(Resolution::Citation(target)) => {
                if doc.citation(target).is_some() {
                    cited.insert(target.as_str());
                } else {
                    findings.push(TreeFinding::DanglingResolution {
                        node: node.id.clone(),
                        target: target.clone(),
                    });
                }
            }
            Some(Resolution::Children) => {
                if !tree.nodes.iter().any(|c| c.parent.as_deref() == Some(node.id.as_str())) {
                    findings.push(TreeFinding::EmptyComposition(node.id.clone()));
                }
            }
        }
    }

    if options.require_citation_coverage {
        for citation in &doc.citations {
            let id = citation.id.as_str();
            let in_claim = tree.nodes.iter().any(|n| claim_mentions(&n.claim, id));
            if !cited.contains(id) && !in_claim {
                findings.push(TreeFinding::UncitedCitation(citation.id.clone()));
            }
        }
    }
    findings
}

fn claim_mentions(claim: &str, citation_id: &str) -> bool {
    claim.contains(&format!("[{citation_id}]")) || claim.contains(&format!("citation:{citation_id}"))
}

/// Rotates a cycle so that it starts at its smallest id.
pub(crate) fn canonical_cycle(cycle: &[&str]) -> Vec<String> {
    let start = cycle
        .iter()
        .enumerate()
        .min_by_key(|(_, id)| **id)
        .map(|(i, _)| i)
        .unwrap_or(0);
    cycle[start..].iter().chain(cycle[..start].iter()).map(|s| s.to_string()).collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum LintFinding {
    VaguePhrase { phrase: String, step_id: String, offset: usize },
    MissingKeyStep,
}

impl core::fmt::Display for LintFinding {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            Self::VaguePhrase { phrase, step_id, offset } => {
                write!(f, "vague phrase \"{phrase}\" in key step `{step_id}` at byte {offset}")
            }
            Self::MissingKeyStep => write!(f, "proof has no <key-original-step> region"),
        }
    }
}

fn chars_eq_ignore_case(a: char, b: char) -> bool {
    a == b || a.to_lowercase().eq(b.to_lowercase())
}

/// End offset of `phrase` matched case-insensitively at `at`.
fn match_ignore_case(hay: &str, at: usize, phrase: &str) -> Option<usize> {
    let mut hay_chars = hay[at..].char_indices();
    let mut end = at;
    for pc in phrase.chars() {
        let (i, hc) = hay_chars.next()?;
        if !chars_eq_ignore_case(hc, pc) {
            return None;
        }
        end = at + i + hc.len_utf8();
    }
    Some(end)
}

/// Flags lexicon phrases inside key steps (whole words, any case) and
/// reports a document without key steps.
pub fn lint_key_steps<S: AsRef<str>>(doc: &ProofDocument, lexicon: &[S]) -> Vec<LintFinding> {
    if doc.key_steps.is_empty() {
        return vec![LintFinding::MissingKeyStep];
    }
    let mut findings = Vec::new();
    for step in &doc.key_steps {
        let content = step.content.as_str();
        let mut prev: Option<char> = None;
        for (i, ch) in content.char_indices() {
            let boundary_before = !prev.is_some_and(char::is_alphanumeric);
            prev = Some(ch);
            if !boundary_before {
                continue;
            }
            for phrase in lexicon {
                let phrase = phrase.as_ref();
                if phrase.is_empty() {
                    continue;
                }
                let Some(end) = match_ignore_case(content, i, phrase) else { continue };
                let boundary_after = !content[end..].chars().next().is_some_and(char::is_alphanumeric);
                if boundary_after {
                    findings.push(LintFinding::VaguePhrase {
                        phrase: phrase.to_string(),
                        step_id: step.id.clone(),
                        offset: step.content_offset + i,
                    });
                }
            }
        }
    }
    findings
}
