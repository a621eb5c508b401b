//! Temporal precedence between extracted actions.
//!
//! Edges from dependency cues and AMR `:time` roles are stored already
//! normalized to precedence (`source` happens before `target`). Conflicts are
//! resolved per unordered pair by provenance, then Kahn's algorithm assigns
//! `temporal_order`.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use crate::amr::AmrGraph;
use crate::dep::DepSentence;
use crate::mope::{temporal_mark, MopeConfig, MotionAction, TemporalRelation, SEQUENCE_ADVERB};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EdgeKind {
    ExplicitDep,
    AmrTime,
    Implicit,
}

impl EdgeKind {
    pub fn priority(self) -> u8 {
        match self {
            EdgeKind::ExplicitDep => 2,
            EdgeKind::AmrTime => 1,
            EdgeKind::Implicit => 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TemporalEdge {
    pub source: usize,
    pub target: usize,
    pub kind: EdgeKind,
    pub connective: Option<String>,
}

impl TemporalEdge {
    pub fn new(source: usize, target: usize, kind: EdgeKind, connective: &str) -> Self {
        TemporalEdge {
            source,
            target,
            kind,
            connective: Some(connective.to_string()),
        }
    }

    fn pair(&self) -> (usize, usize) {
        (self.source.min(self.target), self.source.max(self.target))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ActionGraph {
    pub nodes: Vec<usize>,
    pub edges: Vec<TemporalEdge>,
}

impl ActionGraph {
    pub fn new(nodes: impl IntoIterator<Item = usize>, edges: Vec<TemporalEdge>) -> Self {
        let nodes: BTreeSet<usize> = nodes.into_iter().collect();
        let edges = resolve_edges(edges)
            .into_iter()
            .filter(|e| nodes.contains(&e.source) && nodes.contains(&e.target))
            .collect();
        ActionGraph {
            nodes: nodes.into_iter().collect(),
            edges,
        }
    }
}

fn connected(edges: &[TemporalEdge], a: usize, b: usize) -> bool {
    edges
        .iter()
        .any(|e| (e.source == a && e.target == b) || (e.source == b && e.target == a))
}

/// Aligned action ids of one sentence, keyed by token index.
fn aligned_in(actions: &[MotionAction], sentence: usize) -> BTreeMap<usize, usize> {
    actions
        .iter()
        .filter_map(|a| {
            let r = a.verb_token?;
            (r.sentence == sentence).then_some((r.index, a.id))
        })
        .collect()
}

/// Dependency cues inside each sentence: temporal adverbial clauses,
/// "then" and "and" conjunctions, and adjacency between verbs.
pub fn extract_dep_edges(
    actions: &[MotionAction],
    sentences: &[DepSentence],
    config: &MopeConfig,
) -> Vec<TemporalEdge> {
    let mut all = Vec::new();
    for (si, sentence) in sentences.iter().enumerate() {
        let aligned = aligned_in(actions, si);
        let mut edges: Vec<TemporalEdge> = Vec::new();
        for (&tok, &id) in &aligned {
            let token = &sentence.tokens[tok - 1];
            let Some(&head_id) = aligned.get(&token.head) else {
                continue;
            };
            match config.canonical(&token.deprel) {
                "advcl" => {
                    let Some(conn) = temporal_mark(token, sentence, config) else {
                        continue;
                    };
                    // "after": the clause happens first; "before": the main clause does.
                    let (src, dst) = if config.temporal_connectives_later.contains(&conn) {
                        (id, head_id)
                    } else {
                        (head_id, id)
                    };
                    edges.push(TemporalEdge::new(src, dst, EdgeKind::ExplicitDep, &conn));
                }
                "conj" => {
                    let then = sentence.tokens.iter().any(|t| {
                        t.head == tok
                            && config.canonical(&t.deprel) == "advmod"
                            && t.lemma.eq_ignore_ascii_case(SEQUENCE_ADVERB)
                    });
                    if then {
                        edges.push(TemporalEdge::new(head_id, id, EdgeKind::ExplicitDep, SEQUENCE_ADVERB));
                        continue;
                    }
                    let (lo, hi) = (token.head.min(tok), token.head.max(tok));
                    let and = sentence.tokens.iter().any(|t| {
                        t.index > lo
                            && t.index < hi
                            && (t.head == tok || t.head == token.head)
                            && config.canonical(&t.deprel) == "cc"
                            && t.lemma.eq_ignore_ascii_case("and")
                    });
                    if and {
                        edges.push(TemporalEdge::new(head_id, id, EdgeKind::Implicit, "and"));
                    }
                }
                _ => {}
            }
        }
        let ids: Vec<usize> = aligned.values().copied().collect();
        for w in ids.windows(2) {
            if !connected(&edges, w[0], w[1]) {
                edges.push(TemporalEdge::new(w[0], w[1], EdgeKind::Implicit, "sequence"));
            }
        }
        all.extend(edges);
    }
    all
}

/// Implicit edges from the last aligned verb of one sentence to the first
/// aligned verb of the next sentence that has any.
pub fn extract_cross_sentence_edges(
    actions: &[MotionAction],
    sentence_count: usize,
    existing: &[TemporalEdge],
) -> Vec<TemporalEdge> {
    let mut out = Vec::new();
    let mut prev_last: Option<usize> = None;
    for si in 0..sentence_count {
        let aligned = aligned_in(actions, si);
        let (Some(&first), Some(&last)) = (aligned.values().next(), aligned.values().last()) else {
            continue;
        };
        if let Some(p) = prev_last {
            if !connected(existing, p, first) && !connected(&out, p, first) {
                out.push(TemporalEdge::new(p, first, EdgeKind::Implicit, "sequence"));
            }
        }
        prev_last = Some(last);
    }
    out
}

/// Edges from AMR `:time` roles: `after`/`before` nodes via their `:op1`,
/// and `then` via the preceding operand of an enclosing `and` node.
pub fn extract_amr_time_edges(actions: &[MotionAction], graphs: &[AmrGraph]) -> Vec<TemporalEdge> {
    let by_var: HashMap<(usize, &str), usize> = actions
        .iter()
        .map(|a| ((a.graph_index, a.amr_var.as_str()), a.id))
        .collect();
    let mut out = Vec::new();
    for a in actions {
        let Some(graph) = graphs.get(a.graph_index) else {
            continue;
        };
        if !graph.contains(&a.amr_var) {
            continue;
        }
        let lookup = |v: &str| by_var.get(&(a.graph_index, v)).copied().filter(|&b| b != a.id);
        for e in graph.edges_from(&a.amr_var).filter(|e| e.role == ":time") {
            let Some(time_node) = e.target.as_var() else {
                continue;
            };
            match graph.concept(time_node) {
                Some(conn @ ("after" | "before")) => {
                    let other = graph
                        .edges_from(time_node)
                        .find(|e| e.role == ":op1")
                        .and_then(|e| e.target.as_var())
                        .and_then(lookup);
                    if let Some(b) = other {
                        let (src, dst) = if conn == "after" { (b, a.id) } else { (a.id, b) };
                        out.push(TemporalEdge::new(src, dst, EdgeKind::AmrTime, conn));
                    }
                }
                Some("then") => {
                    for op in graph.edges().iter().filter(|op| op.target.as_var() == Some(&a.amr_var)) {
                        if graph.concept(&op.source) != Some("and") {
                            continue;
                        }
                        let Some(k) = op.role.strip_prefix(":op").and_then(|n| n.parse::<usize>().ok()) else {
                            continue;
                        };
                        if k < 2 {
                            continue;
                        }
                        let prev_role = format!(":op{}", k - 1);
                        let prev = graph
                            .edges_from(&op.source)
                            .find(|e| e.role == prev_role)
                            .and_then(|e| e.target.as_var())
                            .and_then(lookup);
                        if let Some(b) = prev {
                            out.push(TemporalEdge::new(b, a.id, EdgeKind::AmrTime, "then"));
                        }
                    }
                }
                _ => {}
            }
        }
    }
    out
}

/// Keeps one edge per unordered pair: the highest priority kind, and among
/// equals the first extracted.
pub fn resolve_edges(edges: Vec<TemporalEdge>) -> Vec<TemporalEdge> {
    let mut slot: HashMap<(usize, usize), usize> = HashMap::new();
    let mut kept: Vec<TemporalEdge> = Vec::new();
    for e in edges {
        if e.source == e.target {
            continue;
        }
        match slot.get(&e.pair()) {
            None => {
                slot.insert(e.pair(), kept.len());
                kept.push(e);
            }
            Some(&i) if e.kind.priority() > kept[i].kind.priority() => kept[i] = e,
            Some(_) => {}
        }
    }
    kept
}

/// Result of Kahn's algorithm: `order[id]` is the removal rank, or -1.
pub fn kahn_order(graph: &ActionGraph) -> BTreeMap<usize, i64> {
    let mut indegree: BTreeMap<usize, usize> = graph.nodes.iter().map(|&n| (n, 0)).collect();
    let mut succ: HashMap<usize, Vec<usize>> = HashMap::new();
    for e in &graph.edges {
        *indegree.get_mut(&e.target).expect("edge endpoints are nodes") += 1;
        succ.entry(e.source).or_default().push(e.target);
    }
    let mut order: BTreeMap<usize, i64> = graph.nodes.iter().map(|&n| (n, -1)).collect();
    let mut frontier: BTreeSet<usize> = indegree
        .iter()
        .filter(|(_, &d)| d == 0)
        .map(|(&n, _)| n)
        .collect();
    let mut rank = 0;
    // Each round removes the whole zero in-degree frontier in id order.
    while !frontier.is_empty() {
        let mut next = BTreeSet::new();
        for n in frontier {
            order.insert(n, rank);
            rank += 1;
            for &s in succ.get(&n).map(Vec::as_slice).unwrap_or_default() {
                let d = indegree.get_mut(&s).expect("edge endpoints are nodes");
                *d -= 1;
                if *d == 0 {
                    next.insert(s);
                }
            }
        }
        frontier = next;
    }
    order
}

/// Assigns `temporal_order` and `temporal_relation`, and returns the actions
/// sorted by order with unordered (-1) actions last in id order.
pub fn sort_actions(mut actions: Vec<MotionAction>, graph: &ActionGraph) -> Vec<MotionAction> {
    let order = kahn_order(graph);
    let rank = |id: usize| order.get(&id).copied().unwrap_or(-1);
    for a in &mut actions {
        a.temporal_order = rank(a.id);
        a.temporal_relation = None;
        if a.temporal_order < 0 {
            continue;
        }
        a.temporal_relation = graph
            .edges
            .iter()
            .filter(|e| e.source == a.id && rank(e.target) >= 0)
            .min_by_key(|e| rank(e.target))
            .map(|e| TemporalRelation {
                kind: e.kind,
                connective: e.connective.clone(),
            });
    }
    actions.sort_by_key(|a| (a.temporal_order < 0, a.temporal_order, a.id));
    actions
}

/// All temporal cues for a caption, in extraction order.
pub fn extract_all_edges(
    actions: &[MotionAction],
    graphs: &[AmrGraph],
    sentences: &[DepSentence],
    config: &MopeConfig,
) -> Vec<TemporalEdge> {
    let mut edges = extract_dep_edges(actions, sentences, config);
    if config.cross_sentence_edges {
        let cross = extract_cross_sentence_edges(actions, sentences.len(), &edges);
        edges.extend(cross);
    }
    edges.extend(extract_amr_time_edges(actions, graphs));
    edges
}

pub fn order_actions(
    actions: Vec<MotionAction>,
    graphs: &[AmrGraph],
    sentences: &[DepSentence],
    config: &MopeConfig,
) -> Vec<MotionAction> {
    let edges = extract_all_edges(&actions, graphs, sentences, config);
    let graph = ActionGraph::new(actions.iter().map(|a| a.id), edges);
    sort_actions(actions, &graph)
}
