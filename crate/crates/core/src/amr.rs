//! PENMAN-notation AMR graphs.
//!
//! A graph is kept as an instance table (variable to concept) plus a single
//! list of edges in declaration order. Edges whose target is a bound variable
//! are role edges; everything else is an attribute literal. Literals are kept
//! verbatim, so a quoted name such as `"Tom"` keeps its quotes.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum AmrError {
    #[error("syntax error at byte {offset}: {message}")]
    Syntax { offset: usize, message: String },
    #[error("unknown variable `{0}`")]
    UnknownVariable(String),
}

impl AmrError {
    fn syntax(offset: usize, message: impl Into<String>) -> Self {
        AmrError::Syntax {
            offset,
            message: message.into(),
        }
    }
}

/// Target of an outgoing edge.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Target {
    Var(String),
    Literal(String),
}

impl Target {
    pub fn as_var(&self) -> Option<&str> {
        match self {
            Target::Var(v) => Some(v),
            Target::Literal(_) => None,
        }
    }

    pub fn as_str(&self) -> &str {
        match self {
            Target::Var(s) | Target::Literal(s) => s,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Edge {
    pub source: String,
    pub role: String,
    pub target: Target,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AmrGraph {
    root: String,
    /// Instances in definition order.
    instances: Vec<(String, String)>,
    index: HashMap<String, usize>,
    edges: Vec<Edge>,
}

impl AmrGraph {
    pub fn root(&self) -> &str {
        &self.root
    }

    pub fn concept(&self, var: &str) -> Option<&str> {
        self.index.get(var).map(|&i| self.instances[i].1.as_str())
    }

    pub fn contains(&self, var: &str) -> bool {
        self.index.contains_key(var)
    }

    /// `(variable, concept)` pairs in definition order.
    pub fn instances(&self) -> impl Iterator<Item = (&str, &str)> {
        self.instances.iter().map(|(v, c)| (v.as_str(), c.as_str()))
    }

    pub fn instance_map(&self) -> BTreeMap<&str, &str> {
        self.instances().collect()
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    /// `(source, role, target-variable)` triples in declaration order.
    pub fn role_edges(&self) -> impl Iterator<Item = (&str, &str, &str)> {
        self.edges.iter().filter_map(|e| match &e.target {
            Target::Var(t) => Some((e.source.as_str(), e.role.as_str(), t.as_str())),
            Target::Literal(_) => None,
        })
    }

    /// `(source, role, literal)` triples in declaration order.
    pub fn attribute_edges(&self) -> impl Iterator<Item = (&str, &str, &str)> {
        self.edges.iter().filter_map(|e| match &e.target {
            Target::Literal(v) => Some((e.source.as_str(), e.role.as_str(), v.as_str())),
            Target::Var(_) => None,
        })
    }

    /// First edge leaving `var` with the given role.
    pub fn outgoing(&self, var: &str, role: &str) -> Result<Option<&Target>, AmrError> {
        if !self.contains(var) {
            return Err(AmrError::UnknownVariable(var.to_string()));
        }
        Ok(self
            .edges
            .iter()
            .find(|e| e.source == var && e.role == role)
            .map(|e| &e.target))
    }

    /// All edges leaving `var`, in declaration order.
    pub fn edges_from<'a>(&'a self, var: &'a str) -> impl Iterator<Item = &'a Edge> + 'a {
        self.edges.iter().filter(move |e| e.source == var)
    }

    /// Variables in depth-first preorder from the root, following role edges
    /// in declaration order. Unreachable instances follow in definition order.
    pub fn depth_first(&self) -> Vec<&str> {
        let mut children: HashMap<&str, Vec<&str>> = HashMap::new();
        for (s, _, t) in self.role_edges() {
            children.entry(s).or_default().push(t);
        }
        let mut seen = HashSet::new();
        let mut order = Vec::with_capacity(self.instances.len());
        let mut stack = vec![self.root.as_str()];
        while let Some(v) = stack.pop() {
            if !seen.insert(v) {
                continue;
            }
            order.push(v);
            if let Some(cs) = children.get(v) {
                stack.extend(cs.iter().rev().copied().filter(|c| !seen.contains(c)));
            }
        }
        for (v, _) in self.instances() {
            if seen.insert(v) {
                order.push(v);
            }
        }
        order
    }

    /// Edge sets and instance map, for order-insensitive comparison.
    pub fn structure(&self) -> GraphStructure {
        GraphStructure {
            root: self.root.clone(),
            instances: self
                .instances
                .iter()
                .map(|(v, c)| (v.clone(), c.clone()))
                .collect(),
            role_edges: self
                .role_edges()
                .map(|(s, r, t)| (s.to_string(), r.to_string(), t.to_string()))
                .collect(),
            attribute_edges: self
                .attribute_edges()
                .map(|(s, r, t)| (s.to_string(), r.to_string(), t.to_string()))
                .collect(),
        }
    }

    pub fn to_penman(&self) -> String {
        serialize_penman(self)
    }

    /// Builds a graph from parts, checking the structural invariants.
    pub fn from_parts(
        root: &str,
        instances: Vec<(String, String)>,
        edges: Vec<Edge>,
    ) -> Result<Self, AmrError> {
        let mut index = HashMap::new();
        for (i, (v, _)) in instances.iter().enumerate() {
            if index.insert(v.clone(), i).is_some() {
                return Err(AmrError::syntax(0, format!("duplicate variable `{v}`")));
            }
        }
        if !index.contains_key(root) {
            return Err(AmrError::UnknownVariable(root.to_string()));
        }
        for e in &edges {
            if !index.contains_key(&e.source) {
                return Err(AmrError::UnknownVariable(e.source.clone()));
            }
            if let Target::Var(t) = &e.target {
                if !index.contains_key(t) {
                    return Err(AmrError::UnknownVariable(t.clone()));
                }
            }
            if !e.role.starts_with(':') {
                return Err(AmrError::syntax(0, format!("role `{}` lacks ':'", e.role)));
            }
        }
        Ok(AmrGraph {
            root: root.to_string(),
            instances,
            index,
            edges,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GraphStructure {
    pub root: String,
    pub instances: BTreeMap<String, String>,
    pub role_edges: BTreeSet<(String, String, String)>,
    pub attribute_edges: BTreeSet<(String, String, String)>,
}

#[derive(Debug, Clone, PartialEq)]
enum Tok<'a> {
    Open,
    Close,
    Slash,
    Role(&'a str),
    Quoted(&'a str),
    Symbol(&'a str),
}

fn tokenize(text: &str) -> Result<Vec<(usize, Tok<'_>)>, AmrError> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    let is_delim = |b: u8| b.is_ascii_whitespace() || matches!(b, b'(' | b')' | b'/' | b'"');
    while i < bytes.len() {
        let b = bytes[i];
        match b {
            _ if b.is_ascii_whitespace() => i += 1,
            // comment line, e.g. `# ::snt ...`
            b'#' if i == 0 || bytes[i - 1] == b'\n' => {
                while i < bytes.len() && bytes[i] != b'\n' {
                    i += 1;
                }
            }
            b'(' => {
                out.push((i, Tok::Open));
                i += 1;
            }
            b')' => {
                out.push((i, Tok::Close));
                i += 1;
            }
            b'/' => {
                out.push((i, Tok::Slash));
                i += 1;
            }
            b'"' => {
                let start = i;
                i += 1;
                loop {
                    match bytes.get(i) {
                        None => return Err(AmrError::syntax(start, "unterminated string")),
                        Some(b'\\') => i += 2,
                        Some(b'"') => {
                            i += 1;
                            break;
                        }
                        Some(_) => i += 1,
                    }
                }
                out.push((start, Tok::Quoted(&text[start..i])));
            }
            _ => {
                let start = i;
                while i < bytes.len() && !is_delim(bytes[i]) {
                    i += 1;
                }
                let word = &text[start..i];
                if word.starts_with(':') {
                    if word.len() == 1 {
                        return Err(AmrError::syntax(start, "empty role label"));
                    }
                    out.push((start, Tok::Role(word)));
                } else {
                    out.push((start, Tok::Symbol(word)));
                }
            }
        }
    }
    Ok(out)
}

/// Raw edge before bare symbols are resolved against the variable table.
struct RawEdge<'a> {
    source: &'a str,
    role: &'a str,
    value: RawValue<'a>,
}

enum RawValue<'a> {
    Node(&'a str),
    Symbol(&'a str),
    Quoted(&'a str),
}

struct Parser<'t, 'a> {
    toks: &'t [(usize, Tok<'a>)],
    pos: usize,
    end: usize,
    instances: Vec<(String, String)>,
    defined: HashMap<&'a str, &'a str>,
    edges: Vec<RawEdge<'a>>,
}

impl<'t, 'a> Parser<'t, 'a> {
    fn offset(&self) -> usize {
        self.toks.get(self.pos).map(|t| t.0).unwrap_or(self.end)
    }

    fn next(&mut self) -> Option<&'t Tok<'a>> {
        let t = self.toks.get(self.pos).map(|t| &t.1);
        self.pos += 1;
        t
    }

    fn peek(&self) -> Option<&'t Tok<'a>> {
        self.toks.get(self.pos).map(|t| &t.1)
    }

    fn node(&mut self) -> Result<&'a str, AmrError> {
        let off = self.offset();
        match self.next() {
            Some(Tok::Open) => {}
            _ => return Err(AmrError::syntax(off, "expected '('")),
        }
        let off = self.offset();
        let var = match self.next() {
            Some(Tok::Symbol(v)) => *v,
            _ => return Err(AmrError::syntax(off, "expected variable")),
        };
        let off = self.offset();
        match self.next() {
            Some(Tok::Slash) => {}
            _ => return Err(AmrError::syntax(off, format!("missing '/' after `{var}`"))),
        }
        let off = self.offset();
        let concept = match self.next() {
            Some(Tok::Symbol(c)) | Some(Tok::Quoted(c)) => *c,
            _ => return Err(AmrError::syntax(off, "expected concept")),
        };
        match self.defined.get(var) {
            Some(prev) if *prev != concept => {
                return Err(AmrError::syntax(
                    off,
                    format!("variable `{var}` redefined as `{concept}` (was `{prev}`)"),
                ))
            }
            Some(_) => {}
            None => {
                self.defined.insert(var, concept);
                self.instances.push((var.to_string(), concept.to_string()));
            }
        }
        loop {
            let off = self.offset();
            match self.next() {
                Some(Tok::Close) => return Ok(var),
                Some(Tok::Role(role)) => {
                    let value = match self.peek() {
                        Some(Tok::Open) => RawValue::Node(self.node()?),
                        Some(Tok::Symbol(s)) => {
                            self.pos += 1;
                            RawValue::Symbol(s)
                        }
                        Some(Tok::Quoted(s)) => {
                            self.pos += 1;
                            RawValue::Quoted(s)
                        }
                        _ => {
                            return Err(AmrError::syntax(
                                self.offset(),
                                format!("missing value for role `{role}`"),
                            ))
                        }
                    };
                    self.edges.push(RawEdge {
                        source: var,
                        role,
                        value,
                    });
                }
                None => return Err(AmrError::syntax(off, "unbalanced parentheses")),
                Some(_) => return Err(AmrError::syntax(off, "expected role or ')'")),
            }
        }
    }
}

fn parse_one<'t, 'a>(
    toks: &'t [(usize, Tok<'a>)],
    start: usize,
    end: usize,
) -> Result<(AmrGraph, usize), AmrError> {
    let mut p = Parser {
        toks,
        pos: start,
        end,
        instances: Vec::new(),
        defined: HashMap::new(),
        edges: Vec::new(),
    };
    let root = p.node()?;
    // Bare symbols become references when they name a variable bound anywhere
    // in the graph, which admits forward re-entrancies.
    let edges = p
        .edges
        .iter()
        .map(|e| Edge {
            source: e.source.to_string(),
            role: e.role.to_string(),
            target: match e.value {
                RawValue::Node(v) => Target::Var(v.to_string()),
                RawValue::Symbol(s) if p.defined.contains_key(s) => Target::Var(s.to_string()),
                RawValue::Symbol(s) | RawValue::Quoted(s) => Target::Literal(s.to_string()),
            },
        })
        .collect();
    let graph = AmrGraph::from_parts(root, p.instances, edges)?;
    Ok((graph, p.pos))
}

/// Parses exactly one PENMAN graph.
pub fn parse_penman(text: &str) -> Result<AmrGraph, AmrError> {
    let toks = tokenize(text)?;
    if toks.is_empty() {
        return Err(AmrError::syntax(0, "empty input"));
    }
    let (graph, pos) = parse_one(&toks, 0, text.len())?;
    if let Some((off, _)) = toks.get(pos) {
        return Err(AmrError::syntax(*off, "trailing content after graph"));
    }
    Ok(graph)
}

/// Parses a sequence of graphs, such as a blank-line separated file.
pub fn parse_penman_multi(text: &str) -> Result<Vec<AmrGraph>, AmrError> {
    let toks = tokenize(text)?;
    let mut graphs = Vec::new();
    let mut pos = 0;
    while pos < toks.len() {
        let (g, next) = parse_one(&toks, pos, text.len())?;
        graphs.push(g);
        pos = next;
    }
    Ok(graphs)
}

/// Writes the graph as an indented PENMAN tree rooted at `graph.root()`.
/// Each variable is defined at its first visit; later visits are bare
/// references.
pub fn serialize_penman(graph: &AmrGraph) -> String {
    let mut out = String::new();
    let mut defined = HashSet::new();
    write_node(graph, graph.root(), 0, &mut defined, &mut out);
    // Instances unreachable from the root cannot be expressed in one tree;
    // they are dropped, which parse never produces.
    out
}

fn write_node<'g>(
    graph: &'g AmrGraph,
    var: &'g str,
    depth: usize,
    defined: &mut HashSet<&'g str>,
    out: &mut String,
) {
    defined.insert(var);
    let _ = write!(out, "({} / {}", var, graph.concept(var).unwrap_or_default());
    for e in graph.edges_from(var) {
        out.push('\n');
        out.extend(std::iter::repeat_n(' ', (depth + 1) * 4));
        out.push_str(&e.role);
        out.push(' ');
        match &e.target {
            Target::Var(t) if !defined.contains(t.as_str()) => {
                write_node(graph, t, depth + 1, defined, out)
            }
            Target::Var(t) => out.push_str(t),
            Target::Literal(l) => out.push_str(l),
        }
    }
    out.push(')');
}

/// Strips surrounding double quotes from a literal.
pub fn unquote(literal: &str) -> &str {
    literal
        .strip_prefix('"')
        .and_then(|s| s.strip_suffix('"'))
        .unwrap_or(literal)
}
