//! Motion action extraction from paired AMR graphs and dependency trees.
//!
//! Candidates come from eventive AMR predicates. Each candidate is aligned to
//! at most one verb token, then its subject, object, direction and modifiers
//! are filled from AMR roles first and dependency relations second. Temporal
//! ordering is delegated to [`crate::temporal`].

use std::collections::{BTreeMap, BTreeSet, HashSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::amr::{unquote, AmrGraph, Target};
use crate::dep::{DepSentence, DepToken};
use crate::temporal::{self, EdgeKind};

/// Adverb that marks an explicit sequence on a conjunct verb.
pub const SEQUENCE_ADVERB: &str = "then";

/// Roles gathered for each candidate.
pub const ACTION_ROLES: [&str; 7] = [
    ":ARG0",
    ":ARG1",
    ":ARG2",
    ":direction",
    ":manner",
    ":location",
    ":time",
];

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ConfigError {
    #[error("connective `{0}` is listed as both later and earlier")]
    OverlappingConnectives(String),
}

fn set(words: &[&str]) -> BTreeSet<String> {
    words.iter().map(|w| w.to_string()).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MopeConfig {
    pub direction_lexicon: BTreeSet<String>,
    /// Connectives whose clause happens before the main clause ("after").
    pub temporal_connectives_later: BTreeSet<String>,
    /// Connectives whose clause happens after the main clause ("before").
    pub temporal_connectives_earlier: BTreeSet<String>,
    /// Exact concepts, or glob patterns using `*` and `?`.
    pub static_verb_blocklist: BTreeSet<String>,
    pub legacy_label_aliases: BTreeMap<String, String>,
    /// Prepositions whose phrases count as spatial modifiers.
    pub spatial_prepositions: BTreeSet<String>,
    /// Link the last verb of a sentence to the first verb of the next one.
    pub cross_sentence_edges: bool,
}

impl Default for MopeConfig {
    fn default() -> Self {
        MopeConfig {
            direction_lexicon: set(&[
                "forward",
                "backward",
                "left",
                "right",
                "up",
                "down",
                "upward",
                "downward",
                "clockwise",
                "counterclockwise",
            ]),
            temporal_connectives_later: set(&["after", "since", "once", "following", "upon"]),
            temporal_connectives_earlier: set(&["before", "until", "when", "while"]),
            static_verb_blocklist: set(&[
                "see-01",
                "want-01",
                "know-01",
                "believe-01",
                "resemble-01",
                "have-03",
                "be-01",
                // reification and role frames
                "*-9?",
            ]),
            legacy_label_aliases: [
                ("dobj", "obj"),
                ("auxpass", "aux:pass"),
                ("nsubjpass", "nsubj:pass"),
                ("csubjpass", "csubj:pass"),
                ("ROOT", "root"),
            ]
            .into_iter()
            .map(|(a, b)| (a.to_string(), b.to_string()))
            .collect(),
            spatial_prepositions: set(&[
                "above", "across", "against", "along", "around", "at", "behind", "below",
                "beneath", "beside", "between", "by", "down", "from", "in", "inside", "into",
                "near", "off", "on", "onto", "out", "outside", "over", "past", "through",
                "to", "toward", "towards", "under", "up", "within",
            ]),
            cross_sentence_edges: true,
        }
    }
}

impl MopeConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if let Some(w) = self
            .temporal_connectives_later
            .intersection(&self.temporal_connectives_earlier)
            .next()
        {
            return Err(ConfigError::OverlappingConnectives(w.clone()));
        }
        Ok(())
    }

    /// Maps legacy dependency labels onto their UD names.
    pub fn canonical<'a>(&'a self, deprel: &'a str) -> &'a str {
        self.legacy_label_aliases
            .get(deprel)
            .map(String::as_str)
            .unwrap_or(deprel)
    }

    pub fn is_temporal_connective(&self, lemma: &str) -> bool {
        self.temporal_connectives_later.contains(lemma)
            || self.temporal_connectives_earlier.contains(lemma)
    }

    pub fn is_blocked(&self, concept: &str) -> bool {
        self.static_verb_blocklist.iter().any(|p| {
            if p.contains(['*', '?']) {
                glob_match(p.as_bytes(), concept.as_bytes())
            } else {
                p == concept
            }
        })
    }

    /// Normalized lexicon entry for a word or concept, if it names a direction.
    pub fn direction_word(&self, word: &str) -> Option<String> {
        let lower = word.to_lowercase();
        let bare = sense_suffix(&lower).map(|(l, _)| l).unwrap_or(&lower);
        self.direction_lexicon
            .contains(bare)
            .then(|| bare.to_string())
    }
}

fn glob_match(pat: &[u8], s: &[u8]) -> bool {
    match (pat.first(), s.first()) {
        (None, None) => true,
        (Some(b'*'), _) => glob_match(&pat[1..], s) || (!s.is_empty() && glob_match(pat, &s[1..])),
        (Some(b'?'), Some(_)) => glob_match(&pat[1..], &s[1..]),
        (Some(p), Some(c)) if p == c => glob_match(&pat[1..], &s[1..]),
        _ => false,
    }
}

/// Splits `walk-01` into `("walk", 1)`.
pub fn sense_suffix(concept: &str) -> Option<(&str, u8)> {
    let b = concept.as_bytes();
    let n = b.len();
    if n < 4 || b[n - 3] != b'-' || !b[n - 2].is_ascii_digit() || !b[n - 1].is_ascii_digit() {
        return None;
    }
    let sense = (b[n - 2] - b'0') * 10 + (b[n - 1] - b'0');
    Some((&concept[..n - 3], sense))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct TokenRef {
    pub sentence: usize,
    pub index: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TemporalRelation {
    pub kind: EdgeKind,
    pub connective: Option<String>,
}

/// One extracted action.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct MotionAction {
    pub id: usize,
    pub amr_var: String,
    /// Which input graph `amr_var` belongs to.
    pub graph_index: usize,
    pub concept: String,
    pub action_verb: Option<String>,
    pub verb_span: Option<(usize, usize)>,
    pub verb_token: Option<TokenRef>,
    pub subject: Option<String>,
    pub object: Option<String>,
    pub direction: Option<String>,
    pub modifiers: Vec<String>,
    pub temporal_order: i64,
    pub temporal_relation: Option<TemporalRelation>,
}

pub type RoleMap = BTreeMap<String, Target>;

/// Eventive predicates in depth-first order from the root.
pub fn extract_action_candidates(graph: &AmrGraph, config: &MopeConfig) -> Vec<(String, String)> {
    graph
        .depth_first()
        .into_iter()
        .filter_map(|v| {
            let c = graph.concept(v)?;
            (sense_suffix(c).is_some() && !config.is_blocked(c)).then(|| (v.to_string(), c.to_string()))
        })
        .collect()
}

/// Roles of interest leaving `var`. An inverse edge `(x :ROLE-of var)` counts
/// as `var :ROLE x` when no direct edge exists.
pub fn collect_roles(graph: &AmrGraph, var: &str) -> RoleMap {
    let mut roles = RoleMap::new();
    for role in ACTION_ROLES {
        if let Some(e) = graph.edges_from(var).find(|e| e.role == role) {
            roles.insert(role.to_string(), e.target.clone());
            continue;
        }
        let inverse = format!("{role}-of");
        if let Some(e) = graph
            .edges()
            .iter()
            .find(|e| e.role == inverse && e.target.as_var() == Some(var))
        {
            roles.insert(role.to_string(), Target::Var(e.source.clone()));
        }
    }
    roles
}

/// Dynamic-verb filter.
pub fn is_valid_action_verb(token: &DepToken, sentence: &DepSentence, config: &MopeConfig) -> bool {
    let rel = config.canonical(&token.deprel);
    match rel {
        "aux" | "aux:pass" | "cop" => false,
        "acl" | "amod" => !sentence
            .token(token.head)
            .map(|h| h.is_nominal())
            .unwrap_or(false),
        "advcl" => temporal_mark(token, sentence, config).is_some(),
        _ => true,
    }
}

/// Lowercased lemma of the first `mark` child that is a temporal connective.
pub(crate) fn temporal_mark(token: &DepToken, sentence: &DepSentence, config: &MopeConfig) -> Option<String> {
    sentence
        .tokens
        .iter()
        .filter(|t| t.head == token.index && config.canonical(&t.deprel) == "mark")
        .map(|t| t.lemma.to_lowercase())
        .find(|l| config.is_temporal_connective(l))
}

fn lemma_matches(token: &DepToken, lemma: &str) -> bool {
    let tl = token.lemma.to_lowercase();
    tl == lemma || lemma.split_once('-').is_some_and(|(head, _)| tl == head)
}

/// Earliest valid verb token whose lemma matches the predicate, searching the
/// given sentences in document order and skipping tokens already taken.
pub(crate) fn align_in(
    concept: &str,
    sentences: &[DepSentence],
    range: std::ops::Range<usize>,
    config: &MopeConfig,
    taken: &HashSet<TokenRef>,
) -> Option<TokenRef> {
    let lemma = sense_suffix(concept)?.0.to_lowercase();
    for si in range {
        let s = &sentences[si];
        for t in &s.tokens {
            let r = TokenRef {
                sentence: si,
                index: t.index,
            };
            if t.is_verbal()
                && lemma_matches(t, &lemma)
                && !taken.contains(&r)
                && is_valid_action_verb(t, s, config)
            {
                return Some(r);
            }
        }
    }
    None
}

/// Aligns a predicate to the earliest surviving verb token across sentences.
pub fn align_to_dependency<'s>(
    concept: &str,
    sentences: &'s [DepSentence],
    config: &MopeConfig,
) -> Option<&'s DepToken> {
    align_in(concept, sentences, 0..sentences.len(), config, &HashSet::new())
        .map(|r| &sentences[r.sentence].tokens[r.index - 1])
}

/// A prepositional phrase hanging off a verb, in either legacy
/// (`prep` + `pobj`) or UD (`obl` + `case`) shape.
#[derive(Debug, Clone, PartialEq, Eq)]
struct PrepPhrase {
    preposition: String,
    preposition_index: usize,
    /// Index of the token whose subtree is the whole phrase.
    phrase_head: usize,
    nominal: usize,
}

fn prep_phrases(sentence: &DepSentence, verb: &DepToken, config: &MopeConfig) -> Vec<PrepPhrase> {
    let mut out = Vec::new();
    for c in sentence.tokens.iter().filter(|t| t.head == verb.index) {
        let rel = config.canonical(&c.deprel);
        if rel == "prep" {
            if let Some(n) = sentence
                .tokens
                .iter()
                .find(|t| t.head == c.index && config.canonical(&t.deprel) == "pobj")
            {
                out.push(PrepPhrase {
                    preposition: c.lemma.to_lowercase(),
                    preposition_index: c.index,
                    phrase_head: c.index,
                    nominal: n.index,
                });
            }
        } else if rel == "obl" || rel.starts_with("obl:") {
            if let Some(k) = sentence
                .tokens
                .iter()
                .find(|t| t.head == c.index && config.canonical(&t.deprel) == "case")
            {
                out.push(PrepPhrase {
                    preposition: k.lemma.to_lowercase(),
                    preposition_index: k.index,
                    phrase_head: c.index,
                    nominal: c.index,
                });
            }
        }
    }
    out
}

/// The phrase's nominal without its preposition.
fn nominal_span(sentence: &DepSentence, phrase: &PrepPhrase) -> Option<String> {
    let words: Vec<&str> = sentence
        .subtree(phrase.nominal)
        .ok()?
        .into_iter()
        .filter(|&i| i != phrase.preposition_index)
        .map(|i| sentence.tokens[i - 1].form.as_str())
        .collect();
    Some(words.join(" "))
}

/// Surface text for an AMR role target: a `:name` node's `:op1` literal, the
/// concept, or the literal itself.
fn role_text(graph: &AmrGraph, target: &Target) -> String {
    match target {
        Target::Var(v) => {
            let name = graph
                .edges_from(v)
                .find(|e| e.role == ":name")
                .and_then(|e| e.target.as_var())
                .and_then(|n| graph.edges_from(n).find(|e| e.role == ":op1"))
                .map(|e| unquote(e.target.as_str()).to_string());
            name.unwrap_or_else(|| graph.concept(v).unwrap_or_default().to_string())
        }
        Target::Literal(l) => unquote(l).to_string(),
    }
}

fn concept_text(graph: &AmrGraph, target: &Target) -> String {
    match target {
        Target::Var(v) => graph.concept(v).unwrap_or_default().to_string(),
        Target::Literal(l) => unquote(l).to_string(),
    }
}

/// Builds an action entry from AMR roles and, when aligned, the verb's
/// dependents. `id`, `graph_index`, `verb_token` and the temporal fields are
/// left for the caller.
pub fn fuse_attributes(
    graph: &AmrGraph,
    var: &str,
    roles: &RoleMap,
    aligned: Option<(&DepSentence, &DepToken)>,
    config: &MopeConfig,
) -> MotionAction {
    let mut action = MotionAction {
        amr_var: var.to_string(),
        concept: graph.concept(var).unwrap_or_default().to_string(),
        temporal_order: -1,
        ..MotionAction::default()
    };

    let phrases = aligned
        .map(|(s, v)| prep_phrases(s, v, config))
        .unwrap_or_default();
    let dep_children = |rels: &[&str]| -> Vec<&DepToken> {
        aligned
            .map(|(s, v)| {
                s.tokens
                    .iter()
                    .filter(|t| t.head == v.index && rels.contains(&config.canonical(&t.deprel)))
                    .collect()
            })
            .unwrap_or_default()
    };
    let span = |index: usize| -> Option<String> { aligned.and_then(|(s, _)| s.subtree_span(index).ok()) };

    if let Some((_, v)) = aligned {
        action.action_verb = Some(v.lemma.to_lowercase());
        if let (Some(a), Some(b)) = (v.char_start, v.char_end) {
            action.verb_span = Some((a, b));
        }
    }

    action.subject = match roles.get(":ARG0") {
        Some(t) => Some(role_text(graph, t)),
        None => dep_children(&["nsubj", "nsubj:pass"])
            .first()
            .and_then(|t| span(t.index)),
    };

    // Direction: AMR :direction, then :ARG2, then advmod, then "to the <dir>".
    let mut direction_phrase = None;
    action.direction = roles
        .get(":direction")
        .and_then(|t| config.direction_word(&concept_text(graph, t)))
        .or_else(|| {
            roles
                .get(":ARG2")
                .and_then(|t| config.direction_word(&concept_text(graph, t)))
        })
        .or_else(|| {
            dep_children(&["advmod"])
                .iter()
                .find_map(|t| config.direction_word(&t.lemma))
        })
        .or_else(|| {
            let (s, _) = aligned?;
            phrases.iter().enumerate().find_map(|(i, p)| {
                if !matches!(p.preposition.as_str(), "to" | "toward" | "towards") {
                    return None;
                }
                let word = s
                    .subtree(p.nominal)
                    .ok()?
                    .into_iter()
                    .find_map(|ix| config.direction_word(&s.tokens[ix - 1].lemma))?;
                direction_phrase = Some(i);
                Some(word)
            })
        });

    // Nominals AMR already placed in another role are not objects.
    let amr_claimed: HashSet<String> = [":location", ":direction", ":manner", ":time"]
        .iter()
        .filter_map(|r| roles.get(*r))
        .map(|t| concept_text(graph, t).to_lowercase())
        .collect();
    let mut object_phrase = None;
    action.object = match roles.get(":ARG1") {
        Some(t) => Some(role_text(graph, t)),
        None => dep_children(&["obj"])
            .first()
            .and_then(|t| span(t.index))
            .or_else(|| {
                let (s, _) = aligned?;
                phrases.iter().enumerate().find_map(|(i, p)| {
                    if Some(i) == direction_phrase {
                        return None;
                    }
                    let nominal = &s.tokens[p.nominal - 1];
                    let lemma = nominal.lemma.to_lowercase();
                    if config.direction_word(&lemma).is_some() || amr_claimed.contains(&lemma) {
                        return None;
                    }
                    object_phrase = Some(i);
                    nominal_span(s, p)
                })
            }),
    };

    let mut modifiers = BTreeSet::new();
    for t in dep_children(&["advmod"]) {
        let lemma = t.lemma.to_lowercase();
        let is_direction = config.direction_word(&lemma).is_some() && config.direction_word(&lemma) == action.direction;
        if is_direction || lemma == SEQUENCE_ADVERB || config.is_temporal_connective(&lemma) {
            continue;
        }
        modifiers.insert(lemma);
    }
    for (i, p) in phrases.iter().enumerate() {
        if Some(i) == direction_phrase || Some(i) == object_phrase {
            continue;
        }
        if config.spatial_prepositions.contains(&p.preposition) {
            if let Some(text) = span(p.phrase_head) {
                modifiers.insert(text);
            }
        }
    }
    if let Some(t) = roles.get(":manner") {
        modifiers.insert(concept_text(graph, t));
    }
    if let Some(t) = roles.get(":location") {
        modifiers.insert(format!("location:{}", concept_text(graph, t)));
    }
    action.modifiers = modifiers.into_iter().collect();
    action
}

/// Full pipeline over one caption: extraction, alignment, fusion, then
/// temporal ordering. Output is sorted by `temporal_order` with unordered
/// actions last.
pub fn run_mope(graphs: &[AmrGraph], sentences: &[DepSentence], config: &MopeConfig) -> Vec<MotionAction> {
    let paired = graphs.len() == sentences.len();
    let mut taken = HashSet::new();
    let mut actions = Vec::new();
    for (gi, graph) in graphs.iter().enumerate() {
        for (var, concept) in extract_action_candidates(graph, config) {
            let roles = collect_roles(graph, &var);
            let range = if paired { gi..gi + 1 } else { 0..sentences.len() };
            let token = align_in(&concept, sentences, range, config, &taken);
            let aligned = token.map(|r| {
                taken.insert(r);
                let s = &sentences[r.sentence];
                (s, &s.tokens[r.index - 1])
            });
            let mut action = fuse_attributes(graph, &var, &roles, aligned, config);
            action.id = actions.len();
            action.graph_index = gi;
            action.verb_token = token;
            actions.push(action);
        }
    }
    temporal::order_actions(actions, graphs, sentences, config)
}
