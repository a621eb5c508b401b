//! Motion-aware caption reward and hallucination counts.
//!
//! Both sides are MoPE action lists. Actions are matched by concept; repeated
//! concepts pair up occurrence by occurrence in temporal order.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::amr::{parse_penman_multi, AmrError, AmrGraph};
use crate::dep::{parse_conllu, DepError, DepSentence};
use crate::mope::{run_mope, MopeConfig, MotionAction};

#[derive(Debug, Error, PartialEq)]
pub enum RewardError {
    #[error("weights must be non-negative and sum to 1 (got {0}, {1}, {2})")]
    InvalidWeights(f64, f64, f64),
}

#[derive(Debug, Error, PartialEq)]
pub enum ParseError {
    #[error("AMR graph {graph}: {source}")]
    Amr { graph: usize, source: AmrError },
    #[error("CoNLL-U: {0}")]
    Dep(#[from] DepError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RewardWeights {
    pub w_a: f64,
    pub w_o: f64,
    pub w_d: f64,
}

impl RewardWeights {
    pub fn new(w_a: f64, w_o: f64, w_d: f64) -> Result<Self, RewardError> {
        let w = RewardWeights { w_a, w_o, w_d };
        w.validate()?;
        Ok(w)
    }

    pub fn validate(&self) -> Result<(), RewardError> {
        let RewardWeights { w_a, w_o, w_d } = *self;
        let ok = [w_a, w_o, w_d].iter().all(|w| w.is_finite() && *w >= 0.0)
            && ((w_a + w_o + w_d) - 1.0).abs() <= 1e-9;
        if ok {
            Ok(())
        } else {
            Err(RewardError::InvalidWeights(w_a, w_o, w_d))
        }
    }
}

impl Default for RewardWeights {
    fn default() -> Self {
        RewardWeights {
            w_a: 1.0 / 3.0,
            w_o: 1.0 / 3.0,
            w_d: 1.0 / 3.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RewardBreakdown {
    pub r_action: f64,
    pub r_order: f64,
    pub r_direction: f64,
    pub composite: f64,
    pub hall_added: usize,
    pub hall_order: usize,
    pub hall_direction: usize,
    pub mo_hall: f64,
}

impl RewardBreakdown {
    /// The breakdown of a caption scored against itself.
    pub fn perfect() -> Self {
        RewardBreakdown {
            r_action: 1.0,
            r_order: 1.0,
            r_direction: 1.0,
            composite: 1.0,
            hall_added: 0,
            hall_order: 0,
            hall_direction: 0,
            mo_hall: 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HallCounts {
    pub added: usize,
    pub order: usize,
    pub direction: usize,
}

impl HallCounts {
    pub fn score(&self) -> f64 {
        (self.added + self.order + self.direction) as f64
    }
}

fn concept_counts(actions: &[MotionAction]) -> HashMap<&str, usize> {
    let mut m = HashMap::new();
    for a in actions {
        *m.entry(a.concept.as_str()).or_insert(0) += 1;
    }
    m
}

/// Size of the multiset intersection of concepts.
fn common_concepts(gen: &[MotionAction], reference: &[MotionAction]) -> usize {
    let g = concept_counts(gen);
    concept_counts(reference)
        .iter()
        .map(|(c, n)| (*n).min(g.get(c).copied().unwrap_or(0)))
        .sum()
}

/// F1 over concept multisets. Two empty lists score 1, one empty list 0.
pub fn action_f1(gen: &[MotionAction], reference: &[MotionAction]) -> f64 {
    match (gen.is_empty(), reference.is_empty()) {
        (true, true) => return 1.0,
        (true, false) | (false, true) => return 0.0,
        _ => {}
    }
    let common = common_concepts(gen, reference) as f64;
    if common == 0.0 {
        return 0.0;
    }
    let p = common / gen.len() as f64;
    let r = common / reference.len() as f64;
    2.0 * p * r / (p + r)
}

fn by_time(actions: &[MotionAction]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..actions.len()).collect();
    idx.sort_by_key(|&i| {
        let a = &actions[i];
        (a.temporal_order < 0, a.temporal_order, a.id)
    });
    idx
}

/// `(reference index, generated index)` pairs. The k-th occurrence of a
/// concept on one side pairs with the k-th on the other, in temporal order.
pub fn match_actions(gen: &[MotionAction], reference: &[MotionAction]) -> Vec<(usize, usize)> {
    let mut gen_by_concept: HashMap<&str, Vec<usize>> = HashMap::new();
    for i in by_time(gen) {
        gen_by_concept.entry(gen[i].concept.as_str()).or_default().push(i);
    }
    let mut used: HashMap<&str, usize> = HashMap::new();
    let mut pairs = Vec::new();
    for r in by_time(reference) {
        let c = reference[r].concept.as_str();
        let k = used.entry(c).or_insert(0);
        if let Some(&g) = gen_by_concept.get(c).and_then(|v| v.get(*k)) {
            pairs.push((r, g));
            *k += 1;
        }
    }
    pairs
}

/// `(gold pairs, correct, inverted)` over matched actions.
fn order_counts(gen: &[MotionAction], reference: &[MotionAction]) -> (usize, usize, usize) {
    let pairs = match_actions(gen, reference);
    let (mut total, mut correct, mut inverted) = (0, 0, 0);
    for (i, &(ri, gi)) in pairs.iter().enumerate() {
        for &(rj, gj) in &pairs[i + 1..] {
            let (ro_i, ro_j) = (reference[ri].temporal_order, reference[rj].temporal_order);
            if ro_i < 0 || ro_j < 0 || ro_i == ro_j {
                continue;
            }
            total += 1;
            let (go_i, go_j) = (gen[gi].temporal_order, gen[gj].temporal_order);
            if go_i < 0 || go_j < 0 || go_i == go_j {
                continue;
            }
            if (ro_i < ro_j) == (go_i < go_j) {
                correct += 1;
            } else {
                inverted += 1;
            }
        }
    }
    (total, correct, inverted)
}

/// Share of gold relative orders among matched actions that the generated
/// caption reproduces; 1 when there is nothing to compare.
pub fn order_accuracy(gen: &[MotionAction], reference: &[MotionAction]) -> f64 {
    let (total, correct, _) = order_counts(gen, reference);
    if total == 0 {
        1.0
    } else {
        correct as f64 / total as f64
    }
}

/// `(relevant, correct, contradicted)` over matched actions whose reference
/// carries a direction.
fn direction_counts(gen: &[MotionAction], reference: &[MotionAction]) -> (usize, usize, usize) {
    let (mut relevant, mut correct, mut wrong) = (0, 0, 0);
    for (r, g) in match_actions(gen, reference) {
        let Some(gold) = reference[r].direction.as_deref() else {
            continue;
        };
        relevant += 1;
        match gen[g].direction.as_deref() {
            Some(d) if d.eq_ignore_ascii_case(gold) => correct += 1,
            Some(_) => wrong += 1,
            None => {}
        }
    }
    (relevant, correct, wrong)
}

pub fn direction_accuracy(gen: &[MotionAction], reference: &[MotionAction]) -> f64 {
    let (relevant, correct, _) = direction_counts(gen, reference);
    if relevant == 0 {
        1.0
    } else {
        correct as f64 / relevant as f64
    }
}

/// Added actions, inverted gold pairs and contradicted directions.
pub fn mo_hall(gen: &[MotionAction], reference: &[MotionAction]) -> HallCounts {
    HallCounts {
        added: gen.len() - common_concepts(gen, reference),
        order: order_counts(gen, reference).2,
        direction: direction_counts(gen, reference).2,
    }
}

pub fn score_actions(gen: &[MotionAction], reference: &[MotionAction], weights: &RewardWeights) -> RewardBreakdown {
    let r_action = action_f1(gen, reference);
    let r_order = order_accuracy(gen, reference);
    let r_direction = direction_accuracy(gen, reference);
    let hall = mo_hall(gen, reference);
    RewardBreakdown {
        r_action,
        r_order,
        r_direction,
        composite: weights.w_a * r_action + weights.w_o * r_order + weights.w_d * r_direction,
        hall_added: hall.added,
        hall_order: hall.order,
        hall_direction: hall.direction,
        mo_hall: hall.score(),
    }
}

/// Runs MoPE on both captions and scores the generated one.
pub fn composite_reward(
    gen: (&[AmrGraph], &[DepSentence]),
    reference: (&[AmrGraph], &[DepSentence]),
    weights: &RewardWeights,
    config: &MopeConfig,
) -> RewardBreakdown {
    let g = run_mope(gen.0, gen.1, config);
    let r = run_mope(reference.0, reference.1, config);
    score_actions(&g, &r, weights)
}

/// Pre-parsed caption as carried in batch files: one PENMAN string per
/// sentence plus the CoNLL-U document.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct CaptionParse {
    pub penman: Vec<String>,
    pub conllu: String,
}

impl CaptionParse {
    pub fn parse(&self) -> Result<(Vec<AmrGraph>, Vec<DepSentence>), ParseError> {
        let mut graphs = Vec::new();
        for (i, p) in self.penman.iter().enumerate() {
            let gs = parse_penman_multi(p).map_err(|source| ParseError::Amr { graph: i, source })?;
            graphs.extend(gs);
        }
        Ok((graphs, parse_conllu(&self.conllu)?))
    }

    pub fn actions(&self, config: &MopeConfig) -> Result<Vec<MotionAction>, ParseError> {
        let (g, s) = self.parse()?;
        Ok(run_mope(&g, &s, config))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn act(id: usize, concept: &str, order: i64, direction: Option<&str>) -> MotionAction {
        MotionAction {
            id,
            concept: concept.into(),
            temporal_order: order,
            direction: direction.map(Into::into),
            ..MotionAction::default()
        }
    }

    fn seq(concepts: &[&str]) -> Vec<MotionAction> {
        concepts
            .iter()
            .enumerate()
            .map(|(i, c)| act(i, c, i as i64, None))
            .collect()
    }

    #[test]
    fn f1_values() {
        assert_eq!(action_f1(&seq(&["walk-01", "jump-01"]), &seq(&["walk-01", "jump-01"])), 1.0);
        assert_eq!(action_f1(&seq(&["walk-01", "turn-01"]), &seq(&["walk-01", "jump-01"])), 0.5);
        assert_eq!(action_f1(&seq(&["walk-01", "walk-01"]), &seq(&["walk-01"])), 2.0 / 3.0);
        assert_eq!(action_f1(&[], &[]), 1.0);
        assert_eq!(action_f1(&seq(&["walk-01"]), &[]), 0.0);
        assert_eq!(action_f1(&[], &seq(&["walk-01"])), 0.0);
        assert_eq!(action_f1(&seq(&["a-01"]), &seq(&["b-01"])), 0.0);
    }

    #[test]
    fn order_values() {
        let r = seq(&["walk-01", "jump-01", "turn-01"]);
        assert_eq!(order_accuracy(&r, &r), 1.0);
        let g = seq(&["walk-01", "turn-01", "jump-01"]);
        assert_eq!(order_accuracy(&g, &r), 2.0 / 3.0);
        assert_eq!(mo_hall(&g, &r).order, 1);
        assert_eq!(order_accuracy(&seq(&["x-01"]), &r), 1.0);
    }

    #[test]
    fn direction_values() {
        let r = vec![act(0, "turn-01", 0, Some("left")), act(1, "walk-01", 1, Some("forward"))];
        let g = vec![act(0, "turn-01", 0, Some("right")), act(1, "walk-01", 1, Some("forward"))];
        assert_eq!(direction_accuracy(&r[..1], &r[..1]), 1.0);
        assert_eq!(direction_accuracy(&g, &r), 0.5);
        assert_eq!(mo_hall(&g, &r).direction, 1);
        assert_eq!(direction_accuracy(&g, &seq(&["turn-01"])), 1.0);
        // missing generated direction is not a contradiction
        let g2 = vec![act(0, "turn-01", 0, None)];
        assert_eq!(direction_accuracy(&g2, &r), 0.0);
        assert_eq!(mo_hall(&g2, &r).direction, 0);
    }

    #[test]
    fn hallucinated_action_counts() {
        let r = seq(&["walk-01"]);
        let g = seq(&["walk-01", "spin-01"]);
        assert_eq!(mo_hall(&g, &r), HallCounts { added: 1, order: 0, direction: 0 });
        let r = seq(&["walk-01", "jump-01"]);
        let g = seq(&["jump-01", "walk-01"]);
        let h = mo_hall(&g, &r);
        assert_eq!((h.added, h.order, h.score()), (0, 1, 1.0));
    }

    #[test]
    fn duplicates_pair_in_time_order() {
        let r = vec![act(0, "clap-01", 0, Some("up")), act(1, "clap-01", 1, Some("down"))];
        let g = vec![act(0, "clap-01", 1, Some("down")), act(1, "clap-01", 0, Some("up"))];
        assert_eq!(match_actions(&g, &r), vec![(0, 1), (1, 0)]);
        assert_eq!(direction_accuracy(&g, &r), 1.0);
    }

    #[test]
    fn weights() {
        assert!(RewardWeights::new(0.5, 0.25, 0.25).is_ok());
        assert!(RewardWeights::new(0.5, 0.5, 0.5).is_err());
        assert!(RewardWeights::new(-0.5, 1.0, 0.5).is_err());
        let w = RewardWeights::new(1.0, 0.0, 0.0).unwrap();
        let r = seq(&["walk-01", "jump-01"]);
        let g = seq(&["jump-01", "turn-01"]);
        let b = score_actions(&g, &r, &w);
        assert_eq!(b.composite, b.r_action);
        assert_eq!(score_actions(&r, &r, &RewardWeights::default()), RewardBreakdown::perfect());
    }
}
