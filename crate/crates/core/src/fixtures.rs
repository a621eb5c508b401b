//! Embedded test corpus: hand-traced caption fixtures, synthetic pose
//! sequences with analytic kinematics, and brute-force oracles.

use rustfft::num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::kinematics::{Frame, Keypoint, PoseSequence, KEYPOINT_COUNT};
use crate::mope::{MopeConfig, MotionAction};
use crate::rewards::{CaptionParse, ParseError, RewardBreakdown};

pub const CORPUS_VERSION: &str = "v1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaptionFixture {
    pub name: String,
    pub penman: Vec<String>,
    pub conllu: String,
    pub gold_actions: Vec<MotionAction>,
    pub gold_rewards_vs_self: RewardBreakdown,
}

impl CaptionFixture {
    pub fn parse(&self) -> CaptionParse {
        CaptionParse {
            penman: self.penman.clone(),
            conllu: self.conllu.clone(),
        }
    }

    pub fn run(&self, config: &MopeConfig) -> Result<Vec<MotionAction>, ParseError> {
        self.parse().actions(config)
    }
}

macro_rules! caption_sources {
    ($($name:literal),* $(,)?) => {
        &[$(($name, include_str!(concat!("../fixtures/v1/captions/", $name, ".json")))),*]
    };
}

const CAPTION_SOURCES: &[(&str, &str)] = caption_sources![
    "advcl_after",
    "advcl_before",
    "conj_then",
    "cc_and",
    "implicit_sequence",
    "amr_time_after",
    "amr_time_then",
    "direction_amr",
    "direction_advmod",
    "direction_to_phrase",
    "name_subject",
    "dobj_fallback",
    "static_verb",
    "cycle",
    "duplicate_concepts",
    "location_manner",
    "reification",
    "amod_filter",
    "ud_prep_object",
    "legacy_prep",
];

pub fn caption_fixtures() -> Vec<CaptionFixture> {
    CAPTION_SOURCES
        .iter()
        .map(|(name, src)| {
            let f: CaptionFixture =
                serde_json::from_str(src).unwrap_or_else(|e| panic!("fixture {name} is malformed: {e}"));
            assert_eq!(&f.name, name, "fixture file name and `name` field disagree");
            f
        })
        .collect()
}

/// Sequence where every keypoint sits at `position(t, k)` with `confidence`.
pub fn synthetic_sequence(
    fps: f64,
    frames: usize,
    confidence: f64,
    position: impl Fn(usize, usize) -> [f64; 3],
) -> PoseSequence {
    let frames: Vec<Frame> = (0..frames)
        .map(|t| {
            (0..KEYPOINT_COUNT)
                .map(|k| {
                    let [x, y, z] = position(t, k);
                    Keypoint::new(x, y, z, confidence)
                })
                .collect()
        })
        .collect();
    PoseSequence::new(fps, "synthetic", frames).expect("synthetic sequence is well formed")
}

/// A body at rest with keypoints spread over a fixed template.
pub fn rest_position(k: usize) -> [f64; 3] {
    let k = k as f64;
    [k.sin(), (0.7 * k).cos(), 0.01 * k]
}

/// Left forearm rotating at a constant `rate` (rad/s) about a fixed elbow
/// (7) in the x-y plane, shoulder (5) fixed. The elbow angle is
/// `start + rate·t/fps`; keep it inside `(0, π)` over the sequence.
pub fn rotating_arm(fps: f64, frames: usize, start: f64, rate: f64) -> PoseSequence {
    synthetic_sequence(fps, frames, 1.0, move |t, k| match k {
        5 => [0.0, 1.0, 0.0],
        7 => [0.0, 0.0, 0.0],
        9 => {
            let phi = start + rate * t as f64 / fps;
            [phi.sin(), phi.cos(), 0.0]
        }
        _ => rest_position(k),
    })
}

/// Fraction of reference pairs with distinct, non-negative orders whose
/// relative order the generated side reproduces. Entries are paired by
/// position; `None` means the action is unmatched and takes no part.
pub fn oracle_order_accuracy(gen_orders: &[Option<i64>], ref_orders: &[i64]) -> f64 {
    let matched = |i: usize| gen_orders.get(i).copied().flatten();
    let mut total = 0usize;
    let mut correct = 0usize;
    for i in 0..ref_orders.len() {
        for j in 0..ref_orders.len() {
            if i >= j {
                continue;
            }
            let (ri, rj) = (ref_orders[i], ref_orders[j]);
            let (Some(gi), Some(gj)) = (matched(i), matched(j)) else {
                continue;
            };
            if ri < 0 || rj < 0 || ri == rj {
                continue;
            }
            total += 1;
            if gi >= 0 && gj >= 0 && gi != gj && (gi < gj) == (ri < rj) {
                correct += 1;
            }
        }
    }
    if total == 0 {
        1.0
    } else {
        correct as f64 / total as f64
    }
}

/// Direct `O(T²)` evaluation of the forward DFT.
pub fn oracle_dft(signal: &[f64]) -> Vec<Complex<f64>> {
    let n = signal.len() as f64;
    (0..signal.len())
        .map(|k| {
            signal
                .iter()
                .enumerate()
                .map(|(t, &x)| Complex::from_polar(x, -2.0 * std::f64::consts::PI * (k * t) as f64 / n))
                .sum()
        })
        .collect()
}
