//! Random generators and reference implementations shared by the
//! integration tests.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use mopekit::amr::GraphStructure;
use mopekit::kinematics::{Frame, Keypoint, PoseSequence, KEYPOINT_COUNT};
use mopekit::temporal::{EdgeKind, TemporalEdge};
use rand::seq::SliceRandom;
use rand::Rng;

const CONCEPTS: &[&str] = &[
    "walk-01", "jump-03", "turn-01", "man", "woman", "and", "left", "person", "name", "after", "then",
    "be-located-at-91", "spin-02",
];
const ROLES: &[&str] = &[":ARG0", ":ARG1", ":ARG2", ":mod", ":time", ":op1", ":op2", ":direction", ":ARG0-of"];
const LITERALS: &[&str] = &["-", "\"Tom\"", "5", "imperative", "\"two words\"", "2.5"];

pub struct RandomAmr {
    pub text: String,
    pub expected: GraphStructure,
}

struct AmrGen<'r, R: Rng> {
    rng: &'r mut R,
    max_depth: usize,
    reentrancy: f64,
    vars: Vec<String>,
    expected: GraphStructure,
}

impl<R: Rng> AmrGen<'_, R> {
    fn node(&mut self, depth: usize) -> String {
        let var = format!("v{}", self.vars.len());
        let concept = *CONCEPTS.choose(self.rng).unwrap();
        self.vars.push(var.clone());
        self.expected.instances.insert(var.clone(), concept.to_string());
        let mut out = format!("({var} / {concept}");
        let children = if depth < self.max_depth { self.rng.gen_range(0..=3) } else { 0 };
        for _ in 0..children {
            let role = *ROLES.choose(self.rng).unwrap();
            if self.rng.gen_bool(self.reentrancy) {
                let target = self.vars.choose(self.rng).unwrap().clone();
                out.push_str(&format!(" {role} {target}"));
                self.expected.role_edges.insert((var.clone(), role.into(), target));
            } else if self.rng.gen_bool(0.15) {
                let lit = *LITERALS.choose(self.rng).unwrap();
                out.push_str(&format!(" {role} {lit}"));
                self.expected.attribute_edges.insert((var.clone(), role.into(), lit.into()));
            } else {
                let child_var = format!("v{}", self.vars.len());
                let child = self.node(depth + 1);
                out.push_str(&format!(" {role} {child}"));
                self.expected.role_edges.insert((var.clone(), role.into(), child_var));
            }
        }
        out.push(')');
        out
    }
}

/// A PENMAN graph of nesting depth at most `max_depth` in which each
/// non-literal child is a reference to an already defined variable with
/// probability `reentrancy`, together with its intended structure.
pub fn random_amr<R: Rng>(rng: &mut R, max_depth: usize, reentrancy: f64) -> RandomAmr {
    let mut g = AmrGen {
        rng,
        max_depth,
        reentrancy,
        vars: Vec::new(),
        expected: GraphStructure {
            root: "v0".into(),
            instances: BTreeMap::new(),
            role_edges: BTreeSet::new(),
            attribute_edges: BTreeSet::new(),
        },
    };
    let text = g.node(0);
    RandomAmr {
        text,
        expected: g.expected,
    }
}

fn edge(u: usize, v: usize) -> TemporalEdge {
    TemporalEdge::new(u, v, EdgeKind::Implicit, "sequence")
}

/// Random DAG: a hidden permutation orients each sampled pair forward.
pub fn random_dag<R: Rng>(rng: &mut R, n: usize, density: f64) -> Vec<TemporalEdge> {
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(rng);
    let mut edges = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if rng.gen_bool(density) {
                edges.push(edge(perm[i], perm[j]));
            }
        }
    }
    edges
}

/// Random directed graph with at most one edge per unordered pair that
/// contains the cycle `a → b → c → a` on three distinct nodes.
pub fn random_cyclic<R: Rng>(rng: &mut R, n: usize, density: f64) -> Vec<TemporalEdge> {
    assert!(n >= 3);
    let mut nodes: Vec<usize> = (0..n).collect();
    nodes.shuffle(rng);
    let (a, b, c) = (nodes[0], nodes[1], nodes[2]);
    let forced: BTreeSet<(usize, usize)> = [(a, b), (b, c), (c, a)]
        .into_iter()
        .map(|(u, v)| (u.min(v), u.max(v)))
        .collect();
    let mut edges = vec![edge(a, b), edge(b, c), edge(c, a)];
    for i in 0..n {
        for j in i + 1..n {
            if !forced.contains(&(i, j)) && rng.gen_bool(density) {
                edges.push(if rng.gen_bool(0.5) { edge(i, j) } else { edge(j, i) });
            }
        }
    }
    edges.shuffle(rng);
    edges
}

/// Nodes Kahn's algorithm can never release: those on a cycle and
/// everything reachable from one.
pub fn unremovable(n: usize, edges: &[TemporalEdge]) -> BTreeSet<usize> {
    let mut succ = vec![Vec::new(); n];
    for e in edges {
        succ[e.source].push(e.target);
    }
    let reach_from = |s: usize| {
        let mut seen = vec![false; n];
        let mut stack = succ[s].clone();
        while let Some(v) = stack.pop() {
            if !seen[v] {
                seen[v] = true;
                stack.extend(succ[v].iter().copied());
            }
        }
        seen
    };
    let reach: Vec<Vec<bool>> = (0..n).map(reach_from).collect();
    let on_cycle: Vec<usize> = (0..n).filter(|&v| reach[v][v]).collect();
    (0..n)
        .filter(|&v| on_cycle.iter().any(|&c| c == v || reach[c][v]))
        .collect()
}

/// Random pose sequence with confidences spread over `[0, 1]`.
pub fn random_pose<R: Rng>(rng: &mut R, fps: f64, frames: usize) -> PoseSequence {
    let frames: Vec<Frame> = (0..frames)
        .map(|_| {
            (0..KEYPOINT_COUNT)
                .map(|_| {
                    Keypoint::new(
                        rng.gen_range(-2.0..2.0),
                        rng.gen_range(-2.0..2.0),
                        rng.gen_range(-2.0..2.0),
                        rng.gen_range(0.0..1.0),
                    )
                })
                .collect()
        })
        .collect();
    PoseSequence::new(fps, "random", frames).unwrap()
}

/// Rotation matrix of a random unit quaternion.
pub fn random_rotation<R: Rng>(rng: &mut R) -> [[f64; 3]; 3] {
    let q: [f64; 4] = std::array::from_fn(|_| rng.gen_range(-1.0..1.0));
    let n = q.iter().map(|x| x * x).sum::<f64>().sqrt().max(1e-6);
    let [w, x, y, z] = q.map(|v| v / n);
    [
        [1.0 - 2.0 * (y * y + z * z), 2.0 * (x * y - z * w), 2.0 * (x * z + y * w)],
        [2.0 * (x * y + z * w), 1.0 - 2.0 * (x * x + z * z), 2.0 * (y * z - x * w)],
        [2.0 * (x * z - y * w), 2.0 * (y * z + x * w), 1.0 - 2.0 * (x * x + y * y)],
    ]
}

pub fn map_positions(seq: &PoseSequence, f: impl Fn([f64; 3]) -> [f64; 3]) -> PoseSequence {
    let frames = seq
        .frames
        .iter()
        .map(|fr| {
            fr.iter()
                .map(|k| {
                    let [x, y, z] = f([k.x, k.y, k.z]);
                    Keypoint::new(x, y, z, k.confidence)
                })
                .collect()
        })
        .collect();
    PoseSequence::new(seq.fps, seq.person_id.clone(), frames).unwrap()
}

pub fn rotate(m: &[[f64; 3]; 3], p: [f64; 3]) -> [f64; 3] {
    std::array::from_fn(|i| m[i][0] * p[0] + m[i][1] * p[1] + m[i][2] * p[2])
}

/// Both absent, or both present and within `tol`.
pub fn close(a: Option<f64>, b: Option<f64>, tol: f64) -> bool {
    match (a, b) {
        (None, None) => true,
        (Some(x), Some(y)) => (x - y).abs() <= tol,
        _ => false,
    }
}
