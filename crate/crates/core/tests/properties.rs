mod common;

use common::*;
use mopekit::amr::{parse_penman, serialize_penman};
use mopekit::fixtures::{oracle_dft, oracle_order_accuracy};
use mopekit::kinematics::{analyze, default_joints, dft, joint_angle, point_speed, Cutoff, KEYPOINT_COUNT};
use mopekit::mope::MotionAction;
use mopekit::rewards::{action_f1, mo_hall, order_accuracy, score_actions, RewardWeights};
use mopekit::temporal::{kahn_order, ActionGraph};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

const CONCEPTS: [&str; 5] = ["walk-01", "jump-03", "turn-01", "wave-01", "spin-02"];
const DIRECTIONS: [Option<&str>; 4] = [None, Some("left"), Some("right"), Some("up")];

fn actions() -> impl Strategy<Value = Vec<MotionAction>> {
    prop::collection::vec((0..CONCEPTS.len(), -1i64..6, 0..DIRECTIONS.len()), 0..7).prop_map(|raw| {
        raw.into_iter()
            .enumerate()
            .map(|(id, (c, order, d))| MotionAction {
                id,
                concept: CONCEPTS[c].into(),
                temporal_order: order,
                direction: DIRECTIONS[d].map(Into::into),
                ..MotionAction::default()
            })
            .collect()
    })
}

fn weights() -> impl Strategy<Value = RewardWeights> {
    (0.0f64..1.0, 0.0f64..1.0).prop_map(|(a, b)| {
        let (lo, hi) = (a.min(b), a.max(b));
        RewardWeights {
            w_a: lo,
            w_o: hi - lo,
            w_d: 1.0 - hi,
        }
    })
}

proptest! {
    #[test]
    fn penman_round_trip(seed in any::<u64>()) {
        let g = random_amr(&mut rng(seed), 4, 0.2);
        let parsed = parse_penman(&g.text).unwrap();
        prop_assert_eq!(&parsed.structure(), &g.expected);
        let again = parse_penman(&serialize_penman(&parsed)).unwrap();
        prop_assert_eq!(again.structure(), g.expected);
    }

    #[test]
    fn reward_components_bounded(gen in actions(), reference in actions(), w in weights()) {
        let b = score_actions(&gen, &reference, &w);
        for v in [b.r_action, b.r_order, b.r_direction] {
            prop_assert!((0.0..=1.0).contains(&v));
        }
        prop_assert!(b.composite >= -1e-12 && b.composite <= 1.0 + 1e-12);
        let affine = w.w_a * b.r_action + w.w_o * b.r_order + w.w_d * b.r_direction;
        prop_assert!((b.composite - affine).abs() <= 1e-12);
        prop_assert_eq!(b.mo_hall, (b.hall_added + b.hall_order + b.hall_direction) as f64);
    }

    #[test]
    fn self_score_is_perfect(c in actions()) {
        prop_assume!(!c.is_empty());
        let b = score_actions(&c, &c, &RewardWeights::default());
        prop_assert_eq!((b.r_action, b.r_order, b.r_direction), (1.0, 1.0, 1.0));
        prop_assert_eq!(b.mo_hall, 0.0);
    }

    #[test]
    fn action_weight_isolates_f1(gen in actions(), reference in actions()) {
        let w = RewardWeights::new(1.0, 0.0, 0.0).unwrap();
        prop_assert_eq!(score_actions(&gen, &reference, &w).composite, action_f1(&gen, &reference));
    }

    #[test]
    fn dropping_a_hallucination_helps(gen in actions(), reference in actions()) {
        let refs: Vec<&str> = reference.iter().map(|a| a.concept.as_str()).collect();
        if let Some(i) = gen.iter().position(|a| !refs.contains(&a.concept.as_str())) {
            let mut fewer = gen.clone();
            fewer.remove(i);
            prop_assert!(action_f1(&fewer, &reference) >= action_f1(&gen, &reference));
            prop_assert!(mo_hall(&fewer, &reference).added <= mo_hall(&gen, &reference).added);
        }
    }

    #[test]
    fn order_accuracy_matches_oracle(
        ref_orders in prop::collection::vec(-1i64..4, 0..7),
        gen_raw in prop::collection::vec(prop::option::of(-1i64..4), 7),
    ) {
        let n = ref_orders.len();
        let gen_orders = &gen_raw[..n];
        let mk = |i: usize, o: i64| MotionAction {
            id: i,
            concept: format!("c{i}-01"),
            temporal_order: o,
            ..MotionAction::default()
        };
        let reference: Vec<MotionAction> = ref_orders.iter().enumerate().map(|(i, &o)| mk(i, o)).collect();
        let gen: Vec<MotionAction> = gen_orders
            .iter()
            .enumerate()
            .filter_map(|(i, o)| o.map(|o| mk(i, o)))
            .collect();
        prop_assert_eq!(order_accuracy(&gen, &reference), oracle_order_accuracy(gen_orders, &ref_orders));
    }

    #[test]
    fn kahn_respects_dag_edges(seed in any::<u64>(), n in 1usize..40) {
        let edges = random_dag(&mut rng(seed), n, 0.2);
        let g = ActionGraph::new(0..n, edges);
        let order = kahn_order(&g);
        prop_assert!(order.values().all(|&o| o >= 0));
        for e in &g.edges {
            prop_assert!(order[&e.source] < order[&e.target]);
        }
    }

    #[test]
    fn kahn_marks_exactly_cycle_closure(seed in any::<u64>(), n in 3usize..30) {
        let edges = random_cyclic(&mut rng(seed), n, 0.15);
        let g = ActionGraph::new(0..n, edges);
        let order = kahn_order(&g);
        let stuck: std::collections::BTreeSet<usize> = order.iter().filter(|(_, &o)| o < 0).map(|(&k, _)| k).collect();
        prop_assert_eq!(stuck, unremovable(n, &g.edges));
    }

    #[test]
    fn dft_matches_direct_sum(signal in prop::collection::vec(-10.0f64..10.0, 1..64)) {
        let fast = dft(&signal).unwrap();
        let slow = oracle_dft(&signal);
        let scale = slow.iter().map(|z| z.norm()).fold(1.0, f64::max);
        for (a, b) in fast.iter().zip(&slow) {
            prop_assert!((a - b).norm() <= 1e-9 * scale);
        }
        let time: f64 = signal.iter().map(|x| x * x).sum();
        let freq: f64 = fast.iter().map(|z| z.norm_sqr()).sum::<f64>() / signal.len() as f64;
        prop_assert!((time - freq).abs() <= 1e-9 * time.max(1e-300));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn kinematics_invariant_under_rigid_motion(seed in any::<u64>(), offset in prop::array::uniform3(-50.0f64..50.0)) {
        let mut r = rng(seed);
        let seq = random_pose(&mut r, 30.0, 4);
        let m = random_rotation(&mut r);
        let moved = map_positions(&seq, |p| {
            let q = rotate(&m, p);
            [q[0] + offset[0], q[1] + offset[1], q[2] + offset[2]]
        });
        for t in 1..4 {
            for k in 0..KEYPOINT_COUNT {
                let a = point_speed(&seq, k, t, 0.6).unwrap();
                let b = point_speed(&moved, k, t, 0.6).unwrap();
                prop_assert!(close(a, b, 1e-9), "speed k={} t={}: {:?} vs {:?}", k, t, a, b);
            }
        }
        for (f0, f1) in seq.frames.iter().zip(&moved.frames) {
            for j in default_joints() {
                prop_assert!(close(joint_angle(f0, &j, 0.6), joint_angle(f1, &j, 0.6), 1e-9));
            }
        }
    }

    #[test]
    fn doubling_fps_doubles_rates_exactly(seed in any::<u64>()) {
        let seq = random_pose(&mut rng(seed), 25.0, 5);
        let mut fast = seq.clone();
        fast.fps = 50.0;
        let joints = default_joints();
        let a = analyze(&seq, &joints, 0.3, Cutoff::Quarter).unwrap();
        let b = analyze(&fast, &joints, 0.3, Cutoff::Quarter).unwrap();
        for (fa, fb) in a.frames.iter().zip(&b.frames) {
            for (x, y) in fa.point_speeds.iter().zip(&fb.point_speeds) {
                prop_assert_eq!(x.map(|v| 2.0 * v), *y);
            }
            for (x, y) in fa.joint_angular_velocities.values().zip(fb.joint_angular_velocities.values()) {
                prop_assert_eq!(x.map(|v| 2.0 * v), *y);
            }
            prop_assert_eq!(&fa.joint_angles, &fb.joint_angles);
        }
    }

    #[test]
    fn masking_one_keypoint_is_local(seed in any::<u64>(), k in 0usize..KEYPOINT_COUNT, t in 0usize..4) {
        let seq = random_pose(&mut rng(seed), 30.0, 4);
        let mut masked = seq.clone();
        masked.frames[t][k].confidence = 0.0;
        let joints = default_joints();
        let a = analyze(&seq, &joints, 0.6, Cutoff::Quarter).unwrap();
        let b = analyze(&masked, &joints, 0.6, Cutoff::Quarter).unwrap();
        if a.fallback || b.fallback {
            return Ok(());
        }
        for (fa, fb) in a.frames.iter().zip(&b.frames) {
            for kk in (0..KEYPOINT_COUNT).filter(|&kk| kk != k) {
                prop_assert_eq!(fa.point_speeds[kk], fb.point_speeds[kk]);
            }
            for j in joints.iter().filter(|j| ![j.a, j.vertex, j.c].contains(&k)) {
                prop_assert_eq!(fa.joint_angles[&j.name], fb.joint_angles[&j.name]);
                prop_assert_eq!(fa.joint_angular_velocities[&j.name], fb.joint_angular_velocities[&j.name]);
            }
        }
    }
}
