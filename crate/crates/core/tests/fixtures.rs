use std::collections::BTreeSet;

use mopekit::fixtures::caption_fixtures;
use mopekit::mope::MopeConfig;
use mopekit::rewards::{composite_reward, RewardWeights};
use mopekit::temporal::EdgeKind;

#[test]
fn every_fixture_matches_gold() {
    let config = MopeConfig::default();
    for f in caption_fixtures() {
        let got = f.run(&config).unwrap_or_else(|e| panic!("{}: {e}", f.name));
        assert_eq!(got.len(), f.gold_actions.len(), "{}: action count", f.name);
        for (g, want) in got.iter().zip(&f.gold_actions) {
            // Field by field so a failure names what diverged.
            assert_eq!(g.concept, want.concept, "{}", f.name);
            assert_eq!(g.subject, want.subject, "{} {}", f.name, g.concept);
            assert_eq!(g.object, want.object, "{} {}", f.name, g.concept);
            assert_eq!(g.direction, want.direction, "{} {}", f.name, g.concept);
            assert_eq!(g.modifiers, want.modifiers, "{} {}", f.name, g.concept);
            assert_eq!(g.temporal_order, want.temporal_order, "{} {}", f.name, g.concept);
            assert_eq!(g.temporal_relation, want.temporal_relation, "{} {}", f.name, g.concept);
            assert_eq!(g, want, "{}", f.name);
        }
    }
}

#[test]
fn fixtures_self_score_perfectly() {
    let config = MopeConfig::default();
    for f in caption_fixtures() {
        let (graphs, sentences) = f.parse().parse().unwrap();
        let b = composite_reward(
            (&graphs, &sentences),
            (&graphs, &sentences),
            &RewardWeights::default(),
            &config,
        );
        assert_eq!(b, f.gold_rewards_vs_self, "{}", f.name);
    }
}

#[test]
fn corpus_covers_every_rule() {
    let fixtures = caption_fixtures();
    assert!(fixtures.len() >= 15);
    let config = MopeConfig::default();
    let mut seen = BTreeSet::new();
    for f in &fixtures {
        for a in &f.gold_actions {
            if let Some(r) = &a.temporal_relation {
                seen.insert(format!("{:?}/{}", r.kind, r.connective.as_deref().unwrap_or("")));
            }
            if a.temporal_order < 0 {
                seen.insert("unordered".to_string());
            }
        }
        let concepts: Vec<&str> = f.gold_actions.iter().map(|a| a.concept.as_str()).collect();
        let distinct: BTreeSet<&str> = concepts.iter().copied().collect();
        if distinct.len() < concepts.len() {
            seen.insert("duplicate".to_string());
        }
        if f.penman.iter().any(|p| p.contains("see-01")) && f.gold_actions.iter().all(|a| a.concept != "see-01") {
            seen.insert("static".to_string());
        }
        if f.penman.iter().any(|p| p.contains(":name")) {
            seen.insert("name".to_string());
        }
        if f.conllu.contains("\tdobj\t") {
            seen.insert("dobj".to_string());
        }
        for a in &f.gold_actions {
            if a.direction.is_some() {
                let via_amr = f.penman.iter().any(|p| p.contains(":direction"));
                let via_phrase = f.conllu.contains("\tto\tADP\t");
                seen.insert(
                    match (via_amr, via_phrase) {
                        (true, _) => "direction/amr",
                        (false, true) => "direction/phrase",
                        _ => "direction/advmod",
                    }
                    .to_string(),
                );
            }
        }
        assert!(config.validate().is_ok());
    }
    let kinds = |k: EdgeKind, c: &str| format!("{k:?}/{c}");
    for want in [
        kinds(EdgeKind::ExplicitDep, "after"),
        kinds(EdgeKind::ExplicitDep, "before"),
        kinds(EdgeKind::ExplicitDep, "then"),
        kinds(EdgeKind::Implicit, "and"),
        kinds(EdgeKind::Implicit, "sequence"),
        kinds(EdgeKind::AmrTime, "after"),
        kinds(EdgeKind::AmrTime, "then"),
        "direction/amr".into(),
        "direction/advmod".into(),
        "direction/phrase".into(),
        "name".into(),
        "dobj".into(),
        "static".into(),
        "unordered".into(),
        "duplicate".into(),
    ] {
        assert!(seen.contains(&want), "no fixture exercises {want}");
    }
}

#[test]
fn cross_sentence_switch_changes_cycle_fixture_only_through_its_link() {
    let f = caption_fixtures().into_iter().find(|f| f.name == "cycle").unwrap();
    let config = MopeConfig {
        cross_sentence_edges: false,
        ..MopeConfig::default()
    };
    let got = f.run(&config).unwrap();
    // Without the link "stand" still comes first: it has no incoming edge.
    assert_eq!(got[0].concept, "stand-01");
    assert_eq!(got[0].temporal_order, 0);
    assert!(got[1..].iter().all(|a| a.temporal_order == -1));
}
