//! Acceptance suite: generator-driven equivalence checks between the
//! analyzer and independent brute-force oracles, plus wire-format
//! round-trip guarantees. One test per criterion; each prints a PASS
//! line with its instance count and elapsed time.

mod gen;
mod path_oracle;
mod token_oracle;

use std::collections::{BTreeMap, BTreeSet};
use std::time::{Duration, Instant};

use rand::prelude::*;

use protonet::analyzer::{
    check_templates, dominates, post_dominates, propagate_safety, ActionTemplate,
    ConditionPattern, KindPattern, SafetyMark,
};
use protonet::model::{
    parse_protocol, serialize_protocol, ActionContent, ActionKind, ActionSpec, ContentPattern,
    NodeId, PlaceLabel, ProtocolNet, RecvSpec, SendContent, SendSpec, TransitionEffect,
    TransitionSpec,
};

#[test]
fn criterion_1_round_trip_and_canonical_form() {
    let started = Instant::now();
    let mut rng = gen::rng(0x5eed_0001);
    let count = 200;
    for i in 0..count {
        let net = gen::random_invariant_net(&mut rng);
        let bytes = serialize_protocol(&net);
        let reparsed = parse_protocol(&bytes).unwrap_or_else(|e| panic!("instance {i}: {e}"));
        assert_eq!(reparsed, net, "instance {i}: round trip must be identity");
        assert_eq!(serialize_protocol(&reparsed), bytes, "instance {i}: determinism");

        // Permuting the document's node order must not change the bytes.
        let mut value: serde_json::Value = serde_json::from_slice(&bytes).unwrap();
        for key in ["places", "transitions", "arcs", "peers", "finals"] {
            if let Some(serde_json::Value::Array(items)) = value.get_mut(key) {
                items.shuffle(&mut rng);
            }
        }
        let permuted_doc = serde_json::to_vec(&value).unwrap();
        let from_permuted = parse_protocol(&permuted_doc).unwrap();
        assert_eq!(from_permuted, net, "instance {i}: permutation-insensitive parse");
        assert_eq!(
            serialize_protocol(&from_permuted),
            bytes,
            "instance {i}: canonical bytes under permutation"
        );
    }
    let elapsed = started.elapsed();
    assert!(elapsed < Duration::from_secs(5), "took {elapsed:?}, budget 5s");
    println!("[PASS] criterion 1: round-trip + canonical form over {count} nets in {elapsed:?}");
}

#[test]
fn criterion_2_propagation_matches_token_game_oracle() {
    let started = Instant::now();
    let mut rng = gen::rng(0x5eed_0002);
    let count = 600;
    for i in 0..count {
        let family = gen::random_valid_acyclic_net(&mut rng, i % 3 == 0);
        let net = &family.net;

        let mut base_unsafe: BTreeSet<NodeId> = net
            .node_ids()
            .filter(|_| rng.gen_bool(0.2))
            .cloned()
            .collect();
        if i % 7 == 0 {
            base_unsafe.clear(); // empty seeds stay all-safe
        }
        let base: BTreeMap<NodeId, SafetyMark> = base_unsafe
            .iter()
            .map(|n| (n.clone(), SafetyMark::Unsafe("seed".to_string())))
            .collect();

        let marks = propagate_safety(net, &base);
        let fixpoint_unsafe: BTreeSet<NodeId> = marks
            .iter()
            .filter(|(_, m)| matches!(m, SafetyMark::Unsafe(_)))
            .map(|(n, _)| n.clone())
            .collect();
        let fixpoint_unusable: BTreeSet<NodeId> = marks
            .iter()
            .filter(|(_, m)| matches!(m, SafetyMark::Unusable))
            .map(|(n, _)| n.clone())
            .collect();

        let oracle = token_oracle::classify(net, &base_unsafe);
        assert_eq!(
            fixpoint_unsafe, oracle.unsafe_set,
            "instance {i}: unsafe sets differ\nnet: {net:?}\nseeds: {base_unsafe:?}"
        );
        assert_eq!(
            fixpoint_unusable, oracle.unusable_set,
            "instance {i}: unusable sets differ\nnet: {net:?}\nseeds: {base_unsafe:?}"
        );
        if base_unsafe.is_empty() {
            assert!(marks.values().all(|m| *m == SafetyMark::Safe));
        }
    }
    let elapsed = started.elapsed();
    assert!(elapsed < Duration::from_secs(60), "took {elapsed:?}, budget 60s");
    println!(
        "[PASS] criterion 2: propagation == token-game oracle over {count} seeded nets in {elapsed:?}"
    );
}

#[test]
fn criterion_3_domination_matches_path_enumeration() {
    let started = Instant::now();
    let mut rng = gen::rng(0x5eed_0003);
    let count = 600;
    let mut checked = 0usize;
    for i in 0..count {
        let family = gen::random_valid_acyclic_net(&mut rng, false);
        let use_recv_pattern = rng.gen_bool(0.5);
        let target = family.transition_ids.choose(&mut rng).unwrap().clone();

        // Place the pattern-matching nodes at random, never on the target.
        let match_set: BTreeSet<NodeId> = if use_recv_pattern {
            family
                .place_ids
                .iter()
                .filter(|_| rng.gen_bool(0.4))
                .cloned()
                .collect()
        } else {
            family
                .transition_ids
                .iter()
                .filter(|t| **t != target)
                .filter(|_| rng.gen_bool(0.4))
                .cloned()
                .collect()
        };
        let (net, pattern) = instrument(&family.net, &match_set, &target, use_recv_pattern);
        assert_eq!(
            pattern.matching_nodes(&net).into_iter().collect::<BTreeSet<_>>(),
            match_set,
            "instance {i}: matcher must agree with the construction"
        );

        let impl_past = dominates(&net, &pattern, &target);
        let impl_future = post_dominates(&net, &pattern, &target);
        let oracle_past = path_oracle::oracle_dominates(&net, &match_set, &target);
        let oracle_future = path_oracle::oracle_post_dominates(&net, &match_set, &target);
        assert_eq!(impl_past, oracle_past, "instance {i}: past decision\nnet: {net:?}");
        assert_eq!(impl_future, oracle_future, "instance {i}: future decision\nnet: {net:?}");

        // The same decisions drive check_templates end to end.
        let template_past = ActionTemplate {
            target: target_pattern(),
            past: vec![pattern.clone()],
            future: vec![],
            flexible: vec![],
        };
        let outcome = check_templates(&net, &[template_past]);
        assert_eq!(
            !impl_past,
            matches!(outcome.marks.get(&target), Some(SafetyMark::Unsafe(_))),
            "instance {i}: past template verdict"
        );
        let template_future = ActionTemplate {
            target: target_pattern(),
            past: vec![],
            future: vec![pattern.clone()],
            flexible: vec![],
        };
        let outcome = check_templates(&net, &[template_future]);
        match (impl_future, use_recv_pattern) {
            (true, _) => assert!(outcome.marks.is_empty(), "instance {i}"),
            (false, true) => assert!(
                matches!(outcome.marks.get(&target), Some(SafetyMark::GuaranteeRequired(_))),
                "instance {i}: unmet recv future must gate on a guarantee"
            ),
            (false, false) => assert!(
                matches!(outcome.marks.get(&target), Some(SafetyMark::Unsafe(_))),
                "instance {i}: unmet non-recv future condemns"
            ),
        }
        checked += 2;
    }
    let elapsed = started.elapsed();
    assert!(elapsed < Duration::from_secs(60), "took {elapsed:?}, budget 60s");
    println!(
        "[PASS] criterion 3: domination == path enumeration over {count} nets ({checked} decisions) in {elapsed:?}"
    );
}

fn target_pattern() -> ConditionPattern {
    ConditionPattern::Action {
        kind: KindPattern::Read,
        act: "target_cell".to_string(),
    }
}

/// Rebuilds the plain family net with the match set realized as real
/// labels (Recv places or Send transitions) and the target transition
/// carrying the action the templates aim at.
fn instrument(
    base: &ProtocolNet,
    match_set: &BTreeSet<NodeId>,
    target: &NodeId,
    use_recv_pattern: bool,
) -> (ProtocolNet, ConditionPattern) {
    let places: Vec<(NodeId, PlaceLabel)> = base
        .places()
        .iter()
        .map(|(id, _)| {
            let label = if use_recv_pattern && match_set.contains(id) {
                PlaceLabel::Recv(RecvSpec {
                    label: format!("M_{id}"),
                    performative: "Mark".to_string(),
                    sender: "*".to_string(),
                    content: ContentPattern::Any,
                })
            } else {
                PlaceLabel::Plain
            };
            (id.clone(), label)
        })
        .collect();
    let transitions: Vec<(NodeId, TransitionSpec)> = base
        .transitions()
        .iter()
        .map(|(id, _)| {
            let effect = if id == target {
                TransitionEffect::Action(ActionSpec {
                    label: "TGT".to_string(),
                    kind: ActionKind::Read,
                    act: "target_cell".to_string(),
                    content: ActionContent::Omitted,
                })
            } else if !use_recv_pattern && match_set.contains(id) {
                TransitionEffect::Send(SendSpec {
                    label: format!("M_{id}"),
                    performative: "Flag".to_string(),
                    receiver: "*".to_string(),
                    content: SendContent::Omitted,
                })
            } else {
                TransitionEffect::None
            };
            (id.clone(), TransitionSpec { guard: None, effect })
        })
        .collect();
    let net = ProtocolNet::from_parts(
        base.name().to_string(),
        base.role().to_string(),
        base.peers().iter().cloned(),
        places,
        transitions,
        base.arcs().iter().cloned(),
        base.initial().clone(),
        base.finals().iter().cloned(),
    )
    .expect("instrumented net stays invariant-satisfying");
    let pattern = if use_recv_pattern {
        ConditionPattern::Recv {
            performative: "Mark".to_string(),
            sender: "*".to_string(),
        }
    } else {
        ConditionPattern::Send {
            performative: "Flag".to_string(),
            receiver: "*".to_string(),
        }
    };
    (net, pattern)
}
