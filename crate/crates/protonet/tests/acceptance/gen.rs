//! Seeded net generators for the acceptance suite.
//!
//! `random_invariant_net` produces arbitrary invariant-satisfying nets
//! (not necessarily structurally valid) for round-trip checks.
//! `random_valid_acyclic_net` produces structurally valid acyclic nets in
//! which every transition has exactly one input place; on that family the
//! propagation fixpoint is provably equivalent to the token-game oracle,
//! which is what the oracle-equivalence criteria quantify over.

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use protonet::model::{
    ActionContent, ActionKind, ActionSpec, ContentPattern, NodeId, PlaceLabel, PredExpr,
    ProtocolNet, RecvSpec, SendContent, SendSpec, TransitionEffect, TransitionSpec,
};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn node(s: &str) -> NodeId {
    NodeId::new(s).unwrap()
}

const PERFORMATIVES: &[&str] = &["Inform", "Bid", "Request", "Deliver"];
const CONTENT_POOL: &[&str] = &["register", "a|b|c", "42", ""];

/// An arbitrary net satisfying every type invariant: unique ids and
/// labels, resolvable references, bipartite arcs, initial and finals
/// are places, finals nonempty. Reachability is NOT guaranteed.
pub fn random_invariant_net(rng: &mut ChaCha8Rng) -> ProtocolNet {
    let peers: Vec<String> = match rng.gen_range(0..3) {
        0 => vec![],
        1 => vec!["Alpha".to_string()],
        _ => vec!["Alpha".to_string(), "Beta".to_string()],
    };
    let party = |rng: &mut ChaCha8Rng, peers: &[String]| -> String {
        if peers.is_empty() || rng.gen_bool(0.3) {
            "*".to_string()
        } else {
            peers.choose(rng).unwrap().clone()
        }
    };

    let n_places = rng.gen_range(1..=12usize);
    let n_transitions = rng.gen_range(0..=8usize.min(20 - n_places));

    let mut recv_labels = Vec::new();
    let mut places = Vec::new();
    for i in 0..n_places {
        let id = node(&format!("P{i}"));
        let label = if rng.gen_bool(0.35) {
            let label = format!("R{i}");
            recv_labels.push(label.clone());
            PlaceLabel::Recv(RecvSpec {
                label,
                performative: PERFORMATIVES.choose(rng).unwrap().to_string(),
                sender: party(rng, &peers),
                content: if rng.gen_bool(0.5) {
                    ContentPattern::Any
                } else {
                    ContentPattern::Literal(CONTENT_POOL.choose(rng).unwrap().to_string())
                },
            })
        } else {
            PlaceLabel::Plain
        };
        places.push((id, label));
    }

    // Two passes: actions first so sends and guards can reference them.
    let mut effects: Vec<TransitionEffect> = Vec::new();
    let mut act_labels = Vec::new();
    for i in 0..n_transitions {
        let effect = match rng.gen_range(0..3) {
            0 => TransitionEffect::None,
            1 => {
                let label = format!("A{i}");
                act_labels.push(label.clone());
                TransitionEffect::Action(ActionSpec {
                    label,
                    kind: *[ActionKind::Execute, ActionKind::Read, ActionKind::Write]
                        .choose(rng)
                        .unwrap(),
                    act: ["f", "g", "cell", "flag"].choose(rng).unwrap().to_string(),
                    content: if !recv_labels.is_empty() && rng.gen_bool(0.5) {
                        ActionContent::FromRecv(recv_labels.choose(rng).unwrap().clone())
                    } else if rng.gen_bool(0.5) {
                        ActionContent::Literal(CONTENT_POOL.choose(rng).unwrap().to_string())
                    } else {
                        ActionContent::Omitted
                    },
                })
            }
            _ => TransitionEffect::None, // placeholder, sends assigned below
        };
        effects.push(effect);
    }
    let mut transitions = Vec::new();
    for (i, mut effect) in effects.into_iter().enumerate() {
        if matches!(effect, TransitionEffect::None) && rng.gen_bool(0.5) {
            effect = TransitionEffect::Send(SendSpec {
                label: format!("S{i}"),
                performative: PERFORMATIVES.choose(rng).unwrap().to_string(),
                receiver: party(rng, &peers),
                content: if !act_labels.is_empty() && rng.gen_bool(0.5) {
                    SendContent::ResultsOf(act_labels.choose(rng).unwrap().clone())
                } else if rng.gen_bool(0.5) {
                    SendContent::Literal(CONTENT_POOL.choose(rng).unwrap().to_string())
                } else {
                    SendContent::Omitted
                },
            });
        }
        let guard = if rng.gen_bool(0.3) {
            Some(random_guard(rng, &recv_labels, &act_labels))
        } else {
            None
        };
        transitions.push((node(&format!("T{i}")), TransitionSpec { guard, effect }));
    }

    let mut arcs = std::collections::BTreeSet::new();
    if n_transitions > 0 {
        for _ in 0..rng.gen_range(0..=2 * (n_places + n_transitions)) {
            let p = node(&format!("P{}", rng.gen_range(0..n_places)));
            let t = node(&format!("T{}", rng.gen_range(0..n_transitions)));
            if rng.gen_bool(0.5) {
                arcs.insert((p, t));
            } else {
                arcs.insert((t, p));
            }
        }
    }

    let initial = node(&format!("P{}", rng.gen_range(0..n_places)));
    let mut finals = std::collections::BTreeSet::new();
    finals.insert(node(&format!("P{}", rng.gen_range(0..n_places))));
    for i in 0..n_places {
        if rng.gen_bool(0.2) {
            finals.insert(node(&format!("P{i}")));
        }
    }

    ProtocolNet::from_parts("generated", "Self", peers, places, transitions, arcs, initial, finals)
        .expect("generator emits invariant-satisfying nets")
}

fn random_guard(rng: &mut ChaCha8Rng, recvs: &[String], acts: &[String]) -> PredExpr {
    let leaf = |rng: &mut ChaCha8Rng| -> PredExpr {
        let mut options = vec![0, 1];
        if !recvs.is_empty() {
            options.push(2);
        }
        if !acts.is_empty() {
            options.push(3);
        }
        match options.choose(rng).unwrap() {
            0 => PredExpr::parse("(== \"a\" \"b\")").unwrap(),
            1 => PredExpr::parse("(< 1 2)").unwrap(),
            2 => PredExpr::parse(&format!(
                "(== (recv {}) \"{}\")",
                recvs.choose(rng).unwrap(),
                "register"
            ))
            .unwrap(),
            _ => PredExpr::parse(&format!(
                "(> (result {}) {})",
                acts.choose(rng).unwrap(),
                rng.gen_range(-5..100)
            ))
            .unwrap(),
        }
    };
    match rng.gen_range(0..4) {
        0 => leaf(rng),
        1 => PredExpr::Not(Box::new(leaf(rng))),
        2 => PredExpr::And(Box::new(leaf(rng)), Box::new(leaf(rng))),
        _ => PredExpr::Or(Box::new(leaf(rng)), Box::new(leaf(rng))),
    }
}

/// Kind layout of one generated valid net, exposed so callers can pick
/// targets and match sets.
pub struct ValidNet {
    pub net: ProtocolNet,
    pub place_ids: Vec<NodeId>,
    pub transition_ids: Vec<NodeId>,
}

/// Structurally valid acyclic net: all nodes reachable, initial has no
/// incoming arcs, finals have no outgoing arcs, every transition has
/// exactly one input and at least one output. At most 8 nodes / 10 arcs.
pub fn random_valid_acyclic_net(rng: &mut ChaCha8Rng, with_recv: bool) -> ValidNet {
    'retry: loop {
        let n = rng.gen_range(4..=8usize);
        // kinds[i] = true for places; node 0 is the initial place.
        let mut kinds = vec![true];
        for i in 1..n {
            let have_place = kinds.iter().any(|k| *k);
            let have_transition = kinds.iter().any(|k| !*k);
            let kind = if !have_transition {
                false
            } else if !have_place {
                true
            } else {
                rng.gen_bool(0.5)
            };
            kinds.push(kind);
            let _ = i;
        }
        if kinds.iter().filter(|k| !**k).count() == 0 {
            continue 'retry;
        }

        let name_of = |i: usize| -> NodeId {
            if kinds[i] {
                node(&format!("P{i}"))
            } else {
                node(&format!("T{i}"))
            }
        };

        let mut arcs = std::collections::BTreeSet::new();
        for i in 1..n {
            // Every node takes one incoming arc from an earlier node of
            // the opposite kind; this is a transition's single input.
            let candidates: Vec<usize> = (0..i).filter(|j| kinds[*j] != kinds[i]).collect();
            let from = *candidates.choose(rng).expect("kind feasibility ensured");
            arcs.insert((name_of(from), name_of(i)));
        }
        // Extra fork arcs: transition -> later place only, so transitions
        // keep a single input and the graph stays acyclic.
        for _ in 0..rng.gen_range(0..=3) {
            let froms: Vec<usize> = (0..n).filter(|i| !kinds[*i]).collect();
            let t = *froms.choose(rng).unwrap();
            let tos: Vec<usize> = (t + 1..n).filter(|i| kinds[*i]).collect();
            if let Some(p) = tos.choose(rng) {
                arcs.insert((name_of(t), name_of(*p)));
            }
        }
        // Transitions must produce somewhere.
        for t in 0..n {
            if kinds[t] {
                continue;
            }
            let has_output = arcs.iter().any(|(from, _)| *from == name_of(t));
            if !has_output {
                let tos: Vec<usize> = (t + 1..n).filter(|i| kinds[*i]).collect();
                match tos.choose(rng) {
                    Some(p) => {
                        arcs.insert((name_of(t), name_of(*p)));
                    }
                    None => continue 'retry,
                }
            }
        }
        if arcs.len() > 10 {
            continue 'retry;
        }

        let sinks: Vec<usize> = (0..n)
            .filter(|i| kinds[*i] && !arcs.iter().any(|(from, _)| *from == name_of(*i)))
            .collect();
        if sinks.is_empty() {
            continue 'retry;
        }
        let mut finals: Vec<NodeId> = sinks
            .iter()
            .filter(|_| rng.gen_bool(0.6))
            .map(|i| name_of(*i))
            .collect();
        if finals.is_empty() {
            finals.push(name_of(*sinks.choose(rng).unwrap()));
        }

        let mut places = Vec::new();
        let mut transitions = Vec::new();
        for i in 0..n {
            if kinds[i] {
                let label = if with_recv && rng.gen_bool(0.3) {
                    PlaceLabel::Recv(RecvSpec {
                        label: format!("R{i}"),
                        performative: PERFORMATIVES.choose(rng).unwrap().to_string(),
                        sender: "*".to_string(),
                        content: ContentPattern::Any,
                    })
                } else {
                    PlaceLabel::Plain
                };
                places.push((name_of(i), label));
            } else {
                transitions.push((
                    name_of(i),
                    TransitionSpec { guard: None, effect: TransitionEffect::None },
                ));
            }
        }

        let net = ProtocolNet::from_parts(
            "valid-acyclic",
            "Self",
            [],
            places.clone(),
            transitions.clone(),
            arcs,
            node("P0"),
            finals,
        )
        .expect("family nets satisfy invariants");
        assert!(
            protonet::model::validate_structure(&net).is_empty(),
            "family nets must be structurally valid"
        );
        return ValidNet {
            net,
            place_ids: places.into_iter().map(|(id, _)| id).collect(),
            transition_ids: transitions.into_iter().map(|(id, _)| id).collect(),
        };
    }
}
