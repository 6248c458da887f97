//! Structural validation of a parsed net.
//!
//! These checks run after the type invariants: the parser already
//! guarantees bipartite arcs and resolvable references, so everything here
//! is about the shape of the graph.

use std::fmt;

use crate::graph::reachable_from;

use super::{NodeId, ProtocolNet};

/// One structural violation. Renders as a stable one-line code for golden
/// files, e.g. `FinalHasOutgoing(P1->T2)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    /// The initial place has an incoming arc from this transition.
    InitialHasIncoming { from: NodeId, initial: NodeId },
    /// A final place has an outgoing arc into this transition.
    FinalHasOutgoing { final_place: NodeId, to: NodeId },
    /// A node is not reachable from the initial place.
    Unreachable(NodeId),
    /// A transition has no input place.
    TransitionNoInput(NodeId),
    /// A transition has no output place.
    TransitionNoOutput(NodeId),
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::InitialHasIncoming { from, initial } => {
                write!(f, "InitialHasIncoming({from}->{initial})")
            }
            Violation::FinalHasOutgoing { final_place, to } => {
                write!(f, "FinalHasOutgoing({final_place}->{to})")
            }
            Violation::Unreachable(node) => write!(f, "Unreachable({node})"),
            Violation::TransitionNoInput(node) => write!(f, "TransitionNoInput({node})"),
            Violation::TransitionNoOutput(node) => write!(f, "TransitionNoOutput({node})"),
        }
    }
}

/// Reports every structural violation. Empty result means the net is
/// structurally valid: it begins with a source place, finals are sinks,
/// all nodes are reachable and every transition has inputs and outputs.
pub fn validate_structure(net: &ProtocolNet) -> Vec<Violation> {
    let mut out = Vec::new();

    for (from, to) in net.arcs() {
        if to == net.initial() {
            out.push(Violation::InitialHasIncoming {
                from: from.clone(),
                initial: to.clone(),
            });
        }
        if net.finals().contains(from) {
            out.push(Violation::FinalHasOutgoing {
                final_place: from.clone(),
                to: to.clone(),
            });
        }
    }

    let reachable = reachable_from(net, std::iter::once(net.initial()));
    for id in net.node_ids() {
        if !reachable.contains(id) {
            out.push(Violation::Unreachable(id.clone()));
        }
    }

    for id in net.transitions().keys() {
        if net.predecessors(id).is_empty() {
            out.push(Violation::TransitionNoInput(id.clone()));
        }
        if net.successors(id).is_empty() {
            out.push(Violation::TransitionNoOutput(id.clone()));
        }
    }

    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{PlaceLabel, TransitionEffect, TransitionSpec};

    fn node(s: &str) -> NodeId {
        NodeId::new(s).unwrap()
    }

    fn plain_transition() -> TransitionSpec {
        TransitionSpec {
            guard: None,
            effect: TransitionEffect::None,
        }
    }

    #[test]
    fn minimal_net_is_clean() {
        let net = ProtocolNet::from_parts(
            "minimal",
            "A",
            [],
            [(node("P0"), PlaceLabel::Plain)],
            [],
            [],
            node("P0"),
            [node("P0")],
        )
        .unwrap();
        assert!(validate_structure(&net).is_empty());
    }

    #[test]
    fn arc_into_initial_is_flagged() {
        // P0 -> T1 -> P0 (also a loop back into the initial place)
        let net = ProtocolNet::from_parts(
            "bad",
            "A",
            [],
            [(node("P0"), PlaceLabel::Plain)],
            [(node("T1"), plain_transition())],
            [(node("P0"), node("T1")), (node("T1"), node("P0"))],
            node("P0"),
            [node("P0")],
        )
        .unwrap();
        let violations = validate_structure(&net);
        assert!(violations.contains(&Violation::InitialHasIncoming {
            from: node("T1"),
            initial: node("P0"),
        }));
    }

    #[test]
    fn final_with_outgoing_arc_is_the_single_violation() {
        // P0 -> T1 -> P1, P1 -> T2 -> P1, finals = {P1}
        let net = ProtocolNet::from_parts(
            "bad",
            "A",
            [],
            [(node("P0"), PlaceLabel::Plain), (node("P1"), PlaceLabel::Plain)],
            [(node("T1"), plain_transition()), (node("T2"), plain_transition())],
            [
                (node("P0"), node("T1")),
                (node("T1"), node("P1")),
                (node("P1"), node("T2")),
                (node("T2"), node("P1")),
            ],
            node("P0"),
            [node("P1")],
        )
        .unwrap();
        let violations = validate_structure(&net);
        assert_eq!(
            violations,
            vec![Violation::FinalHasOutgoing {
                final_place: node("P1"),
                to: node("T2"),
            }]
        );
        assert_eq!(violations[0].to_string(), "FinalHasOutgoing(P1->T2)");
    }

    #[test]
    fn unreachable_and_dangling_transitions_are_flagged() {
        let net = ProtocolNet::from_parts(
            "bad",
            "A",
            [],
            [
                (node("P0"), PlaceLabel::Plain),
                (node("P1"), PlaceLabel::Plain),
                (node("P2"), PlaceLabel::Plain),
            ],
            [(node("T1"), plain_transition()), (node("T2"), plain_transition())],
            [
                (node("P0"), node("T1")),
                (node("T1"), node("P1")),
                (node("P2"), node("T2")),
            ],
            node("P0"),
            [node("P1")],
        )
        .unwrap();
        let violations = validate_structure(&net);
        assert!(violations.contains(&Violation::Unreachable(node("P2"))));
        assert!(violations.contains(&Violation::Unreachable(node("T2"))));
        assert!(violations.contains(&Violation::TransitionNoOutput(node("T2"))));
    }
}
