//! Safety propagation: the least fixpoint over four rules.
//!
//! * U1 — a transition is unsafe if any of its output places is unsafe:
//!   firing it deposits a token that cannot be retracted.
//! * U2 — a non-final place with outgoing transitions is unsafe if all of
//!   them are unsafe: a token there has no safe way forward.
//! * X1 — a transition is unusable if any input place is unsafe or
//!   unusable: it can never be safely enabled.
//! * X2 — a non-initial place is unusable if all transitions feeding it
//!   are unsafe or unusable. A Recv place with no incoming arcs is exempt:
//!   it is fed by messages, not by transitions.
//!
//! Unsafe takes precedence over unusable. GuaranteeRequired seeds count
//! as safe during iteration and survive unless the fixpoint turns the
//! node unsafe.

use std::collections::BTreeMap;

use crate::model::{NodeId, ProtocolNet};

use super::SafetyMark;

#[derive(Debug, Clone, PartialEq, Eq)]
enum Prop {
    Unusable,
    Unsafe(String),
}

impl Prop {
    fn is_unsafe(&self) -> bool {
        matches!(self, Prop::Unsafe(_))
    }
}

/// Computes the fixpoint of U1/U2/X1/X2 over `base` and returns a full
/// mark map (every node of the net appears; unmarked nodes are safe).
pub fn propagate_safety(
    net: &ProtocolNet,
    base: &BTreeMap<NodeId, SafetyMark>,
) -> BTreeMap<NodeId, SafetyMark> {
    let mut prop: BTreeMap<NodeId, Prop> = BTreeMap::new();
    for (node, mark) in base {
        match mark {
            SafetyMark::Unsafe(reason) => {
                prop.insert(node.clone(), Prop::Unsafe(reason.clone()));
            }
            SafetyMark::Unusable => {
                prop.insert(node.clone(), Prop::Unusable);
            }
            SafetyMark::Safe | SafetyMark::GuaranteeRequired(_) => {}
        }
    }

    // Marks only ever strengthen (none -> unusable -> unsafe), so naive
    // iteration to a fixpoint terminates.
    loop {
        let mut changed = false;

        for id in net.transitions().keys() {
            let already_unsafe = prop.get(id).is_some_and(Prop::is_unsafe);
            if !already_unsafe {
                // U1: any unsafe output place condemns the transition.
                let trigger = net
                    .successors(id)
                    .into_iter()
                    .find(|p| prop.get(p).is_some_and(Prop::is_unsafe));
                if let Some(place) = trigger {
                    prop.insert(id.clone(), Prop::Unsafe(format!("unsafe continuation: {place}")));
                    changed = true;
                    continue;
                }
                // X1: any condemned input place makes it unusable.
                if !prop.contains_key(id) {
                    let dead_input = net
                        .predecessors(id)
                        .into_iter()
                        .any(|p| prop.contains_key(p));
                    if dead_input {
                        prop.insert(id.clone(), Prop::Unusable);
                        changed = true;
                    }
                }
            }
        }

        for (id, label) in net.places() {
            let already_unsafe = prop.get(id).is_some_and(Prop::is_unsafe);
            if already_unsafe {
                continue;
            }
            let outgoing = net.successors(id);
            // U2: all outgoing transitions unsafe, none spared.
            if !net.finals().contains(id)
                && !outgoing.is_empty()
                && outgoing.iter().all(|t| prop.get(t).is_some_and(Prop::is_unsafe))
            {
                prop.insert(id.clone(), Prop::Unsafe("no safe continuation".to_string()));
                changed = true;
                continue;
            }
            // X2: every feeding transition condemned. Vacuously true for a
            // sourceless place, except the initial place and sourceless
            // Recv places (message-fed).
            if prop.contains_key(id) || id == net.initial() {
                continue;
            }
            let incoming = net.predecessors(id);
            if incoming.is_empty() && label.is_recv() {
                continue;
            }
            if incoming.iter().all(|t| prop.contains_key(t)) {
                prop.insert(id.clone(), Prop::Unusable);
                changed = true;
            }
        }

        if !changed {
            break;
        }
    }

    net.node_ids()
        .map(|id| {
            let mark = match (prop.get(id), base.get(id)) {
                (Some(Prop::Unsafe(reason)), _) => SafetyMark::Unsafe(reason.clone()),
                (_, Some(SafetyMark::GuaranteeRequired(p))) => {
                    SafetyMark::GuaranteeRequired(p.clone())
                }
                (Some(Prop::Unusable), _) => SafetyMark::Unusable,
                _ => SafetyMark::Safe,
            };
            (id.clone(), mark)
        })
        .collect()
}
