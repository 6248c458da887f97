//! Exhaustive path-enumeration oracle for domination decisions,
//! independent of the analyzer's cut-reachability implementation.

use std::collections::BTreeSet;

use protonet::model::{NodeId, ProtocolNet};

/// All directed paths `from` -> `to` in an acyclic net, as node lists
/// including both endpoints.
pub fn all_paths(net: &ProtocolNet, from: &NodeId, to: &NodeId) -> Vec<Vec<NodeId>> {
    let mut paths = Vec::new();
    let mut current = vec![from.clone()];
    walk(net, to, &mut current, &mut paths);
    paths
}

fn walk(net: &ProtocolNet, to: &NodeId, current: &mut Vec<NodeId>, out: &mut Vec<Vec<NodeId>>) {
    assert!(out.len() < 1_000_000, "path explosion");
    let last = current.last().expect("nonempty").clone();
    if last == *to {
        out.push(current.clone());
        return;
    }
    for next in net.successors(&last) {
        current.push(next.clone());
        walk(net, to, current, out);
        current.pop();
    }
}

/// Every path initial -> `action` passes through a matching node strictly
/// before `action`. Vacuously true when no path exists.
pub fn oracle_dominates(net: &ProtocolNet, matches: &BTreeSet<NodeId>, action: &NodeId) -> bool {
    all_paths(net, net.initial(), action).iter().all(|path| {
        path[..path.len() - 1].iter().any(|n| matches.contains(n))
    })
}

/// Every path `action` -> any final place passes through a matching node
/// strictly after `action`. Vacuously true when no final is reachable.
pub fn oracle_post_dominates(
    net: &ProtocolNet,
    matches: &BTreeSet<NodeId>,
    action: &NodeId,
) -> bool {
    net.finals().iter().all(|f| {
        all_paths(net, action, f)
            .iter()
            .all(|path| path[1..].iter().any(|n| matches.contains(n)))
    })
}
