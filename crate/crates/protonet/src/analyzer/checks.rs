//! Semantic, loop and privacy checks. Each pass returns only the nodes it
//! condemns; the pipeline merges and propagates afterwards.

use std::collections::{BTreeMap, BTreeSet};

use crate::graph::sccs_of_subgraph;
use crate::model::{ActionKind, NodeId, ProtocolNet, SendContent, TransitionEffect};

use super::{AccessControlList, RegistryManifest, SafetyMark};

/// Marks transitions whose action names an unknown function or variable,
/// or whose kind and act category disagree (`execute` on a variable,
/// `read`/`write` on a function), and then transitions whose guard or
/// send content references a label condemned by this pass.
pub fn check_semantics(
    net: &ProtocolNet,
    manifest: &RegistryManifest,
) -> BTreeMap<NodeId, SafetyMark> {
    let mut marks = BTreeMap::new();
    let mut bad_act_labels = BTreeSet::new();

    for (id, spec) in net.transitions() {
        let Some(action) = spec.effect.action() else {
            continue;
        };
        let is_function = manifest.functions.contains(&action.act);
        let is_variable = manifest.variables.contains(&action.act);
        let reason = match action.kind {
            ActionKind::Execute if is_function => None,
            ActionKind::Execute if is_variable => Some(format!(
                "kind mismatch: execute on variable `{}`",
                action.act
            )),
            ActionKind::Execute => Some(format!("unknown function `{}`", action.act)),
            _ if is_variable => None,
            _ if is_function => Some(format!(
                "kind mismatch: {} on function `{}`",
                action.kind, action.act
            )),
            _ => Some(format!("unknown variable `{}`", action.act)),
        };
        if let Some(reason) = reason {
            marks.insert(id.clone(), SafetyMark::Unsafe(reason));
            bad_act_labels.insert(action.label.clone());
        }
    }

    // Anything that consumes the result of a condemned action is condemned too.
    for (id, spec) in net.transitions() {
        if marks.contains_key(id) {
            continue;
        }
        let mut referenced = Vec::new();
        if let Some(guard) = &spec.guard {
            referenced.extend(guard.result_refs().into_iter().map(str::to_string));
        }
        if let TransitionEffect::Send(send) = &spec.effect {
            if let SendContent::ResultsOf(label) = &send.content {
                referenced.push(label.clone());
            }
        }
        if let Some(label) = referenced.iter().find(|l| bad_act_labels.contains(*l)) {
            marks.insert(
                id.clone(),
                SafetyMark::Unsafe(format!("references unsafe action `{label}`")),
            );
        }
    }

    marks
}

/// Marks every node on a cycle that contains neither a Recv place nor a
/// guarded transition: such a cycle fires forever with no external input
/// and no exit condition.
pub fn detect_loops(net: &ProtocolNet) -> BTreeMap<NodeId, SafetyMark> {
    let unguarded: BTreeSet<NodeId> = net
        .places()
        .iter()
        .filter(|(_, label)| !label.is_recv())
        .map(|(id, _)| id.clone())
        .chain(
            net.transitions()
                .iter()
                .filter(|(_, spec)| spec.guard.is_none())
                .map(|(id, _)| id.clone()),
        )
        .collect();

    let mut marks = BTreeMap::new();
    for component in sccs_of_subgraph(net, &unguarded) {
        // Arcs are bipartite, so no self-loops exist; a cycle needs >= 2 nodes.
        if component.len() >= 2 {
            for node in component {
                marks.insert(node, SafetyMark::Unsafe("unbounded loop".to_string()));
            }
        }
    }
    marks
}

/// Marks every action transition whose required permission (its own kind)
/// is not granted on the named resource to the protocol's author.
pub fn check_privacy(
    net: &ProtocolNet,
    acl: &AccessControlList,
    author: &str,
) -> BTreeMap<NodeId, SafetyMark> {
    let mut marks = BTreeMap::new();
    for (id, spec) in net.transitions() {
        let Some(action) = spec.effect.action() else {
            continue;
        };
        if !acl.allows(author, &action.act, action.kind.into()) {
            marks.insert(
                id.clone(),
                SafetyMark::Unsafe(format!(
                    "privacy: {} on `{}` not granted to `{author}`",
                    action.kind, action.act
                )),
            );
        }
    }
    marks
}
