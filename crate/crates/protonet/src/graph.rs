//! Small graph helpers over a net's arc relation.
//!
//! The analyzer and runtime only need reachability (optionally with nodes
//! cut out) and strongly connected components, so these are hand-rolled
//! over the net's id-ordered adjacency.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use crate::model::{NodeId, ProtocolNet};

/// Forward adjacency of every node, in id order.
pub fn adjacency(net: &ProtocolNet) -> BTreeMap<NodeId, Vec<NodeId>> {
    let mut adj: BTreeMap<NodeId, Vec<NodeId>> =
        net.node_ids().map(|id| (id.clone(), Vec::new())).collect();
    for (from, to) in net.arcs() {
        adj.get_mut(from).expect("arc endpoints validated").push(to.clone());
    }
    adj
}

/// Nodes reachable from `starts` along arcs, including the start nodes.
pub fn reachable_from<'a>(
    net: &ProtocolNet,
    starts: impl IntoIterator<Item = &'a NodeId>,
) -> BTreeSet<NodeId> {
    reachable_avoiding(net, starts, &BTreeSet::new())
}

/// Nodes reachable from `starts` without entering any node in `cut`.
/// Start nodes in `cut` are not expanded and not included.
pub fn reachable_avoiding<'a>(
    net: &ProtocolNet,
    starts: impl IntoIterator<Item = &'a NodeId>,
    cut: &BTreeSet<NodeId>,
) -> BTreeSet<NodeId> {
    let mut seen = BTreeSet::new();
    let mut queue: VecDeque<NodeId> = starts
        .into_iter()
        .filter(|s| !cut.contains(*s))
        .cloned()
        .collect();
    while let Some(node) = queue.pop_front() {
        if !seen.insert(node.clone()) {
            continue;
        }
        for next in net.successors(&node) {
            if !cut.contains(next) && !seen.contains(next) {
                queue.push_back(next.clone());
            }
        }
    }
    seen
}

/// Strongly connected components of the subgraph induced by `keep`,
/// returned in deterministic order. Tarjan, iterative.
pub fn sccs_of_subgraph(net: &ProtocolNet, keep: &BTreeSet<NodeId>) -> Vec<Vec<NodeId>> {
    struct State {
        index: BTreeMap<NodeId, usize>,
        lowlink: BTreeMap<NodeId, usize>,
        on_stack: BTreeSet<NodeId>,
        stack: Vec<NodeId>,
        next_index: usize,
        components: Vec<Vec<NodeId>>,
    }

    let mut st = State {
        index: BTreeMap::new(),
        lowlink: BTreeMap::new(),
        on_stack: BTreeSet::new(),
        stack: Vec::new(),
        next_index: 0,
        components: Vec::new(),
    };

    // Explicit DFS stack: (node, iterator position over successors).
    for root in keep {
        if st.index.contains_key(root) {
            continue;
        }
        let mut call_stack: Vec<(NodeId, usize)> = vec![(root.clone(), 0)];
        while let Some((node, child_pos)) = call_stack.pop() {
            if child_pos == 0 {
                st.index.insert(node.clone(), st.next_index);
                st.lowlink.insert(node.clone(), st.next_index);
                st.next_index += 1;
                st.stack.push(node.clone());
                st.on_stack.insert(node.clone());
            }
            let succs: Vec<NodeId> = net
                .successors(&node)
                .into_iter()
                .filter(|s| keep.contains(*s))
                .cloned()
                .collect();
            if child_pos < succs.len() {
                let child = succs[child_pos].clone();
                call_stack.push((node.clone(), child_pos + 1));
                if !st.index.contains_key(&child) {
                    call_stack.push((child, 0));
                } else if st.on_stack.contains(&child) {
                    let low = (*st.lowlink.get(&node).unwrap()).min(st.index[&child]);
                    st.lowlink.insert(node.clone(), low);
                }
            } else {
                if let Some((parent, _)) = call_stack.last() {
                    let low = (*st.lowlink.get(parent).unwrap()).min(st.lowlink[&node]);
                    st.lowlink.insert(parent.clone(), low);
                }
                if st.lowlink[&node] == st.index[&node] {
                    let mut component = Vec::new();
                    while let Some(top) = st.stack.pop() {
                        st.on_stack.remove(&top);
                        let done = top == node;
                        component.push(top);
                        if done {
                            break;
                        }
                    }
                    component.sort();
                    st.components.push(component);
                }
            }
        }
    }
    st.components.sort();
    st.components
}
