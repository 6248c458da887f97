//! Brute-force token-game oracle, independent of the analyzer.
//!
//! Enumerates every maximal firing sequence of the plain token game from
//! the initial marking. A sequence is a list of micro-events: the initial
//! token placement, then alternating transition firings and token
//! deposits (the deposit of a firing is causally after the firing). A
//! micro-event is bad when it fires a base-unsafe transition or deposits
//! a token on a base-unsafe place.
//!
//! A node is oracle-unsafe when it is base-unsafe or every occurrence of
//! it, in every maximal sequence, is followed by a strictly later bad
//! micro-event. A node is oracle-unusable when it is neither, and no
//! completely clean maximal sequence (zero bad micro-events) ever reaches
//! it.

use std::collections::{BTreeMap, BTreeSet};

use protonet::model::{NodeId, ProtocolNet};

#[derive(Debug, Clone)]
enum MicroEvent {
    Fire(NodeId),
    Deposit(Vec<NodeId>),
}

#[derive(Debug, PartialEq, Eq)]
pub struct OracleMarks {
    pub unsafe_set: BTreeSet<NodeId>,
    pub unusable_set: BTreeSet<NodeId>,
}

pub fn classify(net: &ProtocolNet, base_unsafe: &BTreeSet<NodeId>) -> OracleMarks {
    let sequences = enumerate_maximal_sequences(net);
    assert!(!sequences.is_empty());

    let is_bad = |event: &MicroEvent| -> bool {
        match event {
            MicroEvent::Fire(t) => base_unsafe.contains(t),
            MicroEvent::Deposit(places) => places.iter().any(|p| base_unsafe.contains(p)),
        }
    };

    // For each sequence, precompute whether a bad event exists strictly
    // after each index, plus whether the sequence is clean overall.
    struct Analyzed {
        events: Vec<MicroEvent>,
        bad_after: Vec<bool>,
        clean: bool,
    }
    let analyzed: Vec<Analyzed> = sequences
        .into_iter()
        .map(|events| {
            let badness: Vec<bool> = events.iter().map(is_bad).collect();
            let mut bad_after = vec![false; events.len()];
            let mut seen_bad = false;
            for i in (0..events.len()).rev() {
                bad_after[i] = seen_bad;
                seen_bad = seen_bad || badness[i];
            }
            let clean = !seen_bad;
            Analyzed { events, bad_after, clean }
        })
        .collect();

    let occurrences = |n: &NodeId, seq: &Analyzed| -> Vec<usize> {
        seq.events
            .iter()
            .enumerate()
            .filter_map(|(i, event)| match event {
                MicroEvent::Fire(t) if t == n => Some(i),
                MicroEvent::Deposit(places) if places.contains(n) => Some(i),
                _ => None,
            })
            .collect()
    };

    let mut unsafe_set = BTreeSet::new();
    let mut unusable_set = BTreeSet::new();
    for n in net.node_ids() {
        if base_unsafe.contains(n) {
            unsafe_set.insert(n.clone());
            continue;
        }
        let mut occurred = false;
        let mut always_doomed = true;
        let mut cleanly_reached = false;
        for seq in &analyzed {
            for i in occurrences(n, seq) {
                occurred = true;
                if !seq.bad_after[i] {
                    always_doomed = false;
                }
                if seq.clean {
                    cleanly_reached = true;
                }
            }
        }
        assert!(occurred, "family guarantees token reachability for {n}");
        if always_doomed {
            unsafe_set.insert(n.clone());
        } else if !cleanly_reached {
            unusable_set.insert(n.clone());
        }
    }
    OracleMarks { unsafe_set, unusable_set }
}

fn enumerate_maximal_sequences(net: &ProtocolNet) -> Vec<Vec<MicroEvent>> {
    let mut sequences = Vec::new();
    let mut marking: BTreeMap<NodeId, u64> = BTreeMap::new();
    marking.insert(net.initial().clone(), 1);
    let prefix = vec![MicroEvent::Deposit(vec![net.initial().clone()])];
    explore(net, &mut marking, prefix, &mut sequences);
    sequences
}

fn explore(
    net: &ProtocolNet,
    marking: &mut BTreeMap<NodeId, u64>,
    prefix: Vec<MicroEvent>,
    out: &mut Vec<Vec<MicroEvent>>,
) {
    assert!(out.len() < 1_000_000, "sequence explosion");
    let enabled: Vec<NodeId> = net
        .transitions()
        .keys()
        .filter(|t| {
            net.predecessors(t)
                .iter()
                .all(|p| marking.get(*p).copied().unwrap_or(0) > 0)
        })
        .cloned()
        .collect();
    if enabled.is_empty() {
        out.push(prefix);
        return;
    }
    for t in enabled {
        let inputs: Vec<NodeId> = net.predecessors(&t).into_iter().cloned().collect();
        let outputs: Vec<NodeId> = net.successors(&t).into_iter().cloned().collect();
        for p in &inputs {
            *marking.get_mut(p).unwrap() -= 1;
        }
        for p in &outputs {
            *marking.entry(p.clone()).or_insert(0) += 1;
        }
        let mut next = prefix.clone();
        next.push(MicroEvent::Fire(t.clone()));
        next.push(MicroEvent::Deposit(outputs.clone()));
        explore(net, marking, next, out);
        for p in &outputs {
            *marking.get_mut(p).unwrap() -= 1;
        }
        for p in &inputs {
            *marking.get_mut(p).unwrap() += 1;
        }
    }
}
