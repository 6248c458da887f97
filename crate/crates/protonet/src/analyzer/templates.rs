//! Action-template precondition checks.
//!
//! A past precondition must dominate the action: every directed path from
//! the initial place to the action passes through a matching node before
//! the action. A future precondition must post-dominate it: every
//! directed path from the action to every reachable final place passes
//! through a matching node after the action. Both are decided by cutting
//! the matching nodes out of the graph and testing reachability, which is
//! equivalent to quantifying over all paths and stays well-defined on
//! cyclic nets.

use std::collections::BTreeMap;
use std::collections::BTreeSet;

use crate::graph::reachable_avoiding;
use crate::model::{NodeId, ProtocolNet};

use super::{ActionTemplate, ConditionPattern, Obligation, SafetyMark};

/// Marks produced by the template pass plus the guarantee obligations
/// behind every `GuaranteeRequired` mark.
#[derive(Debug, Default)]
pub struct TemplateOutcome {
    pub marks: BTreeMap<NodeId, SafetyMark>,
    pub obligations: Vec<Obligation>,
}

/// True iff every path initial -> `action` passes through a node matching
/// `pattern` strictly before `action`.
pub fn dominates(net: &ProtocolNet, pattern: &ConditionPattern, action: &NodeId) -> bool {
    let cut: BTreeSet<NodeId> = pattern
        .matching_nodes(net)
        .into_iter()
        .filter(|n| n != action)
        .collect();
    let reachable = reachable_avoiding(net, [net.initial()], &cut);
    !reachable.contains(action)
}

/// True iff every path `action` -> any final place passes through a node
/// matching `pattern` strictly after `action`.
pub fn post_dominates(net: &ProtocolNet, pattern: &ConditionPattern, action: &NodeId) -> bool {
    let cut: BTreeSet<NodeId> = pattern
        .matching_nodes(net)
        .into_iter()
        .filter(|n| n != action)
        .collect();
    let reachable = reachable_avoiding(net, [action], &cut);
    net.finals().iter().all(|f| !reachable.contains(f))
}

/// Applies every template to every matching action transition.
///
/// Unmet past preconditions condemn the action. Unmet future
/// preconditions condemn it too, unless the condition is a message
/// receipt, in which case the action is marked `GuaranteeRequired` and
/// resolved at run time. Flexible conditions accept either side and fall
/// back to the future rule.
pub fn check_templates(net: &ProtocolNet, templates: &[ActionTemplate]) -> TemplateOutcome {
    let mut outcome = TemplateOutcome::default();

    for template in templates {
        for (id, spec) in net.transitions() {
            if spec.effect.action().is_none() || !template.target.matches_node(net, id) {
                continue;
            }
            for past in &template.past {
                if !dominates(net, past, id) {
                    condemn(&mut outcome, id, "missing past precondition");
                }
            }
            for future in &template.future {
                if !post_dominates(net, future, id) {
                    require_or_condemn(&mut outcome, id, future);
                }
            }
            for flexible in &template.flexible {
                if !dominates(net, flexible, id) && !post_dominates(net, flexible, id) {
                    require_or_condemn(&mut outcome, id, flexible);
                }
            }
        }
    }

    outcome
}

fn condemn(outcome: &mut TemplateOutcome, id: &NodeId, reason: &str) {
    outcome
        .marks
        .entry(id.clone())
        .and_modify(|m| {
            if matches!(m, SafetyMark::GuaranteeRequired(_)) {
                *m = SafetyMark::Unsafe(reason.to_string());
            }
        })
        .or_insert_with(|| SafetyMark::Unsafe(reason.to_string()));
}

fn require_or_condemn(outcome: &mut TemplateOutcome, id: &NodeId, pattern: &ConditionPattern) {
    if !pattern.is_recv() {
        condemn(outcome, id, "missing future precondition");
        return;
    }
    let obligation = Obligation {
        node: id.clone(),
        pattern: pattern.clone(),
    };
    if !outcome.obligations.contains(&obligation) {
        outcome.obligations.push(obligation);
    }
    outcome
        .marks
        .entry(id.clone())
        .or_insert_with(|| SafetyMark::GuaranteeRequired(pattern.clone()));
}
