//! Condition patterns and action templates.
//!
//! Patterns match net nodes by exact field equality, with `"*"` as a
//! wildcard. Templates pair an action pattern with the conditions that
//! must hold before (past) or after (future) the action, or either
//! (flexible).

use serde::{Deserialize, Serialize};

use crate::model::{ActionKind, NodeId, ProtocolNet};

/// Action kind slot of an [`ConditionPattern::Action`] pattern; `"*"`
/// matches every kind.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum KindPattern {
    #[serde(rename = "execute")]
    Execute,
    #[serde(rename = "read")]
    Read,
    #[serde(rename = "write")]
    Write,
    #[serde(rename = "*")]
    Any,
}

impl KindPattern {
    fn matches(self, kind: ActionKind) -> bool {
        match self {
            KindPattern::Any => true,
            KindPattern::Execute => kind == ActionKind::Execute,
            KindPattern::Read => kind == ActionKind::Read,
            KindPattern::Write => kind == ActionKind::Write,
        }
    }
}

/// A condition that can be located on a net: a message receipt, a message
/// emission, or an internal action.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum ConditionPattern {
    #[serde(rename = "recv")]
    Recv { performative: String, sender: String },
    #[serde(rename = "send")]
    Send { performative: String, receiver: String },
    #[serde(rename = "action")]
    Action {
        #[serde(rename = "type")]
        kind: KindPattern,
        act: String,
    },
}

fn field_matches(pattern: &str, value: &str) -> bool {
    pattern == "*" || pattern == value
}

impl ConditionPattern {
    pub fn is_recv(&self) -> bool {
        matches!(self, ConditionPattern::Recv { .. })
    }

    /// Exact-field equality with `"*"` wildcards against one node.
    pub fn matches_node(&self, net: &ProtocolNet, id: &NodeId) -> bool {
        match self {
            ConditionPattern::Recv { performative, sender } => net
                .recv_at(id)
                .is_some_and(|r| {
                    field_matches(performative, &r.performative) && field_matches(sender, &r.sender)
                }),
            ConditionPattern::Send { performative, receiver } => net
                .transition(id)
                .and_then(|t| t.effect.send())
                .is_some_and(|s| {
                    field_matches(performative, &s.performative)
                        && field_matches(receiver, &s.receiver)
                }),
            ConditionPattern::Action { kind, act } => net
                .transition(id)
                .and_then(|t| t.effect.action())
                .is_some_and(|a| kind.matches(a.kind) && field_matches(act, &a.act)),
        }
    }

    /// All nodes of the net the pattern matches, in id order.
    pub fn matching_nodes(&self, net: &ProtocolNet) -> Vec<NodeId> {
        net.node_ids()
            .filter(|id| self.matches_node(net, id))
            .cloned()
            .collect()
    }
}

/// An action pattern plus its required past/future/flexible preconditions.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ActionTemplate {
    pub target: ConditionPattern,
    #[serde(default)]
    pub past: Vec<ConditionPattern>,
    #[serde(default)]
    pub future: Vec<ConditionPattern>,
    #[serde(default)]
    pub flexible: Vec<ConditionPattern>,
}

impl ActionTemplate {
    /// The past/future/flexible sets must be pairwise disjoint.
    pub fn check(&self) -> Result<(), String> {
        let sets = [("past", &self.past), ("future", &self.future), ("flexible", &self.flexible)];
        for (i, (name_a, a)) in sets.iter().enumerate() {
            for (name_b, b) in sets.iter().skip(i + 1) {
                if a.iter().any(|p| b.contains(p)) {
                    return Err(format!(
                        "template condition appears in both `{name_a}` and `{name_b}`"
                    ));
                }
            }
        }
        Ok(())
    }
}

/// Parses a template file: a JSON list of templates.
pub fn parse_templates(doc: &[u8]) -> Result<Vec<ActionTemplate>, String> {
    let templates: Vec<ActionTemplate> =
        serde_json::from_slice(doc).map_err(|e| format!("template file: {e}"))?;
    for t in &templates {
        t.check()?;
    }
    Ok(templates)
}
