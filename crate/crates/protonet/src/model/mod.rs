//! The extended Petri-net protocol representation.
//!
//! A [`ProtocolNet`] describes one interaction from a single agent's
//! perspective. Places may carry `Recv` labels (a message arrival supplies
//! the token), transitions may carry a `Send` or `Action` effect plus an
//! optional predicate guard. All values are immutable after construction
//! and every construction path enforces the type invariants.

mod pred;
mod validate;
mod wire;

pub use pred::{CmpOp, PredExpr, PredParseError, PredType};
pub use validate::{validate_structure, Violation};
pub use wire::{parse_protocol, serialize_protocol};

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

/// Identifier of one place or transition, unique within a net.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeId(String);

impl NodeId {
    /// Validates the identifier grammar `[A-Za-z_][A-Za-z0-9_-]*`.
    pub fn new(value: impl Into<String>) -> Result<Self, ModelError> {
        let value = value.into();
        if is_identifier(&value) {
            Ok(NodeId(value))
        } else {
            Err(ModelError::InvariantViolation(vec![format!(
                "invalid identifier `{value}`"
            )]))
        }
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl serde::Serialize for NodeId {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.0)
    }
}

impl<'de> serde::Deserialize<'de> for NodeId {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        NodeId::new(s).map_err(serde::de::Error::custom)
    }
}

pub(crate) fn is_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() || c == '_' => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-')
}

/// Content slot of a `Recv` label: match any content or one literal string.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ContentPattern {
    Any,
    Literal(String),
}

impl ContentPattern {
    pub fn matches(&self, content: &str) -> bool {
        match self {
            ContentPattern::Any => true,
            ContentPattern::Literal(s) => s == content,
        }
    }
}

/// Content slot of a `Send` label.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SendContent {
    Omitted,
    Literal(String),
    /// The string result of a previously executed action, by act label.
    ResultsOf(String),
}

/// Content slot of an `Action` label.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ActionContent {
    Omitted,
    Literal(String),
    /// The content of a previously matched message, by recv label.
    FromRecv(String),
}

/// A message the executing agent expects to receive.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RecvSpec {
    /// Unique among all recv labels of the net.
    pub label: String,
    pub performative: String,
    /// Peer role name, or "*" for any sender.
    pub sender: String,
    pub content: ContentPattern,
}

/// A message the executing agent will send.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SendSpec {
    /// Unique among all send labels of the net.
    pub label: String,
    pub performative: String,
    /// Peer role name the message goes to.
    pub receiver: String,
    pub content: SendContent,
}

/// What an internal action does: call a function or touch a variable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum ActionKind {
    Execute,
    Read,
    Write,
}

impl ActionKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ActionKind::Execute => "execute",
            ActionKind::Read => "read",
            ActionKind::Write => "write",
        }
    }
}

impl fmt::Display for ActionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// An internal action of the executing agent.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ActionSpec {
    /// Unique among all act labels of the net.
    pub label: String,
    pub kind: ActionKind,
    /// Function name for `execute`, variable name for `read`/`write`.
    pub act: String,
    pub content: ActionContent,
}

/// Label of a place.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PlaceLabel {
    Plain,
    Recv(RecvSpec),
}

impl PlaceLabel {
    pub fn recv(&self) -> Option<&RecvSpec> {
        match self {
            PlaceLabel::Recv(spec) => Some(spec),
            PlaceLabel::Plain => None,
        }
    }

    pub fn is_recv(&self) -> bool {
        matches!(self, PlaceLabel::Recv(_))
    }
}

/// Effect a transition performs when it fires. At most one per transition.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TransitionEffect {
    None,
    Send(SendSpec),
    Action(ActionSpec),
}

impl TransitionEffect {
    pub fn send(&self) -> Option<&SendSpec> {
        match self {
            TransitionEffect::Send(s) => Some(s),
            _ => None,
        }
    }

    pub fn action(&self) -> Option<&ActionSpec> {
        match self {
            TransitionEffect::Action(a) => Some(a),
            _ => None,
        }
    }
}

/// Guard plus effect of one transition.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TransitionSpec {
    pub guard: Option<PredExpr>,
    pub effect: TransitionEffect,
}

/// The unit of all agent communication.
#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MessageEnvelope {
    pub performative: String,
    pub sender: String,
    pub receiver: String,
    pub conversation: String,
    #[serde(default)]
    pub content: String,
}

impl MessageEnvelope {
    pub fn new(
        performative: impl Into<String>,
        sender: impl Into<String>,
        receiver: impl Into<String>,
        conversation: impl Into<String>,
        content: impl Into<String>,
    ) -> Result<Self, ModelError> {
        let env = MessageEnvelope {
            performative: performative.into(),
            sender: sender.into(),
            receiver: receiver.into(),
            conversation: conversation.into(),
            content: content.into(),
        };
        env.check()?;
        Ok(env)
    }

    /// All fields nonempty except content.
    pub fn check(&self) -> Result<(), ModelError> {
        let mut bad = Vec::new();
        for (name, value) in [
            ("performative", &self.performative),
            ("sender", &self.sender),
            ("receiver", &self.receiver),
            ("conversation", &self.conversation),
        ] {
            if value.is_empty() {
                bad.push(format!("envelope field `{name}` is empty"));
            }
        }
        if bad.is_empty() {
            Ok(())
        } else {
            Err(ModelError::InvariantViolation(bad))
        }
    }
}

/// Errors raised while building or decoding a protocol net.
#[derive(Debug, Error)]
pub enum ModelError {
    /// Input is not valid JSON at all.
    #[error("malformed document: {0}")]
    MalformedDocument(String),
    /// JSON is valid but does not fit the wire schema.
    #[error("schema violation at {path}: {reason}")]
    SchemaViolation { path: String, reason: String },
    /// Schema fits but one or more type invariants do not hold.
    #[error("invariant violations: {}", .0.join("; "))]
    InvariantViolation(Vec<String>),
}

/// An extended Petri net describing one local protocol.
///
/// Construction goes through [`ProtocolNet::from_parts`] (or the wire
/// parser), which enforces every type invariant. Internal storage is
/// ordered, so two nets with the same abstract structure compare equal and
/// serialize to identical bytes regardless of input order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProtocolNet {
    name: String,
    role: String,
    peers: BTreeSet<String>,
    places: BTreeMap<NodeId, PlaceLabel>,
    transitions: BTreeMap<NodeId, TransitionSpec>,
    arcs: BTreeSet<(NodeId, NodeId)>,
    initial: NodeId,
    finals: BTreeSet<NodeId>,
}

impl ProtocolNet {
    /// Builds a net and checks all type invariants, collecting every
    /// violation rather than stopping at the first.
    #[allow(clippy::too_many_arguments)]
    pub fn from_parts(
        name: impl Into<String>,
        role: impl Into<String>,
        peers: impl IntoIterator<Item = String>,
        places: impl IntoIterator<Item = (NodeId, PlaceLabel)>,
        transitions: impl IntoIterator<Item = (NodeId, TransitionSpec)>,
        arcs: impl IntoIterator<Item = (NodeId, NodeId)>,
        initial: NodeId,
        finals: impl IntoIterator<Item = NodeId>,
    ) -> Result<Self, ModelError> {
        let mut violations = Vec::new();

        let mut place_map = BTreeMap::new();
        for (id, label) in places {
            if place_map.insert(id.clone(), label).is_some() {
                violations.push(format!("duplicate place id `{id}`"));
            }
        }
        let mut transition_map = BTreeMap::new();
        for (id, spec) in transitions {
            if place_map.contains_key(&id) {
                violations.push(format!("node id `{id}` used for both a place and a transition"));
            }
            if transition_map.insert(id.clone(), spec).is_some() {
                violations.push(format!("duplicate transition id `{id}`"));
            }
        }

        let net = ProtocolNet {
            name: name.into(),
            role: role.into(),
            peers: peers.into_iter().collect(),
            places: place_map,
            transitions: transition_map,
            arcs: arcs.into_iter().collect(),
            initial,
            finals: finals.into_iter().collect(),
        };
        net.check_invariants(&mut violations);
        if violations.is_empty() {
            Ok(net)
        } else {
            Err(ModelError::InvariantViolation(violations))
        }
    }

    fn check_invariants(&self, violations: &mut Vec<String>) {
        // Label uniqueness and identifier grammar.
        let mut recv_labels = BTreeMap::new();
        let mut send_labels = BTreeSet::new();
        let mut act_labels = BTreeMap::new();
        for (id, label) in &self.places {
            if let PlaceLabel::Recv(spec) = label {
                if !is_identifier(&spec.label) {
                    violations.push(format!("invalid recv label `{}`", spec.label));
                }
                if spec.performative.is_empty() {
                    violations.push(format!("recv `{}` has an empty performative", spec.label));
                }
                if recv_labels.insert(spec.label.clone(), id.clone()).is_some() {
                    violations.push(format!("duplicate recv label `{}`", spec.label));
                }
                if spec.sender != "*" && !self.peers.contains(&spec.sender) {
                    violations.push(format!(
                        "recv `{}` names sender `{}` which is not a peer",
                        spec.label, spec.sender
                    ));
                }
            }
        }
        for (id, spec) in &self.transitions {
            match &spec.effect {
                TransitionEffect::Send(send) => {
                    if !is_identifier(&send.label) {
                        violations.push(format!("invalid send label `{}`", send.label));
                    }
                    if send.performative.is_empty() {
                        violations.push(format!("send `{}` has an empty performative", send.label));
                    }
                    if !send_labels.insert(send.label.clone()) {
                        violations.push(format!("duplicate send label `{}`", send.label));
                    }
                    if send.receiver != "*" && !self.peers.contains(&send.receiver) {
                        violations.push(format!(
                            "send `{}` names receiver `{}` which is not a peer",
                            send.label, send.receiver
                        ));
                    }
                }
                TransitionEffect::Action(act) => {
                    if !is_identifier(&act.label) {
                        violations.push(format!("invalid act label `{}`", act.label));
                    }
                    if act.act.is_empty() {
                        violations.push(format!("action `{}` has an empty act slot", act.label));
                    }
                    if act_labels.insert(act.label.clone(), id.clone()).is_some() {
                        violations.push(format!("duplicate act label `{}`", act.label));
                    }
                }
                TransitionEffect::None => {}
            }
        }

        // Cross-references between labels.
        for spec in self.transitions.values() {
            if let TransitionEffect::Send(send) = &spec.effect {
                if let SendContent::ResultsOf(act) = &send.content {
                    if !act_labels.contains_key(act) {
                        violations.push(format!(
                            "send `{}` references results of unknown action `{act}`",
                            send.label
                        ));
                    }
                }
            }
            if let TransitionEffect::Action(action) = &spec.effect {
                if let ActionContent::FromRecv(recv) = &action.content {
                    if !recv_labels.contains_key(recv) {
                        violations.push(format!(
                            "action `{}` references unknown recv `{recv}`",
                            action.label
                        ));
                    }
                }
            }
            if let Some(guard) = &spec.guard {
                for label in guard.recv_refs() {
                    if !recv_labels.contains_key(label) {
                        violations.push(format!("guard references unknown recv `{label}`"));
                    }
                }
                for label in guard.result_refs() {
                    if !act_labels.contains_key(label) {
                        violations.push(format!("guard references unknown action `{label}`"));
                    }
                }
                if let Err(e) = guard.check_types() {
                    violations.push(format!("guard is ill-typed: {e}"));
                }
            }
        }

        // Arc shape: bipartite, endpoints exist.
        for (from, to) in &self.arcs {
            let from_place = self.places.contains_key(from);
            let from_trans = self.transitions.contains_key(from);
            let to_place = self.places.contains_key(to);
            let to_trans = self.transitions.contains_key(to);
            if !from_place && !from_trans {
                violations.push(format!("arc references unknown node `{from}`"));
            } else if !to_place && !to_trans {
                violations.push(format!("arc references unknown node `{to}`"));
            } else if !((from_place && to_trans) || (from_trans && to_place)) {
                violations.push(format!("arc `{from}` -> `{to}` is not bipartite"));
            }
        }

        if !self.places.contains_key(&self.initial) {
            violations.push(format!("initial `{}` is not a place", self.initial));
        }
        if self.finals.is_empty() {
            violations.push("finals set is empty".to_string());
        }
        for f in &self.finals {
            if !self.places.contains_key(f) {
                violations.push(format!("final `{f}` is not a place"));
            }
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn role(&self) -> &str {
        &self.role
    }

    pub fn peers(&self) -> &BTreeSet<String> {
        &self.peers
    }

    pub fn places(&self) -> &BTreeMap<NodeId, PlaceLabel> {
        &self.places
    }

    pub fn transitions(&self) -> &BTreeMap<NodeId, TransitionSpec> {
        &self.transitions
    }

    pub fn arcs(&self) -> &BTreeSet<(NodeId, NodeId)> {
        &self.arcs
    }

    pub fn initial(&self) -> &NodeId {
        &self.initial
    }

    pub fn finals(&self) -> &BTreeSet<NodeId> {
        &self.finals
    }

    pub fn is_place(&self, id: &NodeId) -> bool {
        self.places.contains_key(id)
    }

    pub fn is_transition(&self, id: &NodeId) -> bool {
        self.transitions.contains_key(id)
    }

    /// Place label, if `id` is a place.
    pub fn place(&self, id: &NodeId) -> Option<&PlaceLabel> {
        self.places.get(id)
    }

    /// Transition spec, if `id` is a transition.
    pub fn transition(&self, id: &NodeId) -> Option<&TransitionSpec> {
        self.transitions.get(id)
    }

    /// All node ids, places then transitions, in id order within each kind.
    pub fn node_ids(&self) -> impl Iterator<Item = &NodeId> {
        self.places.keys().chain(self.transitions.keys())
    }

    /// Direct successors of `id` along arcs, in id order.
    pub fn successors(&self, id: &NodeId) -> Vec<&NodeId> {
        self.arcs
            .range((id.clone(), NodeId(String::new()))..)
            .take_while(|(from, _)| from == id)
            .map(|(_, to)| to)
            .collect()
    }

    /// Direct predecessors of `id` along arcs, in id order.
    pub fn predecessors(&self, id: &NodeId) -> Vec<&NodeId> {
        self.arcs
            .iter()
            .filter(|(_, to)| to == id)
            .map(|(from, _)| from)
            .collect()
    }

    /// The recv spec of a place, if any.
    pub fn recv_at(&self, id: &NodeId) -> Option<&RecvSpec> {
        self.place(id).and_then(|l| l.recv())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn node(s: &str) -> NodeId {
        NodeId::new(s).unwrap()
    }

    #[test]
    fn identifier_grammar() {
        assert!(is_identifier("R3"));
        assert!(is_identifier("_x-1"));
        assert!(!is_identifier(""));
        assert!(!is_identifier("3R"));
        assert!(!is_identifier("a b"));
        assert!(NodeId::new("-lead").is_err());
    }

    #[test]
    fn minimal_net_builds() {
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
        assert_eq!(net.places().len(), 1);
        assert!(net.transitions().is_empty());
        assert!(net.arcs().is_empty());
    }

    #[test]
    fn rejects_duplicate_recv_labels_and_unknown_refs() {
        let recv = |label: &str| {
            PlaceLabel::Recv(RecvSpec {
                label: label.to_string(),
                performative: "Inform".to_string(),
                sender: "*".to_string(),
                content: ContentPattern::Any,
            })
        };
        let err = ProtocolNet::from_parts(
            "bad",
            "A",
            [],
            [(node("P0"), recv("R1")), (node("P1"), recv("R1"))],
            [(
                node("T0"),
                TransitionSpec {
                    guard: None,
                    effect: TransitionEffect::Send(SendSpec {
                        label: "S1".to_string(),
                        performative: "Bid".to_string(),
                        receiver: "*".to_string(),
                        content: SendContent::ResultsOf("A9".to_string()),
                    }),
                },
            )],
            [(node("P0"), node("T0"))],
            node("P0"),
            [node("P1")],
        )
        .unwrap_err();
        let ModelError::InvariantViolation(list) = err else {
            panic!("expected invariant violations");
        };
        assert!(list.iter().any(|v| v.contains("duplicate recv label")));
        assert!(list.iter().any(|v| v.contains("unknown action `A9`")));
    }

    #[test]
    fn rejects_non_bipartite_arcs() {
        let err = ProtocolNet::from_parts(
            "bad",
            "A",
            [],
            [(node("P0"), PlaceLabel::Plain), (node("P1"), PlaceLabel::Plain)],
            [],
            [(node("P0"), node("P1"))],
            node("P0"),
            [node("P1")],
        )
        .unwrap_err();
        assert!(err.to_string().contains("not bipartite"));
    }

    #[test]
    fn rejects_sender_outside_peers() {
        let err = ProtocolNet::from_parts(
            "bad",
            "A",
            ["B".to_string()],
            [(
                node("P0"),
                PlaceLabel::Recv(RecvSpec {
                    label: "R1".to_string(),
                    performative: "Inform".to_string(),
                    sender: "C".to_string(),
                    content: ContentPattern::Any,
                }),
            )],
            [],
            [],
            node("P0"),
            [node("P0")],
        )
        .unwrap_err();
        assert!(err.to_string().contains("not a peer"));
    }

    #[test]
    fn envelope_requires_nonempty_fields() {
        assert!(MessageEnvelope::new("Inform", "a", "b", "c1", "").is_ok());
        assert!(MessageEnvelope::new("", "a", "b", "c1", "x").is_err());
        assert!(MessageEnvelope::new("Inform", "a", "b", "", "x").is_err());
    }
}
