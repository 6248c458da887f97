//! Canonical JSON wire format for protocol documents (`.protocol.json`).
//!
//! Top-level keys appear in schema order; node lists, arcs, peers and
//! finals are sorted, so serialization is a pure function of the net's
//! abstract structure.

use serde::{Deserialize, Serialize};

use super::{
    ActionContent, ActionKind, ActionSpec, ContentPattern, ModelError, NodeId, PlaceLabel,
    PredExpr, ProtocolNet, RecvSpec, SendContent, SendSpec, TransitionEffect, TransitionSpec,
};

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct WireDoc {
    name: String,
    role: String,
    peers: Vec<String>,
    places: Vec<WirePlace>,
    transitions: Vec<WireTransition>,
    arcs: Vec<WireArc>,
    initial: String,
    finals: Vec<String>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct WirePlace {
    id: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    recv: Option<WireRecv>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct WireRecv {
    label: String,
    performative: String,
    sender: String,
    /// Omitted means any content matches.
    #[serde(skip_serializing_if = "Option::is_none")]
    content: Option<String>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct WireTransition {
    id: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pred: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    send: Option<WireSend>,
    #[serde(skip_serializing_if = "Option::is_none")]
    action: Option<WireAction>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct WireSend {
    label: String,
    performative: String,
    receiver: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    content: Option<WireSendContent>,
}

#[derive(Debug, Serialize, Deserialize)]
enum WireSendContent {
    #[serde(rename = "literal")]
    Literal(String),
    #[serde(rename = "results-of")]
    ResultsOf(String),
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct WireAction {
    label: String,
    #[serde(rename = "type")]
    kind: String,
    act: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    content: Option<WireActionContent>,
}

#[derive(Debug, Serialize, Deserialize)]
enum WireActionContent {
    #[serde(rename = "literal")]
    Literal(String),
    #[serde(rename = "from-recv")]
    FromRecv(String),
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct WireArc {
    from: String,
    to: String,
}

/// Decodes a protocol document. The returned net satisfies every type
/// invariant and re-serializes to a canonical document equal to itself.
pub fn parse_protocol(doc: &[u8]) -> Result<ProtocolNet, ModelError> {
    let text = std::str::from_utf8(doc)
        .map_err(|e| ModelError::MalformedDocument(format!("not UTF-8: {e}")))?;
    let value: serde_json::Value = serde_json::from_str(text)
        .map_err(|e| ModelError::MalformedDocument(e.to_string()))?;
    let wire: WireDoc = serde_json::from_value(value).map_err(|e| ModelError::SchemaViolation {
        path: "$".to_string(),
        reason: e.to_string(),
    })?;
    net_from_wire(wire)
}

/// Encodes a net as its canonical document. Invariant-satisfying nets
/// always serialize; output is byte-identical across calls and across
/// node-order permutations of the source document.
pub fn serialize_protocol(net: &ProtocolNet) -> Vec<u8> {
    let wire = wire_from_net(net);
    let mut out = serde_json::to_vec_pretty(&wire).expect("wire document always serializes");
    out.push(b'\n');
    out
}

fn net_from_wire(wire: WireDoc) -> Result<ProtocolNet, ModelError> {
    let mut violations = Vec::new();
    let mut places = Vec::new();
    for p in wire.places {
        let id = match NodeId::new(&p.id) {
            Ok(id) => id,
            Err(_) => {
                violations.push(format!("invalid place id `{}`", p.id));
                continue;
            }
        };
        let label = match p.recv {
            None => PlaceLabel::Plain,
            Some(r) => PlaceLabel::Recv(RecvSpec {
                label: r.label,
                performative: r.performative,
                sender: r.sender,
                content: match r.content {
                    None => ContentPattern::Any,
                    Some(s) => ContentPattern::Literal(s),
                },
            }),
        };
        places.push((id, label));
    }

    let mut transitions = Vec::new();
    for t in wire.transitions {
        let id = match NodeId::new(&t.id) {
            Ok(id) => id,
            Err(_) => {
                violations.push(format!("invalid transition id `{}`", t.id));
                continue;
            }
        };
        let guard = match t.pred {
            None => None,
            Some(src) => match PredExpr::parse(&src) {
                Ok(expr) => Some(expr),
                Err(e) => {
                    violations.push(format!("transition `{id}` guard: {e}"));
                    None
                }
            },
        };
        let effect = match (t.send, t.action) {
            (Some(_), Some(_)) => {
                violations.push("transition carries two effects".to_string());
                TransitionEffect::None
            }
            (Some(s), None) => TransitionEffect::Send(SendSpec {
                label: s.label,
                performative: s.performative,
                receiver: s.receiver,
                content: match s.content {
                    None => SendContent::Omitted,
                    Some(WireSendContent::Literal(v)) => SendContent::Literal(v),
                    Some(WireSendContent::ResultsOf(l)) => SendContent::ResultsOf(l),
                },
            }),
            (None, Some(a)) => {
                let kind = match a.kind.as_str() {
                    "execute" => Some(ActionKind::Execute),
                    "read" => Some(ActionKind::Read),
                    "write" => Some(ActionKind::Write),
                    other => {
                        violations.push(format!(
                            "transition `{id}` has unknown action type `{other}`"
                        ));
                        None
                    }
                };
                match kind {
                    None => TransitionEffect::None,
                    Some(kind) => TransitionEffect::Action(ActionSpec {
                        label: a.label,
                        kind,
                        act: a.act,
                        content: match a.content {
                            None => ActionContent::Omitted,
                            Some(WireActionContent::Literal(v)) => ActionContent::Literal(v),
                            Some(WireActionContent::FromRecv(l)) => ActionContent::FromRecv(l),
                        },
                    }),
                }
            }
            (None, None) => TransitionEffect::None,
        };
        transitions.push((id, TransitionSpec { guard, effect }));
    }

    let mut arcs = Vec::new();
    for arc in wire.arcs {
        match (NodeId::new(&arc.from), NodeId::new(&arc.to)) {
            (Ok(from), Ok(to)) => arcs.push((from, to)),
            _ => violations.push(format!("arc `{}` -> `{}` has an invalid id", arc.from, arc.to)),
        }
    }

    let initial = NodeId::new(&wire.initial).map_err(|_| {
        ModelError::InvariantViolation(vec![format!("invalid initial id `{}`", wire.initial)])
    })?;
    let mut finals = Vec::new();
    for f in wire.finals {
        match NodeId::new(&f) {
            Ok(id) => finals.push(id),
            Err(_) => violations.push(format!("invalid final id `{f}`")),
        }
    }

    if !violations.is_empty() {
        return Err(ModelError::InvariantViolation(violations));
    }
    ProtocolNet::from_parts(
        wire.name,
        wire.role,
        wire.peers,
        places,
        transitions,
        arcs,
        initial,
        finals,
    )
}

fn wire_from_net(net: &ProtocolNet) -> WireDoc {
    WireDoc {
        name: net.name().to_string(),
        role: net.role().to_string(),
        peers: net.peers().iter().cloned().collect(),
        places: net
            .places()
            .iter()
            .map(|(id, label)| WirePlace {
                id: id.to_string(),
                recv: label.recv().map(|r| WireRecv {
                    label: r.label.clone(),
                    performative: r.performative.clone(),
                    sender: r.sender.clone(),
                    content: match &r.content {
                        ContentPattern::Any => None,
                        ContentPattern::Literal(s) => Some(s.clone()),
                    },
                }),
            })
            .collect(),
        transitions: net
            .transitions()
            .iter()
            .map(|(id, spec)| WireTransition {
                id: id.to_string(),
                pred: spec.guard.as_ref().map(|g| g.to_string()),
                send: spec.effect.send().map(|s| WireSend {
                    label: s.label.clone(),
                    performative: s.performative.clone(),
                    receiver: s.receiver.clone(),
                    content: match &s.content {
                        SendContent::Omitted => None,
                        SendContent::Literal(v) => Some(WireSendContent::Literal(v.clone())),
                        SendContent::ResultsOf(l) => Some(WireSendContent::ResultsOf(l.clone())),
                    },
                }),
                action: spec.effect.action().map(|a| WireAction {
                    label: a.label.clone(),
                    kind: a.kind.as_str().to_string(),
                    act: a.act.clone(),
                    content: match &a.content {
                        ActionContent::Omitted => None,
                        ActionContent::Literal(v) => Some(WireActionContent::Literal(v.clone())),
                        ActionContent::FromRecv(l) => Some(WireActionContent::FromRecv(l.clone())),
                    },
                }),
            })
            .collect(),
        arcs: net
            .arcs()
            .iter()
            .map(|(from, to)| WireArc {
                from: from.to_string(),
                to: to.to_string(),
            })
            .collect(),
        initial: net.initial().to_string(),
        finals: net.finals().iter().map(|f| f.to_string()).collect(),
    }
}
