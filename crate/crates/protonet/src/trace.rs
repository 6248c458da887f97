//! Trace records: one JSON object per line with a stable field order,
//! the golden-file surface for end-to-end tests.

use serde::{Deserialize, Serialize};

use crate::model::NodeId;

/// Event kinds appearing in a trace.
pub const KIND_DELIVER: &str = "deliver";
pub const KIND_FIRE: &str = "fire";
pub const KIND_EMIT: &str = "emit";
pub const KIND_GUARANTEE: &str = "guarantee";
pub const KIND_STATUS: &str = "status";

/// A trace event as produced by an agent, before the scheduler assigns
/// the global sequence number.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TraceEvent {
    Deliver {
        agent: String,
        conversation: String,
        performative: String,
        sender: String,
        content: String,
        matched: bool,
        place: Option<NodeId>,
    },
    Fire {
        agent: String,
        conversation: String,
        transition: NodeId,
    },
    Emit {
        agent: String,
        conversation: String,
        performative: String,
        receiver: String,
        content: String,
    },
    Guarantee {
        agent: String,
        conversation: String,
        /// "request", "granted" or "refused" (the requesting side).
        event: String,
        transition: NodeId,
        performative: Option<String>,
    },
    Status {
        agent: String,
        conversation: String,
        status: String,
        reason: Option<String>,
    },
}

impl TraceEvent {
    pub fn agent(&self) -> &str {
        match self {
            TraceEvent::Deliver { agent, .. }
            | TraceEvent::Fire { agent, .. }
            | TraceEvent::Emit { agent, .. }
            | TraceEvent::Guarantee { agent, .. }
            | TraceEvent::Status { agent, .. } => agent,
        }
    }

    pub fn into_record(self, seq: u64) -> TraceRecord {
        let mut record = TraceRecord {
            seq,
            ..TraceRecord::default()
        };
        match self {
            TraceEvent::Deliver {
                agent,
                conversation,
                performative,
                sender,
                content,
                matched,
                place,
            } => {
                record.kind = KIND_DELIVER.to_string();
                record.agent = agent;
                record.conversation = Some(conversation);
                record.performative = Some(performative);
                record.sender = Some(sender);
                record.content = Some(content);
                record.matched = Some(matched);
                record.place = place.map(|p| p.to_string());
            }
            TraceEvent::Fire {
                agent,
                conversation,
                transition,
            } => {
                record.kind = KIND_FIRE.to_string();
                record.agent = agent;
                record.conversation = Some(conversation);
                record.transition = Some(transition.to_string());
            }
            TraceEvent::Emit {
                agent,
                conversation,
                performative,
                receiver,
                content,
            } => {
                record.kind = KIND_EMIT.to_string();
                record.agent = agent;
                record.conversation = Some(conversation);
                record.performative = Some(performative);
                record.receiver = Some(receiver);
                record.content = Some(content);
            }
            TraceEvent::Guarantee {
                agent,
                conversation,
                event,
                transition,
                performative,
            } => {
                record.kind = KIND_GUARANTEE.to_string();
                record.agent = agent;
                record.conversation = Some(conversation);
                record.event = Some(event);
                record.transition = Some(transition.to_string());
                record.performative = performative;
            }
            TraceEvent::Status {
                agent,
                conversation,
                status,
                reason,
            } => {
                record.kind = KIND_STATUS.to_string();
                record.agent = agent;
                record.conversation = Some(conversation);
                record.status = Some(status);
                record.reason = reason;
            }
        }
        record
    }
}

/// One line of a trace file. Field order is fixed by declaration order;
/// absent fields are omitted entirely.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub seq: u64,
    pub kind: String,
    pub agent: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub conversation: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub performative: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sender: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub receiver: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub content: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub matched: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub place: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub transition: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub event: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub status: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
}

impl TraceRecord {
    /// The JSONL line for this record (no trailing newline).
    pub fn to_line(&self) -> String {
        serde_json::to_string(self).expect("trace records always serialize")
    }
}
