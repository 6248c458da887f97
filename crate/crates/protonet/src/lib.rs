//! Protocol-exchange engine for multi-agent systems.
//!
//! Agents transmit interaction protocols to one another as extended
//! Petri-net documents, statically analyze received protocols for safety
//! and privacy before adopting them, and execute accepted protocols under
//! a token semantics extended with message I/O, internal actions,
//! predicate guards and a runtime guarantee handshake.
//!
//! The crate is organized around the protocol lifecycle:
//!
//! * [`model`] — the extended Petri-net representation, its canonical JSON
//!   wire format and structural validation.
//! * [`analyzer`] — the analysis pipeline: semantic checks, loop
//!   detection, ACL-based privacy checks, action-template precondition
//!   checks and safety propagation, ending in an accept/reject verdict.
//! * [`executor`] — the token game for accepted protocols: message-driven
//!   receive places, guard-checked firing, host-function actions and
//!   guarantee obligations.
//! * [`runtime`] — one agent: mailbox, protocol library, the generic
//!   request-reply bootstrap and the guarantee responder.
//! * [`transport`] — deterministic in-memory bus plus a framed TCP
//!   transport.

pub mod analyzer;
pub mod executor;
pub mod graph;
pub mod model;
pub mod runtime;
pub mod trace;
pub mod transport;

pub use analyzer::{analyze, AccessControlList, AnalysisContext, AnalysisReport, SafetyMark};
pub use executor::{ExecState, ExecStatus, HostRegistry};
pub use model::{parse_protocol, serialize_protocol, validate_structure, MessageEnvelope, ProtocolNet};
pub use runtime::Agent;
pub use transport::Bus;
