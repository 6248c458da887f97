//! One agent: mailbox, protocol library, the generic request-reply
//! bootstrap for fetching protocols, the guarantee responder, and the
//! glue binding analyzer and executor to the transport.
//!
//! Reserved `sys-*` performatives carry [`BootstrapMessage`] payloads and
//! are handled here; they never reach the executor's message matching.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use serde::{Deserialize, Serialize};

use crate::analyzer::{
    analyze, AccessControlList, ActionTemplate, AnalysisContext, AnalysisReport,
};
use crate::executor::{
    init_execution, Effect, ExecState, GuaranteeOutcome, HostRegistry,
};
use crate::graph::reachable_from;
use crate::model::{parse_protocol, serialize_protocol, MessageEnvelope, NodeId, ProtocolNet};
use crate::trace::TraceEvent;

pub const SYS_REQUEST: &str = "sys-request";
pub const SYS_REPLY: &str = "sys-reply";
pub const SYS_GUARANTEE_REQ: &str = "sys-guarantee-req";
pub const SYS_GUARANTEE_GRANT: &str = "sys-guarantee-grant";
pub const SYS_GUARANTEE_REFUSE: &str = "sys-guarantee-refuse";
pub const SYS_TERMINATE: &str = "sys-terminate";

/// True for the reserved bootstrap performatives.
pub fn is_reserved_performative(performative: &str) -> bool {
    matches!(
        performative,
        SYS_REQUEST
            | SYS_REPLY
            | SYS_GUARANTEE_REQ
            | SYS_GUARANTEE_GRANT
            | SYS_GUARANTEE_REFUSE
            | SYS_TERMINATE
    )
}

/// Payloads carried as JSON inside sys-* envelope content.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum BootstrapMessage {
    #[serde(rename = "request-protocol")]
    RequestProtocol(String),
    #[serde(rename = "reply-protocol")]
    ReplyProtocol(serde_json::Value),
    #[serde(rename = "protocol-not-found")]
    ProtocolNotFound(String),
    #[serde(rename = "guarantee-request")]
    GuaranteeRequest { performative: String, requester: String },
    #[serde(rename = "guarantee-grant")]
    GuaranteeGrant,
    #[serde(rename = "guarantee-refuse")]
    GuaranteeRefuse,
    #[serde(rename = "terminate")]
    Terminate { reason: String },
}

impl BootstrapMessage {
    pub fn to_content(&self) -> String {
        serde_json::to_string(self).expect("bootstrap payloads always serialize")
    }
}

/// Static configuration of one agent.
#[derive(Debug, Clone, Default)]
pub struct AgentConfig {
    pub name: String,
    /// Protocols this agent can serve and/or play, by name.
    pub protocols: BTreeMap<String, ProtocolNet>,
    pub acl: AccessControlList,
    pub templates: Vec<ActionTemplate>,
    pub registry: HostRegistry,
}

/// What one call to [`Agent::step`] produced, in causal order.
#[derive(Debug, Clone)]
pub enum StepItem {
    Event(TraceEvent),
    Outbound(MessageEnvelope),
}

/// Outcome of an adoption attempt.
#[derive(Debug, Clone)]
pub struct AdoptOutcome {
    pub conversation: String,
    pub result: Result<(), String>,
    /// The analysis report, when analysis ran at all.
    pub report: Option<AnalysisReport>,
}

#[derive(Debug, Clone)]
enum ReplyPayload {
    Document(Vec<u8>),
    NotFound(String),
}

#[derive(Debug, Clone)]
struct PendingReply {
    conversation: String,
    from: String,
    payload: ReplyPayload,
}

#[derive(Debug)]
struct Conversation {
    state: ExecState,
    /// The agent on the other end of this conversation.
    counterpart: String,
    /// Unmatched envelopes awaiting one re-match attempt on the next
    /// arming change.
    buffered: VecDeque<MessageEnvelope>,
    announced: &'static str,
}

/// A single agent and all of its running conversations.
#[derive(Debug)]
pub struct Agent {
    config: AgentConfig,
    mailbox: VecDeque<MessageEnvelope>,
    conversations: BTreeMap<String, Conversation>,
    last_reply: Option<PendingReply>,
}

impl Agent {
    pub fn new(config: AgentConfig) -> Self {
        Agent {
            config,
            mailbox: VecDeque::new(),
            conversations: BTreeMap::new(),
            last_reply: None,
        }
    }

    pub fn name(&self) -> &str {
        &self.config.name
    }

    pub fn config(&self) -> &AgentConfig {
        &self.config
    }

    /// Delivers an envelope into the mailbox; processed by later steps.
    pub fn receive(&mut self, env: MessageEnvelope) {
        self.mailbox.push_back(env);
    }

    pub fn mailbox_len(&self) -> usize {
        self.mailbox.len()
    }

    /// Running and finished conversations, in id order.
    pub fn conversations(&self) -> impl Iterator<Item = (&String, &ExecState)> {
        self.conversations.iter().map(|(id, c)| (id, &c.state))
    }

    pub fn conversation(&self, id: &str) -> Option<&ExecState> {
        self.conversations.get(id).map(|c| &c.state)
    }

    /// Builds the sys-request envelope asking `server` for a protocol.
    /// The conversation id is `<self>:<protocol>`.
    pub fn request_protocol(&self, server: &str, protocol: &str) -> (String, MessageEnvelope) {
        let conversation = format!("{}:{}", self.config.name, protocol);
        let env = MessageEnvelope {
            performative: SYS_REQUEST.to_string(),
            sender: self.config.name.clone(),
            receiver: server.to_string(),
            conversation: conversation.clone(),
            content: BootstrapMessage::RequestProtocol(protocol.to_string()).to_content(),
        };
        (conversation, env)
    }

    /// Serves a protocol request: replies with the serialized document or
    /// a not-found payload. Serving is default-open and mutates nothing.
    pub fn handle_protocol_request(&self, env: &MessageEnvelope) -> MessageEnvelope {
        let name = match serde_json::from_str::<BootstrapMessage>(&env.content) {
            Ok(BootstrapMessage::RequestProtocol(name)) => name,
            other => {
                log::warn!("{}: malformed protocol request: {other:?}", self.config.name);
                String::new()
            }
        };
        let payload = match self.config.protocols.get(&name) {
            Some(net) => {
                let doc = serialize_protocol(net);
                let value: serde_json::Value =
                    serde_json::from_slice(&doc).expect("canonical documents are valid JSON");
                log::info!("{}: serving protocol `{name}`", self.config.name);
                BootstrapMessage::ReplyProtocol(value)
            }
            None => BootstrapMessage::ProtocolNotFound(name),
        };
        MessageEnvelope {
            performative: SYS_REPLY.to_string(),
            sender: self.config.name.clone(),
            receiver: env.sender.clone(),
            conversation: env.conversation.clone(),
            content: payload.to_content(),
        }
    }

    /// Adopts the most recently received protocol reply: parse, analyze
    /// with this agent's context (author = the sender), and on acceptance
    /// start executing. Peer roles not covered by `bindings` bind to the
    /// sender.
    pub fn adopt_protocol(&mut self, bindings: BTreeMap<String, String>) -> AdoptOutcome {
        let Some(reply) = self.last_reply.take() else {
            return AdoptOutcome {
                conversation: String::new(),
                result: Err("no protocol reply pending".to_string()),
                report: None,
            };
        };
        let conversation = reply.conversation.clone();
        let doc = match reply.payload {
            ReplyPayload::NotFound(name) => {
                return AdoptOutcome {
                    conversation,
                    result: Err(format!("protocol not found: {name}")),
                    report: None,
                };
            }
            ReplyPayload::Document(doc) => doc,
        };
        let net = match parse_protocol(&doc) {
            Ok(net) => net,
            Err(e) => {
                return AdoptOutcome {
                    conversation,
                    result: Err(format!("malformed: {e}")),
                    report: None,
                };
            }
        };
        let ctx = AnalysisContext {
            manifest: self.config.registry.manifest(),
            acl: self.config.acl.clone(),
            templates: self.config.templates.clone(),
            author: reply.from.clone(),
        };
        let report = analyze(&net, &ctx);
        if !report.is_accepted() {
            let reason = match &report.verdict {
                crate::analyzer::Verdict::Rejected(r) => r.clone(),
                crate::analyzer::Verdict::Accepted => unreachable!(),
            };
            return AdoptOutcome {
                conversation,
                result: Err(format!("rejected: {reason}")),
                report: Some(report),
            };
        }
        self.spawn_conversation(net, report.clone(), conversation.clone(), reply.from, bindings)
            .map_or_else(
                |e| AdoptOutcome {
                    conversation: conversation.clone(),
                    result: Err(e),
                    report: Some(report.clone()),
                },
                |()| AdoptOutcome {
                    conversation: conversation.clone(),
                    result: Ok(()),
                    report: Some(report.clone()),
                },
            )
    }

    /// Starts one of this agent's own protocols (its side of a
    /// conversation), analyzed with itself as the author.
    pub fn start_own(
        &mut self,
        protocol: &str,
        conversation: &str,
        counterpart: &str,
        bindings: BTreeMap<String, String>,
    ) -> Result<(), String> {
        let net = self
            .config
            .protocols
            .get(protocol)
            .cloned()
            .ok_or_else(|| format!("unknown protocol `{protocol}`"))?;
        let ctx = AnalysisContext {
            manifest: self.config.registry.manifest(),
            acl: self.config.acl.clone(),
            templates: self.config.templates.clone(),
            author: self.config.name.clone(),
        };
        let report = analyze(&net, &ctx);
        if !report.is_accepted() {
            return Err(format!("own protocol `{protocol}` rejected"));
        }
        self.spawn_conversation(
            net,
            report,
            conversation.to_string(),
            counterpart.to_string(),
            bindings,
        )
    }

    fn spawn_conversation(
        &mut self,
        net: ProtocolNet,
        report: AnalysisReport,
        conversation: String,
        counterpart: String,
        mut bindings: BTreeMap<String, String>,
    ) -> Result<(), String> {
        if self.conversations.contains_key(&conversation) {
            return Err(format!("conversation `{conversation}` already active"));
        }
        for role in net.peers() {
            bindings
                .entry(role.clone())
                .or_insert_with(|| counterpart.clone());
        }
        let state = init_execution(
            net,
            report,
            self.config.registry.clone(),
            self.config.name.clone(),
            conversation.clone(),
            bindings,
        )
        .map_err(|e| e.to_string())?;
        self.conversations.insert(
            conversation,
            Conversation {
                state,
                counterpart,
                buffered: VecDeque::new(),
                announced: "running",
            },
        );
        Ok(())
    }

    /// True iff this agent's own side of `conversation` contains a
    /// usable Send of `performative` to `requester` that is
    /// graph-reachable from a currently marked or armed node.
    pub fn can_guarantee(&self, conversation: &str, performative: &str, requester: &str) -> bool {
        let Some(conv) = self.conversations.get(conversation) else {
            return false;
        };
        let state = &conv.state;
        let net = state.net();
        let starts: BTreeSet<NodeId> = state
            .marking()
            .marked_places()
            .map(|(id, _)| id.clone())
            .chain(state.armed().iter().cloned())
            .collect();
        let reachable = reachable_from(net, starts.iter());
        net.transitions().iter().any(|(id, spec)| {
            spec.effect.send().is_some_and(|send| {
                send.performative == performative
                    && state.bindings().get(&send.receiver).map(String::as_str)
                        == Some(requester)
                    && state.report().is_usable(id)
                    && reachable.contains(id)
            })
        })
    }

    /// Processes at most one inbound envelope and at most one firing,
    /// returning trace events and outbound envelopes in causal order.
    pub fn step(&mut self) -> Vec<StepItem> {
        let mut items = Vec::new();
        if let Some(env) = self.mailbox.pop_front() {
            self.handle_inbound(env, &mut items);
        }
        self.fire_phase(&mut items);
        items
    }

    fn handle_inbound(&mut self, env: MessageEnvelope, items: &mut Vec<StepItem>) {
        match env.performative.as_str() {
            SYS_REQUEST => {
                let reply = self.handle_protocol_request(&env);
                items.push(StepItem::Outbound(reply));
            }
            SYS_REPLY => match serde_json::from_str::<BootstrapMessage>(&env.content) {
                Ok(BootstrapMessage::ReplyProtocol(value)) => {
                    let doc = serde_json::to_vec(&value).expect("value reserializes");
                    self.last_reply = Some(PendingReply {
                        conversation: env.conversation,
                        from: env.sender,
                        payload: ReplyPayload::Document(doc),
                    });
                }
                Ok(BootstrapMessage::ProtocolNotFound(name)) => {
                    self.last_reply = Some(PendingReply {
                        conversation: env.conversation,
                        from: env.sender,
                        payload: ReplyPayload::NotFound(name),
                    });
                }
                other => log::warn!("{}: unexpected sys-reply payload: {other:?}", self.name()),
            },
            SYS_GUARANTEE_REQ => {
                let (performative, requester) =
                    match serde_json::from_str::<BootstrapMessage>(&env.content) {
                        Ok(BootstrapMessage::GuaranteeRequest { performative, requester }) => {
                            (performative, requester)
                        }
                        other => {
                            log::warn!("{}: malformed guarantee request: {other:?}", self.name());
                            return;
                        }
                    };
                let granted = self.can_guarantee(&env.conversation, &performative, &requester);
                let payload = if granted {
                    BootstrapMessage::GuaranteeGrant
                } else {
                    BootstrapMessage::GuaranteeRefuse
                };
                items.push(StepItem::Outbound(MessageEnvelope {
                    performative: if granted { SYS_GUARANTEE_GRANT } else { SYS_GUARANTEE_REFUSE }
                        .to_string(),
                    sender: self.config.name.clone(),
                    receiver: env.sender.clone(),
                    conversation: env.conversation.clone(),
                    content: payload.to_content(),
                }));
            }
            SYS_GUARANTEE_GRANT => {
                let agent = self.config.name.clone();
                let Some(conv) = self.conversations.get_mut(&env.conversation) else {
                    log::warn!("{agent}: grant for unknown conversation `{}`", env.conversation);
                    return;
                };
                let Some((transition, _)) = conv.state.pending_guarantee().cloned() else {
                    log::warn!("{agent}: grant with no pending guarantee");
                    return;
                };
                match conv.state.resolve_guarantee(true) {
                    Ok(_) => items.push(StepItem::Event(TraceEvent::Guarantee {
                        agent,
                        conversation: env.conversation.clone(),
                        event: "granted".to_string(),
                        transition,
                        performative: None,
                    })),
                    Err(e) => log::warn!("{agent}: {e}"),
                }
            }
            SYS_GUARANTEE_REFUSE => {
                let agent = self.config.name.clone();
                let Some(conv) = self.conversations.get_mut(&env.conversation) else {
                    log::warn!("{agent}: refusal for unknown conversation `{}`", env.conversation);
                    return;
                };
                let Some((transition, _)) = conv.state.pending_guarantee().cloned() else {
                    log::warn!("{agent}: refusal with no pending guarantee");
                    return;
                };
                match conv.state.resolve_guarantee(false) {
                    Ok(effects) => {
                        items.push(StepItem::Event(TraceEvent::Guarantee {
                            agent: agent.clone(),
                            conversation: env.conversation.clone(),
                            event: "refused".to_string(),
                            transition,
                            performative: None,
                        }));
                        let counterpart = conv.counterpart.clone();
                        for effect in effects {
                            push_effect(
                                effect,
                                &agent,
                                &env.conversation,
                                &counterpart,
                                items,
                            );
                        }
                        announce_status(conv, &agent, &env.conversation, items);
                    }
                    Err(e) => log::warn!("{agent}: {e}"),
                }
            }
            SYS_TERMINATE => {
                let agent = self.config.name.clone();
                let reason = match serde_json::from_str::<BootstrapMessage>(&env.content) {
                    Ok(BootstrapMessage::Terminate { reason }) => reason,
                    _ => "unspecified".to_string(),
                };
                let Some(conv) = self.conversations.get_mut(&env.conversation) else {
                    log::warn!("{agent}: terminate for unknown conversation `{}`", env.conversation);
                    return;
                };
                conv.state.terminate(format!("peer terminated: {reason}"));
                announce_status(conv, &agent, &env.conversation, items);
            }
            _ => self.deliver_protocol_message(env, items),
        }
    }

    fn deliver_protocol_message(&mut self, env: MessageEnvelope, items: &mut Vec<StepItem>) {
        let agent = self.config.name.clone();
        let Some(conv) = self.conversations.get_mut(&env.conversation) else {
            log::warn!(
                "{agent}: dropping message for unknown conversation `{}`",
                env.conversation
            );
            return;
        };
        let armed_before: BTreeSet<NodeId> = conv.state.armed().clone();
        let matched = conv.state.deliver_message(&env);
        let place = if matched {
            armed_before.difference(conv.state.armed()).next().cloned()
        } else {
            None
        };
        items.push(StepItem::Event(TraceEvent::Deliver {
            agent: agent.clone(),
            conversation: env.conversation.clone(),
            performative: env.performative.clone(),
            sender: env.sender.clone(),
            content: env.content.clone(),
            matched,
            place,
        }));
        if matched {
            announce_status(conv, &agent, &env.conversation, items);
        } else {
            log::info!("{agent}: buffering unmatched message for `{}`", env.conversation);
            conv.buffered.push_back(env);
        }
    }

    fn fire_phase(&mut self, items: &mut Vec<StepItem>) {
        let agent = self.config.name.clone();
        let ids: Vec<String> = self.conversations.keys().cloned().collect();
        for cid in ids {
            let conv = self.conversations.get_mut(&cid).expect("conversation exists");
            announce_status(conv, &agent, &cid, items);
            if !conv.state.status().is_running() {
                continue;
            }
            let enabled = conv.state.enabled_transitions();
            let Some(t) = enabled.first().cloned() else {
                continue;
            };
            if !conv.state.unresolved_obligations(&t).is_empty() {
                if conv.state.pending_guarantee().is_some() {
                    // Waiting for the peer's answer; nothing to do here.
                    continue;
                }
                match conv.state.request_guarantee(&t) {
                    Ok(GuaranteeOutcome::Requested(request)) => {
                        let to = request.to.unwrap_or_else(|| conv.counterpart.clone());
                        items.push(StepItem::Event(TraceEvent::Guarantee {
                            agent: agent.clone(),
                            conversation: cid.clone(),
                            event: "request".to_string(),
                            transition: request.transition,
                            performative: Some(request.performative.clone()),
                        }));
                        items.push(StepItem::Outbound(MessageEnvelope {
                            performative: SYS_GUARANTEE_REQ.to_string(),
                            sender: agent.clone(),
                            receiver: to,
                            conversation: cid.clone(),
                            content: BootstrapMessage::GuaranteeRequest {
                                performative: request.performative,
                                requester: agent.clone(),
                            }
                            .to_content(),
                        }));
                        return;
                    }
                    Ok(_) => continue,
                    Err(e) => {
                        log::warn!("{agent}: guarantee request failed: {e}");
                        continue;
                    }
                }
            }
            let armed_before: BTreeSet<NodeId> = conv.state.armed().clone();
            match conv.state.fire(&t) {
                Ok(effects) => {
                    items.push(StepItem::Event(TraceEvent::Fire {
                        agent: agent.clone(),
                        conversation: cid.clone(),
                        transition: t.clone(),
                    }));
                    let counterpart = conv.counterpart.clone();
                    for effect in effects {
                        push_effect(effect, &agent, &cid, &counterpart, items);
                    }
                    announce_status(conv, &agent, &cid, items);
                    let armed_now: BTreeSet<NodeId> = conv.state.armed().clone();
                    if armed_now.difference(&armed_before).next().is_some() {
                        retry_buffered(conv, &agent, &cid, items);
                    }
                }
                Err(e) => {
                    log::warn!("{agent}: firing `{t}` failed: {e}");
                    announce_status(conv, &agent, &cid, items);
                }
            }
            return;
        }
    }
}

/// Re-attempts buffered envelopes once after an arming change; still
/// unmatched ones are dropped with a warning.
fn retry_buffered(conv: &mut Conversation, agent: &str, cid: &str, items: &mut Vec<StepItem>) {
    let pending: Vec<MessageEnvelope> = conv.buffered.drain(..).collect();
    for env in pending {
        let armed_before: BTreeSet<NodeId> = conv.state.armed().clone();
        if conv.state.deliver_message(&env) {
            let place = armed_before.difference(conv.state.armed()).next().cloned();
            items.push(StepItem::Event(TraceEvent::Deliver {
                agent: agent.to_string(),
                conversation: cid.to_string(),
                performative: env.performative.clone(),
                sender: env.sender.clone(),
                content: env.content.clone(),
                matched: true,
                place,
            }));
            announce_status(conv, agent, cid, items);
        } else {
            log::warn!("{agent}: dropping unmatched buffered message in `{cid}`");
        }
    }
}

fn push_effect(
    effect: Effect,
    agent: &str,
    conversation: &str,
    counterpart: &str,
    items: &mut Vec<StepItem>,
) {
    match effect {
        Effect::Message(env) => items.push(StepItem::Outbound(env)),
        Effect::Terminate { to, reason } => {
            items.push(StepItem::Outbound(MessageEnvelope {
                performative: SYS_TERMINATE.to_string(),
                sender: agent.to_string(),
                receiver: to.unwrap_or_else(|| counterpart.to_string()),
                conversation: conversation.to_string(),
                content: BootstrapMessage::Terminate { reason }.to_content(),
            }));
        }
    }
}

fn announce_status(
    conv: &mut Conversation,
    agent: &str,
    conversation: &str,
    items: &mut Vec<StepItem>,
) {
    let label = conv.state.status().label();
    if label == conv.announced {
        return;
    }
    conv.announced = label;
    let reason = match conv.state.status() {
        crate::executor::ExecStatus::Terminated(r) | crate::executor::ExecStatus::Failed(r) => {
            Some(r.clone())
        }
        _ => None,
    };
    items.push(StepItem::Event(TraceEvent::Status {
        agent: agent.to_string(),
        conversation: conversation.to_string(),
        status: label.to_string(),
        reason,
    }));
}
