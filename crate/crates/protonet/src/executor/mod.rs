//! Token-game execution of an accepted protocol.
//!
//! Recv places are message-driven: a structural token from a predecessor
//! transition *arms* the place, and a matching message arrival supplies
//! the consumable token (a sourceless initial Recv place is armed at
//! init). Transitions fire under the usual one-token-per-input rule plus
//! guard truth, reference boundedness and the analyzer's marks; actions
//! marked `GuaranteeRequired` additionally need a granted guarantee.

mod eval;

pub use eval::{evaluate_pred, EvalError};

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::analyzer::{AnalysisReport, ConditionPattern, RegistryManifest};
use crate::model::{
    ActionContent, ActionKind, MessageEnvelope, NodeId, ProtocolNet, SendContent, TransitionEffect,
};

/// Token counts per place; places absent from the map hold zero.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Marking {
    tokens: BTreeMap<NodeId, u64>,
}

impl Marking {
    pub fn count(&self, place: &NodeId) -> u64 {
        self.tokens.get(place).copied().unwrap_or(0)
    }

    pub fn add(&mut self, place: &NodeId, n: u64) {
        *self.tokens.entry(place.clone()).or_insert(0) += n;
    }

    pub fn remove(&mut self, place: &NodeId, n: u64) {
        let entry = self.tokens.entry(place.clone()).or_insert(0);
        assert!(*entry >= n, "token underflow on {place}");
        *entry -= n;
        if *entry == 0 {
            self.tokens.remove(place);
        }
    }

    /// Places with at least one token, in id order.
    pub fn marked_places(&self) -> impl Iterator<Item = (&NodeId, u64)> {
        self.tokens.iter().map(|(id, n)| (id, *n))
    }

    pub fn total(&self) -> u64 {
        self.tokens.values().sum()
    }
}

/// The run's data-flow store: matched message contents, action results
/// and the agent-local variable cells.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct DataStore {
    pub recv_values: BTreeMap<String, String>,
    pub results: BTreeMap<String, String>,
    pub vars: BTreeMap<String, String>,
}

/// A host function: one string argument, one string result, deterministic
/// within a run.
pub type HostFunction = Arc<dyn Fn(&str) -> Result<String, String> + Send + Sync>;

/// The agent's callable functions and variable cells.
#[derive(Clone, Default)]
pub struct HostRegistry {
    functions: BTreeMap<String, HostFunction>,
    variables: BTreeMap<String, String>,
}

impl HostRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn bind_function(&mut self, name: impl Into<String>, f: HostFunction) {
        self.functions.insert(name.into(), f);
    }

    pub fn set_variable(&mut self, name: impl Into<String>, value: impl Into<String>) {
        self.variables.insert(name.into(), value.into());
    }

    pub fn function(&self, name: &str) -> Option<&HostFunction> {
        self.functions.get(name)
    }

    pub fn variables(&self) -> &BTreeMap<String, String> {
        &self.variables
    }

    /// The manifest the analyzer should be given for this registry.
    pub fn manifest(&self) -> RegistryManifest {
        RegistryManifest {
            functions: self.functions.keys().cloned().collect(),
            variables: self.variables.keys().cloned().collect(),
        }
    }
}

impl fmt::Debug for HostRegistry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("HostRegistry")
            .field("functions", &self.functions.keys().collect::<Vec<_>>())
            .field("variables", &self.variables)
            .finish()
    }
}

/// Lifecycle of one protocol run.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ExecStatus {
    Running,
    Completed,
    Terminated(String),
    Failed(String),
}

impl ExecStatus {
    pub fn is_running(&self) -> bool {
        *self == ExecStatus::Running
    }

    pub fn label(&self) -> &'static str {
        match self {
            ExecStatus::Running => "running",
            ExecStatus::Completed => "completed",
            ExecStatus::Terminated(_) => "terminated",
            ExecStatus::Failed(_) => "failed",
        }
    }
}

/// Side effect of a firing or a guarantee refusal, handed to the
/// transport layer by the caller.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Effect {
    /// Send this envelope.
    Message(MessageEnvelope),
    /// Tell the peer the protocol is over and why.
    Terminate { to: Option<String>, reason: String },
}

/// Payload for a `sys-guarantee-req`: ask `to` to promise a future
/// message with this performative.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GuaranteeRequest {
    pub transition: NodeId,
    pub performative: String,
    /// The agent being asked; `None` when the pattern's sender is "*"
    /// (the caller addresses the conversation counterpart).
    pub to: Option<String>,
}

/// Outcome of [`ExecState::request_guarantee`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum GuaranteeOutcome {
    /// A new request to transmit.
    Requested(GuaranteeRequest),
    /// A request is already outstanding; no duplicate is produced.
    Pending,
    /// Every obligation of the transition is already granted.
    AlreadyResolved,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ExecError {
    #[error("protocol was rejected by analysis")]
    RejectedProtocol,
    #[error("peer role `{0}` has no agent binding")]
    UnboundRole(String),
    #[error("transition `{0}` is not enabled")]
    NotEnabled(NodeId),
    #[error("transition `{0}` requires an unresolved guarantee")]
    GuaranteeNotResolved(NodeId),
    #[error("host function `{name}` failed: {detail}")]
    HostFunctionFailure { name: String, detail: String },
    #[error("transition `{0}` is not guarantee-gated")]
    NotGuaranteeGated(NodeId),
    #[error("no guarantee request is pending")]
    NoPendingGuarantee,
    #[error("role `{0}` cannot be resolved to an agent")]
    UnresolvableRole(String),
}

/// One running protocol owned by one agent.
#[derive(Debug, Clone)]
pub struct ExecState {
    net: ProtocolNet,
    report: AnalysisReport,
    registry: HostRegistry,
    self_name: String,
    conversation: String,
    bindings: BTreeMap<String, String>,
    marking: Marking,
    store: DataStore,
    armed: BTreeSet<NodeId>,
    status: ExecStatus,
    pending_guarantee: Option<(NodeId, ConditionPattern)>,
    granted: BTreeSet<(NodeId, ConditionPattern)>,
}

/// Starts a run of an accepted protocol.
///
/// The marking gets exactly one token on the initial place, unless the
/// initial place is a Recv place, in which case it is armed instead and
/// the marking starts empty. Variables are pre-populated from the
/// registry.
pub fn init_execution(
    net: ProtocolNet,
    report: AnalysisReport,
    registry: HostRegistry,
    self_name: impl Into<String>,
    conversation: impl Into<String>,
    peer_bindings: BTreeMap<String, String>,
) -> Result<ExecState, ExecError> {
    if !report.is_accepted() {
        return Err(ExecError::RejectedProtocol);
    }
    for role in net.peers() {
        if !peer_bindings.contains_key(role) {
            return Err(ExecError::UnboundRole(role.clone()));
        }
    }

    let mut marking = Marking::default();
    let mut armed = BTreeSet::new();
    let initial = net.initial().clone();
    if net.place(&initial).is_some_and(|l| l.is_recv()) {
        armed.insert(initial);
    } else {
        marking.add(&initial, 1);
    }

    let store = DataStore {
        vars: registry.variables().clone(),
        ..DataStore::default()
    };

    let mut state = ExecState {
        net,
        report,
        registry,
        self_name: self_name.into(),
        conversation: conversation.into(),
        bindings: peer_bindings,
        marking,
        store,
        armed,
        status: ExecStatus::Running,
        pending_guarantee: None,
        granted: BTreeSet::new(),
    };
    state.check_completion();
    Ok(state)
}

impl ExecState {
    pub fn net(&self) -> &ProtocolNet {
        &self.net
    }

    pub fn report(&self) -> &AnalysisReport {
        &self.report
    }

    pub fn marking(&self) -> &Marking {
        &self.marking
    }

    pub fn store(&self) -> &DataStore {
        &self.store
    }

    pub fn armed(&self) -> &BTreeSet<NodeId> {
        &self.armed
    }

    pub fn status(&self) -> &ExecStatus {
        &self.status
    }

    pub fn conversation(&self) -> &str {
        &self.conversation
    }

    pub fn bindings(&self) -> &BTreeMap<String, String> {
        &self.bindings
    }

    pub fn pending_guarantee(&self) -> Option<&(NodeId, ConditionPattern)> {
        self.pending_guarantee.as_ref()
    }

    fn check_completion(&mut self) {
        if self.status.is_running() && self.net.finals().iter().any(|f| self.marking.count(f) > 0)
        {
            self.status = ExecStatus::Completed;
        }
    }

    /// Marks the run terminated (peer-initiated or local decision).
    pub fn terminate(&mut self, reason: impl Into<String>) {
        if self.status.is_running() {
            self.status = ExecStatus::Terminated(reason.into());
        }
    }

    /// Attempts to match an inbound envelope against the armed Recv
    /// places. On a match (lexicographically smallest place id wins) the
    /// place gains a token, is disarmed, and the content is stored under
    /// the recv label. Returns whether anything matched.
    pub fn deliver_message(&mut self, env: &MessageEnvelope) -> bool {
        if !self.status.is_running() {
            return false;
        }
        let matched = self.armed.iter().find(|place| {
            let Some(spec) = self.net.recv_at(place) else {
                return false;
            };
            spec.performative == env.performative
                && (spec.sender == "*"
                    || self.bindings.get(&spec.sender).map(String::as_str)
                        == Some(env.sender.as_str()))
                && spec.content.matches(&env.content)
        });
        let Some(place) = matched.cloned() else {
            return false;
        };
        let label = self.net.recv_at(&place).expect("armed places are recv").label.clone();
        self.armed.remove(&place);
        self.marking.add(&place, 1);
        self.store.recv_values.insert(label, env.content.clone());
        self.check_completion();
        true
    }

    /// Transitions ready to fire, in id order: inputs all tokened, not
    /// condemned by the report, guard true, every reference bound.
    /// Guarantee gating is enforced by [`ExecState::fire`], not here.
    pub fn enabled_transitions(&self) -> Vec<NodeId> {
        if !self.status.is_running() {
            return Vec::new();
        }
        self.net
            .transitions()
            .iter()
            .filter(|(id, spec)| {
                self.report.is_usable(id)
                    && self
                        .net
                        .predecessors(id)
                        .iter()
                        .all(|p| self.marking.count(p) > 0)
                    && self.references_bound(spec)
                    && spec
                        .guard
                        .as_ref()
                        .map(|g| evaluate_pred(g, &self.store) == Ok(true))
                        .unwrap_or(true)
            })
            .map(|(id, _)| id.clone())
            .collect()
    }

    fn references_bound(&self, spec: &crate::model::TransitionSpec) -> bool {
        if let Some(guard) = &spec.guard {
            if !guard
                .recv_refs()
                .iter()
                .all(|l| self.store.recv_values.contains_key(*l))
            {
                return false;
            }
            if !guard
                .result_refs()
                .iter()
                .all(|l| self.store.results.contains_key(*l))
            {
                return false;
            }
        }
        match &spec.effect {
            TransitionEffect::Send(send) => match &send.content {
                SendContent::ResultsOf(label) => self.store.results.contains_key(label),
                _ => true,
            },
            TransitionEffect::Action(action) => match &action.content {
                ActionContent::FromRecv(label) => self.store.recv_values.contains_key(label),
                _ => true,
            },
            TransitionEffect::None => true,
        }
    }

    /// Fires `t`: consumes one token per input place, executes the
    /// effect, produces tokens on plain output places and arms Recv
    /// output places. Completion is checked afterwards.
    pub fn fire(&mut self, t: &NodeId) -> Result<Vec<Effect>, ExecError> {
        if !self.enabled_transitions().contains(t) {
            return Err(ExecError::NotEnabled(t.clone()));
        }
        let obligations = self.report.obligations_for(t);
        if obligations
            .iter()
            .any(|o| !self.granted.contains(&(t.clone(), o.pattern.clone())))
        {
            return Err(ExecError::GuaranteeNotResolved(t.clone()));
        }

        // Resolve the effect before touching tokens: a failing host
        // function leaves the marking intact and fails the run.
        let spec = self.net.transition(t).expect("enabled transition exists").clone();
        let mut effects = Vec::new();
        let mut store_result: Option<(String, String)> = None;
        let mut store_var: Option<(String, String)> = None;
        match &spec.effect {
            TransitionEffect::None => {}
            TransitionEffect::Send(send) => {
                let content = match &send.content {
                    SendContent::Omitted => String::new(),
                    SendContent::Literal(s) => s.clone(),
                    SendContent::ResultsOf(label) => {
                        self.store.results.get(label).expect("checked bound").clone()
                    }
                };
                let receiver = self.resolve_role(&send.receiver)?;
                effects.push(Effect::Message(MessageEnvelope {
                    performative: send.performative.clone(),
                    sender: self.self_name.clone(),
                    receiver,
                    conversation: self.conversation.clone(),
                    content,
                }));
            }
            TransitionEffect::Action(action) => {
                let argument = match &action.content {
                    ActionContent::Omitted => String::new(),
                    ActionContent::Literal(s) => s.clone(),
                    ActionContent::FromRecv(label) => {
                        self.store.recv_values.get(label).expect("checked bound").clone()
                    }
                };
                match action.kind {
                    ActionKind::Execute => match self.registry.function(&action.act).cloned() {
                        None => {
                            return Err(self.fail_host(&action.act, "not bound in host registry"))
                        }
                        Some(function) => match function(&argument) {
                            Ok(result) => store_result = Some((action.label.clone(), result)),
                            Err(detail) => return Err(self.fail_host(&action.act, &detail)),
                        },
                    },
                    ActionKind::Read => match self.store.vars.get(&action.act).cloned() {
                        Some(value) => store_result = Some((action.label.clone(), value)),
                        None => return Err(self.fail_host(&action.act, "unknown variable")),
                    },
                    ActionKind::Write => {
                        store_var = Some((action.act.clone(), argument));
                    }
                }
            }
        }

        if let Some((label, value)) = store_result {
            self.store.results.insert(label, value);
        }
        if let Some((name, value)) = store_var {
            self.store.vars.insert(name, value);
        }
        for input in self.net.predecessors(t).into_iter().cloned().collect::<Vec<_>>() {
            self.marking.remove(&input, 1);
        }
        for output in self.net.successors(t).into_iter().cloned().collect::<Vec<_>>() {
            if self.net.place(&output).is_some_and(|l| l.is_recv()) {
                self.armed.insert(output);
            } else {
                self.marking.add(&output, 1);
            }
        }
        self.check_completion();
        Ok(effects)
    }

    fn fail_host(&mut self, name: &str, detail: &str) -> ExecError {
        self.status = ExecStatus::Failed(format!("host function `{name}`: {detail}"));
        ExecError::HostFunctionFailure {
            name: name.to_string(),
            detail: detail.to_string(),
        }
    }

    fn resolve_role(&self, role: &str) -> Result<String, ExecError> {
        if role == "*" {
            return Err(ExecError::UnresolvableRole(role.to_string()));
        }
        self.bindings
            .get(role)
            .cloned()
            .ok_or_else(|| ExecError::UnresolvableRole(role.to_string()))
    }

    /// Produces the guarantee request for the next unresolved obligation
    /// of `t`, setting it pending. Idempotent while a request is
    /// outstanding.
    pub fn request_guarantee(&mut self, t: &NodeId) -> Result<GuaranteeOutcome, ExecError> {
        let obligations = self.report.obligations_for(t);
        if obligations.is_empty() {
            return Err(ExecError::NotGuaranteeGated(t.clone()));
        }
        if self.pending_guarantee.is_some() {
            return Ok(GuaranteeOutcome::Pending);
        }
        let next = obligations
            .into_iter()
            .find(|o| !self.granted.contains(&(t.clone(), o.pattern.clone())));
        let Some(obligation) = next else {
            return Ok(GuaranteeOutcome::AlreadyResolved);
        };
        let ConditionPattern::Recv { performative, sender } = &obligation.pattern else {
            // The analyzer only emits Recv obligations.
            return Err(ExecError::NotGuaranteeGated(t.clone()));
        };
        let to = if sender == "*" {
            None
        } else {
            Some(self.resolve_role(sender)?)
        };
        let request = GuaranteeRequest {
            transition: t.clone(),
            performative: performative.clone(),
            to,
        };
        self.pending_guarantee = Some((t.clone(), obligation.pattern.clone()));
        Ok(GuaranteeOutcome::Requested(request))
    }

    /// Applies the peer's answer to the pending guarantee request. A
    /// grant lifts the gate for that obligation permanently; a refusal
    /// terminates the run and emits a terminate effect.
    pub fn resolve_guarantee(&mut self, granted: bool) -> Result<Vec<Effect>, ExecError> {
        let (transition, pattern) = self
            .pending_guarantee
            .take()
            .ok_or(ExecError::NoPendingGuarantee)?;
        if granted {
            self.granted.insert((transition, pattern));
            return Ok(Vec::new());
        }
        let to = match &pattern {
            ConditionPattern::Recv { sender, .. } if sender != "*" => {
                self.bindings.get(sender).cloned()
            }
            _ => None,
        };
        let reason = "guarantee refused".to_string();
        self.status = ExecStatus::Terminated(reason.clone());
        Ok(vec![Effect::Terminate { to, reason }])
    }

    /// Unresolved guarantee obligations of `t`, in report order.
    pub fn unresolved_obligations(&self, t: &NodeId) -> Vec<ConditionPattern> {
        self.report
            .obligations_for(t)
            .into_iter()
            .filter(|o| !self.granted.contains(&(t.clone(), o.pattern.clone())))
            .map(|o| o.pattern.clone())
            .collect()
    }
}
