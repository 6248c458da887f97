//! Deterministic scheduler: drives a scenario script over a message bus,
//! producing the merged, sequence-numbered trace.
//!
//! Each quiescence round pumps at most one envelope off the bus and then
//! steps every agent once in name order; a step processes at most one
//! inbound envelope and fires at most one transition. With the bus's
//! round-robin pump this makes the whole run a pure function of the
//! scenario. Every step is cross-checked: token conservation per firing
//! and the rule that condemned transitions never fire.

use std::collections::{BTreeMap, BTreeSet};

use anyhow::{anyhow, bail, Context, Result};

use protonet::analyzer::AnalysisReport;
use protonet::executor::Marking;
use protonet::model::{MessageEnvelope, NodeId};
use protonet::runtime::{Agent, StepItem};
use protonet::trace::{TraceEvent, TraceRecord};
use protonet::transport::MessageBus;

use crate::scenario::{Directive, Scenario};

/// One adoption attempt made by the script.
#[derive(Debug, Clone)]
pub struct Adoption {
    pub agent: String,
    pub conversation: String,
    pub adopted: bool,
}

/// Everything a finished run exposes to callers and tests.
#[derive(Debug)]
pub struct RunOutcome {
    pub records: Vec<TraceRecord>,
    pub adoptions: Vec<Adoption>,
    /// agent -> conversation -> analysis report backing that run.
    pub reports: BTreeMap<String, BTreeMap<String, AnalysisReport>>,
    /// agent -> conversation -> final status label.
    pub statuses: BTreeMap<String, BTreeMap<String, String>>,
    pub script_error: Option<String>,
}

impl RunOutcome {
    /// 0 iff every adoption succeeded and ended Completed.
    pub fn exit_code(&self) -> i32 {
        if self.script_error.is_some() {
            return 1;
        }
        if self.adoptions.is_empty() {
            return 0;
        }
        let all_completed = self.adoptions.iter().all(|a| {
            a.adopted
                && self
                    .statuses
                    .get(&a.agent)
                    .and_then(|m| m.get(&a.conversation))
                    .is_some_and(|s| s == "completed")
        });
        if all_completed {
            0
        } else {
            1
        }
    }

    /// The JSONL trace, one record per line.
    pub fn trace_bytes(&self) -> Vec<u8> {
        let mut out = String::new();
        for record in &self.records {
            out.push_str(&record.to_line());
            out.push('\n');
        }
        out.into_bytes()
    }
}

/// Runs `scenario` over `bus` to completion.
pub fn run_scenario<B: MessageBus>(mut bus: B, scenario: &Scenario) -> Result<RunOutcome> {
    let mut agents: BTreeMap<String, Agent> = BTreeMap::new();
    for config in &scenario.agents {
        bus.register(&config.name)
            .map_err(|e| anyhow!("registering {}: {e}", config.name))?;
        agents.insert(config.name.clone(), Agent::new(config.clone()));
    }

    let mut runner = Runner {
        bus,
        agents,
        seq: 0,
        records: Vec::new(),
        adoptions: Vec::new(),
        script_error: None,
        max_rounds: scenario.max_rounds,
    };
    for directive in &scenario.script {
        runner.apply(directive)?;
    }

    let mut reports = BTreeMap::new();
    let mut statuses = BTreeMap::new();
    for (name, agent) in &runner.agents {
        let mut agent_reports = BTreeMap::new();
        let mut agent_statuses = BTreeMap::new();
        for (conversation, state) in agent.conversations() {
            agent_reports.insert(conversation.clone(), state.report().clone());
            agent_statuses.insert(conversation.clone(), state.status().label().to_string());
        }
        reports.insert(name.clone(), agent_reports);
        statuses.insert(name.clone(), agent_statuses);
    }
    Ok(RunOutcome {
        records: runner.records,
        adoptions: runner.adoptions,
        reports,
        statuses,
        script_error: runner.script_error,
    })
}

struct Runner<B: MessageBus> {
    bus: B,
    agents: BTreeMap<String, Agent>,
    seq: u64,
    records: Vec<TraceRecord>,
    adoptions: Vec<Adoption>,
    script_error: Option<String>,
    max_rounds: u64,
}

impl<B: MessageBus> Runner<B> {
    fn apply(&mut self, directive: &Directive) -> Result<()> {
        match directive {
            Directive::Request { agent, from, protocol } => {
                let (_conversation, env) = self
                    .agent(agent)?
                    .request_protocol(from, protocol);
                self.transmit(env)?;
            }
            Directive::Start { agent, protocol, conversation, counterpart, bindings } => {
                let result = self
                    .agent(agent)?
                    .start_own(protocol, conversation, counterpart, bindings.clone());
                match result {
                    Ok(()) => self.record(TraceEvent::Status {
                        agent: agent.clone(),
                        conversation: conversation.clone(),
                        status: "started".to_string(),
                        reason: None,
                    }),
                    Err(e) => {
                        self.record(TraceEvent::Status {
                            agent: agent.clone(),
                            conversation: conversation.clone(),
                            status: "start-failed".to_string(),
                            reason: Some(e.clone()),
                        });
                        self.script_error = Some(e);
                    }
                }
            }
            Directive::Adopt { agent, bindings } => {
                let outcome = self.agent(agent)?.adopt_protocol(bindings.clone());
                match &outcome.result {
                    Ok(()) => self.record(TraceEvent::Status {
                        agent: agent.clone(),
                        conversation: outcome.conversation.clone(),
                        status: "adopted".to_string(),
                        reason: None,
                    }),
                    Err(reason) => self.record(TraceEvent::Status {
                        agent: agent.clone(),
                        conversation: outcome.conversation.clone(),
                        status: "rejected".to_string(),
                        reason: Some(reason.clone()),
                    }),
                }
                self.adoptions.push(Adoption {
                    agent: agent.clone(),
                    conversation: outcome.conversation,
                    adopted: outcome.result.is_ok(),
                });
            }
            Directive::Inject(env) => {
                self.transmit(env.clone())?;
            }
            Directive::RunUntilQuiescent {} => self.run_until_quiescent()?,
        }
        Ok(())
    }

    fn agent(&mut self, name: &str) -> Result<&mut Agent> {
        self.agents
            .get_mut(name)
            .ok_or_else(|| anyhow!("scenario references unknown agent `{name}`"))
    }

    fn run_until_quiescent(&mut self) -> Result<()> {
        for _ in 0..self.max_rounds {
            let mut progressed = false;
            if let Some((receiver, env)) = self.bus.pump() {
                self.agents
                    .get_mut(&receiver)
                    .ok_or_else(|| anyhow!("envelope for unregistered agent `{receiver}`"))?
                    .receive(env);
                progressed = true;
            }
            let names: Vec<String> = self.agents.keys().cloned().collect();
            for name in &names {
                let agent = self.agents.get_mut(name).expect("agent exists");
                let before = snapshot(agent);
                let items = agent.step();
                if !items.is_empty() {
                    progressed = true;
                }
                let agent = self.agents.get(name).expect("agent exists");
                verify_step(agent, &before, &items)
                    .map_err(|e| anyhow!("invariant breach in `{name}`: {e}"))?;
                for item in items {
                    match item {
                        StepItem::Event(event) => self.record(event),
                        StepItem::Outbound(env) => self.transmit(env)?,
                    }
                }
            }
            if !progressed {
                return Ok(());
            }
        }
        bail!("scenario did not quiesce within {} rounds", self.max_rounds)
    }

    fn transmit(&mut self, env: MessageEnvelope) -> Result<()> {
        self.record(TraceEvent::Emit {
            agent: env.sender.clone(),
            conversation: env.conversation.clone(),
            performative: env.performative.clone(),
            receiver: env.receiver.clone(),
            content: env.content.clone(),
        });
        self.bus
            .send(env)
            .context("bus rejected an envelope")?;
        Ok(())
    }

    fn record(&mut self, event: TraceEvent) {
        let record = event.into_record(self.seq);
        self.seq += 1;
        self.records.push(record);
    }
}

type ConversationShape = (Marking, BTreeSet<NodeId>);

fn snapshot(agent: &Agent) -> BTreeMap<String, ConversationShape> {
    agent
        .conversations()
        .map(|(id, state)| (id.clone(), (state.marking().clone(), state.armed().clone())))
        .collect()
}

/// Replays the step's events over the pre-step snapshot and checks the
/// result against the live state: one token leaves every input place and
/// one enters every non-Recv output place per firing, matched deliveries
/// token exactly their place, and no condemned transition ever fires.
fn verify_step(
    agent: &Agent,
    before: &BTreeMap<String, ConversationShape>,
    items: &[StepItem],
) -> Result<(), String> {
    let mut predicted: BTreeMap<String, ConversationShape> = before.clone();
    for item in items {
        let StepItem::Event(event) = item else {
            continue;
        };
        match event {
            TraceEvent::Deliver { conversation, matched, place, .. } => {
                if !matched {
                    continue;
                }
                let place = place
                    .clone()
                    .ok_or("matched delivery without a place")?;
                let (marking, armed) = predicted
                    .get_mut(conversation)
                    .ok_or("delivery into unknown conversation")?;
                if !armed.remove(&place) {
                    return Err(format!("delivery tokened unarmed place {place}"));
                }
                marking.add(&place, 1);
            }
            TraceEvent::Fire { conversation, transition, .. } => {
                let state = agent
                    .conversation(conversation)
                    .ok_or("fired in unknown conversation")?;
                if !state.report().is_usable(transition) {
                    return Err(format!("condemned transition {transition} fired"));
                }
                let net = state.net();
                let (marking, armed) = predicted
                    .get_mut(conversation)
                    .ok_or("fire in unknown conversation")?;
                for input in net.predecessors(transition) {
                    if marking.count(input) == 0 {
                        return Err(format!("fired {transition} without a token on {input}"));
                    }
                    marking.remove(input, 1);
                }
                for output in net.successors(transition) {
                    if net.place(output).is_some_and(|l| l.is_recv()) {
                        armed.insert(output.clone());
                    } else {
                        marking.add(output, 1);
                    }
                }
            }
            _ => {}
        }
    }
    for (conversation, (marking, armed)) in &predicted {
        let state = agent
            .conversation(conversation)
            .ok_or("conversation vanished")?;
        if state.marking() != marking {
            return Err(format!(
                "marking mismatch in `{conversation}`: predicted {marking:?}, actual {:?}",
                state.marking()
            ));
        }
        if state.armed() != armed {
            return Err(format!("armed-set mismatch in `{conversation}`"));
        }
    }
    Ok(())
}
