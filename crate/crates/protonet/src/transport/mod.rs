//! Message delivery between agents.
//!
//! The in-memory [`Bus`] keeps one FIFO per (sender, receiver) pair and
//! pumps them round-robin in lexicographic pair order, which makes
//! multi-agent interleavings deterministic. The TCP transport in
//! [`tcp`] moves the same envelopes through framed sockets behind the
//! same interface.

pub mod tcp;

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use thiserror::Error;

use crate::model::MessageEnvelope;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum TransportError {
    #[error("unknown receiver `{0}`")]
    UnknownReceiver(String),
    #[error("transport i/o: {0}")]
    Io(String),
}

/// The common surface of the in-memory bus and the TCP-backed bus.
pub trait MessageBus {
    /// Registers an agent name as a valid receiver.
    fn register(&mut self, name: &str) -> Result<(), TransportError>;
    /// Enqueues an envelope for delivery.
    fn send(&mut self, env: MessageEnvelope) -> Result<(), TransportError>;
    /// Dequeues the next envelope in round-robin pair order, if any.
    fn pump(&mut self) -> Option<(String, MessageEnvelope)>;
}

/// Deterministic in-memory bus.
#[derive(Debug, Default)]
pub struct Bus {
    agents: BTreeSet<String>,
    queues: BTreeMap<(String, String), VecDeque<MessageEnvelope>>,
    /// Last pumped pair; the next pump scans strictly after it, wrapping.
    cursor: Option<(String, String)>,
}

impl Bus {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn is_registered(&self, name: &str) -> bool {
        self.agents.contains(name)
    }

    /// Total queued envelopes.
    pub fn queued(&self) -> usize {
        self.queues.values().map(VecDeque::len).sum()
    }
}

impl MessageBus for Bus {
    fn register(&mut self, name: &str) -> Result<(), TransportError> {
        self.agents.insert(name.to_string());
        Ok(())
    }

    fn send(&mut self, env: MessageEnvelope) -> Result<(), TransportError> {
        if !self.agents.contains(&env.receiver) {
            return Err(TransportError::UnknownReceiver(env.receiver.clone()));
        }
        let key = (env.sender.clone(), env.receiver.clone());
        self.queues.entry(key).or_default().push_back(env);
        Ok(())
    }

    fn pump(&mut self) -> Option<(String, MessageEnvelope)> {
        // Pairs persist once seen so round-robin order is stable.
        let pairs: Vec<(String, String)> = self.queues.keys().cloned().collect();
        if pairs.is_empty() {
            return None;
        }
        let start = match &self.cursor {
            None => 0,
            Some(cursor) => pairs.iter().position(|p| p > cursor).unwrap_or(0),
        };
        for offset in 0..pairs.len() {
            let pair = &pairs[(start + offset) % pairs.len()];
            if let Some(env) = self.queues.get_mut(pair).and_then(VecDeque::pop_front) {
                self.cursor = Some(pair.clone());
                return Some((pair.1.clone(), env));
            }
        }
        None
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn env(sender: &str, receiver: &str, content: &str) -> MessageEnvelope {
        MessageEnvelope::new("Inform", sender, receiver, "c1", content).unwrap()
    }

    fn bus_with(names: &[&str]) -> Bus {
        let mut bus = Bus::new();
        for name in names {
            bus.register(name).unwrap();
        }
        bus
    }

    #[test]
    fn unknown_receiver_is_rejected() {
        let mut bus = bus_with(&["b"]);
        assert_eq!(
            bus.send(env("a", "nobody", "x")),
            Err(TransportError::UnknownReceiver("nobody".to_string()))
        );
    }

    #[test]
    fn per_pair_fifo_order() {
        let mut bus = bus_with(&["b"]);
        bus.send(env("a", "b", "1")).unwrap();
        bus.send(env("a", "b", "2")).unwrap();
        assert_eq!(bus.pump().unwrap().1.content, "1");
        assert_eq!(bus.pump().unwrap().1.content, "2");
        assert!(bus.pump().is_none());
    }

    #[test]
    fn round_robin_alternates_between_pairs() {
        let mut bus = bus_with(&["b", "c"]);
        bus.send(env("a", "b", "b1")).unwrap();
        bus.send(env("a", "b", "b2")).unwrap();
        bus.send(env("a", "c", "c1")).unwrap();
        bus.send(env("a", "c", "c2")).unwrap();
        let order: Vec<String> = std::iter::from_fn(|| bus.pump())
            .map(|(_, e)| e.content)
            .collect();
        assert_eq!(order, vec!["b1", "c1", "b2", "c2"]);
    }

    #[test]
    fn no_loss_no_duplication() {
        let mut bus = bus_with(&["x", "y"]);
        let mut sent = Vec::new();
        for i in 0..10 {
            let receiver = if i % 2 == 0 { "x" } else { "y" };
            let e = env("a", receiver, &i.to_string());
            sent.push(e.clone());
            bus.send(e).unwrap();
        }
        let mut pumped: Vec<MessageEnvelope> =
            std::iter::from_fn(|| bus.pump()).map(|(_, e)| e).collect();
        assert_eq!(pumped.len(), sent.len());
        pumped.sort_by(|a, b| a.content.cmp(&b.content));
        let mut sent_sorted = sent.clone();
        sent_sorted.sort_by(|a, b| a.content.cmp(&b.content));
        assert_eq!(pumped, sent_sorted);
    }

    #[test]
    fn identical_send_sequences_pump_identically() {
        let send_all = |bus: &mut Bus| {
            bus.send(env("a", "b", "1")).unwrap();
            bus.send(env("c", "b", "2")).unwrap();
            bus.send(env("a", "b", "3")).unwrap();
        };
        let mut bus1 = bus_with(&["b"]);
        let mut bus2 = bus_with(&["b"]);
        send_all(&mut bus1);
        send_all(&mut bus2);
        let seq1: Vec<_> = std::iter::from_fn(|| bus1.pump()).collect();
        let seq2: Vec<_> = std::iter::from_fn(|| bus2.pump()).collect();
        assert_eq!(seq1, seq2);
    }
}
