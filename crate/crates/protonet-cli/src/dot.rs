//! Graphviz export of a net, for documentation.

use std::fmt::Write;

use protonet::model::{ProtocolNet, SendContent, TransitionEffect};

pub fn to_dot(net: &ProtocolNet) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "digraph \"{}\" {{", net.name());
    let _ = writeln!(out, "  rankdir=LR;");
    for (id, label) in net.places() {
        let shape = if net.finals().contains(id) {
            "doublecircle"
        } else {
            "circle"
        };
        let text = match label.recv() {
            Some(recv) => format!(
                "{id}\\nRecv {} from {}",
                recv.performative, recv.sender
            ),
            None => id.to_string(),
        };
        let style = if id == net.initial() { ", style=bold" } else { "" };
        let _ = writeln!(out, "  \"{id}\" [shape={shape}, label=\"{text}\"{style}];");
    }
    for (id, spec) in net.transitions() {
        let mut text = id.to_string();
        match &spec.effect {
            TransitionEffect::Send(send) => {
                let _ = write!(text, "\\nSend {} to {}", send.performative, send.receiver);
                if let SendContent::ResultsOf(label) = &send.content {
                    let _ = write!(text, " (results of {label})");
                }
            }
            TransitionEffect::Action(action) => {
                let _ = write!(text, "\\nAction {} {}", action.kind, action.act);
            }
            TransitionEffect::None => {}
        }
        if let Some(guard) = &spec.guard {
            let _ = write!(text, "\\nPred {}", guard.to_string().replace('"', "\\\""));
        }
        let _ = writeln!(out, "  \"{id}\" [shape=box, label=\"{text}\"];");
    }
    for (from, to) in net.arcs() {
        let _ = writeln!(out, "  \"{from}\" -> \"{to}\";");
    }
    out.push_str("}\n");
    out
}
