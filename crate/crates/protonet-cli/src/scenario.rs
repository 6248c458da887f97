//! Scenario and agent config files.
//!
//! A scenario lists agent config files and a directive script. Paths in
//! a scenario are relative to the scenario file; protocol paths in an
//! agent config are relative to that config file.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, Context, Result};
use serde::{Deserialize, Serialize};

use protonet::analyzer::{AccessControlList, ActionTemplate};
use protonet::executor::HostRegistry;
use protonet::model::MessageEnvelope;
use protonet::runtime::AgentConfig;

use crate::stubs;

/// One agent config file (`.agent.json`).
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AgentConfigFile {
    pub name: String,
    /// protocol name -> path of its `.protocol.json`, relative to this file.
    #[serde(default)]
    pub protocols: BTreeMap<String, String>,
    #[serde(default)]
    pub acl: AccessControlList,
    #[serde(default)]
    pub templates: Vec<ActionTemplate>,
    /// function name -> stub spec (see the stub library).
    #[serde(default)]
    pub functions: BTreeMap<String, String>,
    /// variable name -> initial value.
    #[serde(default)]
    pub vars: BTreeMap<String, String>,
}

/// One scripted step of a scenario.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Directive {
    /// `agent` asks `from` for `protocol` over the bootstrap protocol.
    Request {
        agent: String,
        from: String,
        protocol: String,
    },
    /// `agent` starts its own side of a conversation.
    Start {
        agent: String,
        protocol: String,
        conversation: String,
        counterpart: String,
        #[serde(default)]
        bindings: BTreeMap<String, String>,
    },
    /// `agent` adopts the protocol document it last received.
    Adopt {
        agent: String,
        #[serde(default)]
        bindings: BTreeMap<String, String>,
    },
    /// Push an envelope onto the bus as-is.
    Inject(MessageEnvelope),
    /// Pump and step until nothing moves.
    RunUntilQuiescent {},
}

/// A scenario file (`.scenario.json`).
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    /// Agent config file paths, relative to the scenario file.
    pub agents: Vec<String>,
    pub script: Vec<Directive>,
    /// Safety valve for run-until-quiescent (default 10000 rounds).
    #[serde(default)]
    pub max_rounds: Option<u64>,
}

/// A loaded scenario: fully built agent configs plus the script.
#[derive(Debug)]
pub struct Scenario {
    pub agents: Vec<AgentConfig>,
    pub script: Vec<Directive>,
    pub max_rounds: u64,
}

pub fn load_scenario(path: &Path) -> Result<Scenario> {
    let text = std::fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    let file: ScenarioFile = serde_json::from_slice(&text)
        .with_context(|| format!("parsing scenario {}", path.display()))?;
    let base = path.parent().unwrap_or(Path::new("."));

    let mut agents = Vec::new();
    let mut seen = std::collections::BTreeSet::new();
    for agent_path in &file.agents {
        let full: PathBuf = base.join(agent_path);
        let config = load_agent_config(&full)?;
        if !seen.insert(config.name.clone()) {
            return Err(anyhow!("duplicate agent name `{}`", config.name));
        }
        agents.push(config);
    }
    Ok(Scenario {
        agents,
        script: file.script,
        max_rounds: file.max_rounds.unwrap_or(10_000),
    })
}

pub fn load_agent_config(path: &Path) -> Result<AgentConfig> {
    let text = std::fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    let file: AgentConfigFile = serde_json::from_slice(&text)
        .with_context(|| format!("parsing agent config {}", path.display()))?;
    for template in &file.templates {
        template
            .check()
            .map_err(|e| anyhow!("{}: {e}", path.display()))?;
    }
    let base = path.parent().unwrap_or(Path::new("."));

    let mut protocols = BTreeMap::new();
    for (name, rel) in &file.protocols {
        let full = base.join(rel);
        let doc = std::fs::read(&full).with_context(|| format!("reading {}", full.display()))?;
        let net = protonet::model::parse_protocol(&doc)
            .map_err(|e| anyhow!("{}: {e}", full.display()))?;
        protocols.insert(name.clone(), net);
    }

    let mut registry = HostRegistry::new();
    for (name, spec) in &file.functions {
        let function = stubs::resolve(spec).map_err(|e| anyhow!("{}: {e}", path.display()))?;
        registry.bind_function(name.clone(), function);
    }
    for (name, value) in &file.vars {
        registry.set_variable(name.clone(), value.clone());
    }

    Ok(AgentConfig {
        name: file.name,
        protocols,
        acl: file.acl,
        templates: file.templates,
        registry,
    })
}
