//! Protocol analysis pipeline.
//!
//! A received protocol runs through structural validation, semantic
//! checks against the agent's registry manifest, loop detection, privacy
//! checks against the access-control list and action-template
//! precondition checks. All marks are then propagated to a fixpoint and
//! the net is accepted or rejected.

mod acl;
mod checks;
mod patterns;
mod propagate;
mod templates;

pub use acl::{AccessControlList, Permission};
pub use checks::{check_privacy, check_semantics, detect_loops};
pub use patterns::{parse_templates, ActionTemplate, ConditionPattern, KindPattern};
pub use propagate::propagate_safety;
pub use templates::{check_templates, dominates, post_dominates, TemplateOutcome};

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::model::{validate_structure, NodeId, ProtocolNet};

/// Safety classification of one node.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum SafetyMark {
    /// Execution may pass through this node.
    #[serde(rename = "safe")]
    Safe,
    /// Executing this node leads to a condemned step; the reason names
    /// the originating check.
    #[serde(rename = "unsafe")]
    Unsafe(String),
    /// The node cannot be reached once unsafe nodes are avoided.
    #[serde(rename = "unusable")]
    Unusable,
    /// An action whose message-based future precondition could not be
    /// proven statically; execution must obtain a runtime guarantee.
    #[serde(rename = "guarantee-required")]
    GuaranteeRequired(ConditionPattern),
}

impl SafetyMark {
    pub fn is_condemned(&self) -> bool {
        matches!(self, SafetyMark::Unsafe(_) | SafetyMark::Unusable)
    }
}

/// The agent's ontology of callables and cells, as known to the analyzer.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegistryManifest {
    #[serde(default)]
    pub functions: BTreeSet<String>,
    #[serde(default)]
    pub variables: BTreeSet<String>,
}

/// Everything the analyzer needs besides the net itself.
#[derive(Debug, Clone, Default)]
pub struct AnalysisContext {
    pub manifest: RegistryManifest,
    pub acl: AccessControlList,
    pub templates: Vec<ActionTemplate>,
    /// The agent that sent the protocol; the principal checked by the ACL.
    pub author: String,
}

/// Accept/reject outcome of an analysis.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    #[serde(rename = "accepted")]
    Accepted,
    #[serde(rename = "rejected")]
    Rejected(String),
}

/// A guarantee the executor must obtain before firing `node`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Obligation {
    pub node: NodeId,
    pub pattern: ConditionPattern,
}

/// Per-node marks plus the verdict and surviving guarantee obligations.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnalysisReport {
    pub marks: BTreeMap<NodeId, SafetyMark>,
    pub verdict: Verdict,
    pub obligations: Vec<Obligation>,
}

impl AnalysisReport {
    pub fn is_accepted(&self) -> bool {
        self.verdict == Verdict::Accepted
    }

    pub fn mark(&self, node: &NodeId) -> &SafetyMark {
        self.marks.get(node).unwrap_or(&SafetyMark::Safe)
    }

    /// True if the executor may fire/token this node at all.
    pub fn is_usable(&self, node: &NodeId) -> bool {
        !self.mark(node).is_condemned()
    }

    pub fn obligations_for(&self, node: &NodeId) -> Vec<&Obligation> {
        self.obligations.iter().filter(|o| &o.node == node).collect()
    }

    /// Stable JSON rendering for golden files.
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report always serializes")
    }
}

/// Merges pass results into the running base: Unsafe wins over
/// GuaranteeRequired; the first mark of equal strength wins.
fn merge_marks(base: &mut BTreeMap<NodeId, SafetyMark>, new: BTreeMap<NodeId, SafetyMark>) {
    for (node, mark) in new {
        match base.get(&node) {
            None => {
                base.insert(node, mark);
            }
            Some(SafetyMark::GuaranteeRequired(_)) if matches!(mark, SafetyMark::Unsafe(_)) => {
                base.insert(node, mark);
            }
            Some(_) => {}
        }
    }
}

/// Runs the whole pipeline and produces the report.
///
/// Structural violations reject immediately; otherwise the four marking
/// passes run, their marks are merged and propagated, and the verdict is
/// derived: rejected iff the initial place is condemned, every final
/// place is condemned, or every node is unsafe.
pub fn analyze(net: &ProtocolNet, ctx: &AnalysisContext) -> AnalysisReport {
    if !validate_structure(net).is_empty() {
        return AnalysisReport {
            marks: BTreeMap::new(),
            verdict: Verdict::Rejected("structural".to_string()),
            obligations: Vec::new(),
        };
    }

    let mut base = BTreeMap::new();
    merge_marks(&mut base, check_semantics(net, &ctx.manifest));
    merge_marks(&mut base, detect_loops(net));
    merge_marks(&mut base, check_privacy(net, &ctx.acl, &ctx.author));
    let template_outcome = check_templates(net, &ctx.templates);
    merge_marks(&mut base, template_outcome.marks);

    let marks = propagate_safety(net, &base);

    let condemned = |id: &NodeId| marks.get(id).is_some_and(SafetyMark::is_condemned);
    let verdict = if condemned(net.initial()) {
        match marks.get(net.initial()) {
            Some(SafetyMark::Unusable) => Verdict::Rejected("initial unusable".to_string()),
            _ => Verdict::Rejected("initial unsafe".to_string()),
        }
    } else if net.finals().iter().all(condemned) {
        Verdict::Rejected("all finals unsafe or unusable".to_string())
    } else if net
        .node_ids()
        .all(|id| matches!(marks.get(id), Some(SafetyMark::Unsafe(_))))
    {
        Verdict::Rejected("entire net unsafe".to_string())
    } else {
        Verdict::Accepted
    };

    let obligations = template_outcome
        .obligations
        .into_iter()
        .filter(|o| matches!(marks.get(&o.node), Some(SafetyMark::GuaranteeRequired(_))))
        .collect();

    AnalysisReport { marks, verdict, obligations }
}
