//! Access-control lists guarding an agent's functions and variables.
//!
//! Absence of an entry means no permission: everything is denied unless a
//! grant exists for the requesting principal or for `"*"`.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::model::ActionKind;

/// One kind of access to a resource.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Permission {
    Read,
    Write,
    Execute,
}

impl From<ActionKind> for Permission {
    fn from(kind: ActionKind) -> Self {
        match kind {
            ActionKind::Execute => Permission::Execute,
            ActionKind::Read => Permission::Read,
            ActionKind::Write => Permission::Write,
        }
    }
}

/// Principal (agent name or `"*"`) -> resource name -> granted permissions.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct AccessControlList {
    entries: BTreeMap<String, BTreeMap<String, BTreeSet<Permission>>>,
}

impl AccessControlList {
    pub fn new() -> Self {
        Self::default()
    }

    /// Grants `permission` on `resource` to `principal` ("*" for anyone).
    pub fn grant(
        &mut self,
        principal: impl Into<String>,
        resource: impl Into<String>,
        permission: Permission,
    ) {
        self.entries
            .entry(principal.into())
            .or_default()
            .entry(resource.into())
            .or_default()
            .insert(permission);
    }

    /// Default deny: true only if an explicit grant exists for the
    /// principal or for the wildcard principal.
    pub fn allows(&self, principal: &str, resource: &str, permission: Permission) -> bool {
        [principal, "*"].iter().any(|p| {
            self.entries
                .get(*p)
                .and_then(|resources| resources.get(resource))
                .is_some_and(|perms| perms.contains(&permission))
        })
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}
