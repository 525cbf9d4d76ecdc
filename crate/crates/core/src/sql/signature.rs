//! Intent signatures: the four-level equivalence classes over queries.
//!
//! Level 1 keys on the table and JOIN set, level 2 adds the GROUP BY
//! columns, level 3 the multiset of SELECT items, and level 4 the full
//! condition/order/limit structure with literal values masked. Signatures
//! are prefix-closed: equality at level k implies equality at every level
//! below it.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::ast::CanonicalQuery;
use super::template::{extract_template, TemplateOptions};

pub const MAX_INTENT_LEVEL: u8 = 4;

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct IntentSignature {
    level: u8,
    components: Vec<String>,
}

impl IntentSignature {
    /// The synthetic root signature (level 0, no components).
    pub fn root() -> Self {
        IntentSignature {
            level: 0,
            components: Vec::new(),
        }
    }

    pub fn level(&self) -> u8 {
        self.level
    }

    pub fn components(&self) -> &[String] {
        &self.components
    }

    /// Truncates to a shallower level.
    pub fn prefix(&self, level: u8) -> IntentSignature {
        assert!(level <= self.level);
        IntentSignature {
            level,
            components: self.components[..level as usize].to_vec(),
        }
    }

    pub fn is_prefix_of(&self, other: &IntentSignature) -> bool {
        self.level <= other.level
            && self.components[..] == other.components[..self.level as usize]
    }

    /// Stable content-hash identifier; independent of discovery order.
    pub fn node_id(&self) -> String {
        if self.level == 0 {
            return "root".to_string();
        }
        let mut hasher = Sha256::new();
        hasher.update(b"nlq-intent-v1|");
        hasher.update(self.level.to_string().as_bytes());
        for component in &self.components {
            hasher.update(b"\x1f");
            hasher.update(component.as_bytes());
        }
        let digest = hasher.finalize();
        let mut id = String::with_capacity(16);
        for byte in digest.iter().take(8) {
            id.push_str(&format!("{byte:02x}"));
        }
        id
    }
}

/// Computes the signature of `query` at `level` (1 to 4).
///
/// The level-4 component is the masked canonical serialization of the
/// query's template, so signature equality at level 4 coincides with
/// template skeleton equality.
pub fn signature(query: &CanonicalQuery, level: u8, opts: &TemplateOptions) -> IntentSignature {
    assert!(
        (1..=MAX_INTENT_LEVEL).contains(&level),
        "intent level must be 1..=4"
    );
    let mut components = Vec::with_capacity(level as usize);

    let mut joins: Vec<String> = query
        .joins
        .iter()
        .map(|j| format!("{}:{}={}", j.table, j.left_col, j.right_col))
        .collect();
    joins.sort();
    components.push(format!("{}|{}", query.from_table, joins.join(";")));

    if level >= 2 {
        let mut groups: Vec<String> = query.group_by.iter().map(|c| c.to_string()).collect();
        groups.sort();
        components.push(groups.join(","));
    }
    if level >= 3 {
        let mut items: Vec<String> = query.select.iter().map(|i| i.to_string()).collect();
        items.sort();
        components.push(items.join(","));
    }
    if level >= 4 {
        let (template, _) = extract_template(query, opts);
        components.push(template.masked_sql());
    }

    IntentSignature { level, components }
}
