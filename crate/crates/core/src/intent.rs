//! The four-level intent tree.
//!
//! Queries group by table and JOIN set at level 1, GROUP BY columns at
//! level 2, the SELECT item multiset at level 3, and the full
//! values-masked structure at level 4. Level-4 leaves carry the query
//! template and the training examples they bucket; node ids are content
//! hashes of signatures, so discovery output is independent of example
//! order.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::sql::{
    extract_template, signature, CanonicalQuery, IntentSignature, TemplateOptions, TemplateQuery,
    MAX_INTENT_LEVEL,
};

pub const ROOT_ID: &str = "root";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntentNode {
    pub id: String,
    pub level: u8,
    pub signature: IntentSignature,
    /// Child node ids, sorted.
    pub children: Vec<String>,
    /// Level-4 leaves only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub template: Option<TemplateQuery>,
    /// Level-4 leaves only; sorted training example ids.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub example_ids: Vec<usize>,
    /// Training examples in this subtree.
    pub support: usize,
    /// Leaf flag: the majority of member examples came from API call
    /// targets, so answers render back through the API form.
    #[serde(default)]
    pub api_origin: bool,
}

impl IntentNode {
    pub fn is_leaf(&self) -> bool {
        self.level == MAX_INTENT_LEVEL
    }
}

/// Flat node table keyed by id, rooted at the synthetic level-0 node.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntentTree {
    pub nodes: BTreeMap<String, IntentNode>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DiscoverError {
    #[error("no examples to discover intents from")]
    EmptyCorpus,
    #[error(
        "template conflict for example {example_id}: equal level-4 signatures with different skeletons"
    )]
    TemplateConflict { example_id: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum DiscoverWarning {
    /// A leaf holds a mix of SQL-origin and API-origin examples.
    MixedOriginLeaf { leaf_id: String },
}

impl std::fmt::Display for DiscoverWarning {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            DiscoverWarning::MixedOriginLeaf { leaf_id } => {
                write!(f, "leaf {leaf_id} mixes SQL and API training targets")
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct DiscoverExample {
    pub example_id: usize,
    pub query: CanonicalQuery,
    pub api_origin: bool,
}

/// Builds the intent tree. Every query contributes one node per level,
/// nodes are created on first sight, and each level-4 leaf's template is
/// the extracted template of its members (asserted structurally equal
/// across members; a mismatch would mean a signature bug).
pub fn discover(
    examples: &[DiscoverExample],
    opts: &TemplateOptions,
) -> Result<(IntentTree, Vec<DiscoverWarning>), DiscoverError> {
    if examples.is_empty() {
        return Err(DiscoverError::EmptyCorpus);
    }

    let mut nodes: BTreeMap<String, IntentNode> = BTreeMap::new();
    nodes.insert(
        ROOT_ID.to_string(),
        IntentNode {
            id: ROOT_ID.to_string(),
            level: 0,
            signature: IntentSignature::root(),
            children: Vec::new(),
            template: None,
            example_ids: Vec::new(),
            support: 0,
            api_origin: false,
        },
    );
    // leaf id -> api-origin member count, for the majority flag.
    let mut api_counts: BTreeMap<String, usize> = BTreeMap::new();

    for example in examples {
        let sig4 = signature(&example.query, MAX_INTENT_LEVEL, opts);
        let mut parent_id = ROOT_ID.to_string();
        for level in 1..=MAX_INTENT_LEVEL {
            let sig = sig4.prefix(level);
            let id = sig.node_id();
            let node = nodes.entry(id.clone()).or_insert_with(|| IntentNode {
                id: id.clone(),
                level,
                signature: sig,
                children: Vec::new(),
                template: None,
                example_ids: Vec::new(),
                support: 0,
                api_origin: false,
            });
            node.support += 1;
            if level == MAX_INTENT_LEVEL {
                let (template, _) = extract_template(&example.query, opts);
                match &node.template {
                    None => node.template = Some(template),
                    Some(existing) => {
                        debug_assert_eq!(
                            existing.skeleton, template.skeleton,
                            "level-4 signature equality must imply skeleton equality"
                        );
                        if existing.skeleton != template.skeleton {
                            return Err(DiscoverError::TemplateConflict {
                                example_id: example.example_id,
                            });
                        }
                    }
                }
                node.example_ids.push(example.example_id);
                if example.api_origin {
                    *api_counts.entry(id.clone()).or_insert(0) += 1;
                }
            }
            let parent = nodes.get_mut(&parent_id).expect("parent exists");
            if !parent.children.contains(&id) {
                parent.children.push(id.clone());
            }
            parent_id = id;
        }
        nodes.get_mut(ROOT_ID).expect("root").support += 1;
    }

    let mut warnings = Vec::new();
    for node in nodes.values_mut() {
        node.children.sort();
        node.example_ids.sort_unstable();
        node.example_ids.dedup();
        if node.is_leaf() {
            let api = api_counts.get(&node.id).copied().unwrap_or(0);
            let total = node.example_ids.len();
            node.api_origin = api * 2 > total;
            if api > 0 && api < total {
                warnings.push(DiscoverWarning::MixedOriginLeaf {
                    leaf_id: node.id.clone(),
                });
            }
        }
    }

    Ok((IntentTree { nodes }, warnings))
}

impl IntentTree {
    pub fn root(&self) -> &IntentNode {
        self.nodes.get(ROOT_ID).expect("tree has a root")
    }

    pub fn node(&self, id: &str) -> Option<&IntentNode> {
        self.nodes.get(id)
    }

    /// Node ids on the path from level 1 down to `id`, inclusive. Empty
    /// for the root itself.
    pub fn path_to(&self, id: &str) -> Vec<String> {
        match self.nodes.get(id) {
            None => Vec::new(),
            Some(node) => (1..=node.level)
                .map(|level| node.signature.prefix(level).node_id())
                .collect(),
        }
    }

    /// All level-4 leaves under `id` (including `id` itself when a leaf),
    /// in sorted id order.
    pub fn descendant_leaves(&self, id: &str) -> Vec<&IntentNode> {
        let mut leaves = Vec::new();
        let mut stack = vec![id.to_string()];
        while let Some(current) = stack.pop() {
            if let Some(node) = self.nodes.get(&current) {
                if node.is_leaf() {
                    leaves.push(node);
                } else {
                    stack.extend(node.children.iter().cloned());
                }
            }
        }
        leaves.sort_by(|a, b| a.id.cmp(&b.id));
        leaves
    }

    pub fn leaves(&self) -> Vec<&IntentNode> {
        self.descendant_leaves(ROOT_ID)
    }

    /// Walks signature levels 1 to 4 and returns the deepest node whose
    /// signature matches the query, or `None` when even the level-1
    /// signature is unseen.
    pub fn classify_query(
        &self,
        query: &CanonicalQuery,
        opts: &TemplateOptions,
    ) -> Option<&IntentNode> {
        let sig4 = signature(query, MAX_INTENT_LEVEL, opts);
        let mut deepest = None;
        for level in 1..=MAX_INTENT_LEVEL {
            match self.nodes.get(&sig4.prefix(level).node_id()) {
                Some(node) => deepest = Some(node),
                None => break,
            }
        }
        deepest
    }

    /// Checks every structural invariant; an empty list means the tree is
    /// well formed. Violations are data, not errors, so freshly
    /// deserialized artifacts can be audited.
    pub fn validate(&self) -> Vec<Violation> {
        let mut violations = Vec::new();

        let root = match self.nodes.get(ROOT_ID) {
            Some(root) => root,
            None => {
                violations.push(Violation::MissingRoot);
                return violations;
            }
        };

        // Reachability walk.
        let mut reachable: BTreeSet<String> = BTreeSet::new();
        reachable.insert(ROOT_ID.to_string());
        let mut stack = vec![root];
        while let Some(node) = stack.pop() {
            for child_id in &node.children {
                match self.nodes.get(child_id) {
                    None => violations.push(Violation::DanglingChild {
                        node: node.id.clone(),
                        child: child_id.clone(),
                    }),
                    Some(child) => {
                        if child.level != node.level + 1 {
                            violations.push(Violation::BadChildLevel {
                                node: node.id.clone(),
                                child: child_id.clone(),
                            });
                        }
                        if !node.signature.is_prefix_of(&child.signature) {
                            violations.push(Violation::SignaturePrefixMismatch {
                                node: node.id.clone(),
                                child: child_id.clone(),
                            });
                        }
                        if reachable.insert(child_id.clone()) {
                            stack.push(child);
                        }
                    }
                }
            }
        }
        for id in self.nodes.keys() {
            if !reachable.contains(id) {
                violations.push(Violation::Unreachable { node: id.clone() });
            }
        }

        let mut seen_examples: BTreeMap<usize, String> = BTreeMap::new();
        for node in self.nodes.values() {
            if node.id != node.signature.node_id() && node.id != ROOT_ID {
                violations.push(Violation::IdMismatch {
                    node: node.id.clone(),
                });
            }
            if node.is_leaf() {
                if node.template.is_none() {
                    violations.push(Violation::MissingTemplate {
                        node: node.id.clone(),
                    });
                }
                if node.example_ids.is_empty() {
                    violations.push(Violation::EmptyLeaf {
                        node: node.id.clone(),
                    });
                }
                if node.support != node.example_ids.len() {
                    violations.push(Violation::SupportMismatch {
                        node: node.id.clone(),
                    });
                }
                for example in &node.example_ids {
                    if let Some(other) = seen_examples.insert(*example, node.id.clone()) {
                        violations.push(Violation::DuplicateExample {
                            example_id: *example,
                            first: other,
                            second: node.id.clone(),
                        });
                    }
                }
            } else {
                if node.template.is_some() || !node.example_ids.is_empty() {
                    violations.push(Violation::InteriorLeafData {
                        node: node.id.clone(),
                    });
                }
                if node.children.is_empty() {
                    violations.push(Violation::ChildlessInterior {
                        node: node.id.clone(),
                    });
                } else {
                    let child_sum: usize = node
                        .children
                        .iter()
                        .filter_map(|id| self.nodes.get(id))
                        .map(|c| c.support)
                        .sum();
                    if child_sum != node.support {
                        violations.push(Violation::SupportMismatch {
                            node: node.id.clone(),
                        });
                    }
                }
            }
        }

        violations
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Violation {
    MissingRoot,
    Unreachable { node: String },
    DanglingChild { node: String, child: String },
    BadChildLevel { node: String, child: String },
    SignaturePrefixMismatch { node: String, child: String },
    IdMismatch { node: String },
    MissingTemplate { node: String },
    EmptyLeaf { node: String },
    SupportMismatch { node: String },
    DuplicateExample { example_id: usize, first: String, second: String },
    InteriorLeafData { node: String },
    ChildlessInterior { node: String },
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Violation::MissingRoot => write!(f, "tree has no root node"),
            Violation::Unreachable { node } => write!(f, "node {node} unreachable from root"),
            Violation::DanglingChild { node, child } => {
                write!(f, "node {node} references missing child {child}")
            }
            Violation::BadChildLevel { node, child } => {
                write!(f, "child {child} of {node} is not one level deeper")
            }
            Violation::SignaturePrefixMismatch { node, child } => {
                write!(f, "child {child} does not extend the signature of {node}")
            }
            Violation::IdMismatch { node } => {
                write!(f, "node {node} id does not hash its signature")
            }
            Violation::MissingTemplate { node } => write!(f, "leaf {node} has no template"),
            Violation::EmptyLeaf { node } => write!(f, "leaf {node} has no examples"),
            Violation::SupportMismatch { node } => {
                write!(f, "support count of {node} disagrees with its contents")
            }
            Violation::DuplicateExample {
                example_id,
                first,
                second,
            } => write!(
                f,
                "example {example_id} appears in leaves {first} and {second}"
            ),
            Violation::InteriorLeafData { node } => {
                write!(f, "interior node {node} carries leaf data")
            }
            Violation::ChildlessInterior { node } => {
                write!(f, "interior node {node} has no children")
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sql::parse_sql;

    fn example(id: usize, sql: &str) -> DiscoverExample {
        DiscoverExample {
            example_id: id,
            query: parse_sql(sql).unwrap(),
            api_origin: false,
        }
    }

    fn opts() -> TemplateOptions {
        TemplateOptions::default()
    }

    #[test]
    fn value_variants_share_one_leaf() {
        let (tree, warnings) = discover(
            &[
                example(1, "SELECT t FROM temperature WHERE city='Seattle'"),
                example(2, "SELECT t FROM temperature WHERE city='Portland'"),
            ],
            &opts(),
        )
        .unwrap();
        assert!(warnings.is_empty());
        // One node per level plus the root.
        assert_eq!(tree.nodes.len(), 5);
        let leaves = tree.leaves();
        assert_eq!(leaves.len(), 1);
        assert_eq!(leaves[0].example_ids, vec![1, 2]);
        assert_eq!(leaves[0].support, 2);
    }

    #[test]
    fn singleton_gives_a_four_node_chain() {
        let (tree, _) = discover(&[example(9, "SELECT a FROM t WHERE b = 1")], &opts()).unwrap();
        assert_eq!(tree.nodes.len(), 5);
        let mut node = tree.root();
        for expected_level in 1..=4 {
            assert_eq!(node.children.len(), 1);
            node = tree.node(&node.children[0]).unwrap();
            assert_eq!(node.level, expected_level);
        }
        assert!(node.is_leaf());
        assert_eq!(node.example_ids, vec![9]);
    }

    #[test]
    fn empty_corpus_is_an_error() {
        assert_eq!(discover(&[], &opts()), Err(DiscoverError::EmptyCorpus));
    }

    #[test]
    fn discovery_is_order_independent() {
        let examples = vec![
            example(1, "SELECT t FROM temperature WHERE city='Seattle'"),
            example(2, "SELECT name FROM customers WHERE city = 'Denver'"),
            example(3, "SELECT t FROM temperature WHERE city='Boston'"),
            example(4, "SELECT COUNT(*) FROM orders WHERE status = 'open'"),
            example(5, "SELECT name FROM customers WHERE signup = '2020-01-01'"),
        ];
        let (forward, _) = discover(&examples, &opts()).unwrap();
        let mut reversed = examples.clone();
        reversed.reverse();
        let (backward, _) = discover(&reversed, &opts()).unwrap();
        assert_eq!(forward, backward);
        assert_eq!(
            serde_json::to_string(&forward).unwrap(),
            serde_json::to_string(&backward).unwrap()
        );
    }

    #[test]
    fn classify_returns_own_leaf_for_training_queries() {
        let q = "SELECT t FROM temperature WHERE city='Seattle'";
        let (tree, _) = discover(&[example(1, q)], &opts()).unwrap();
        let node = tree.classify_query(&parse_sql(q).unwrap(), &opts()).unwrap();
        assert!(node.is_leaf());
        assert_eq!(node.example_ids, vec![1]);
    }

    #[test]
    fn classify_unseen_table_returns_none() {
        let (tree, _) = discover(
            &[example(1, "SELECT t FROM temperature WHERE city='Seattle'")],
            &opts(),
        )
        .unwrap();
        let unseen = parse_sql("SELECT x FROM warehouse").unwrap();
        assert!(tree.classify_query(&unseen, &opts()).is_none());
    }

    #[test]
    fn classify_matches_leaf_through_new_literals() {
        let (tree, _) = discover(
            &[example(1, "SELECT t FROM temperature WHERE city='Seattle'")],
            &opts(),
        )
        .unwrap();
        let perturbed = parse_sql("SELECT t FROM temperature WHERE city='Anchorage'").unwrap();
        let node = tree.classify_query(&perturbed, &opts()).unwrap();
        assert!(node.is_leaf());
        assert_eq!(node.example_ids, vec![1]);
    }

    #[test]
    fn classify_partial_match_stops_at_deepest_seen_level() {
        let (tree, _) = discover(
            &[example(1, "SELECT a FROM t WHERE b = 1 GROUP BY a")],
            &opts(),
        )
        .unwrap();
        // Same table, different grouping: level 1 matches, level 2 does not.
        let cousin = parse_sql("SELECT a FROM t WHERE b = 1 GROUP BY c").unwrap();
        let node = tree.classify_query(&cousin, &opts()).unwrap();
        assert_eq!(node.level, 1);
    }

    #[test]
    fn fresh_trees_validate_clean() {
        let (tree, _) = discover(
            &[
                example(1, "SELECT t FROM temperature WHERE city='Seattle'"),
                example(2, "SELECT COUNT(*) FROM orders WHERE status='open'"),
                example(3, "SELECT t FROM temperature WHERE city='Portland'"),
            ],
            &opts(),
        )
        .unwrap();
        assert_eq!(tree.validate(), Vec::new());
    }

    #[test]
    fn seeded_support_fault_is_detected() {
        let (mut tree, _) = discover(
            &[example(1, "SELECT t FROM temperature WHERE city='Seattle'")],
            &opts(),
        )
        .unwrap();
        let leaf_id = tree.leaves()[0].id.clone();
        tree.nodes.get_mut(&leaf_id).unwrap().support += 1;
        let violations = tree.validate();
        assert!(violations
            .iter()
            .any(|v| *v == Violation::SupportMismatch { node: leaf_id.clone() }));
    }

    #[test]
    fn seeded_orphan_is_unreachable() {
        let (mut tree, _) = discover(
            &[example(1, "SELECT t FROM temperature WHERE city='Seattle'")],
            &opts(),
        )
        .unwrap();
        let mut orphan = tree.leaves()[0].clone();
        orphan.id = "deadbeefdeadbeef".to_string();
        tree.nodes.insert(orphan.id.clone(), orphan);
        let violations = tree.validate();
        assert!(violations.contains(&Violation::Unreachable {
            node: "deadbeefdeadbeef".into()
        }));
    }

    #[test]
    fn path_to_walks_levels_in_order() {
        let (tree, _) = discover(
            &[example(1, "SELECT t FROM temperature WHERE city='Seattle'")],
            &opts(),
        )
        .unwrap();
        let leaf = tree.leaves()[0];
        let path = tree.path_to(&leaf.id);
        assert_eq!(path.len(), 4);
        assert_eq!(path[3], leaf.id);
        for (i, id) in path.iter().enumerate() {
            assert_eq!(tree.node(id).unwrap().level as usize, i + 1);
        }
    }

    #[test]
    fn api_origin_majority_sets_leaf_flag() {
        let sql = "SELECT t FROM temperature WHERE city='Seattle'";
        let make = |id: usize, api: bool| DiscoverExample {
            example_id: id,
            query: parse_sql(sql).unwrap(),
            api_origin: api,
        };
        let (tree, warnings) =
            discover(&[make(1, true), make(2, true), make(3, false)], &opts()).unwrap();
        let leaf = tree.leaves()[0];
        assert!(leaf.api_origin);
        assert_eq!(warnings.len(), 1);

        // Tie breaks toward SQL.
        let (tree, _) = discover(&[make(1, true), make(2, false)], &opts()).unwrap();
        assert!(!tree.leaves()[0].api_origin);
    }
}
