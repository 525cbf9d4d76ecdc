//! Query generation: turn a prediction into a concrete query with
//! level-appropriate strategies, or signal fallback.
//!
//! Level 4 substitutes slot values into the leaf template. Level 3 keeps
//! the structural skeleton and includes exactly the conditions whose slot
//! values transformed successfully, pooling condition templates across the
//! node's leaves. Levels 1 and 2 rank the node's level-3 descendants by
//! slot coverage and lexical overlap, then reuse the level-3 strategy.
//! Anything below the confidence floor becomes an explicit fallback
//! outcome for a downstream generative model with a human in the loop.

use std::collections::BTreeMap;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::artifact::ModelArtifact;
use crate::classifier::{Prediction, SlotFill};
use crate::intent::IntentNode;
use crate::slots::transform_value;
use crate::sql::{
    instantiate, render_condition, CanonicalQuery, Condition, ConditionClause, Literal, Query,
    SlotKey,
};
use crate::text;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FallbackReason {
    LowConfidence,
    UnmappableValue,
    NoViableCandidate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Generated {
    pub query: CanonicalQuery,
    /// The level-4 leaf whose structure produced the query.
    pub leaf_id: String,
    pub level_used: u8,
    pub confidence: f64,
    /// Set when level-3 generation had a nonempty condition pool but no
    /// includable condition; the query went out unconditioned.
    pub unconditioned: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum GenerationOutcome {
    Generated(Generated),
    NeedsFallback {
        reason: FallbackReason,
        best_guess: Option<CanonicalQuery>,
    },
}

impl GenerationOutcome {
    pub fn is_generated(&self) -> bool {
        matches!(self, GenerationOutcome::Generated(_))
    }
}

/// Transformed slot values, keyed by slot. Values that failed to
/// transform are tracked so callers can distinguish unmappable values
/// from merely absent fills.
struct Bindings {
    values: BTreeMap<SlotKey, Literal>,
    failed: Vec<SlotKey>,
}

fn transform_fills(artifact: &ModelArtifact, fills: &[SlotFill], clock: NaiveDate) -> Bindings {
    let mut values = BTreeMap::new();
    let mut failed = Vec::new();
    for fill in fills {
        match transform_value(
            &fill.raw_text,
            &fill.slot_key,
            &artifact.slot_catalog,
            clock,
            &artifact.config.fuzzy,
        ) {
            Ok(literal) => {
                values.insert(fill.slot_key.clone(), literal);
            }
            Err(_) => failed.push(fill.slot_key.clone()),
        }
    }
    Bindings { values, failed }
}

/// Dispatches on the prediction level. All slot raw spans pass through
/// the value transformation pipeline with the supplied clock; transform
/// failures degrade rather than abort.
pub fn generate(
    artifact: &ModelArtifact,
    prediction: &Prediction,
    question: &str,
    clock: NaiveDate,
) -> GenerationOutcome {
    let bindings = transform_fills(artifact, &prediction.slot_fills, clock);

    match prediction.level {
        4 => {
            let leaf_id = prediction.intent_path.last().expect("level 4 has a path");
            generate_level4(artifact, leaf_id, &bindings, prediction.confidence)
        }
        3 => {
            let node_id = prediction.intent_path.last().expect("level 3 has a path");
            generate_level3(artifact, node_id, &bindings, prediction.confidence)
        }
        1 | 2 => {
            let node_id = prediction.intent_path.last().expect("shallow has a path");
            generate_shallow(artifact, node_id, &bindings, question, prediction)
        }
        _ => {
            let best_guess = prediction.best_leaf.as_ref().and_then(|(leaf_id, _)| {
                best_effort_query(artifact, leaf_id, question, clock)
            });
            GenerationOutcome::NeedsFallback {
                reason: FallbackReason::LowConfidence,
                best_guess,
            }
        }
    }
}

/// Level 4: replace template placeholders. Full coverage instantiates the
/// leaf template directly; any unbound slot degrades to the level-3
/// strategy on the leaf's parent.
fn generate_level4(
    artifact: &ModelArtifact,
    leaf_id: &str,
    bindings: &Bindings,
    confidence: f64,
) -> GenerationOutcome {
    let Some(leaf) = artifact.intent_tree.node(leaf_id) else {
        return GenerationOutcome::NeedsFallback {
            reason: FallbackReason::NoViableCandidate,
            best_guess: None,
        };
    };
    let template = leaf.template.as_ref().expect("leaves carry templates");

    let covered = template
        .slot_keys()
        .iter()
        .all(|key| bindings.values.contains_key(key));
    if covered {
        match instantiate(template, &bindings.values, Some(&artifact.schema)) {
            Ok(query) => {
                return GenerationOutcome::Generated(Generated {
                    query,
                    leaf_id: leaf_id.to_string(),
                    level_used: 4,
                    confidence,
                    unconditioned: false,
                });
            }
            Err(_) => {
                // A type-incompatible binding degrades like a missing one.
            }
        }
    }

    let parent_id = leaf.signature.prefix(3).node_id();
    match generate_level3(artifact, &parent_id, bindings, confidence) {
        GenerationOutcome::NeedsFallback { best_guess, .. } => {
            let reason = if bindings.failed.is_empty() {
                FallbackReason::NoViableCandidate
            } else {
                FallbackReason::UnmappableValue
            };
            GenerationOutcome::NeedsFallback { reason, best_guess }
        }
        generated => generated,
    }
}

/// One pooled condition template: where it sits, which leaf contributed
/// it, and its position there.
struct PooledCondition {
    clause: ConditionClause,
    condition: Condition<SlotKey>,
    child_id: String,
    position: usize,
}

/// Level 3: the skeleton (SELECT, FROM, JOIN, GROUP BY, ORDER BY, LIMIT)
/// comes from the best-matching child; conditions come from the union
/// pool across all children, filtered to those whose slots transformed.
fn generate_level3(
    artifact: &ModelArtifact,
    node_id: &str,
    bindings: &Bindings,
    confidence: f64,
) -> GenerationOutcome {
    let tree = &artifact.intent_tree;
    let Some(node) = tree.node(node_id) else {
        return GenerationOutcome::NeedsFallback {
            reason: FallbackReason::NoViableCandidate,
            best_guess: None,
        };
    };
    let children = tree.descendant_leaves(&node.id);
    if children.is_empty() {
        return GenerationOutcome::NeedsFallback {
            reason: FallbackReason::NoViableCandidate,
            best_guess: None,
        };
    }

    // Union pool of condition templates, deduplicated by rendered form.
    let mut pool: Vec<PooledCondition> = Vec::new();
    let mut seen: BTreeMap<String, ()> = BTreeMap::new();
    for child in &children {
        let template = child.template.as_ref().expect("leaves carry templates");
        let conditions = template
            .skeleton
            .where_conditions
            .iter()
            .map(|c| (ConditionClause::Where, c))
            .chain(
                template
                    .skeleton
                    .having
                    .iter()
                    .map(|c| (ConditionClause::Having, c)),
            );
        for (position, (clause, condition)) in conditions.enumerate() {
            let fingerprint = format!("{clause:?}|{}", render_condition(condition));
            if seen.insert(fingerprint, ()).is_none() {
                pool.push(PooledCondition {
                    clause,
                    condition: condition.clone(),
                    child_id: child.id.clone(),
                    position,
                });
            }
        }
    }

    // Child whose slot-key set best matches the bound set: largest
    // intersection, smallest symmetric difference, highest support, then
    // lexicographic id.
    let bound: Vec<&SlotKey> = bindings.values.keys().collect();
    let selected = children
        .iter()
        .map(|child| {
            let slots = child
                .template
                .as_ref()
                .map(|t| t.slot_keys().to_vec())
                .unwrap_or_default();
            let inter = slots.iter().filter(|k| bound.contains(k)).count();
            let sym = slots.len() - inter + (bound.len() - inter);
            (*child, inter as i64, -(sym as i64))
        })
        .max_by(|(a, ia, sa), (b, ib, sb)| {
            (ia, sa, a.support)
                .cmp(&(ib, sb, b.support))
                .then_with(|| b.id.cmp(&a.id))
        })
        .map(|(child, _, _)| child)
        .expect("children nonempty");

    let skeleton = &selected
        .template
        .as_ref()
        .expect("leaves carry templates")
        .skeleton;

    // Include exactly the pool conditions whose slots all transformed.
    let mut included: Vec<&PooledCondition> = pool
        .iter()
        .filter(|p| {
            p.condition
                .values
                .iter()
                .all(|key| bindings.values.contains_key(key))
        })
        .collect();
    included.sort_by(|a, b| {
        let in_selected = |p: &PooledCondition| p.child_id == selected.id;
        in_selected(b)
            .cmp(&in_selected(a))
            .then(a.child_id.cmp(&b.child_id))
            .then(a.position.cmp(&b.position))
    });

    let fill = |condition: &Condition<SlotKey>| -> Condition<Literal> {
        Condition {
            target: condition.target.clone(),
            op: condition.op,
            values: condition
                .values
                .iter()
                .map(|key| bindings.values.get(key).expect("inclusion checked").clone())
                .collect(),
        }
    };

    let mut where_conditions = Vec::new();
    let mut having = Vec::new();
    for pooled in &included {
        match pooled.clause {
            ConditionClause::Where => where_conditions.push(fill(&pooled.condition)),
            ConditionClause::Having => having.push(fill(&pooled.condition)),
        }
    }

    let unconditioned = included.is_empty() && !pool.is_empty();
    let query = Query {
        select: skeleton.select.clone(),
        from_table: skeleton.from_table.clone(),
        joins: skeleton.joins.clone(),
        where_conditions,
        group_by: skeleton.group_by.clone(),
        having,
        order_by: skeleton.order_by.clone(),
        limit: skeleton.limit,
    };

    GenerationOutcome::Generated(Generated {
        query,
        leaf_id: selected.id.clone(),
        level_used: node.level.max(3),
        confidence,
        unconditioned,
    })
}

/// Levels 1 and 2: score the node's level-3 descendants by fillable slot
/// fraction and lexical overlap between the question and each candidate's
/// SELECT terms plus mined lexicon, then forward the winner to the
/// level-3 strategy.
fn generate_shallow(
    artifact: &ModelArtifact,
    node_id: &str,
    bindings: &Bindings,
    question: &str,
    prediction: &Prediction,
) -> GenerationOutcome {
    let tree = &artifact.intent_tree;
    let Some(node) = tree.node(node_id) else {
        return GenerationOutcome::NeedsFallback {
            reason: FallbackReason::NoViableCandidate,
            best_guess: None,
        };
    };

    // Level-3 descendants.
    let mut level3: Vec<&IntentNode> = Vec::new();
    let mut stack = vec![node];
    while let Some(current) = stack.pop() {
        if current.level == 3 {
            level3.push(current);
        } else if current.level < 3 {
            for child_id in &current.children {
                if let Some(child) = tree.node(child_id) {
                    stack.push(child);
                }
            }
        }
    }
    level3.sort_by(|a, b| a.id.cmp(&b.id));
    if level3.is_empty() {
        return GenerationOutcome::NeedsFallback {
            reason: FallbackReason::NoViableCandidate,
            best_guess: None,
        };
    }

    let question_tokens: std::collections::BTreeSet<String> = text::tokenize(question)
        .iter()
        .map(|t| text::fold(&t.text))
        .collect();
    let weights = artifact.config.weights;

    let score_of = |candidate: &IntentNode| -> f64 {
        let mut slots: Vec<SlotKey> = Vec::new();
        for leaf in tree.descendant_leaves(&candidate.id) {
            if let Some(template) = &leaf.template {
                for key in template.slot_keys() {
                    if !slots.contains(key) {
                        slots.push(key.clone());
                    }
                }
            }
        }
        let coverage = if slots.is_empty() {
            0.0
        } else {
            slots
                .iter()
                .filter(|k| bindings.values.contains_key(*k))
                .count() as f64
                / slots.len() as f64
        };

        // SELECT column names, aliases and aggregation names, plus the
        // co-occurrence lexicon mined at training time.
        let mut terms: std::collections::BTreeSet<String> = std::collections::BTreeSet::new();
        for leaf in tree.descendant_leaves(&candidate.id) {
            if let Some(template) = &leaf.template {
                for item in &template.skeleton.select {
                    if let crate::sql::SelectTarget::Column(col) = &item.target {
                        terms.insert(col.column.clone());
                        if let Some(table) = &col.table {
                            terms.insert(table.clone());
                        }
                    }
                    if let Some(alias) = &item.alias {
                        terms.insert(alias.clone());
                    }
                    if let Some(agg) = &item.agg {
                        terms.insert(agg.to_string().to_lowercase());
                    }
                }
            }
        }
        if let Some(lexicon) = artifact.classifier.node_lexicon.get(&candidate.id) {
            terms.extend(lexicon.iter().cloned());
        }

        let overlap = if question_tokens.is_empty() {
            0.0
        } else {
            question_tokens.intersection(&terms).count() as f64 / question_tokens.len() as f64
        };

        weights.slot_coverage * coverage + weights.lexical_overlap * overlap
    };

    let scored: Vec<(f64, &IntentNode)> =
        level3.iter().map(|n| (score_of(n), *n)).collect();
    let best = scored
        .iter()
        .max_by(|(sa, na), (sb, nb)| sa.total_cmp(sb).then(nb.id.cmp(&na.id)))
        .expect("candidates nonempty");

    if level3.len() > 1 && scored.iter().all(|(s, _)| *s == 0.0) {
        return GenerationOutcome::NeedsFallback {
            reason: FallbackReason::NoViableCandidate,
            best_guess: None,
        };
    }
    if level3.len() == 1 || best.0 > 0.0 {
        match generate_level3(artifact, &best.1.id, bindings, prediction.confidence) {
            GenerationOutcome::Generated(mut generated) => {
                generated.level_used = node.level;
                GenerationOutcome::Generated(generated)
            }
            fallback => fallback,
        }
    } else {
        GenerationOutcome::NeedsFallback {
            reason: FallbackReason::NoViableCandidate,
            best_guess: None,
        }
    }
}

/// Best-effort query for the fallback record: run the level-4 strategy on
/// the highest-scoring leaf even though it missed every threshold.
fn best_effort_query(
    artifact: &ModelArtifact,
    leaf_id: &str,
    question: &str,
    clock: NaiveDate,
) -> Option<CanonicalQuery> {
    let fills =
        crate::classifier::fill_slots(&artifact.intent_tree, &artifact.slot_catalog, leaf_id, question)
            .ok()?;
    let bindings = transform_fills(artifact, &fills, clock);
    match generate_level4(artifact, leaf_id, &bindings, 0.0) {
        GenerationOutcome::Generated(generated) => Some(generated.query),
        GenerationOutcome::NeedsFallback { .. } => None,
    }
}
