//! Query templates: literals swapped for slot placeholders and back.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::ast::*;
use super::render::render_query_with_limit;
use crate::schema::{ColumnType, SchemaDescription};

/// Options shared by template extraction and intent signatures.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TemplateOptions {
    /// When set, a query's LIMIT value becomes a slot (keyed by the
    /// reserved column `$limit`) instead of structural template content.
    pub limit_as_slot: bool,
}

impl Default for TemplateOptions {
    fn default() -> Self {
        TemplateOptions {
            limit_as_slot: false,
        }
    }
}

/// A canonical query with every condition literal replaced by its
/// [`SlotKey`]. `slot_order` lists the placeholders in canonical
/// serialization order (WHERE, then HAVING, then a slotted LIMIT).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TemplateQuery {
    pub skeleton: Query<SlotKey>,
    pub limit_slot: Option<SlotKey>,
    pub slot_order: Vec<SlotKey>,
}

impl TemplateQuery {
    /// Masked canonical text with `?` in every slot position.
    pub fn masked_sql(&self) -> String {
        let limit_override = self.limit_slot.as_ref().map(|_| "?");
        render_query_with_limit(&self.skeleton, limit_override)
    }

    pub fn slot_keys(&self) -> &[SlotKey] {
        &self.slot_order
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TemplateError {
    #[error("missing binding for slot {0}")]
    MissingBinding(SlotKey),
    #[error("type mismatch for slot {slot}: expected {expected}, got {got}")]
    TypeMismatch {
        slot: SlotKey,
        expected: String,
        got: String,
    },
}

/// Replaces every condition literal (and, when configured, the LIMIT
/// value) with a placeholder. Returns the template and the displaced
/// literals in canonical order.
pub fn extract_template(
    query: &CanonicalQuery,
    opts: &TemplateOptions,
) -> (TemplateQuery, Vec<(SlotKey, Literal)>) {
    let mut occurrences: BTreeMap<(String, CompareOp), u32> = BTreeMap::new();
    let mut bindings = Vec::new();
    let mut slot_order = Vec::new();

    let mut convert = |cond: &Condition<Literal>| -> Condition<SlotKey> {
        let column = cond.target.to_string();
        let mut values = Vec::with_capacity(cond.values.len());
        for literal in &cond.values {
            let counter = occurrences.entry((column.clone(), cond.op)).or_insert(0);
            let key = SlotKey::new(column.clone(), cond.op, *counter);
            *counter += 1;
            bindings.push((key.clone(), literal.clone()));
            slot_order.push(key.clone());
            values.push(key);
        }
        Condition {
            target: cond.target.clone(),
            op: cond.op,
            values,
        }
    };

    let where_conditions: Vec<_> = query.where_conditions.iter().map(&mut convert).collect();
    let having: Vec<_> = query.having.iter().map(&mut convert).collect();

    let mut skeleton = Query {
        select: query.select.clone(),
        from_table: query.from_table.clone(),
        joins: query.joins.clone(),
        where_conditions,
        group_by: query.group_by.clone(),
        having,
        order_by: query.order_by.clone(),
        limit: query.limit,
    };

    let mut limit_slot = None;
    if opts.limit_as_slot {
        if let Some(n) = query.limit {
            let key = SlotKey::new(LIMIT_SLOT_COLUMN, CompareOp::Eq, 0);
            bindings.push((key.clone(), Literal::integer(n.to_string())));
            slot_order.push(key.clone());
            limit_slot = Some(key);
            skeleton.limit = None;
        }
    }

    (
        TemplateQuery {
            skeleton,
            limit_slot,
            slot_order,
        },
        bindings,
    )
}

/// Substitutes bindings back into a template. Inverse of
/// [`extract_template`]: instantiating a template with its own bindings
/// reproduces the original query byte for byte. When a schema is supplied,
/// literal kinds are checked against the slot's column type.
pub fn instantiate(
    template: &TemplateQuery,
    bindings: &BTreeMap<SlotKey, Literal>,
    schema: Option<&SchemaDescription>,
) -> Result<CanonicalQuery, TemplateError> {
    let tables: Vec<String> = std::iter::once(template.skeleton.from_table.clone())
        .chain(template.skeleton.joins.iter().map(|j| j.table.clone()))
        .collect();

    let resolve = |key: &SlotKey, target: &ConditionTarget| -> Result<Literal, TemplateError> {
        let literal = bindings
            .get(key)
            .cloned()
            .ok_or_else(|| TemplateError::MissingBinding(key.clone()))?;
        if let (Some(schema), ConditionTarget::Column(col)) = (schema, target) {
            if let Some(column) = schema.resolve_column(&tables, col) {
                if !kind_compatible(column.column_type, literal.kind) {
                    return Err(TemplateError::TypeMismatch {
                        slot: key.clone(),
                        expected: column.column_type.to_string(),
                        got: format!("{:?}", literal.kind).to_lowercase(),
                    });
                }
            }
        }
        Ok(literal)
    };

    let mut fill = |cond: &Condition<SlotKey>| -> Result<Condition<Literal>, TemplateError> {
        let values = cond
            .values
            .iter()
            .map(|key| resolve(key, &cond.target))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Condition {
            target: cond.target.clone(),
            op: cond.op,
            values,
        })
    };

    let where_conditions = template
        .skeleton
        .where_conditions
        .iter()
        .map(&mut fill)
        .collect::<Result<Vec<_>, _>>()?;
    let having = template
        .skeleton
        .having
        .iter()
        .map(&mut fill)
        .collect::<Result<Vec<_>, _>>()?;

    let mut limit = template.skeleton.limit;
    if let Some(key) = &template.limit_slot {
        let literal = bindings
            .get(key)
            .ok_or_else(|| TemplateError::MissingBinding(key.clone()))?;
        let parsed = literal.lexeme.parse::<u64>().map_err(|_| {
            TemplateError::TypeMismatch {
                slot: key.clone(),
                expected: "nonnegative integer".to_string(),
                got: literal.lexeme.clone(),
            }
        })?;
        limit = Some(parsed);
    }

    Ok(Query {
        select: template.skeleton.select.clone(),
        from_table: template.skeleton.from_table.clone(),
        joins: template.skeleton.joins.clone(),
        where_conditions,
        group_by: template.skeleton.group_by.clone(),
        having,
        order_by: template.skeleton.order_by.clone(),
        limit,
    })
}

fn kind_compatible(column: ColumnType, kind: LiteralKind) -> bool {
    match column {
        ColumnType::Int => kind == LiteralKind::Integer,
        ColumnType::Decimal => matches!(kind, LiteralKind::Integer | LiteralKind::Decimal),
        ColumnType::Date => kind == LiteralKind::Date,
        ColumnType::Text | ColumnType::Enum => {
            matches!(kind, LiteralKind::String | LiteralKind::Date)
        }
    }
}
