//! Canonical serialization: the exact-match normal form.
//!
//! Single-space separated, clause order SELECT / FROM / JOIN / WHERE /
//! GROUP BY / HAVING / ORDER BY / LIMIT, joins in sorted order, keywords
//! uppercase, identifiers lowercase, strings single-quoted. Parsing a
//! serialized query and serializing again is a fixed point.

use super::ast::*;

/// How a condition value renders inside the canonical form.
pub trait RenderValue {
    fn render_value(&self) -> String;
}

impl RenderValue for Literal {
    fn render_value(&self) -> String {
        self.render()
    }
}

impl RenderValue for SlotKey {
    fn render_value(&self) -> String {
        "?".to_string()
    }
}

pub fn render_condition<V: RenderValue>(cond: &Condition<V>) -> String {
    let values: Vec<String> = cond.values.iter().map(RenderValue::render_value).collect();
    match cond.op {
        CompareOp::In => format!("{} IN ({})", cond.target, values.join(", ")),
        CompareOp::Between => format!(
            "{} BETWEEN {} AND {}",
            cond.target, values[0], values[1]
        ),
        op => format!("{} {} {}", cond.target, op, values[0]),
    }
}

pub fn render_query<V: RenderValue>(query: &Query<V>) -> String {
    render_query_with_limit(query, None)
}

/// `limit_override` replaces the LIMIT clause text; templates use it to
/// render a slotted limit as `LIMIT ?`.
pub fn render_query_with_limit<V: RenderValue>(
    query: &Query<V>,
    limit_override: Option<&str>,
) -> String {
    let mut out = String::from("SELECT ");
    let items: Vec<String> = query.select.iter().map(|i| i.to_string()).collect();
    out.push_str(&items.join(", "));
    out.push_str(" FROM ");
    out.push_str(&query.from_table);
    for join in &query.joins {
        out.push(' ');
        out.push_str(&join.to_string());
    }
    if !query.where_conditions.is_empty() {
        out.push_str(" WHERE ");
        let conds: Vec<String> = query.where_conditions.iter().map(render_condition).collect();
        out.push_str(&conds.join(" AND "));
    }
    if !query.group_by.is_empty() {
        out.push_str(" GROUP BY ");
        let cols: Vec<String> = query.group_by.iter().map(|c| c.to_string()).collect();
        out.push_str(&cols.join(", "));
    }
    if !query.having.is_empty() {
        out.push_str(" HAVING ");
        let conds: Vec<String> = query.having.iter().map(render_condition).collect();
        out.push_str(&conds.join(" AND "));
    }
    if let Some(order) = &query.order_by {
        out.push_str(" ORDER BY ");
        out.push_str(&order.target.to_string());
        out.push(' ');
        out.push_str(&order.direction.to_string());
    }
    match (limit_override, query.limit) {
        (Some(text), _) => {
            out.push_str(" LIMIT ");
            out.push_str(text);
        }
        (None, Some(n)) => {
            out.push_str(&format!(" LIMIT {n}"));
        }
        (None, None) => {}
    }
    out
}

/// Canonical SQL text of a query; total on valid inputs.
pub fn serialize(query: &CanonicalQuery) -> String {
    render_query(query)
}
