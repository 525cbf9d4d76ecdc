//! Restricted SQL dialect: parsing, canonical serialization, templates and
//! intent signatures.
//!
//! The dialect is a single-block SELECT with INNER JOINs over single
//! equalities, conjunctive WHERE/HAVING, GROUP BY, ORDER BY and LIMIT.
//! OR, subqueries, outer joins, set operations and window functions are
//! rejected loudly rather than mis-bucketed.

mod ast;
pub(crate) mod lexer;
mod parser;
mod render;
mod signature;
mod template;

pub use ast::{
    AggFunc, CanonicalQuery, ColumnRef, CompareOp, Condition, ConditionClause, ConditionTarget,
    JoinSpec, Literal, LiteralKind, OrderBy, OrderDirection, Query, SelectItem, SelectTarget,
    SlotKey, Span, LIMIT_SLOT_COLUMN,
};
pub use parser::parse_sql;
pub use render::{render_condition, render_query, render_query_with_limit, serialize, RenderValue};
pub use signature::{signature, IntentSignature, MAX_INTENT_LEVEL};
pub use template::{extract_template, instantiate, TemplateError, TemplateOptions, TemplateQuery};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SqlError {
    #[error("parse error at byte {position}: {message}")]
    Parse { position: usize, message: String },
    #[error("unsupported SQL feature: {feature}")]
    Unsupported { feature: String },
}

impl SqlError {
    pub(crate) fn parse(position: usize, message: impl Into<String>) -> Self {
        SqlError::Parse {
            position,
            message: message.into(),
        }
    }

    pub(crate) fn unsupported(feature: impl Into<String>) -> Self {
        SqlError::Unsupported {
            feature: feature.into(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeMap;

    fn roundtrip(text: &str) -> String {
        serialize(&parse_sql(text).unwrap())
    }

    #[test]
    fn parses_the_temperature_query() {
        let q = parse_sql("SELECT t FROM temperature WHERE city='Seattle'").unwrap();
        assert_eq!(q.select, vec![SelectItem::column(ColumnRef::bare("t"))]);
        assert_eq!(q.from_table, "temperature");
        assert!(q.joins.is_empty());
        assert_eq!(q.where_conditions.len(), 1);
        let cond = &q.where_conditions[0];
        assert_eq!(cond.target, ConditionTarget::Column(ColumnRef::bare("city")));
        assert_eq!(cond.op, CompareOp::Eq);
        assert_eq!(cond.values, vec![Literal::string("Seattle")]);
        assert_eq!(
            serialize(&q),
            "SELECT t FROM temperature WHERE city = 'Seattle'"
        );
    }

    #[test]
    fn parses_star_query() {
        let q = parse_sql("SELECT * FROM orders").unwrap();
        assert_eq!(q.select, vec![SelectItem::star()]);
        assert_eq!(q.from_table, "orders");
        assert!(q.joins.is_empty() && q.where_conditions.is_empty() && q.group_by.is_empty());
        assert_eq!(serialize(&q), "SELECT * FROM orders");
    }

    #[test]
    fn parses_join_group_having_order_limit() {
        let q = parse_sql(
            "SELECT c.name, COUNT(*) FROM orders o JOIN customers c ON o.cid=c.id \
             GROUP BY c.name HAVING COUNT(*) > 5 ORDER BY c.name LIMIT 10",
        )
        .unwrap();
        assert_eq!(q.from_table, "orders");
        assert_eq!(q.joins.len(), 1);
        let join = &q.joins[0];
        assert_eq!(join.table, "customers");
        assert_eq!(join.left_col, ColumnRef::qualified("orders", "cid"));
        assert_eq!(join.right_col, ColumnRef::qualified("customers", "id"));
        assert_eq!(q.group_by, vec![ColumnRef::qualified("customers", "name")]);
        assert_eq!(q.having.len(), 1);
        assert_eq!(
            q.having[0].target,
            ConditionTarget::Aggregate(AggFunc::Count, SelectTarget::Star)
        );
        assert_eq!(q.having[0].values, vec![Literal::integer("5")]);
        assert_eq!(q.limit, Some(10));
        assert_eq!(
            serialize(&q),
            "SELECT customers.name, COUNT(*) FROM orders \
             JOIN customers ON orders.cid = customers.id \
             GROUP BY customers.name HAVING COUNT(*) > 5 \
             ORDER BY customers.name ASC LIMIT 10"
        );
    }

    #[test]
    fn case_folds_identifiers_but_not_literals() {
        // Hand-applied folding rules: identifiers lowercase, keywords
        // uppercase in canonical form, literal text untouched.
        assert_eq!(
            roundtrip("select T from TEMPERATURE where CITY = 'Seattle'"),
            "SELECT t FROM temperature WHERE city = 'Seattle'"
        );
    }

    #[test]
    fn serialization_is_a_fixed_point() {
        let inputs = [
            "SELECT t FROM temperature WHERE city='Seattle'",
            "select a, b from t where x > 1 and y in (1,2,3) order by a desc limit 3",
            "SELECT c.name, COUNT(*) AS cnt FROM orders o JOIN customers c ON o.cid=c.id \
             GROUP BY c.name HAVING COUNT(*) > 5",
            "SELECT * FROM orders WHERE total BETWEEN 10 AND 20",
        ];
        for input in inputs {
            let once = roundtrip(input);
            let twice = roundtrip(&once);
            assert_eq!(once, twice, "not a fixed point for {input}");
        }
    }

    #[test]
    fn join_order_is_insensitive() {
        let a = parse_sql(
            "SELECT o.id FROM orders o JOIN customers c ON o.cid=c.id \
             JOIN items i ON o.id=i.oid",
        )
        .unwrap();
        let b = parse_sql(
            "SELECT o.id FROM orders o JOIN items i ON o.id=i.oid \
             JOIN customers c ON c.id=o.cid",
        )
        .unwrap();
        assert_eq!(a, b);
        assert_eq!(serialize(&a), serialize(&b));
    }

    #[test]
    fn date_strings_classify_as_date_literals() {
        let q = parse_sql("SELECT a FROM t WHERE d > '2020-10-20'").unwrap();
        assert_eq!(q.where_conditions[0].values[0].kind, LiteralKind::Date);
        let q = parse_sql("SELECT a FROM t WHERE d > 'hello'").unwrap();
        assert_eq!(q.where_conditions[0].values[0].kind, LiteralKind::String);
    }

    #[test]
    fn rejects_unsupported_features() {
        let cases = [
            ("SELECT a FROM t WHERE x = 1 OR y = 2", "OR"),
            ("SELECT a FROM t WHERE x IN (SELECT b FROM u)", "subquery"),
            ("SELECT a FROM (SELECT b FROM u)", "subquery"),
            ("SELECT a FROM t LEFT JOIN u ON t.x=u.y", "LEFT JOIN"),
            ("SELECT a FROM t UNION SELECT b FROM u", "set operation"),
            ("SELECT COUNT(*) OVER () FROM t", "window function"),
        ];
        for (input, feature) in cases {
            match parse_sql(input) {
                Err(SqlError::Unsupported { feature: f }) => {
                    assert_eq!(f, feature, "for {input}")
                }
                other => panic!("expected Unsupported({feature}) for {input}, got {other:?}"),
            }
        }
    }

    #[test]
    fn rejects_syntax_violations_with_position() {
        let cases = [
            "SELECT FROM t",
            "SELECT a t",
            "SELECT a FROM t WHERE",
            "SELECT a FROM t WHERE x NOT LIKE 'y'",
            "SELECT a FROM t HAVING COUNT(*) > 1",
            "SELECT a FROM t WHERE COUNT(*) > 1",
            "SELECT SUM(*) FROM t",
            "SELECT a FROM t LIMIT -1",
            "SELECT a FROM t LIMIT 1.5",
            "SELECT a FROM t JOIN t ON t.a=t.b",
            "SELECT x.a FROM t",
            "SELECT a FROM t JOIN u ON a=b",
            "SELECT a FROM t WHERE x BETWEEN 1",
            "",
        ];
        for input in cases {
            match parse_sql(input) {
                Err(SqlError::Parse { .. }) => {}
                other => panic!("expected parse error for {input:?}, got {other:?}"),
            }
        }
    }

    #[test]
    fn accepts_not_equal_synonym() {
        assert_eq!(
            roundtrip("SELECT a FROM t WHERE x != 1"),
            "SELECT a FROM t WHERE x <> 1"
        );
    }

    #[test]
    fn single_table_qualifiers_are_stripped() {
        assert_eq!(
            roundtrip("SELECT t.a FROM t WHERE t.b = 1 GROUP BY t.a ORDER BY t.a"),
            "SELECT a FROM t WHERE b = 1 GROUP BY a ORDER BY a ASC"
        );
    }

    #[test]
    fn string_escape_roundtrip() {
        let q = parse_sql("SELECT a FROM t WHERE name = 'O''Brien'").unwrap();
        assert_eq!(q.where_conditions[0].values[0].lexeme, "O'Brien");
        assert_eq!(
            serialize(&q),
            "SELECT a FROM t WHERE name = 'O''Brien'"
        );
    }

    #[test]
    fn template_extraction_of_where_literal() {
        let q = parse_sql("SELECT t FROM temperature WHERE city='Seattle'").unwrap();
        let (template, bindings) = extract_template(&q, &TemplateOptions::default());
        assert_eq!(
            template.masked_sql(),
            "SELECT t FROM temperature WHERE city = ?"
        );
        assert_eq!(bindings.len(), 1);
        assert_eq!(bindings[0].0, SlotKey::new("city", CompareOp::Eq, 0));
        assert_eq!(bindings[0].1, Literal::string("Seattle"));
    }

    #[test]
    fn template_without_conditions_is_the_query() {
        let q = parse_sql("SELECT * FROM orders").unwrap();
        let (template, bindings) = extract_template(&q, &TemplateOptions::default());
        assert!(bindings.is_empty());
        assert_eq!(template.masked_sql(), serialize(&q));
    }

    #[test]
    fn repeated_column_op_pairs_get_occurrence_indexes() {
        // Left-to-right scan: a=1 binds occurrence 0, a=2 occurrence 1.
        let q = parse_sql("SELECT x FROM t WHERE a = 1 AND a = 2").unwrap();
        let (_, bindings) = extract_template(&q, &TemplateOptions::default());
        assert_eq!(bindings[0].0, SlotKey::new("a", CompareOp::Eq, 0));
        assert_eq!(bindings[0].1, Literal::integer("1"));
        assert_eq!(bindings[1].0, SlotKey::new("a", CompareOp::Eq, 1));
        assert_eq!(bindings[1].1, Literal::integer("2"));
    }

    #[test]
    fn instantiate_inverts_extract() {
        let q = parse_sql(
            "SELECT c.name, COUNT(*) FROM orders o JOIN customers c ON o.cid=c.id \
             WHERE o.total > 100 AND o.status = 'open' GROUP BY c.name \
             HAVING COUNT(*) > 5 ORDER BY c.name LIMIT 10",
        )
        .unwrap();
        let (template, bindings) = extract_template(&q, &TemplateOptions::default());
        let map: BTreeMap<_, _> = bindings.into_iter().collect();
        let rebuilt = instantiate(&template, &map, None).unwrap();
        assert_eq!(serialize(&rebuilt), serialize(&q));
    }

    #[test]
    fn instantiate_preserves_literal_case() {
        let q = parse_sql("SELECT t FROM temperature WHERE city='Seattle'").unwrap();
        let (template, _) = extract_template(&q, &TemplateOptions::default());
        let mut map = BTreeMap::new();
        map.insert(
            SlotKey::new("city", CompareOp::Eq, 0),
            Literal::string("Portland"),
        );
        let rebuilt = instantiate(&template, &map, None).unwrap();
        assert_eq!(
            serialize(&rebuilt),
            "SELECT t FROM temperature WHERE city = 'Portland'"
        );
    }

    #[test]
    fn missing_binding_is_an_error() {
        let q = parse_sql("SELECT t FROM temperature WHERE city='Seattle'").unwrap();
        let (template, _) = extract_template(&q, &TemplateOptions::default());
        let err = instantiate(&template, &BTreeMap::new(), None).unwrap_err();
        assert_eq!(
            err,
            TemplateError::MissingBinding(SlotKey::new("city", CompareOp::Eq, 0))
        );
    }

    #[test]
    fn limit_as_slot_masks_the_limit() {
        let q = parse_sql("SELECT a FROM t LIMIT 7").unwrap();
        let opts = TemplateOptions {
            limit_as_slot: true,
        };
        let (template, bindings) = extract_template(&q, &opts);
        assert_eq!(template.masked_sql(), "SELECT a FROM t LIMIT ?");
        assert_eq!(bindings.len(), 1);
        assert_eq!(bindings[0].0.column, LIMIT_SLOT_COLUMN);
        let map: BTreeMap<_, _> = bindings.into_iter().collect();
        assert_eq!(
            serialize(&instantiate(&template, &map, None).unwrap()),
            "SELECT a FROM t LIMIT 7"
        );
    }

    #[test]
    fn equal_values_masked_queries_share_level4_signature() {
        let opts = TemplateOptions::default();
        let a = parse_sql("SELECT t FROM temperature WHERE city='Seattle'").unwrap();
        let b = parse_sql("SELECT t FROM temperature WHERE city='Portland'").unwrap();
        assert_eq!(signature(&a, 4, &opts), signature(&b, 4, &opts));
    }

    #[test]
    fn group_by_splits_level2_not_level1() {
        let opts = TemplateOptions::default();
        let a = parse_sql("SELECT city FROM orders GROUP BY city").unwrap();
        let b = parse_sql("SELECT status FROM orders GROUP BY status").unwrap();
        assert_eq!(signature(&a, 1, &opts), signature(&b, 1, &opts));
        assert_ne!(signature(&a, 2, &opts), signature(&b, 2, &opts));
    }

    #[test]
    fn distinct_limits_are_distinct_level4_intents_by_default() {
        let opts = TemplateOptions::default();
        let a = parse_sql("SELECT a FROM t LIMIT 5").unwrap();
        let b = parse_sql("SELECT a FROM t LIMIT 10").unwrap();
        assert_ne!(signature(&a, 4, &opts), signature(&b, 4, &opts));
        let slotted = TemplateOptions {
            limit_as_slot: true,
        };
        assert_eq!(signature(&a, 4, &slotted), signature(&b, 4, &slotted));
    }

    #[test]
    fn signature_prefix_relation() {
        let opts = TemplateOptions::default();
        let q = parse_sql("SELECT a FROM t WHERE b = 1 GROUP BY a").unwrap();
        let sig4 = signature(&q, 4, &opts);
        for level in 1..=4 {
            let sig = signature(&q, level, &opts);
            assert!(sig.is_prefix_of(&sig4));
            assert_eq!(sig, sig4.prefix(level));
        }
    }
}
