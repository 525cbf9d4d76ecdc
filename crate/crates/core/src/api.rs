//! Lossless mapping between keyword-argument API calls and isomorphic SQL.
//!
//! `temperature(city='Seattle')` maps to
//! `SELECT t FROM temperature WHERE city = 'Seattle'` and back. The whole
//! pipeline trains and predicts over the SQL form; API rendering happens at
//! the edges.

use thiserror::Error;

use crate::dates;
use crate::sql::lexer;
use crate::sql::{
    CanonicalQuery, ColumnRef, CompareOp, Condition, ConditionTarget, Literal, LiteralKind, Query,
    SelectItem, Span,
};

/// The reserved result column of the SQL image of an API call.
pub const RESERVED_RESULT_COLUMN: &str = "t";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ApiCall {
    pub name: String,
    pub args: Vec<(String, Literal)>,
}

impl ApiCall {
    /// Canonical text: `name(k1=v1, k2=v2)` with single-quoted strings.
    pub fn render(&self) -> String {
        let args: Vec<String> = self
            .args
            .iter()
            .map(|(key, value)| format!("{}={}", key, value.render()))
            .collect();
        format!("{}({})", self.name, args.join(", "))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ApiError {
    #[error("API call parse error at byte {position}: {message}")]
    Parse { position: usize, message: String },
    #[error("reserved column name collision: '{0}'")]
    ReservedNameCollision(String),
    #[error("query is not API-shaped: {0}")]
    NotApiShaped(String),
}

/// True when a dataset target looks like `ident(...)` rather than SQL.
pub fn is_api_target(text: &str) -> bool {
    let trimmed = text.trim();
    if !trimmed.ends_with(')') {
        return false;
    }
    let mut chars = trimmed.char_indices();
    match chars.next() {
        Some((_, c)) if c.is_ascii_alphabetic() || c == '_' => {}
        _ => return false,
    }
    let mut ident_end = 1;
    for (i, c) in chars {
        if c.is_ascii_alphanumeric() || c == '_' {
            ident_end = i + c.len_utf8();
        } else {
            break;
        }
    }
    let ident = &trimmed[..ident_end];
    if ident.eq_ignore_ascii_case("select") {
        return false;
    }
    trimmed[ident_end..].trim_start().starts_with('(')
}

/// Parses `name(key=value, ...)`. Keys and the name fold to lowercase;
/// values reuse the SQL literal syntax including date classification.
pub fn parse_api(text: &str) -> Result<ApiCall, ApiError> {
    use crate::sql::lexer::TokenKind;

    let tokens = lexer::lex(text).map_err(|e| match e {
        crate::sql::SqlError::Parse { position, message } => ApiError::Parse { position, message },
        crate::sql::SqlError::Unsupported { feature } => ApiError::Parse {
            position: 0,
            message: format!("unsupported syntax: {feature}"),
        },
    })?;

    let mut pos = 0;
    let err_at = |tokens: &[lexer::Token], pos: usize, msg: &str| ApiError::Parse {
        position: tokens
            .get(pos)
            .map(|t| t.start)
            .unwrap_or_else(|| text.len()),
        message: msg.to_string(),
    };

    let name = match tokens.get(pos).map(|t| &t.kind) {
        Some(TokenKind::Ident(s)) => {
            pos += 1;
            s.to_lowercase()
        }
        _ => return Err(err_at(&tokens, pos, "expected API name")),
    };
    if !matches!(tokens.get(pos).map(|t| &t.kind), Some(TokenKind::LParen)) {
        return Err(err_at(&tokens, pos, "expected '('"));
    }
    pos += 1;

    let mut args: Vec<(String, Literal)> = Vec::new();
    if !matches!(tokens.get(pos).map(|t| &t.kind), Some(TokenKind::RParen)) {
        loop {
            let key = match tokens.get(pos).map(|t| &t.kind) {
                Some(TokenKind::Ident(s)) => {
                    pos += 1;
                    s.to_lowercase()
                }
                _ => return Err(err_at(&tokens, pos, "expected argument name")),
            };
            if args.iter().any(|(k, _)| *k == key) {
                return Err(err_at(&tokens, pos, "duplicate argument name"));
            }
            if !matches!(tokens.get(pos).map(|t| &t.kind), Some(TokenKind::Eq)) {
                return Err(err_at(&tokens, pos, "expected '='"));
            }
            pos += 1;
            let literal = match tokens.get(pos).cloned() {
                Some(lexer::Token {
                    kind: TokenKind::Number(raw),
                    start,
                    end,
                }) => {
                    pos += 1;
                    let kind = if raw.contains('.') {
                        LiteralKind::Decimal
                    } else {
                        LiteralKind::Integer
                    };
                    let mut lit = Literal::new(kind, raw);
                    lit.span = Span::new(start, end);
                    lit
                }
                Some(lexer::Token {
                    kind: TokenKind::Str(content),
                    start,
                    end,
                }) => {
                    pos += 1;
                    let kind = if dates::parse_absolute(&content).is_some() {
                        LiteralKind::Date
                    } else {
                        LiteralKind::String
                    };
                    let mut lit = Literal::new(kind, content);
                    lit.span = Span::new(start, end);
                    lit
                }
                _ => return Err(err_at(&tokens, pos, "expected literal argument value")),
            };
            args.push((key, literal));
            match tokens.get(pos).map(|t| &t.kind) {
                Some(TokenKind::Comma) => {
                    pos += 1;
                }
                Some(TokenKind::RParen) => break,
                _ => return Err(err_at(&tokens, pos, "expected ',' or ')'")),
            }
        }
    }
    pos += 1; // closing paren
    if pos != tokens.len() {
        return Err(err_at(&tokens, pos, "unexpected trailing input"));
    }

    Ok(ApiCall { name, args })
}

/// SQL image of an API call: `SELECT t FROM <name>` with one equality
/// condition per argument, in argument order.
pub fn api_to_sql(call: &ApiCall) -> Result<CanonicalQuery, ApiError> {
    if call.name == RESERVED_RESULT_COLUMN {
        return Err(ApiError::ReservedNameCollision(call.name.clone()));
    }
    if let Some((key, _)) = call
        .args
        .iter()
        .find(|(key, _)| key == RESERVED_RESULT_COLUMN)
    {
        return Err(ApiError::ReservedNameCollision(key.clone()));
    }
    let mut query = Query::new(call.name.clone());
    query.select = vec![SelectItem::column(ColumnRef::bare(RESERVED_RESULT_COLUMN))];
    query.where_conditions = call
        .args
        .iter()
        .map(|(key, value)| Condition {
            target: ConditionTarget::Column(ColumnRef::bare(key.clone())),
            op: CompareOp::Eq,
            values: vec![value.clone()],
        })
        .collect();
    Ok(query)
}

/// Inverse of [`api_to_sql`]. The query must be API-shaped: SELECT of
/// exactly the reserved column, no joins, grouping, ordering or limit, and
/// only single-value equality conditions.
pub fn sql_to_api(query: &CanonicalQuery) -> Result<ApiCall, ApiError> {
    let shaped = |detail: &str| ApiError::NotApiShaped(detail.to_string());

    if query.select.len() != 1 {
        return Err(shaped("SELECT must contain exactly one item"));
    }
    let item = &query.select[0];
    let expected = SelectItem::column(ColumnRef::bare(RESERVED_RESULT_COLUMN));
    if *item != expected {
        return Err(shaped(&format!(
            "SELECT must be exactly the reserved column '{RESERVED_RESULT_COLUMN}'"
        )));
    }
    if !query.joins.is_empty() {
        return Err(shaped("JOIN clauses present"));
    }
    if !query.group_by.is_empty() {
        return Err(shaped("GROUP BY present"));
    }
    if !query.having.is_empty() {
        return Err(shaped("HAVING present"));
    }
    if query.order_by.is_some() {
        return Err(shaped("ORDER BY present"));
    }
    if query.limit.is_some() {
        return Err(shaped("LIMIT present"));
    }

    let mut args = Vec::with_capacity(query.where_conditions.len());
    for cond in &query.where_conditions {
        if cond.op != CompareOp::Eq || cond.values.len() != 1 {
            return Err(shaped("conditions must be single-value equalities"));
        }
        let column = match &cond.target {
            ConditionTarget::Column(ColumnRef { table, column })
                if table.is_none() || table.as_deref() == Some(query.from_table.as_str()) =>
            {
                column.clone()
            }
            other => return Err(shaped(&format!("condition target '{other}' not a plain column"))),
        };
        args.push((column, cond.values[0].clone()));
    }

    Ok(ApiCall {
        name: query.from_table.clone(),
        args,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sql::{parse_sql, serialize};

    #[test]
    fn paper_pair_maps_both_ways() {
        let call = parse_api("temperature(city='Seattle')").unwrap();
        let sql = api_to_sql(&call).unwrap();
        assert_eq!(
            serialize(&sql),
            "SELECT t FROM temperature WHERE city = 'Seattle'"
        );
        let parsed = parse_sql("SELECT t FROM temperature WHERE city='Seattle'").unwrap();
        assert_eq!(sql, parsed);
        let back = sql_to_api(&parsed).unwrap();
        assert_eq!(back.render(), "temperature(city='Seattle')");
        assert_eq!(back, call);
    }

    #[test]
    fn zero_arg_call() {
        let call = parse_api("f()").unwrap();
        let sql = api_to_sql(&call).unwrap();
        assert_eq!(serialize(&sql), "SELECT t FROM f");
        assert_eq!(sql_to_api(&sql).unwrap().render(), "f()");
    }

    #[test]
    fn mixed_arg_kinds_roundtrip() {
        let call = parse_api("g(a=1, b='x')").unwrap();
        let sql = api_to_sql(&call).unwrap();
        assert_eq!(serialize(&sql), "SELECT t FROM g WHERE a = 1 AND b = 'x'");
        assert_eq!(sql_to_api(&sql).unwrap(), call);
    }

    #[test]
    fn argument_order_survives() {
        let call = parse_api("g(b='x', a=1)").unwrap();
        let back = sql_to_api(&api_to_sql(&call).unwrap()).unwrap();
        assert_eq!(back.render(), "g(b='x', a=1)");
    }

    #[test]
    fn reserved_name_collisions_rejected() {
        let call = parse_api("t(a=1)").unwrap();
        assert_eq!(
            api_to_sql(&call),
            Err(ApiError::ReservedNameCollision("t".into()))
        );
        let call = parse_api("f(t=1)").unwrap();
        assert_eq!(
            api_to_sql(&call),
            Err(ApiError::ReservedNameCollision("t".into()))
        );
    }

    #[test]
    fn non_api_shapes_rejected() {
        for sql in [
            "SELECT t FROM f GROUP BY t",
            "SELECT a FROM f",
            "SELECT t FROM f WHERE a > 1",
            "SELECT t FROM f LIMIT 1",
            "SELECT t, u FROM f",
        ] {
            let q = parse_sql(sql).unwrap();
            assert!(matches!(sql_to_api(&q), Err(ApiError::NotApiShaped(_))), "{sql}");
        }
    }

    #[test]
    fn target_detection() {
        assert!(is_api_target("temperature(city='Seattle')"));
        assert!(is_api_target("f ()"));
        assert!(!is_api_target("SELECT t FROM f WHERE a IN (1, 2)"));
        assert!(!is_api_target("plain text"));
        assert!(!is_api_target("f(x"));
    }

    #[test]
    fn duplicate_keys_rejected() {
        assert!(matches!(
            parse_api("f(a=1, a=2)"),
            Err(ApiError::Parse { .. })
        ));
    }

    #[test]
    fn api_date_values_classify_like_sql() {
        let call = parse_api("f(day='2020-10-20')").unwrap();
        assert_eq!(call.args[0].1.kind, LiteralKind::Date);
    }
}
