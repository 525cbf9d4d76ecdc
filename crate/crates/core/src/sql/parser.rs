//! Recursive descent parser for the restricted dialect.
//!
//! Grammar (keywords case-insensitive, identifiers folded to lowercase):
//!
//! ```text
//! query  := SELECT item (',' item)* FROM table
//!           (JOIN table ON qcol '=' qcol)*
//!           (WHERE cond (AND cond)*)?
//!           (GROUP BY qcol (',' qcol)*)?
//!           (HAVING cond (AND cond)*)?
//!           (ORDER BY qcol (ASC|DESC)?)?
//!           (LIMIT int)? ';'?
//! item   := (COUNT|SUM|AVG|MIN|MAX) '(' (qcol|'*') ')' | qcol | '*'
//! cond   := target op literal | target IN '(' literal (',' literal)* ')'
//!           | target BETWEEN literal AND literal
//! table  := ident (AS? alias)?
//! ```
//!
//! Table aliases are resolved away during parsing, so the canonical form
//! only ever names real tables. OR, subqueries, outer joins, set
//! operations and window functions are rejected with
//! [`SqlError::Unsupported`]. `!=` is accepted as a synonym for `<>`.

use std::collections::BTreeMap;

use super::ast::*;
use super::lexer::{lex, Token, TokenKind};
use super::SqlError;
use crate::dates;

const JOIN_MODIFIERS: &[&str] = &["left", "right", "full", "outer", "cross", "natural"];

fn is_reserved(word: &str) -> bool {
    matches!(
        word.to_ascii_lowercase().as_str(),
        "select"
            | "from"
            | "join"
            | "inner"
            | "on"
            | "where"
            | "and"
            | "or"
            | "group"
            | "by"
            | "having"
            | "order"
            | "limit"
            | "asc"
            | "desc"
            | "like"
            | "in"
            | "between"
            | "not"
            | "as"
            | "union"
            | "except"
            | "intersect"
            | "left"
            | "right"
            | "full"
            | "outer"
            | "cross"
            | "natural"
            | "over"
    )
}

/// Parses a single statement of the restricted dialect into its canonical
/// form: identifiers lowercased, aliases resolved, joins sorted, literal
/// lexemes preserved verbatim.
pub fn parse_sql(text: &str) -> Result<CanonicalQuery, SqlError> {
    let tokens = lex(text)?;
    let mut parser = Parser {
        tokens,
        pos: 0,
        src_len: text.len(),
        aliases: BTreeMap::new(),
    };
    parser.prescan_tables()?;
    parser.parse_query()
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
    src_len: usize,
    /// alias (or table name) -> real table name, folded.
    aliases: BTreeMap<String, String>,
}

impl Parser {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos)
    }

    fn peek_at(&self, offset: usize) -> Option<&Token> {
        self.tokens.get(self.pos + offset)
    }

    fn here(&self) -> usize {
        self.peek().map(|t| t.start).unwrap_or(self.src_len)
    }

    fn err(&self, message: impl Into<String>) -> SqlError {
        SqlError::parse(self.here(), message)
    }

    fn peek_ident_is(&self, word: &str) -> bool {
        self.ident_at_is(0, word)
    }

    fn ident_at_is(&self, offset: usize, word: &str) -> bool {
        matches!(
            self.peek_at(offset).map(|t| &t.kind),
            Some(TokenKind::Ident(s)) if s.eq_ignore_ascii_case(word)
        )
    }

    fn eat_ident(&mut self, word: &str) -> bool {
        if self.peek_ident_is(word) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect_ident(&mut self, word: &str) -> Result<(), SqlError> {
        if self.eat_ident(word) {
            Ok(())
        } else {
            Err(self.err(format!("expected {}", word.to_uppercase())))
        }
    }

    fn expect_kind(&mut self, kind: TokenKind, what: &str) -> Result<(), SqlError> {
        match self.peek() {
            Some(t) if t.kind == kind => {
                self.pos += 1;
                Ok(())
            }
            _ => Err(self.err(format!("expected {what}"))),
        }
    }

    /// Plain identifier, rejecting reserved words. Returns folded text.
    fn parse_name(&mut self, what: &str) -> Result<String, SqlError> {
        match self.peek().cloned() {
            Some(Token {
                kind: TokenKind::Ident(s),
                start,
                ..
            }) => {
                if is_reserved(&s) {
                    Err(SqlError::parse(
                        start,
                        format!("expected {what}, found keyword '{s}'"),
                    ))
                } else {
                    self.pos += 1;
                    Ok(s.to_lowercase())
                }
            }
            _ => Err(self.err(format!("expected {what}"))),
        }
    }

    /// Builds the alias map from the FROM/JOIN section before the main
    /// parse, so column qualifiers anywhere in the statement can be
    /// resolved inline.
    fn prescan_tables(&mut self) -> Result<(), SqlError> {
        let saved = self.pos;
        let mut i = 0;
        while i < self.tokens.len() {
            if let TokenKind::Ident(s) = &self.tokens[i].kind {
                if s.eq_ignore_ascii_case("from") {
                    break;
                }
            }
            i += 1;
        }
        if i == self.tokens.len() {
            // No FROM clause; the main parse reports the error with a
            // better position.
            return Ok(());
        }
        self.pos = i + 1;
        self.prescan_table_ref()?;
        loop {
            if self.peek_ident_is("inner") && self.ident_at_is(1, "join") {
                self.pos += 2;
            } else if self.peek_ident_is("join") {
                self.pos += 1;
            } else {
                break;
            }
            self.prescan_table_ref()?;
            // Skip the ON clause: qcol '=' qcol.
            while let Some(t) = self.peek() {
                match &t.kind {
                    TokenKind::Ident(s)
                        if s.eq_ignore_ascii_case("join")
                            || s.eq_ignore_ascii_case("inner")
                            || is_clause_start(s) =>
                    {
                        break;
                    }
                    TokenKind::Ident(_) | TokenKind::Dot | TokenKind::Eq => {
                        self.pos += 1;
                    }
                    _ => break,
                }
            }
        }
        self.pos = saved;
        Ok(())
    }

    fn prescan_table_ref(&mut self) -> Result<(), SqlError> {
        if matches!(self.peek().map(|t| &t.kind), Some(TokenKind::LParen)) {
            if self.ident_at_is(1, "select") {
                return Err(SqlError::unsupported("subquery"));
            }
            return Err(self.err("expected table name"));
        }
        let start = self.here();
        let table = self.parse_name("table name")?;
        if self.aliases.contains_key(&table) {
            return Err(SqlError::parse(
                start,
                format!("duplicate table '{table}' in FROM/JOIN"),
            ));
        }
        self.aliases.insert(table.clone(), table.clone());
        let has_as = self.eat_ident("as");
        let alias_candidate = match self.peek().map(|t| &t.kind) {
            Some(TokenKind::Ident(s)) if !is_reserved(s) => Some(s.to_lowercase()),
            _ => None,
        };
        if let Some(alias) = alias_candidate {
            self.pos += 1;
            if self.aliases.contains_key(&alias) {
                return Err(SqlError::parse(
                    start,
                    format!("duplicate table alias '{alias}'"),
                ));
            }
            self.aliases.insert(alias, table);
        } else if has_as {
            return Err(self.err("expected alias after AS"));
        }
        Ok(())
    }

    fn resolve_qualifier(&self, qualifier: &str, pos: usize) -> Result<String, SqlError> {
        self.aliases.get(qualifier).cloned().ok_or_else(|| {
            SqlError::parse(pos, format!("unknown table or alias '{qualifier}'"))
        })
    }

    /// Possibly qualified column, qualifier resolved through the alias map.
    fn parse_qcol(&mut self) -> Result<ColumnRef, SqlError> {
        let start = self.here();
        let first = self.parse_name("column name")?;
        if matches!(self.peek().map(|t| &t.kind), Some(TokenKind::Dot)) {
            self.pos += 1;
            let column = self.parse_name("column name")?;
            let table = self.resolve_qualifier(&first, start)?;
            Ok(ColumnRef::qualified(table, column))
        } else {
            Ok(ColumnRef::bare(first))
        }
    }

    fn parse_query(&mut self) -> Result<CanonicalQuery, SqlError> {
        self.expect_ident("select")?;
        let mut select = vec![self.parse_select_item()?];
        while matches!(self.peek().map(|t| &t.kind), Some(TokenKind::Comma)) {
            self.pos += 1;
            select.push(self.parse_select_item()?);
        }

        self.expect_ident("from")?;
        if matches!(self.peek().map(|t| &t.kind), Some(TokenKind::LParen)) {
            if self.ident_at_is(1, "select") {
                return Err(SqlError::unsupported("subquery"));
            }
            return Err(self.err("expected table name"));
        }
        let from_table = self.parse_name("table name")?;
        self.skip_alias();

        let mut query = Query::new(from_table);
        query.select = select;

        loop {
            if let Some(modifier) = self.peek_join_modifier() {
                return Err(SqlError::unsupported(format!(
                    "{} JOIN",
                    modifier.to_uppercase()
                )));
            }
            if self.peek_ident_is("inner") && self.ident_at_is(1, "join") {
                self.pos += 1;
            }
            if !self.eat_ident("join") {
                break;
            }
            let join = self.parse_join(&query)?;
            query.joins.push(join);
        }

        if self.eat_ident("where") {
            query.where_conditions = self.parse_conditions(false)?;
        }

        if self.peek_ident_is("group") {
            self.pos += 1;
            self.expect_ident("by")?;
            query.group_by.push(self.parse_qcol()?);
            while matches!(self.peek().map(|t| &t.kind), Some(TokenKind::Comma)) {
                self.pos += 1;
                query.group_by.push(self.parse_qcol()?);
            }
        }

        if self.eat_ident("having") {
            if query.group_by.is_empty() {
                return Err(self.err("HAVING requires GROUP BY"));
            }
            query.having = self.parse_conditions(true)?;
        }

        if self.peek_ident_is("order") {
            self.pos += 1;
            self.expect_ident("by")?;
            let target = self.parse_qcol()?;
            let direction = if self.eat_ident("asc") {
                OrderDirection::Asc
            } else if self.eat_ident("desc") {
                OrderDirection::Desc
            } else {
                OrderDirection::Asc
            };
            query.order_by = Some(OrderBy { target, direction });
        }

        if self.eat_ident("limit") {
            query.limit = Some(self.parse_limit()?);
        }

        if matches!(self.peek().map(|t| &t.kind), Some(TokenKind::Semicolon)) {
            self.pos += 1;
        }
        if let Some(tok) = self.peek() {
            if let TokenKind::Ident(s) = &tok.kind {
                let lowered = s.to_ascii_lowercase();
                if matches!(lowered.as_str(), "union" | "except" | "intersect") {
                    return Err(SqlError::unsupported("set operation"));
                }
            }
            return Err(self.err("unexpected trailing input"));
        }

        self.canonicalize(&mut query);
        Ok(query)
    }

    fn peek_join_modifier(&self) -> Option<&'static str> {
        for modifier in JOIN_MODIFIERS {
            if self.peek_ident_is(modifier)
                && (self.ident_at_is(1, "join") || self.ident_at_is(1, "outer"))
            {
                return Some(modifier);
            }
        }
        None
    }

    fn skip_alias(&mut self) {
        // Aliases were validated and registered during the prescan.
        let has_as = self.eat_ident("as");
        match self.peek().map(|t| &t.kind) {
            Some(TokenKind::Ident(s)) if !is_reserved(s) => {
                self.pos += 1;
            }
            _ => {
                if has_as {
                    self.pos -= 1; // surfaces as an error at the AS token
                }
            }
        }
    }

    fn parse_select_item(&mut self) -> Result<SelectItem, SqlError> {
        let item = if matches!(self.peek().map(|t| &t.kind), Some(TokenKind::Star)) {
            self.pos += 1;
            SelectItem::star()
        } else {
            let agg = match self.peek().map(|t| &t.kind) {
                Some(TokenKind::Ident(s)) => AggFunc::from_keyword(s),
                _ => None,
            };
            if agg.is_some()
                && matches!(self.peek_at(1).map(|t| &t.kind), Some(TokenKind::LParen))
            {
                let agg = agg.unwrap();
                self.pos += 2;
                let target = if matches!(self.peek().map(|t| &t.kind), Some(TokenKind::Star)) {
                    self.pos += 1;
                    if agg != AggFunc::Count {
                        return Err(self.err(format!("{agg} cannot aggregate *")));
                    }
                    SelectTarget::Star
                } else {
                    SelectTarget::Column(self.parse_qcol()?)
                };
                self.expect_kind(TokenKind::RParen, "closing parenthesis")?;
                let mut item = SelectItem::aggregate(agg, target);
                item.alias = self.parse_item_alias()?;
                item
            } else {
                let col = self.parse_qcol()?;
                let mut item = SelectItem::column(col);
                item.alias = self.parse_item_alias()?;
                item
            }
        };
        if self.peek_ident_is("over")
            && matches!(self.peek_at(1).map(|t| &t.kind), Some(TokenKind::LParen))
        {
            return Err(SqlError::unsupported("window function"));
        }
        Ok(item)
    }

    fn parse_item_alias(&mut self) -> Result<Option<String>, SqlError> {
        if self.eat_ident("as") {
            return Ok(Some(self.parse_name("alias")?));
        }
        match self.peek().map(|t| &t.kind) {
            Some(TokenKind::Ident(s)) if !is_reserved(s) => {
                let alias = s.to_lowercase();
                self.pos += 1;
                Ok(Some(alias))
            }
            _ => Ok(None),
        }
    }

    fn parse_join(&mut self, query: &Query<Literal>) -> Result<JoinSpec, SqlError> {
        let table = self.parse_name("table name")?;
        self.skip_alias();
        self.expect_ident("on")?;
        let a_pos = self.here();
        let a = self.parse_join_col()?;
        self.expect_kind(TokenKind::Eq, "'='")?;
        let b_pos = self.here();
        let b = self.parse_join_col()?;

        let known: Vec<&str> = query.involved_tables();
        let side_table = |col: &ColumnRef| col.table.clone().unwrap_or_default();
        let (left, right) = if side_table(&b) == table && known.contains(&side_table(&a).as_str())
        {
            (a, b)
        } else if side_table(&a) == table && known.contains(&side_table(&b).as_str()) {
            (b, a)
        } else if side_table(&a) == table && side_table(&b) == table {
            return Err(SqlError::parse(
                a_pos,
                "join condition must reference two distinct tables",
            ));
        } else {
            return Err(SqlError::parse(
                b_pos,
                format!("join condition must link '{table}' to an earlier table"),
            ));
        };
        Ok(JoinSpec {
            table,
            left_col: left,
            right_col: right,
        })
    }

    fn parse_join_col(&mut self) -> Result<ColumnRef, SqlError> {
        let pos = self.here();
        let col = self.parse_qcol()?;
        if col.table.is_none() {
            return Err(SqlError::parse(pos, "join columns must be table-qualified"));
        }
        Ok(col)
    }

    fn parse_conditions(&mut self, in_having: bool) -> Result<Vec<Condition<Literal>>, SqlError> {
        let mut conditions = vec![self.parse_condition(in_having)?];
        loop {
            if self.peek_ident_is("or") {
                return Err(SqlError::unsupported("OR"));
            }
            if !self.eat_ident("and") {
                break;
            }
            conditions.push(self.parse_condition(in_having)?);
        }
        Ok(conditions)
    }

    fn parse_condition(&mut self, in_having: bool) -> Result<Condition<Literal>, SqlError> {
        let target_pos = self.here();
        let target = {
            let agg = match self.peek().map(|t| &t.kind) {
                Some(TokenKind::Ident(s)) => AggFunc::from_keyword(s),
                _ => None,
            };
            if agg.is_some()
                && matches!(self.peek_at(1).map(|t| &t.kind), Some(TokenKind::LParen))
            {
                if !in_having {
                    return Err(SqlError::parse(
                        target_pos,
                        "aggregate conditions are only allowed in HAVING",
                    ));
                }
                let agg = agg.unwrap();
                self.pos += 2;
                let inner = if matches!(self.peek().map(|t| &t.kind), Some(TokenKind::Star)) {
                    self.pos += 1;
                    if agg != AggFunc::Count {
                        return Err(self.err(format!("{agg} cannot aggregate *")));
                    }
                    SelectTarget::Star
                } else {
                    SelectTarget::Column(self.parse_qcol()?)
                };
                self.expect_kind(TokenKind::RParen, "closing parenthesis")?;
                ConditionTarget::Aggregate(agg, inner)
            } else {
                ConditionTarget::Column(self.parse_qcol()?)
            }
        };

        if self.peek_ident_is("not") {
            return Err(self.err("NOT is not supported"));
        }

        let op = match self.peek().map(|t| t.kind.clone()) {
            Some(TokenKind::Eq) => {
                self.pos += 1;
                CompareOp::Eq
            }
            Some(TokenKind::Ne) => {
                self.pos += 1;
                CompareOp::Ne
            }
            Some(TokenKind::Lt) => {
                self.pos += 1;
                CompareOp::Lt
            }
            Some(TokenKind::Le) => {
                self.pos += 1;
                CompareOp::Le
            }
            Some(TokenKind::Gt) => {
                self.pos += 1;
                CompareOp::Gt
            }
            Some(TokenKind::Ge) => {
                self.pos += 1;
                CompareOp::Ge
            }
            Some(TokenKind::Ident(s)) if s.eq_ignore_ascii_case("like") => {
                self.pos += 1;
                CompareOp::Like
            }
            Some(TokenKind::Ident(s)) if s.eq_ignore_ascii_case("in") => {
                self.pos += 1;
                CompareOp::In
            }
            Some(TokenKind::Ident(s)) if s.eq_ignore_ascii_case("between") => {
                self.pos += 1;
                CompareOp::Between
            }
            _ => return Err(self.err("expected comparison operator")),
        };

        let values = match op {
            CompareOp::In => {
                self.expect_kind(TokenKind::LParen, "'('")?;
                if self.peek_ident_is("select") {
                    return Err(SqlError::unsupported("subquery"));
                }
                let mut values = vec![self.parse_literal()?];
                while matches!(self.peek().map(|t| &t.kind), Some(TokenKind::Comma)) {
                    self.pos += 1;
                    values.push(self.parse_literal()?);
                }
                self.expect_kind(TokenKind::RParen, "')'")?;
                values
            }
            CompareOp::Between => {
                let low = self.parse_literal()?;
                self.expect_ident("and")?;
                let high = self.parse_literal()?;
                vec![low, high]
            }
            _ => vec![self.parse_literal()?],
        };

        Ok(Condition { target, op, values })
    }

    fn parse_literal(&mut self) -> Result<Literal, SqlError> {
        match self.peek().cloned() {
            Some(Token {
                kind: TokenKind::Number(raw),
                start,
                end,
            }) => {
                self.pos += 1;
                let kind = if raw.contains('.') {
                    LiteralKind::Decimal
                } else {
                    LiteralKind::Integer
                };
                let mut lit = Literal::new(kind, raw);
                lit.span = Span::new(start, end);
                Ok(lit)
            }
            Some(Token {
                kind: TokenKind::Str(content),
                start,
                end,
            }) => {
                self.pos += 1;
                let kind = if dates::parse_absolute(&content).is_some() {
                    LiteralKind::Date
                } else {
                    LiteralKind::String
                };
                let mut lit = Literal::new(kind, content);
                lit.span = Span::new(start, end);
                Ok(lit)
            }
            Some(Token {
                kind: TokenKind::LParen,
                ..
            }) => {
                if self.ident_at_is(1, "select") {
                    Err(SqlError::unsupported("subquery"))
                } else {
                    Err(self.err("expected literal value"))
                }
            }
            _ => Err(self.err("expected literal value")),
        }
    }

    fn parse_limit(&mut self) -> Result<u64, SqlError> {
        match self.peek().cloned() {
            Some(Token {
                kind: TokenKind::Number(raw),
                start,
                ..
            }) => match raw.parse::<u64>() {
                Ok(n) => {
                    self.pos += 1;
                    Ok(n)
                }
                Err(_) => Err(SqlError::parse(
                    start,
                    "LIMIT must be a nonnegative integer",
                )),
            },
            _ => Err(self.err("LIMIT must be a nonnegative integer")),
        }
    }

    /// Final normalization: joins sorted; on single-table queries the
    /// (necessarily redundant) table qualifiers are stripped.
    fn canonicalize(&self, query: &mut CanonicalQuery) {
        query.sort_joins();
        if query.joins.is_empty() {
            for_each_column_mut(query, &mut |col| {
                col.table = None;
            });
        }
    }
}

fn is_clause_start(word: &str) -> bool {
    matches!(
        word.to_ascii_lowercase().as_str(),
        "where" | "group" | "having" | "order" | "limit" | "union" | "except" | "intersect"
    )
}

fn for_each_column_mut(query: &mut CanonicalQuery, f: &mut impl FnMut(&mut ColumnRef)) {
    for item in &mut query.select {
        if let SelectTarget::Column(c) = &mut item.target {
            f(c);
        }
    }
    for cond in query
        .where_conditions
        .iter_mut()
        .chain(query.having.iter_mut())
    {
        match &mut cond.target {
            ConditionTarget::Column(c) => f(c),
            ConditionTarget::Aggregate(_, SelectTarget::Column(c)) => f(c),
            ConditionTarget::Aggregate(_, SelectTarget::Star) => {}
        }
    }
    for col in &mut query.group_by {
        f(col);
    }
    if let Some(order) = &mut query.order_by {
        f(&mut order.target);
    }
}
