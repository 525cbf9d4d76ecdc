//! AST types for the restricted SQL dialect.
//!
//! A [`Query`] is generic over its condition value type: `Query<Literal>`
//! (aliased [`CanonicalQuery`]) carries concrete literals, while templates
//! use `Query<SlotKey>` with every condition literal replaced by a slot
//! placeholder.

use std::fmt;
use std::hash::{Hash, Hasher};

use serde::{Deserialize, Serialize};

/// Byte range in the source text a node was parsed from. Synthesized nodes
/// use the empty span. Spans never participate in equality.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Span {
    pub start: usize,
    pub end: usize,
}

impl Span {
    pub fn new(start: usize, end: usize) -> Self {
        Span { start, end }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LiteralKind {
    String,
    Integer,
    Decimal,
    /// A quoted literal whose text matches one of the recognized date
    /// layouts (see [`crate::dates::DATE_LAYOUTS`]).
    Date,
}

/// A condition or argument value. The lexeme is the exact source text with
/// string quotes stripped and `''` escapes resolved; serialization restores
/// quoting. Equality and hashing ignore the span.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Literal {
    pub kind: LiteralKind,
    pub lexeme: String,
    #[serde(default)]
    pub span: Span,
}

impl Literal {
    pub fn new(kind: LiteralKind, lexeme: impl Into<String>) -> Self {
        Literal {
            kind,
            lexeme: lexeme.into(),
            span: Span::default(),
        }
    }

    pub fn string(lexeme: impl Into<String>) -> Self {
        Literal::new(LiteralKind::String, lexeme)
    }

    pub fn integer(lexeme: impl Into<String>) -> Self {
        Literal::new(LiteralKind::Integer, lexeme)
    }

    pub fn decimal(lexeme: impl Into<String>) -> Self {
        Literal::new(LiteralKind::Decimal, lexeme)
    }

    pub fn date(lexeme: impl Into<String>) -> Self {
        Literal::new(LiteralKind::Date, lexeme)
    }

    pub fn is_quoted(&self) -> bool {
        matches!(self.kind, LiteralKind::String | LiteralKind::Date)
    }

    /// Canonical token text, with quoting and escaping for string kinds.
    pub fn render(&self) -> String {
        if self.is_quoted() {
            format!("'{}'", self.lexeme.replace('\'', "''"))
        } else {
            self.lexeme.clone()
        }
    }
}

impl PartialEq for Literal {
    fn eq(&self, other: &Self) -> bool {
        self.kind == other.kind && self.lexeme == other.lexeme
    }
}

impl Eq for Literal {}

impl Hash for Literal {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.kind.hash(state);
        self.lexeme.hash(state);
    }
}

/// Possibly table-qualified column reference. Identifiers are case-folded
/// to lowercase at parse time.
#[derive(
    Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize,
)]
pub struct ColumnRef {
    pub table: Option<String>,
    pub column: String,
}

impl ColumnRef {
    pub fn bare(column: impl Into<String>) -> Self {
        ColumnRef {
            table: None,
            column: column.into(),
        }
    }

    pub fn qualified(table: impl Into<String>, column: impl Into<String>) -> Self {
        ColumnRef {
            table: Some(table.into()),
            column: column.into(),
        }
    }
}

impl fmt::Display for ColumnRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.table {
            Some(t) => write!(f, "{}.{}", t, self.column),
            None => write!(f, "{}", self.column),
        }
    }
}

#[derive(
    Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize,
)]
#[serde(rename_all = "snake_case")]
pub enum AggFunc {
    Count,
    Sum,
    Avg,
    Min,
    Max,
}

impl AggFunc {
    pub fn from_keyword(word: &str) -> Option<Self> {
        match word.to_ascii_lowercase().as_str() {
            "count" => Some(AggFunc::Count),
            "sum" => Some(AggFunc::Sum),
            "avg" => Some(AggFunc::Avg),
            "min" => Some(AggFunc::Min),
            "max" => Some(AggFunc::Max),
            _ => None,
        }
    }
}

impl fmt::Display for AggFunc {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            AggFunc::Count => "COUNT",
            AggFunc::Sum => "SUM",
            AggFunc::Avg => "AVG",
            AggFunc::Min => "MIN",
            AggFunc::Max => "MAX",
        };
        write!(f, "{s}")
    }
}

#[derive(
    Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize,
)]
pub enum SelectTarget {
    Star,
    Column(ColumnRef),
}

impl fmt::Display for SelectTarget {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SelectTarget::Star => write!(f, "*"),
            SelectTarget::Column(c) => write!(f, "{c}"),
        }
    }
}

/// One SELECT clause item. A star target only admits no aggregation or
/// `COUNT`.
#[derive(
    Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize,
)]
pub struct SelectItem {
    pub agg: Option<AggFunc>,
    pub target: SelectTarget,
    pub alias: Option<String>,
}

impl SelectItem {
    pub fn column(col: ColumnRef) -> Self {
        SelectItem {
            agg: None,
            target: SelectTarget::Column(col),
            alias: None,
        }
    }

    pub fn star() -> Self {
        SelectItem {
            agg: None,
            target: SelectTarget::Star,
            alias: None,
        }
    }

    pub fn aggregate(agg: AggFunc, target: SelectTarget) -> Self {
        SelectItem {
            agg: Some(agg),
            target,
            alias: None,
        }
    }
}

impl fmt::Display for SelectItem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.agg {
            Some(agg) => write!(f, "{}({})", agg, self.target)?,
            None => write!(f, "{}", self.target)?,
        }
        if let Some(alias) = &self.alias {
            write!(f, " AS {alias}")?;
        }
        Ok(())
    }
}

/// One INNER JOIN. Both ON sides are fully qualified after alias
/// resolution; `right_col` always references `table` and `left_col` an
/// earlier table, so swapped ON sides canonicalize identically. The join
/// list of a query is kept sorted by `(table, left_col, right_col)`.
#[derive(
    Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize,
)]
pub struct JoinSpec {
    pub table: String,
    pub left_col: ColumnRef,
    pub right_col: ColumnRef,
}

impl fmt::Display for JoinSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "JOIN {} ON {} = {}", self.table, self.left_col, self.right_col)
    }
}

#[derive(
    Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize,
)]
#[serde(rename_all = "snake_case")]
pub enum CompareOp {
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
    Like,
    In,
    Between,
}

impl CompareOp {
    /// Number of literal values the operator takes; `None` means one or
    /// more (IN).
    pub fn arity(&self) -> Option<usize> {
        match self {
            CompareOp::Between => Some(2),
            CompareOp::In => None,
            _ => Some(1),
        }
    }
}

impl fmt::Display for CompareOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            CompareOp::Eq => "=",
            CompareOp::Ne => "<>",
            CompareOp::Lt => "<",
            CompareOp::Le => "<=",
            CompareOp::Gt => ">",
            CompareOp::Ge => ">=",
            CompareOp::Like => "LIKE",
            CompareOp::In => "IN",
            CompareOp::Between => "BETWEEN",
        };
        write!(f, "{s}")
    }
}

/// Left-hand side of a condition. Aggregate targets are only legal in
/// HAVING position; the parser enforces that.
#[derive(
    Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize,
)]
pub enum ConditionTarget {
    Column(ColumnRef),
    Aggregate(AggFunc, SelectTarget),
}

impl fmt::Display for ConditionTarget {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConditionTarget::Column(c) => write!(f, "{c}"),
            ConditionTarget::Aggregate(agg, t) => write!(f, "{agg}({t})"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Condition<V> {
    pub target: ConditionTarget,
    pub op: CompareOp,
    pub values: Vec<V>,
}

#[derive(
    Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize,
)]
#[serde(rename_all = "snake_case")]
pub enum OrderDirection {
    Asc,
    Desc,
}

impl fmt::Display for OrderDirection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OrderDirection::Asc => write!(f, "ASC"),
            OrderDirection::Desc => write!(f, "DESC"),
        }
    }
}

/// ORDER BY target: a column reference or a bare select alias.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct OrderBy {
    pub target: ColumnRef,
    pub direction: OrderDirection,
}

/// Normalized single-block SELECT. The join set is order-insensitive
/// (stored sorted), WHERE and HAVING are conjunctions in source order, and
/// serialization is the exact-match normal form.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Query<V> {
    pub select: Vec<SelectItem>,
    pub from_table: String,
    pub joins: Vec<JoinSpec>,
    pub where_conditions: Vec<Condition<V>>,
    pub group_by: Vec<ColumnRef>,
    pub having: Vec<Condition<V>>,
    pub order_by: Option<OrderBy>,
    pub limit: Option<u64>,
}

pub type CanonicalQuery = Query<Literal>;

impl<V> Query<V> {
    pub fn new(from_table: impl Into<String>) -> Self {
        Query {
            select: Vec::new(),
            from_table: from_table.into(),
            joins: Vec::new(),
            where_conditions: Vec::new(),
            group_by: Vec::new(),
            having: Vec::new(),
            order_by: None,
            limit: None,
        }
    }

    /// All tables the query may reference: FROM plus joined tables.
    pub fn involved_tables(&self) -> Vec<&str> {
        let mut tables = vec![self.from_table.as_str()];
        tables.extend(self.joins.iter().map(|j| j.table.as_str()));
        tables
    }

    pub fn sort_joins(&mut self) {
        self.joins.sort();
    }

    /// Conditions in canonical order: WHERE before HAVING, each in source
    /// order, tagged with their clause.
    pub fn conditions(&self) -> impl Iterator<Item = (ConditionClause, &Condition<V>)> {
        self.where_conditions
            .iter()
            .map(|c| (ConditionClause::Where, c))
            .chain(self.having.iter().map(|c| (ConditionClause::Having, c)))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConditionClause {
    Where,
    Having,
}

/// Identifies one value placeholder within a template: the canonical text
/// of the condition target, the operator, and a 0-based index among
/// identical `(column, op)` pairs in that template. The reserved column
/// `$limit` keys a slotted LIMIT value.
#[derive(
    Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize,
)]
pub struct SlotKey {
    pub column: String,
    pub op: CompareOp,
    pub occurrence: u32,
}

impl SlotKey {
    pub fn new(column: impl Into<String>, op: CompareOp, occurrence: u32) -> Self {
        SlotKey {
            column: column.into(),
            op,
            occurrence,
        }
    }

    /// Stable string form used as a map key in serialized artifacts.
    pub fn key_string(&self) -> String {
        format!("{}|{}|{}", self.column, self.op, self.occurrence)
    }
}

impl fmt::Display for SlotKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "<{},{},{}>", self.column, self.op, self.occurrence)
    }
}

pub const LIMIT_SLOT_COLUMN: &str = "$limit";

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn literal_equality_ignores_span() {
        let mut a = Literal::string("Seattle");
        a.span = Span::new(10, 19);
        let b = Literal::string("Seattle");
        assert_eq!(a, b);
        assert_ne!(Literal::string("5"), Literal::integer("5"));
    }

    #[test]
    fn literal_render_escapes_quotes() {
        assert_eq!(Literal::string("It's").render(), "'It''s'");
        assert_eq!(Literal::integer("42").render(), "42");
    }

    #[test]
    fn slot_key_string_is_stable() {
        let key = SlotKey::new("orders.total", CompareOp::Gt, 1);
        assert_eq!(key.key_string(), "orders.total|>|1");
    }
}
