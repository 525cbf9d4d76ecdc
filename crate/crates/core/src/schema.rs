//! Schema description: tables, columns, types and allowed values for
//! enumerated columns.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::sql::{ColumnRef, ConditionTarget, Query, SelectTarget};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ColumnType {
    Text,
    Int,
    Decimal,
    Date,
    Enum,
}

impl fmt::Display for ColumnType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            ColumnType::Text => "text",
            ColumnType::Int => "int",
            ColumnType::Decimal => "decimal",
            ColumnType::Date => "date",
            ColumnType::Enum => "enum",
        };
        write!(f, "{s}")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnDef {
    pub name: String,
    #[serde(rename = "type")]
    pub column_type: ColumnType,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub allowed_values: Option<Vec<String>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableDef {
    pub name: String,
    pub columns: Vec<ColumnDef>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SchemaDescription {
    pub tables: Vec<TableDef>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SchemaError {
    #[error("invalid schema JSON: {0}")]
    Parse(String),
    #[error("duplicate table '{0}'")]
    DuplicateTable(String),
    #[error("duplicate column '{column}' in table '{table}'")]
    DuplicateColumn { table: String, column: String },
    #[error("enum column '{table}.{column}' must list allowed values")]
    EmptyEnum { table: String, column: String },
}

/// A query reference that does not exist in the schema.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SchemaViolation {
    #[error("unknown table '{0}'")]
    UnknownTable(String),
    #[error("unknown column '{0}'")]
    UnknownColumn(String),
}

impl SchemaDescription {
    pub fn from_json(text: &str) -> Result<Self, SchemaError> {
        let schema: SchemaDescription =
            serde_json::from_str(text).map_err(|e| SchemaError::Parse(e.to_string()))?;
        let schema = schema.normalized();
        schema.validate()?;
        Ok(schema)
    }

    pub fn to_json(&self) -> String {
        let mut out = serde_json::to_string_pretty(self).expect("schema serializes");
        out.push('\n');
        out
    }

    /// Case-folds table and column names; identifiers in queries are
    /// folded the same way.
    pub fn normalized(mut self) -> Self {
        for table in &mut self.tables {
            table.name = table.name.to_lowercase();
            for column in &mut table.columns {
                column.name = column.name.to_lowercase();
            }
        }
        self
    }

    pub fn validate(&self) -> Result<(), SchemaError> {
        let mut seen_tables = std::collections::BTreeSet::new();
        for table in &self.tables {
            if !seen_tables.insert(table.name.clone()) {
                return Err(SchemaError::DuplicateTable(table.name.clone()));
            }
            let mut seen_columns = std::collections::BTreeSet::new();
            for column in &table.columns {
                if !seen_columns.insert(column.name.clone()) {
                    return Err(SchemaError::DuplicateColumn {
                        table: table.name.clone(),
                        column: column.name.clone(),
                    });
                }
                if column.column_type == ColumnType::Enum
                    && column.allowed_values.as_ref().map_or(true, Vec::is_empty)
                {
                    return Err(SchemaError::EmptyEnum {
                        table: table.name.clone(),
                        column: column.name.clone(),
                    });
                }
            }
        }
        Ok(())
    }

    pub fn table(&self, name: &str) -> Option<&TableDef> {
        self.tables.iter().find(|t| t.name == name)
    }

    pub fn column(&self, table: &str, column: &str) -> Option<&ColumnDef> {
        self.table(table)?.columns.iter().find(|c| c.name == column)
    }

    /// Resolves a possibly unqualified column against a list of candidate
    /// tables, in order.
    pub fn resolve_column<S: AsRef<str>>(
        &self,
        tables: &[S],
        col: &ColumnRef,
    ) -> Option<&ColumnDef> {
        match &col.table {
            Some(table) => self.column(table, &col.column),
            None => tables
                .iter()
                .find_map(|t| self.column(t.as_ref(), &col.column)),
        }
    }

    /// Checks that every table and column a query references exists.
    /// A bare ORDER BY target matching a select alias is legal.
    pub fn check_query<V>(&self, query: &Query<V>) -> Result<(), SchemaViolation> {
        let tables: Vec<String> = query
            .involved_tables()
            .into_iter()
            .map(str::to_string)
            .collect();
        for table in &tables {
            if self.table(table).is_none() {
                return Err(SchemaViolation::UnknownTable(table.clone()));
            }
        }

        let check_col = |col: &ColumnRef| -> Result<(), SchemaViolation> {
            if self.resolve_column(&tables, col).is_none() {
                return Err(SchemaViolation::UnknownColumn(col.to_string()));
            }
            Ok(())
        };

        for item in &query.select {
            if let SelectTarget::Column(col) = &item.target {
                check_col(col)?;
            }
        }
        for join in &query.joins {
            check_col(&join.left_col)?;
            check_col(&join.right_col)?;
        }
        for (_, cond) in query.conditions() {
            match &cond.target {
                ConditionTarget::Column(col) => check_col(col)?,
                ConditionTarget::Aggregate(_, SelectTarget::Column(col)) => check_col(col)?,
                ConditionTarget::Aggregate(_, SelectTarget::Star) => {}
            }
        }
        for col in &query.group_by {
            check_col(col)?;
        }
        if let Some(order) = &query.order_by {
            let is_alias = order.target.table.is_none()
                && query
                    .select
                    .iter()
                    .any(|i| i.alias.as_deref() == Some(order.target.column.as_str()));
            if !is_alias {
                check_col(&order.target)?;
            }
        }
        Ok(())
    }
}
