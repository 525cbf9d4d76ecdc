//! Dataset file handling: one record per line, question and target
//! separated by a tab. Targets are auto-detected as SQL statements or
//! API calls of the form `name(key=value, ...)`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::api::{self, ApiError};
use crate::sql::{parse_sql, CanonicalQuery, SqlError};

#[derive(Debug, Clone, PartialEq)]
pub struct ParsedTarget {
    pub query: CanonicalQuery,
    /// The target came from an API call and round-trips back through one.
    pub api_origin: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetRecord {
    /// 1-based line number; doubles as the example id.
    pub line_no: usize,
    pub question: String,
    pub target_text: String,
    pub target: ParsedTarget,
}

#[derive(Debug, Clone, PartialEq, Error, Serialize, Deserialize)]
pub enum DataErrorKind {
    #[error("expected two tab-separated fields (question, target)")]
    MissingSeparator,
    #[error("question field is empty")]
    EmptyQuestion,
    #[error("target field is empty")]
    EmptyTarget,
    #[error("{0}")]
    BadTarget(String),
}

#[derive(Debug, Clone, PartialEq, Error, Serialize, Deserialize)]
#[error("line {line_no}: {kind}")]
pub struct DataError {
    pub line_no: usize,
    pub kind: DataErrorKind,
}

/// Parses a target as either an API call or SQL, remembering its origin.
pub fn parse_target(text: &str) -> Result<ParsedTarget, String> {
    if api::is_api_target(text) {
        let call = api::parse_api(text).map_err(|e| e.to_string())?;
        let query = api::api_to_sql(&call).map_err(|e: ApiError| e.to_string())?;
        Ok(ParsedTarget {
            query,
            api_origin: true,
        })
    } else {
        let query = parse_sql(text).map_err(|e: SqlError| e.to_string())?;
        Ok(ParsedTarget {
            query,
            api_origin: false,
        })
    }
}

/// Parses a whole dataset file. Blank lines are skipped; failures come
/// back per line rather than aborting the read.
pub fn parse_dataset(text: &str) -> (Vec<DatasetRecord>, Vec<DataError>) {
    let mut records = Vec::new();
    let mut errors = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let line_no = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let Some((question, target_text)) = line.split_once('\t') else {
            errors.push(DataError {
                line_no,
                kind: DataErrorKind::MissingSeparator,
            });
            continue;
        };
        let question = question.trim();
        let target_text = target_text.trim();
        if question.is_empty() {
            errors.push(DataError {
                line_no,
                kind: DataErrorKind::EmptyQuestion,
            });
            continue;
        }
        if target_text.is_empty() {
            errors.push(DataError {
                line_no,
                kind: DataErrorKind::EmptyTarget,
            });
            continue;
        }
        match parse_target(target_text) {
            Ok(target) => records.push(DatasetRecord {
                line_no,
                question: question.to_string(),
                target_text: target_text.to_string(),
                target,
            }),
            Err(message) => errors.push(DataError {
                line_no,
                kind: DataErrorKind::BadTarget(message),
            }),
        }
    }
    (records, errors)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sql::serialize;

    #[test]
    fn parses_sql_and_api_lines() {
        let text = "How warm is it in Seattle?\ttemperature(city='Seattle')\n\
                    list open orders\tSELECT id FROM orders WHERE status = 'open'\n";
        let (records, errors) = parse_dataset(text);
        assert!(errors.is_empty());
        assert_eq!(records.len(), 2);
        assert!(records[0].target.api_origin);
        assert_eq!(
            serialize(&records[0].target.query),
            "SELECT t FROM temperature WHERE city = 'Seattle'"
        );
        assert!(!records[1].target.api_origin);
        assert_eq!(records[0].line_no, 1);
        assert_eq!(records[1].line_no, 2);
    }

    #[test]
    fn blank_lines_are_skipped() {
        let text = "\n\nq\tSELECT a FROM t\n\n";
        let (records, errors) = parse_dataset(text);
        assert_eq!(records.len(), 1);
        assert!(errors.is_empty());
        assert_eq!(records[0].line_no, 3);
    }

    #[test]
    fn per_line_errors_are_collected() {
        let text = "no separator here\n\
                    \tSELECT a FROM t\n\
                    q\t\n\
                    q\tDELETE FROM t\n\
                    ok\tSELECT a FROM t\n";
        let (records, errors) = parse_dataset(text);
        assert_eq!(records.len(), 1);
        assert_eq!(errors.len(), 4);
        assert_eq!(errors[0].kind, DataErrorKind::MissingSeparator);
        assert_eq!(errors[1].kind, DataErrorKind::EmptyQuestion);
        assert_eq!(errors[2].kind, DataErrorKind::EmptyTarget);
        assert!(matches!(errors[3].kind, DataErrorKind::BadTarget(_)));
    }
}
