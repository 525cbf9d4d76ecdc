//! Slot machinery: aligning question spans to query literals, building
//! translation dictionaries, inferring slot types and format rules, and
//! transforming raw spans into query literals.

use std::collections::{BTreeMap, BTreeSet};

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::FuzzyConfig;
use crate::dates::{self, FormatRule, DEFAULT_DATE_PATTERN};
use crate::schema::{ColumnDef, ColumnType};
use crate::sql::{Literal, LiteralKind, SlotKey, Span};
use crate::text::{self, Token};

/// Longest n-gram (in tokens) considered when searching question spans.
pub const MAX_NGRAM: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SlotType {
    Date,
    Integer,
    Decimal,
    Enumerated,
    FreeText,
}

impl SlotType {
    /// Placeholder label used when masking question tokens.
    pub fn placeholder(&self) -> &'static str {
        match self {
            SlotType::Date => "⟨DATE⟩",
            SlotType::Integer => "⟨INTEGER⟩",
            SlotType::Decimal => "⟨DECIMAL⟩",
            SlotType::Enumerated => "⟨ENUM⟩",
            SlotType::FreeText => "⟨FREE_TEXT⟩",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AlignMethod {
    Exact,
    CaseInsensitive,
    Fuzzy,
    DateParse,
    NumberParse,
    Dictionary,
}

/// One alignment of a question span to a query literal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlotAnnotation {
    pub example_id: usize,
    pub slot_key: SlotKey,
    pub span: Span,
    pub span_text: String,
    pub literal: Literal,
    pub method: AlignMethod,
}

/// Everything the pipeline knows about one slot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlotEntry {
    pub key: SlotKey,
    pub slot_type: SlotType,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub format_rule: Option<FormatRule>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub allowed_values: Option<Vec<String>>,
    /// Case-folded surface form to query literal lexeme; only spans that
    /// differ from their lexeme are stored, identity is implicit.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub dictionary: BTreeMap<String, String>,
    /// Case-folded surface forms seen for this slot in training (spans and
    /// literal lexemes); the classifier's gazetteer.
    #[serde(default, skip_serializing_if = "BTreeSet::is_empty")]
    pub surfaces: BTreeSet<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SlotCatalog {
    /// Keyed by [`SlotKey::key_string`].
    pub entries: BTreeMap<String, SlotEntry>,
    /// Surface forms seen under more than one slot; per-slot entries
    /// shadow these on lookup.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub global_dictionary: BTreeMap<String, String>,
}

impl SlotCatalog {
    pub fn entry(&self, key: &SlotKey) -> Option<&SlotEntry> {
        self.entries.get(&key.key_string())
    }

    /// Dictionary lookup with per-slot entries shadowing the global map.
    pub fn lookup(&self, key: &SlotKey, folded_raw: &str) -> Option<&str> {
        if let Some(entry) = self.entry(key) {
            if let Some(mapped) = entry.dictionary.get(folded_raw) {
                return Some(mapped);
            }
        }
        self.global_dictionary.get(folded_raw).map(String::as_str)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum CatalogWarning {
    ConflictingEntry {
        slot: String,
        surface: String,
        kept: String,
        dropped: String,
    },
    /// The slot's date values do not share a single renderable layout.
    NoConsistentDateLayout { slot: String },
}

impl std::fmt::Display for CatalogWarning {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CatalogWarning::ConflictingEntry {
                slot,
                surface,
                kept,
                dropped,
            } => write!(
                f,
                "conflicting dictionary entry for slot {slot}: surface '{surface}' maps to '{kept}' (dropped '{dropped}')"
            ),
            CatalogWarning::NoConsistentDateLayout { slot } => {
                write!(f, "no single date layout renders every value of slot {slot}")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TransformError {
    #[error("cannot map value '{raw}' for slot {slot}: {reason}")]
    ValueUnmapped {
        slot: SlotKey,
        raw: String,
        reason: String,
    },
}

// ---------------------------------------------------------------------------
// Alignment
// ---------------------------------------------------------------------------

/// Inputs that alignment needs beyond the question and bindings.
#[derive(Debug, Clone, Copy)]
pub struct AlignContext {
    pub clock: NaiveDate,
    pub fuzzy_alignment: f64,
}

#[derive(Debug, Clone)]
struct SpanCandidate {
    start: usize,
    end: usize,
    text: String,
    method: AlignMethod,
    distance: f64,
}

fn method_rank(method: AlignMethod) -> u8 {
    match method {
        AlignMethod::Exact => 0,
        AlignMethod::CaseInsensitive => 1,
        AlignMethod::NumberParse => 2,
        AlignMethod::DateParse => 3,
        AlignMethod::Fuzzy => 4,
        AlignMethod::Dictionary => 5,
    }
}

fn candidates_for_literal(
    question: &str,
    tokens: &[Token],
    literal: &Literal,
    ctx: &AlignContext,
) -> Vec<SpanCandidate> {
    let mut found = Vec::new();
    let folded_lexeme = text::fold_ws(&literal.lexeme);
    let literal_date = match literal.kind {
        LiteralKind::Date => dates::parse_absolute(&literal.lexeme).map(|(d, _)| d),
        _ => None,
    };
    let numeric = matches!(literal.kind, LiteralKind::Integer | LiteralKind::Decimal);

    for (i, j) in text::ngram_spans(tokens.len(), MAX_NGRAM) {
        let start = tokens[i].start;
        let end = tokens[j].end;
        let span_text = &question[start..end];
        let push = |found: &mut Vec<SpanCandidate>, method: AlignMethod, distance: f64| {
            found.push(SpanCandidate {
                start,
                end,
                text: span_text.to_string(),
                method,
                distance,
            });
        };

        if span_text == literal.lexeme {
            push(&mut found, AlignMethod::Exact, 0.0);
            continue;
        }
        if text::fold_ws(span_text) == folded_lexeme {
            push(&mut found, AlignMethod::CaseInsensitive, 0.0);
            continue;
        }
        if numeric && i == j && text::numbers_equal(span_text, &literal.lexeme) {
            push(&mut found, AlignMethod::NumberParse, 0.0);
            continue;
        }
        if let Some(target) = literal_date {
            if dates::parse_date_phrase(span_text, ctx.clock) == Some(target) {
                push(&mut found, AlignMethod::DateParse, 0.0);
                continue;
            }
        }
        let distance = text::normalized_edit_distance(&text::fold_ws(span_text), &folded_lexeme);
        if distance <= ctx.fuzzy_alignment {
            push(&mut found, AlignMethod::Fuzzy, distance);
        }
    }

    found.sort_by(|a, b| {
        method_rank(a.method)
            .cmp(&method_rank(b.method))
            .then(a.distance.total_cmp(&b.distance))
            .then(a.start.cmp(&b.start))
            .then(a.end.cmp(&b.end))
    });
    found
}

fn overlaps(a: (usize, usize), b: (usize, usize)) -> bool {
    a.0 < b.1 && b.0 < a.1
}

/// Aligns each bound literal to a question span. The per-literal search
/// runs methods in priority order (exact, case-insensitive, number parse,
/// date parse, fuzzy); when two literals claim overlapping spans the
/// longer span wins, ties going leftmost. Unaligned slot keys are
/// returned, not errors.
pub fn align(
    example_id: usize,
    question: &str,
    bindings: &[(SlotKey, Literal)],
    ctx: &AlignContext,
) -> (Vec<SlotAnnotation>, Vec<SlotKey>) {
    let tokens = text::tokenize(question);
    let per_literal: Vec<Vec<SpanCandidate>> = bindings
        .iter()
        .map(|(_, literal)| candidates_for_literal(question, &tokens, literal, ctx))
        .collect();

    // Iteratively grant spans: each unresolved literal proposes its best
    // candidate not overlapping already-claimed spans; among proposals the
    // longest span wins, leftmost on ties, then binding order.
    let mut claimed: Vec<(usize, usize)> = Vec::new();
    let mut chosen: Vec<Option<SpanCandidate>> = vec![None; bindings.len()];
    let mut undecided: BTreeSet<usize> = (0..bindings.len()).collect();

    loop {
        let mut proposals: Vec<(usize, SpanCandidate)> = Vec::new();
        for &idx in &undecided {
            let available = per_literal[idx]
                .iter()
                .find(|c| !claimed.iter().any(|cl| overlaps((c.start, c.end), *cl)));
            if let Some(candidate) = available {
                proposals.push((idx, candidate.clone()));
            }
        }
        if proposals.is_empty() {
            break;
        }
        proposals.sort_by(|(ia, a), (ib, b)| {
            (b.end - b.start)
                .cmp(&(a.end - a.start))
                .then(a.start.cmp(&b.start))
                .then(ia.cmp(ib))
        });
        let (idx, winner) = proposals.into_iter().next().unwrap();
        claimed.push((winner.start, winner.end));
        chosen[idx] = Some(winner);
        undecided.remove(&idx);
    }

    let mut annotations = Vec::new();
    let mut unaligned = Vec::new();
    for (idx, (key, literal)) in bindings.iter().enumerate() {
        match &chosen[idx] {
            Some(c) => annotations.push(SlotAnnotation {
                example_id,
                slot_key: key.clone(),
                span: Span::new(c.start, c.end),
                span_text: c.text.clone(),
                literal: literal.clone(),
                method: c.method,
            }),
            None => unaligned.push(key.clone()),
        }
    }
    annotations.sort_by_key(|a| a.span.start);
    (annotations, unaligned)
}

/// Second-pass alignment for slots the first pass missed: a span counts
/// when an already-built dictionary maps it to the literal.
pub fn align_with_dictionary(
    example_id: usize,
    question: &str,
    key: &SlotKey,
    literal: &Literal,
    catalog: &SlotCatalog,
    claimed: &[(usize, usize)],
) -> Option<SlotAnnotation> {
    let tokens = text::tokenize(question);
    for (i, j) in text::ngram_spans(tokens.len(), MAX_NGRAM) {
        let start = tokens[i].start;
        let end = tokens[j].end;
        if claimed.iter().any(|c| overlaps((start, end), *c)) {
            continue;
        }
        let span_text = &question[start..end];
        if catalog.lookup(key, &text::fold_ws(span_text)) == Some(literal.lexeme.as_str()) {
            return Some(SlotAnnotation {
                example_id,
                slot_key: key.clone(),
                span: Span::new(start, end),
                span_text: span_text.to_string(),
                literal: literal.clone(),
                method: AlignMethod::Dictionary,
            });
        }
    }
    None
}

// ---------------------------------------------------------------------------
// Type inference and catalog construction
// ---------------------------------------------------------------------------

/// Heuristic slot type detection. Precedence: schema column type when
/// available; else date when every lexeme parses under one shared layout;
/// else integer/decimal when all values are numeric; else free text.
pub fn infer_slot_type(values: &[Literal], schema_col: Option<&ColumnDef>) -> SlotType {
    assert!(!values.is_empty(), "infer_slot_type requires values");
    if let Some(col) = schema_col {
        return match col.column_type {
            ColumnType::Enum => SlotType::Enumerated,
            ColumnType::Date => SlotType::Date,
            ColumnType::Int => SlotType::Integer,
            ColumnType::Decimal => SlotType::Decimal,
            ColumnType::Text => {
                if col.allowed_values.as_ref().is_some_and(|v| !v.is_empty()) {
                    SlotType::Enumerated
                } else {
                    SlotType::FreeText
                }
            }
        };
    }

    let mut shared_layout: Option<&'static str> = None;
    let all_dates = values.iter().all(|v| {
        match dates::parse_absolute(&v.lexeme) {
            Some((_, layout)) => match shared_layout {
                None => {
                    shared_layout = Some(layout);
                    true
                }
                Some(seen) => seen == layout,
            },
            None => false,
        }
    });
    if all_dates {
        return SlotType::Date;
    }

    let all_numeric = values
        .iter()
        .all(|v| matches!(v.kind, LiteralKind::Integer | LiteralKind::Decimal));
    if all_numeric {
        if values.iter().any(|v| v.kind == LiteralKind::Decimal) {
            return SlotType::Decimal;
        }
        return SlotType::Integer;
    }

    SlotType::FreeText
}

/// Per-slot inputs to catalog construction.
#[derive(Debug, Clone)]
pub struct SlotObservations {
    pub key: SlotKey,
    /// Literal values seen for this slot across the corpus, in example order.
    pub values: Vec<Literal>,
    pub schema_col: Option<ColumnDef>,
}

/// Builds the slot catalog from alignment annotations and per-slot
/// observations. Dictionary conflicts resolve by majority, ties by
/// lexicographically smallest value, and are reported as warnings.
pub fn build_catalog(
    observations: &[SlotObservations],
    annotations: &[SlotAnnotation],
) -> (SlotCatalog, Vec<CatalogWarning>) {
    let mut warnings = Vec::new();
    let mut entries = BTreeMap::new();

    // surface -> slot keys it appeared under, for the global section.
    let mut surface_slots: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
    // (slot, surface) -> value -> count, for conflict resolution.
    let mut votes: BTreeMap<(String, String), BTreeMap<String, usize>> = BTreeMap::new();

    for ann in annotations {
        let folded = text::fold_ws(&ann.span_text);
        surface_slots
            .entry(folded.clone())
            .or_default()
            .insert(ann.slot_key.key_string());
        if ann.span_text != ann.literal.lexeme {
            *votes
                .entry((ann.slot_key.key_string(), folded))
                .or_default()
                .entry(ann.literal.lexeme.clone())
                .or_insert(0) += 1;
        }
    }

    fn resolve(
        slot: &str,
        surface: &str,
        options: &BTreeMap<String, usize>,
        warnings: &mut Vec<CatalogWarning>,
    ) -> String {
        let best = options
            .iter()
            .max_by(|(va, ca), (vb, cb)| ca.cmp(cb).then(vb.cmp(va)))
            .map(|(v, _)| v.clone())
            .expect("nonempty vote map");
        for value in options.keys() {
            if *value != best {
                warnings.push(CatalogWarning::ConflictingEntry {
                    slot: slot.to_string(),
                    surface: surface.to_string(),
                    kept: best.clone(),
                    dropped: value.clone(),
                });
            }
        }
        best
    }

    for obs in observations {
        let key_string = obs.key.key_string();
        let slot_type = infer_slot_type(&obs.values, obs.schema_col.as_ref());

        let mut dictionary = BTreeMap::new();
        for ((slot, surface), options) in &votes {
            if *slot == key_string {
                let value = resolve(slot, surface, options, &mut warnings);
                dictionary.insert(surface.clone(), value);
            }
        }

        let mut surfaces: BTreeSet<String> = obs
            .values
            .iter()
            .map(|v| text::fold_ws(&v.lexeme))
            .collect();
        for ann in annotations {
            if ann.slot_key == obs.key {
                surfaces.insert(text::fold_ws(&ann.span_text));
            }
        }

        let format_rule = if slot_type == SlotType::Date {
            detect_slot_format_rule(&key_string, &obs.values, &mut warnings)
        } else {
            None
        };

        let allowed_values = obs
            .schema_col
            .as_ref()
            .and_then(|c| c.allowed_values.clone());

        entries.insert(
            key_string,
            SlotEntry {
                key: obs.key.clone(),
                slot_type,
                format_rule,
                allowed_values,
                dictionary,
                surfaces,
            },
        );
    }

    // Global section: surfaces seen under at least two slots.
    let mut global_dictionary = BTreeMap::new();
    for (surface, slots) in &surface_slots {
        if slots.len() < 2 {
            continue;
        }
        let mut merged: BTreeMap<String, usize> = BTreeMap::new();
        for ((_, s), options) in &votes {
            if s == surface {
                for (value, count) in options {
                    *merged.entry(value.clone()).or_insert(0) += count;
                }
            }
        }
        if !merged.is_empty() {
            let value = resolve("(global)", surface, &merged, &mut warnings);
            global_dictionary.insert(surface.clone(), value);
        }
    }

    (
        SlotCatalog {
            entries,
            global_dictionary,
        },
        warnings,
    )
}

/// A format rule is stored only when one layout renders every observed
/// value exactly; that keeps the rule correct by construction.
fn detect_slot_format_rule(
    slot: &str,
    values: &[Literal],
    warnings: &mut Vec<CatalogWarning>,
) -> Option<FormatRule> {
    let mut rule: Option<FormatRule> = None;
    for value in values {
        let (parsed, _) = dates::parse_absolute(&value.lexeme)?;
        match dates::detect_format_rule(parsed, &value.lexeme) {
            Some(found) => match &rule {
                None => rule = Some(found),
                Some(existing) if *existing == found => {}
                Some(_) => {
                    warnings.push(CatalogWarning::NoConsistentDateLayout {
                        slot: slot.to_string(),
                    });
                    return None;
                }
            },
            None => {
                warnings.push(CatalogWarning::NoConsistentDateLayout {
                    slot: slot.to_string(),
                });
                return None;
            }
        }
    }
    rule
}

// ---------------------------------------------------------------------------
// Value transformation
// ---------------------------------------------------------------------------

/// Maps a raw question span to a query literal. Pipeline order: per-slot
/// dictionary (shadowing the global one), then the slot-type specific
/// rule: enumerated values fuzzy-match the allowed list, dates go through
/// the natural-date grammar and the slot's format rule, numerics are
/// stripped of grouping and currency marks, free text passes through.
pub fn transform_value(
    raw: &str,
    key: &SlotKey,
    catalog: &SlotCatalog,
    clock: NaiveDate,
    fuzzy: &FuzzyConfig,
) -> Result<Literal, TransformError> {
    let entry = catalog
        .entry(key)
        .ok_or_else(|| TransformError::ValueUnmapped {
            slot: key.clone(),
            raw: raw.to_string(),
            reason: "slot has no catalog entry".to_string(),
        })?;

    let folded = text::fold_ws(raw);
    if let Some(mapped) = catalog.lookup(key, &folded) {
        return Ok(literal_for_slot(mapped.to_string(), entry.slot_type));
    }

    match entry.slot_type {
        SlotType::Enumerated => {
            let allowed = entry.allowed_values.clone().unwrap_or_default();
            if let Some(exact) = allowed.iter().find(|v| text::fold_ws(v) == folded) {
                return Ok(Literal::string(exact.clone()));
            }
            let best = allowed
                .iter()
                .map(|v| (text::normalized_edit_distance(&text::fold_ws(v), &folded), v))
                .min_by(|(da, va), (db, vb)| da.total_cmp(db).then(va.cmp(vb)));
            match best {
                Some((distance, value)) if distance <= fuzzy.enumerated => {
                    Ok(Literal::string(value.clone()))
                }
                _ => Err(TransformError::ValueUnmapped {
                    slot: key.clone(),
                    raw: raw.to_string(),
                    reason: "no allowed value within the fuzzy threshold".to_string(),
                }),
            }
        }
        SlotType::Date => {
            let date = dates::parse_date_phrase(raw, clock).ok_or_else(|| {
                TransformError::ValueUnmapped {
                    slot: key.clone(),
                    raw: raw.to_string(),
                    reason: "not a recognized date phrase".to_string(),
                }
            })?;
            let pattern = entry
                .format_rule
                .clone()
                .unwrap_or_else(|| FormatRule::new(DEFAULT_DATE_PATTERN));
            Ok(Literal::date(pattern.render(date)))
        }
        SlotType::Integer | SlotType::Decimal => {
            let stripped =
                text::strip_number(raw).ok_or_else(|| TransformError::ValueUnmapped {
                    slot: key.clone(),
                    raw: raw.to_string(),
                    reason: "not a numeric value".to_string(),
                })?;
            let kind = if stripped.contains('.') {
                LiteralKind::Decimal
            } else {
                LiteralKind::Integer
            };
            Ok(Literal::new(kind, stripped))
        }
        SlotType::FreeText => Ok(Literal::string(raw.to_string())),
    }
}

fn literal_for_slot(lexeme: String, slot_type: SlotType) -> Literal {
    match slot_type {
        SlotType::Date => Literal::date(lexeme),
        SlotType::Integer if lexeme.parse::<i64>().is_ok() => Literal::integer(lexeme),
        SlotType::Decimal if lexeme.parse::<f64>().is_ok() => {
            if lexeme.contains('.') {
                Literal::decimal(lexeme)
            } else {
                Literal::integer(lexeme)
            }
        }
        _ => Literal::string(lexeme),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sql::{extract_template, parse_sql, CompareOp, TemplateOptions};

    fn ctx() -> AlignContext {
        AlignContext {
            clock: NaiveDate::from_ymd_opt(2020, 10, 15).unwrap(),
            fuzzy_alignment: 0.2,
        }
    }

    fn bindings_of(sql: &str) -> Vec<(SlotKey, Literal)> {
        let q = parse_sql(sql).unwrap();
        extract_template(&q, &TemplateOptions::default()).1
    }

    #[test]
    fn aligns_exact_span() {
        let bindings = bindings_of("SELECT t FROM temperature WHERE city='Seattle'");
        let (annotations, unaligned) = align(
            1,
            "What's the current temperature in Seattle?",
            &bindings,
            &ctx(),
        );
        assert!(unaligned.is_empty());
        assert_eq!(annotations.len(), 1);
        assert_eq!(annotations[0].span_text, "Seattle");
        assert_eq!(annotations[0].method, AlignMethod::Exact);
    }

    #[test]
    fn exact_wins_over_fuzzy() {
        let bindings = bindings_of("SELECT t FROM temperature WHERE city='Seattle'");
        let (annotations, _) = align(1, "seattle or Seattle?", &bindings, &ctx());
        assert_eq!(annotations[0].method, AlignMethod::Exact);
        assert_eq!(annotations[0].span_text, "Seattle");
    }

    #[test]
    fn aligns_number_with_grouping() {
        let bindings = bindings_of("SELECT id FROM orders WHERE total > 1000");
        let (annotations, unaligned) =
            align(1, "orders over 1,000 dollars", &bindings, &ctx());
        assert!(unaligned.is_empty());
        assert_eq!(annotations[0].span_text, "1,000");
        assert_eq!(annotations[0].method, AlignMethod::NumberParse);
    }

    #[test]
    fn aligns_relative_date_phrase() {
        let bindings = bindings_of("SELECT t FROM f WHERE day = '2020-10-22'");
        let (annotations, unaligned) =
            align(1, "what happens next thursday", &bindings, &ctx());
        assert!(unaligned.is_empty());
        assert_eq!(annotations[0].span_text, "next thursday");
        assert_eq!(annotations[0].method, AlignMethod::DateParse);
    }

    #[test]
    fn aligns_case_insensitively() {
        let bindings = bindings_of("SELECT t FROM temperature WHERE city='Seattle'");
        let (annotations, _) = align(1, "temperature in seattle", &bindings, &ctx());
        assert_eq!(annotations[0].method, AlignMethod::CaseInsensitive);
        assert_eq!(annotations[0].span_text, "seattle");
    }

    #[test]
    fn unaligned_literals_are_reported_not_thrown() {
        let bindings = bindings_of("SELECT t FROM temperature WHERE city='Seattle'");
        let (annotations, unaligned) = align(1, "what is the weather", &bindings, &ctx());
        assert!(annotations.is_empty());
        assert_eq!(unaligned, vec![SlotKey::new("city", CompareOp::Eq, 0)]);
    }

    #[test]
    fn overlapping_spans_resolve_longest_first() {
        let bindings =
            bindings_of("SELECT a FROM t WHERE x = 'New York City' AND y = 'New York'");
        let (annotations, unaligned) = align(1, "flights to New York City", &bindings, &ctx());
        assert_eq!(annotations.len(), 1);
        assert_eq!(annotations[0].span_text, "New York City");
        assert_eq!(unaligned, vec![SlotKey::new("y", CompareOp::Eq, 0)]);
    }

    #[test]
    fn infer_type_follows_precedence() {
        assert_eq!(
            infer_slot_type(
                &[Literal::date("2020-10-20"), Literal::date("2021-01-03")],
                None
            ),
            SlotType::Date
        );
        assert_eq!(
            infer_slot_type(&[Literal::integer("5")], None),
            SlotType::Integer
        );
        assert_eq!(
            infer_slot_type(&[Literal::integer("5"), Literal::string("x")], None),
            SlotType::FreeText
        );
        assert_eq!(
            infer_slot_type(&[Literal::integer("5"), Literal::decimal("1.5")], None),
            SlotType::Decimal
        );
        let enum_col = ColumnDef {
            name: "status".into(),
            column_type: ColumnType::Enum,
            allowed_values: Some(vec!["open".into()]),
        };
        assert_eq!(
            infer_slot_type(&[Literal::string("5")], Some(&enum_col)),
            SlotType::Enumerated
        );
    }

    #[test]
    fn mixed_layout_dates_are_not_date_typed() {
        assert_eq!(
            infer_slot_type(
                &[Literal::date("2020-10-20"), Literal::date("10/20/2020")],
                None
            ),
            SlotType::FreeText
        );
    }

    fn observation(key: SlotKey, values: Vec<Literal>) -> SlotObservations {
        SlotObservations {
            key,
            values,
            schema_col: None,
        }
    }

    #[test]
    fn catalog_learns_dictionary_entries() {
        let key = SlotKey::new("city", CompareOp::Eq, 0);
        let annotations = vec![SlotAnnotation {
            example_id: 1,
            slot_key: key.clone(),
            span: Span::new(0, 3),
            span_text: "NYC".into(),
            literal: Literal::string("New York"),
            method: AlignMethod::Fuzzy,
        }];
        let (catalog, warnings) = build_catalog(
            &[observation(key.clone(), vec![Literal::string("New York")])],
            &annotations,
        );
        assert!(warnings.is_empty());
        assert_eq!(catalog.lookup(&key, "nyc"), Some("New York"));
        let entry = catalog.entry(&key).unwrap();
        assert!(entry.surfaces.contains("nyc"));
        assert!(entry.surfaces.contains("new york"));
    }

    #[test]
    fn identity_spans_store_no_dictionary_entry() {
        let key = SlotKey::new("city", CompareOp::Eq, 0);
        let annotations = vec![SlotAnnotation {
            example_id: 1,
            slot_key: key.clone(),
            span: Span::new(0, 7),
            span_text: "Seattle".into(),
            literal: Literal::string("Seattle"),
            method: AlignMethod::Exact,
        }];
        let (catalog, _) = build_catalog(
            &[observation(key.clone(), vec![Literal::string("Seattle")])],
            &annotations,
        );
        assert!(catalog.entry(&key).unwrap().dictionary.is_empty());
    }

    #[test]
    fn date_slot_carries_its_format_rule() {
        let key = SlotKey::new("day", CompareOp::Eq, 0);
        let (catalog, warnings) = build_catalog(
            &[observation(
                key.clone(),
                vec![Literal::date("2020-10-20"), Literal::date("2021-01-03")],
            )],
            &[],
        );
        assert!(warnings.is_empty());
        assert_eq!(
            catalog.entry(&key).unwrap().format_rule,
            Some(FormatRule::new("%Y-%m-%d"))
        );
    }

    #[test]
    fn mixed_date_layouts_store_no_rule() {
        let key = SlotKey::new("day", CompareOp::Eq, 0);
        let (catalog, warnings) = build_catalog(
            &[SlotObservations {
                key: key.clone(),
                values: vec![Literal::date("2020-10-20"), Literal::date("20-10-20")],
                schema_col: Some(ColumnDef {
                    name: "day".into(),
                    column_type: ColumnType::Date,
                    allowed_values: None,
                }),
            }],
            &[],
        );
        assert_eq!(catalog.entry(&key).unwrap().format_rule, None);
        assert_eq!(warnings.len(), 1);
    }

    #[test]
    fn conflicting_entries_resolve_by_majority_then_lexicographic() {
        let key = SlotKey::new("city", CompareOp::Eq, 0);
        let make = |literal: &str| SlotAnnotation {
            example_id: 1,
            slot_key: key.clone(),
            span: Span::new(0, 3),
            span_text: "NYC".into(),
            literal: Literal::string(literal),
            method: AlignMethod::Fuzzy,
        };
        let annotations = vec![make("New York"), make("Newark"), make("New York")];
        let (catalog, warnings) = build_catalog(
            &[observation(key.clone(), vec![Literal::string("New York")])],
            &annotations,
        );
        assert_eq!(catalog.lookup(&key, "nyc"), Some("New York"));
        assert_eq!(warnings.len(), 1);

        let annotations = vec![make("Boise"), make("Albany")];
        let (catalog, _) = build_catalog(
            &[observation(key.clone(), vec![Literal::string("Albany")])],
            &annotations,
        );
        assert_eq!(catalog.lookup(&key, "nyc"), Some("Albany"));
    }

    #[test]
    fn shared_surfaces_enter_the_global_dictionary() {
        let key_a = SlotKey::new("customers.city", CompareOp::Eq, 0);
        let key_b = SlotKey::new("temperature.city", CompareOp::Eq, 0);
        let ann = |key: &SlotKey| SlotAnnotation {
            example_id: 1,
            slot_key: key.clone(),
            span: Span::new(0, 3),
            span_text: "NYC".into(),
            literal: Literal::string("New York"),
            method: AlignMethod::Fuzzy,
        };
        let (catalog, _) = build_catalog(
            &[
                observation(key_a.clone(), vec![Literal::string("New York")]),
                observation(key_b.clone(), vec![Literal::string("New York")]),
            ],
            &[ann(&key_a), ann(&key_b)],
        );
        assert_eq!(
            catalog.global_dictionary.get("nyc").map(String::as_str),
            Some("New York")
        );
    }

    fn catalog_with(entry: SlotEntry) -> SlotCatalog {
        let mut entries = BTreeMap::new();
        entries.insert(entry.key.key_string(), entry);
        SlotCatalog {
            entries,
            global_dictionary: BTreeMap::new(),
        }
    }

    #[test]
    fn transform_next_thursday_with_format_rule() {
        let key = SlotKey::new("day", CompareOp::Eq, 0);
        let catalog = catalog_with(SlotEntry {
            key: key.clone(),
            slot_type: SlotType::Date,
            format_rule: Some(FormatRule::new("%Y-%m-%d")),
            allowed_values: None,
            dictionary: BTreeMap::new(),
            surfaces: BTreeSet::new(),
        });
        let clock = NaiveDate::from_ymd_opt(2020, 10, 15).unwrap();
        let lit =
            transform_value("next Thursday", &key, &catalog, clock, &FuzzyConfig::default())
                .unwrap();
        assert_eq!(lit, Literal::date("2020-10-22"));
    }

    #[test]
    fn transform_exact_allowed_value_passes_through() {
        let key = SlotKey::new("status", CompareOp::Eq, 0);
        let catalog = catalog_with(SlotEntry {
            key: key.clone(),
            slot_type: SlotType::Enumerated,
            format_rule: None,
            allowed_values: Some(vec!["open".into(), "closed".into()]),
            dictionary: BTreeMap::new(),
            surfaces: BTreeSet::new(),
        });
        let clock = NaiveDate::from_ymd_opt(2020, 10, 15).unwrap();
        let fuzzy = FuzzyConfig::default();
        assert_eq!(
            transform_value("open", &key, &catalog, clock, &fuzzy).unwrap(),
            Literal::string("open")
        );
        assert_eq!(
            transform_value("opn", &key, &catalog, clock, &fuzzy).unwrap(),
            Literal::string("open")
        );
        assert!(matches!(
            transform_value("zzz", &key, &catalog, clock, &fuzzy),
            Err(TransformError::ValueUnmapped { .. })
        ));
    }

    #[test]
    fn transform_dictionary_lookup_is_case_folded() {
        let key = SlotKey::new("city", CompareOp::Eq, 0);
        let mut dictionary = BTreeMap::new();
        dictionary.insert("seattle".to_string(), "Seattle".to_string());
        let catalog = catalog_with(SlotEntry {
            key: key.clone(),
            slot_type: SlotType::FreeText,
            format_rule: None,
            allowed_values: None,
            dictionary,
            surfaces: BTreeSet::new(),
        });
        let clock = NaiveDate::from_ymd_opt(2020, 10, 15).unwrap();
        assert_eq!(
            transform_value("SEATTLE", &key, &catalog, clock, &FuzzyConfig::default()).unwrap(),
            Literal::string("Seattle")
        );
    }

    #[test]
    fn transform_strips_grouping_from_numbers() {
        let key = SlotKey::new("total", CompareOp::Gt, 0);
        let catalog = catalog_with(SlotEntry {
            key: key.clone(),
            slot_type: SlotType::Integer,
            format_rule: None,
            allowed_values: None,
            dictionary: BTreeMap::new(),
            surfaces: BTreeSet::new(),
        });
        let clock = NaiveDate::from_ymd_opt(2020, 10, 15).unwrap();
        let fuzzy = FuzzyConfig::default();
        assert_eq!(
            transform_value("$1,000", &key, &catalog, clock, &fuzzy).unwrap(),
            Literal::integer("1000")
        );
        assert!(matches!(
            transform_value("lots", &key, &catalog, clock, &fuzzy),
            Err(TransformError::ValueUnmapped { .. })
        ));
    }

    #[test]
    fn alignment_soundness_on_annotations() {
        // Every annotation's span text, pushed through transform_value with
        // the training-time catalog and clock, reproduces the query literal.
        let clock = NaiveDate::from_ymd_opt(2020, 10, 15).unwrap();
        let cases = [
            (
                "What's the temperature in Seattle?",
                "SELECT t FROM temperature WHERE city='Seattle'",
            ),
            (
                "orders over 1,000 dollars",
                "SELECT id FROM orders WHERE total > 1000",
            ),
            (
                "meetings next thursday",
                "SELECT m FROM meetings WHERE day = '2020-10-22'",
            ),
        ];
        for (question, sql) in cases {
            let q = parse_sql(sql).unwrap();
            let (_, bindings) = extract_template(&q, &TemplateOptions::default());
            let (annotations, unaligned) = align(7, question, &bindings, &ctx());
            assert!(unaligned.is_empty(), "{question}");
            let observations: Vec<SlotObservations> = bindings
                .iter()
                .map(|(key, literal)| observation(key.clone(), vec![literal.clone()]))
                .collect();
            let (catalog, _) = build_catalog(&observations, &annotations);
            for ann in &annotations {
                let lit = transform_value(
                    &ann.span_text,
                    &ann.slot_key,
                    &catalog,
                    clock,
                    &FuzzyConfig::default(),
                )
                .unwrap();
                assert_eq!(lit.lexeme, ann.literal.lexeme, "{question}");
            }
        }
    }
}
