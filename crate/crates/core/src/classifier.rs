//! Joint intent detection and slot filling.
//!
//! The model is a deterministic lexical baseline behind the same contract a
//! neural encoder would satisfy: train on masked question patterns, predict
//! an intent path with a confidence score, and fill slots from question
//! spans. Questions are tokenized, aligned slot spans are masked with typed
//! placeholders, and similarity is cosine over inverse-document-frequency
//! weighted token counts.
//!
//! Prediction is joint: candidate value spans are detected first (slot
//! gazetteers, schema allowed values, typed date/number recognizers), and
//! each stored pattern is compared against the question masked at exactly
//! the candidates that pattern's placeholders can consume. A training
//! question therefore scores 1.0 against its own pattern even when the
//! question contains spurious value-like tokens.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::Thresholds;
use crate::dates;
use crate::intent::IntentTree;
use crate::slots::{SlotAnnotation, SlotCatalog, SlotType, MAX_NGRAM};
use crate::sql::{SlotKey, Span};
use crate::text::{self, Token};

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum PatternToken {
    Word(String),
    Slot { slot_type: SlotType, key: SlotKey },
}

impl PatternToken {
    /// Text used for similarity; slot keys do not participate.
    fn sim_text(&self) -> &str {
        match self {
            PatternToken::Word(w) => w,
            PatternToken::Slot { slot_type, .. } => slot_type.placeholder(),
        }
    }
}

/// A training question with aligned slot spans replaced by typed
/// placeholders.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuestionPattern {
    pub leaf_id: String,
    pub tokens: Vec<PatternToken>,
    pub example_ids: Vec<usize>,
    pub support: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifierModel {
    pub patterns: Vec<QuestionPattern>,
    /// Smoothed inverse document frequency over pattern tokens.
    pub idf: BTreeMap<String, f64>,
    pub tau: Thresholds,
    /// Folded raw training question to its leaf; breaks score ties so a
    /// verbatim training question always lands in its own leaf.
    pub raw_index: BTreeMap<String, String>,
    /// Level-3 node id to the word tokens of its training questions;
    /// the co-occurrence lexicon used by shallow generation.
    pub node_lexicon: BTreeMap<String, BTreeSet<String>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FillSource {
    Dictionary,
    AllowedValue,
    TypedRecognizer,
    /// Assigned by positional analogy rather than a slot-specific match.
    PatternPosition,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlotFill {
    pub slot_key: SlotKey,
    pub raw_text: String,
    pub span: Span,
    pub source: FillSource,
}

/// Classifier output: the intent path from level 1 down to the deepest
/// confident node (empty at level 0), slot fills, and the winning score.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub intent_path: Vec<String>,
    pub level: u8,
    pub slot_fills: Vec<SlotFill>,
    pub confidence: f64,
    /// Highest-scoring leaf even when below every threshold; fallback
    /// handling uses it as a best guess.
    pub best_leaf: Option<(String, f64)>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TrainError {
    #[error("cannot train a classifier on an empty corpus")]
    EmptyCorpus,
    #[error("example {example_id} references leaf {leaf_id} missing from the intent tree")]
    UnknownLeaf { example_id: usize, leaf_id: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FillError {
    #[error("ambiguous fill for slot {0}: tied candidate spans")]
    AmbiguousFill(SlotKey),
}

pub struct TrainExample<'a> {
    pub example_id: usize,
    pub leaf_id: String,
    pub question: &'a str,
    /// Span-sorted, non-overlapping annotations from alignment.
    pub annotations: &'a [SlotAnnotation],
}

/// Builds question patterns by masking annotated spans, deduplicates
/// identical patterns per leaf, and computes add-one smoothed inverse
/// document frequencies over the result.
pub fn train(
    examples: &[TrainExample<'_>],
    tree: &IntentTree,
    catalog: &SlotCatalog,
    tau: Thresholds,
) -> Result<ClassifierModel, TrainError> {
    if examples.is_empty() {
        return Err(TrainError::EmptyCorpus);
    }

    let mut patterns: Vec<QuestionPattern> = Vec::new();
    let mut raw_index = BTreeMap::new();
    let mut node_lexicon: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();

    for example in examples {
        let leaf = tree
            .node(&example.leaf_id)
            .ok_or_else(|| TrainError::UnknownLeaf {
                example_id: example.example_id,
                leaf_id: example.leaf_id.clone(),
            })?;
        let tokens = mask_tokens(example.question, example.annotations, catalog);

        raw_index.insert(text::fold_ws(example.question), example.leaf_id.clone());

        // Word tokens feed the lexicon of the leaf's level-3 parent.
        let level3_id = leaf.signature.prefix(3).node_id();
        let lexicon = node_lexicon.entry(level3_id).or_default();
        for token in &tokens {
            if let PatternToken::Word(w) = token {
                lexicon.insert(w.clone());
            }
        }

        match patterns
            .iter_mut()
            .find(|p| p.leaf_id == example.leaf_id && p.tokens == tokens)
        {
            Some(existing) => {
                existing.example_ids.push(example.example_id);
                existing.support += 1;
            }
            None => patterns.push(QuestionPattern {
                leaf_id: example.leaf_id.clone(),
                tokens,
                example_ids: vec![example.example_id],
                support: 1,
            }),
        }
    }

    for pattern in &mut patterns {
        pattern.example_ids.sort_unstable();
    }
    patterns.sort_by(|a, b| {
        a.leaf_id
            .cmp(&b.leaf_id)
            .then_with(|| a.tokens.cmp(&b.tokens))
    });

    // Document frequency over deduplicated patterns, add-one smoothed so a
    // single-pattern corpus still yields finite positive weights.
    let mut df: BTreeMap<String, usize> = BTreeMap::new();
    for pattern in &patterns {
        let unique: BTreeSet<&str> = pattern.tokens.iter().map(|t| t.sim_text()).collect();
        for token in unique {
            *df.entry(token.to_string()).or_insert(0) += 1;
        }
    }
    let n = patterns.len() as f64;
    let idf: BTreeMap<String, f64> = df
        .into_iter()
        .map(|(token, count)| (token, ((n + 1.0) / (count as f64 + 1.0)).ln() + 1.0))
        .collect();

    Ok(ClassifierModel {
        patterns,
        idf,
        tau,
        raw_index,
        node_lexicon,
    })
}

/// Masks the aligned spans of a question with typed placeholders. A span
/// covering several tokens becomes a single placeholder token.
fn mask_tokens(
    question: &str,
    annotations: &[SlotAnnotation],
    catalog: &SlotCatalog,
) -> Vec<PatternToken> {
    let tokens = text::tokenize(question);
    let mut out = Vec::with_capacity(tokens.len());
    let mut i = 0;
    while i < tokens.len() {
        let tok = &tokens[i];
        let covering = annotations
            .iter()
            .find(|a| a.span.start <= tok.start && tok.end <= a.span.end);
        match covering {
            Some(ann) => {
                let slot_type = catalog
                    .entry(&ann.slot_key)
                    .map(|e| e.slot_type)
                    .unwrap_or(SlotType::FreeText);
                out.push(PatternToken::Slot {
                    slot_type,
                    key: ann.slot_key.clone(),
                });
                while i < tokens.len() && tokens[i].end <= ann.span.end {
                    i += 1;
                }
            }
            None => {
                out.push(PatternToken::Word(text::fold(&tok.text)));
                i += 1;
            }
        }
    }
    out
}

// ---------------------------------------------------------------------------
// Candidate detection
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CandidateInterp {
    pub slot_type: SlotType,
    pub source: FillSource,
    pub key: Option<SlotKey>,
}

#[derive(Debug, Clone)]
pub struct Candidate {
    pub start: usize,
    pub end: usize,
    pub text: String,
    pub interps: Vec<CandidateInterp>,
}

impl Candidate {
    fn compatible(&self, wanted: SlotType) -> bool {
        self.interps.iter().any(|i| type_compatible(i.slot_type, wanted))
    }
}

fn type_compatible(candidate: SlotType, wanted: SlotType) -> bool {
    candidate == wanted || (candidate == SlotType::Integer && wanted == SlotType::Decimal)
}

fn source_rank(source: FillSource) -> u8 {
    match source {
        FillSource::Dictionary => 0,
        FillSource::AllowedValue => 1,
        FillSource::TypedRecognizer => 2,
        FillSource::PatternPosition => 3,
    }
}

/// Finds value-like spans: per-slot gazetteer hits, schema allowed values,
/// and typed date/number recognizers. Pure in the question text.
pub fn detect_candidates(question: &str, catalog: &SlotCatalog) -> Vec<Candidate> {
    let tokens = text::tokenize(question);
    let mut by_span: BTreeMap<(usize, usize), Vec<CandidateInterp>> = BTreeMap::new();

    for (i, j) in text::ngram_spans(tokens.len(), MAX_NGRAM) {
        let start = tokens[i].start;
        let end = tokens[j].end;
        let span_text = &question[start..end];
        let folded = text::fold_ws(span_text);
        let mut interps = Vec::new();

        for entry in catalog.entries.values() {
            if entry.surfaces.contains(&folded) || entry.dictionary.contains_key(&folded) {
                interps.push(CandidateInterp {
                    slot_type: entry.slot_type,
                    source: FillSource::Dictionary,
                    key: Some(entry.key.clone()),
                });
            }
            if let Some(allowed) = &entry.allowed_values {
                if allowed.iter().any(|v| text::fold_ws(v) == folded) {
                    interps.push(CandidateInterp {
                        slot_type: entry.slot_type,
                        source: FillSource::AllowedValue,
                        key: Some(entry.key.clone()),
                    });
                }
            }
        }

        if dates::is_date_phrase(span_text) {
            interps.push(CandidateInterp {
                slot_type: SlotType::Date,
                source: FillSource::TypedRecognizer,
                key: None,
            });
        }
        if i == j {
            if let Some(stripped) = text::strip_number(span_text) {
                let slot_type = if stripped.contains('.') {
                    SlotType::Decimal
                } else {
                    SlotType::Integer
                };
                interps.push(CandidateInterp {
                    slot_type,
                    source: FillSource::TypedRecognizer,
                    key: None,
                });
            }
        }

        if !interps.is_empty() {
            let bucket = by_span.entry((start, end)).or_default();
            for interp in interps {
                if !bucket.contains(&interp) {
                    bucket.push(interp);
                }
            }
        }
    }

    by_span
        .into_iter()
        .map(|((start, end), interps)| Candidate {
            start,
            end,
            text: question[start..end].to_string(),
            interps,
        })
        .collect()
}

// ---------------------------------------------------------------------------
// Similarity and prediction
// ---------------------------------------------------------------------------

fn weight(idf: &BTreeMap<String, f64>, token: &str, n_patterns: usize) -> f64 {
    match idf.get(token) {
        Some(w) => *w,
        // Unseen tokens get the maximum idf, as if in no pattern.
        None => ((n_patterns as f64 + 1.0) / 1.0).ln() + 1.0,
    }
}

fn cosine(
    a: &BTreeMap<String, usize>,
    b: &BTreeMap<String, usize>,
    idf: &BTreeMap<String, f64>,
    n_patterns: usize,
) -> f64 {
    let mut dot = 0.0;
    let mut norm_a = 0.0;
    let mut norm_b = 0.0;
    for (token, count) in a {
        let w = weight(idf, token, n_patterns) * *count as f64;
        norm_a += w * w;
        if let Some(other) = b.get(token) {
            dot += w * weight(idf, token, n_patterns) * *other as f64;
        }
    }
    for (token, count) in b {
        let w = weight(idf, token, n_patterns) * *count as f64;
        norm_b += w * w;
    }
    if norm_a == 0.0 || norm_b == 0.0 {
        return 0.0;
    }
    dot / (norm_a.sqrt() * norm_b.sqrt())
}

/// One pattern slot's consumed candidate: indices into the candidate list
/// plus the interpretation that satisfied it.
#[derive(Debug, Clone)]
struct SlotAssignment {
    key: SlotKey,
    candidate_idx: usize,
    source: FillSource,
}

/// Masks the question the way this pattern expects and scores it.
/// Placeholders consume candidates greedily left to right; leftover
/// candidates stay as raw tokens and count against the similarity.
fn score_pattern(
    question_tokens: &[Token],
    candidates: &[Candidate],
    pattern: &QuestionPattern,
    idf: &BTreeMap<String, f64>,
    n_patterns: usize,
) -> (f64, Vec<SlotAssignment>) {
    let mut consumed: Vec<usize> = Vec::new();
    let mut assignments = Vec::new();

    for token in &pattern.tokens {
        if let PatternToken::Slot { slot_type, key } = token {
            let next = candidates.iter().enumerate().find(|(idx, c)| {
                !consumed.contains(idx)
                    && c.compatible(*slot_type)
                    && !consumed.iter().any(|&other| {
                        let o = &candidates[other];
                        c.start < o.end && o.start < c.end
                    })
            });
            if let Some((idx, candidate)) = next {
                consumed.push(idx);
                // Prefer the slot's own interpretation, then source rank.
                let mut interps: Vec<&CandidateInterp> = candidate
                    .interps
                    .iter()
                    .filter(|i| type_compatible(i.slot_type, *slot_type))
                    .collect();
                interps.sort_by_key(|i| {
                    (
                        usize::from(i.key.as_ref() != Some(key)),
                        source_rank(i.source),
                    )
                });
                let chosen = interps.first().expect("compatible interp exists");
                let source = match &chosen.key {
                    Some(k) if k == key => chosen.source,
                    None => FillSource::TypedRecognizer,
                    Some(_) => FillSource::PatternPosition,
                };
                assignments.push(SlotAssignment {
                    key: key.clone(),
                    candidate_idx: idx,
                    source,
                });
            }
        }
    }

    // Masked question view: tokens covered by a consumed candidate span
    // collapse into that pattern slot's placeholder.
    let mut masked: BTreeMap<String, usize> = BTreeMap::new();
    let mut covered: Vec<(usize, usize, SlotType)> = Vec::new();
    for assignment in &assignments {
        let c = &candidates[assignment.candidate_idx];
        let slot_type = pattern
            .tokens
            .iter()
            .find_map(|t| match t {
                PatternToken::Slot { slot_type, key } if *key == assignment.key => Some(*slot_type),
                _ => None,
            })
            .expect("assignment stems from a pattern slot");
        covered.push((c.start, c.end, slot_type));
    }
    let mut i = 0;
    while i < question_tokens.len() {
        let tok = &question_tokens[i];
        match covered
            .iter()
            .find(|(start, end, _)| *start <= tok.start && tok.end <= *end)
        {
            Some((_, end, slot_type)) => {
                *masked
                    .entry(slot_type.placeholder().to_string())
                    .or_insert(0) += 1;
                while i < question_tokens.len() && question_tokens[i].end <= *end {
                    i += 1;
                }
            }
            None => {
                *masked.entry(text::fold(&tok.text)).or_insert(0) += 1;
                i += 1;
            }
        }
    }

    let mut pattern_counts: BTreeMap<String, usize> = BTreeMap::new();
    for token in &pattern.tokens {
        *pattern_counts.entry(token.sim_text().to_string()).or_insert(0) += 1;
    }

    let score = cosine(&masked, &pattern_counts, idf, n_patterns);
    (score, assignments)
}

/// Predicts the intent path for a question. Scores every pattern, takes
/// per-leaf maxima, propagates maxima up the tree, and returns the deepest
/// level whose best node clears its threshold; level 0 signals fallback.
pub fn predict(
    model: &ClassifierModel,
    tree: &IntentTree,
    catalog: &SlotCatalog,
    question: &str,
) -> Prediction {
    let question_tokens = text::tokenize(question);
    let candidates = detect_candidates(question, catalog);
    let n = model.patterns.len();

    // Best score and pattern index per leaf.
    let mut leaf_best: BTreeMap<&str, (f64, usize)> = BTreeMap::new();
    let mut scored: Vec<(f64, Vec<SlotAssignment>)> = Vec::with_capacity(n);
    for (idx, pattern) in model.patterns.iter().enumerate() {
        let (score, assignments) =
            score_pattern(&question_tokens, &candidates, pattern, &model.idf, n);
        scored.push((score, assignments));
        let entry = leaf_best.entry(&pattern.leaf_id).or_insert((score, idx));
        if score > entry.0 {
            *entry = (score, idx);
        }
    }

    // Winning leaf: highest score, raw-question tie-break, then id order.
    let mut leaves: Vec<(&str, f64, usize)> = leaf_best
        .iter()
        .map(|(leaf, (score, idx))| (*leaf, *score, *idx))
        .collect();
    leaves.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(b.0)));
    let raw_leaf = model.raw_index.get(&text::fold_ws(question));
    let best = match leaves.first() {
        Some(&(leaf, score, idx)) => {
            let tied_raw = raw_leaf.and_then(|r| {
                leaves
                    .iter()
                    .find(|(l, s, _)| l == r && *s == score)
                    .copied()
            });
            Some(tied_raw.unwrap_or((leaf, score, idx)))
        }
        None => None,
    };

    let (best_leaf_id, best_score, best_idx) = match best {
        Some(b) => b,
        None => {
            return Prediction {
                intent_path: Vec::new(),
                level: 0,
                slot_fills: Vec::new(),
                confidence: 0.0,
                best_leaf: None,
            }
        }
    };
    let best_leaf = if best_score > 0.0 {
        Some((best_leaf_id.to_string(), best_score))
    } else {
        None
    };

    // Level 4 first.
    if best_score >= model.tau.level4 {
        let mut fills = fills_from_assignments(&scored[best_idx].1, &candidates);
        supplement_fills(&mut fills, tree, best_leaf_id, &candidates);
        return Prediction {
            intent_path: tree.path_to(best_leaf_id),
            level: 4,
            slot_fills: fills,
            confidence: best_score,
            best_leaf,
        };
    }

    // Shallower levels: a node's score is the maximum over its leaves.
    let mut node_scores: BTreeMap<String, f64> = BTreeMap::new();
    for (leaf, score, _) in &leaves {
        if let Some(node) = tree.node(leaf) {
            for level in 1..=3 {
                let id = node.signature.prefix(level).node_id();
                let entry = node_scores.entry(id).or_insert(*score);
                if *score > *entry {
                    *entry = *score;
                }
            }
        }
    }
    for level in (1..=3).rev() {
        let mut at_level: Vec<(&String, &f64)> = node_scores
            .iter()
            .filter(|(id, _)| tree.node(id).map(|n| n.level) == Some(level))
            .collect();
        at_level.sort_by(|a, b| b.1.total_cmp(a.1).then(a.0.cmp(b.0)));
        if let Some((id, score)) = at_level.first() {
            if **score >= model.tau.for_level(level) {
                let fills = fill_slots(tree, catalog, id, question).unwrap_or_default();
                return Prediction {
                    intent_path: tree.path_to(id),
                    level,
                    slot_fills: fills,
                    confidence: **score,
                    best_leaf,
                };
            }
        }
    }

    Prediction {
        intent_path: Vec::new(),
        level: 0,
        slot_fills: Vec::new(),
        confidence: best_score,
        best_leaf,
    }
}

fn fills_from_assignments(
    assignments: &[SlotAssignment],
    candidates: &[Candidate],
) -> Vec<SlotFill> {
    assignments
        .iter()
        .map(|a| {
            let c = &candidates[a.candidate_idx];
            SlotFill {
                slot_key: a.key.clone(),
                raw_text: c.text.clone(),
                span: Span::new(c.start, c.end),
                source: a.source,
            }
        })
        .collect()
}

/// Fills template slots the winning pattern did not mention, using
/// leftover candidates by type compatibility in template slot order.
fn supplement_fills(
    fills: &mut Vec<SlotFill>,
    tree: &IntentTree,
    leaf_id: &str,
    candidates: &[Candidate],
) {
    let Some(template) = tree.node(leaf_id).and_then(|n| n.template.as_ref()) else {
        return;
    };
    for key in template.slot_keys() {
        if fills.iter().any(|f| f.slot_key == *key) {
            continue;
        }
        if let Some(fill) = pick_candidate(key, fills, candidates) {
            fills.push(fill);
        }
    }
}

/// Leftmost free candidate carrying a slot-specific interpretation for
/// `key`, preferring dictionary hits over allowed-value hits.
fn pick_candidate(
    key: &SlotKey,
    taken: &[SlotFill],
    candidates: &[Candidate],
) -> Option<SlotFill> {
    let free = |c: &Candidate| {
        !taken
            .iter()
            .any(|f| c.start < f.span.end && f.span.start < c.end)
    };

    // Slot-specific hit.
    for c in candidates {
        if !free(c) {
            continue;
        }
        if let Some(interp) = c
            .interps
            .iter()
            .filter(|i| i.key.as_ref() == Some(key))
            .min_by_key(|i| source_rank(i.source))
        {
            return Some(SlotFill {
                slot_key: key.clone(),
                raw_text: c.text.clone(),
                span: Span::new(c.start, c.end),
                source: interp.source,
            });
        }
    }
    None
}

/// Assigns at most one fill to each slot expected under `node` (the union
/// of its leaves' template slots). Slot-specific candidates assign first;
/// remaining slots take the best type-compatible candidate, ranked by
/// exact type match, then source, then leftmost span.
pub fn fill_slots(
    tree: &IntentTree,
    catalog: &SlotCatalog,
    node_id: &str,
    question: &str,
) -> Result<Vec<SlotFill>, FillError> {
    let candidates = detect_candidates(question, catalog);

    // Expected slots in deterministic order: leaves sorted by id, each
    // contributing its template slot order.
    let mut expected: Vec<SlotKey> = Vec::new();
    for leaf in tree.descendant_leaves(node_id) {
        if let Some(template) = &leaf.template {
            for key in template.slot_keys() {
                if !expected.contains(key) {
                    expected.push(key.clone());
                }
            }
        }
    }

    let mut fills: Vec<SlotFill> = Vec::new();

    // Pass 1: slot-specific candidates.
    for key in &expected {
        if let Some(fill) = pick_candidate(key, &fills, &candidates) {
            fills.push(fill);
        }
    }

    // Pass 2: remaining slots take type-compatible candidates.
    for key in &expected {
        if fills.iter().any(|f| f.slot_key == *key) {
            continue;
        }
        let slot_type = match catalog.entry(key) {
            Some(entry) => entry.slot_type,
            None => continue,
        };
        let free: Vec<&Candidate> = candidates
            .iter()
            .filter(|c| {
                !fills
                    .iter()
                    .any(|f| c.start < f.span.end && f.span.start < c.end)
                    && c.compatible(slot_type)
            })
            .collect();
        let ranked: Vec<(usize, u8, usize, &Candidate)> = free
            .iter()
            .map(|c| {
                let best_interp = c
                    .interps
                    .iter()
                    .filter(|i| type_compatible(i.slot_type, slot_type))
                    .min_by_key(|i| {
                        (usize::from(i.slot_type != slot_type), source_rank(i.source))
                    })
                    .expect("compatible interp");
                (
                    usize::from(best_interp.slot_type != slot_type),
                    source_rank(best_interp.source),
                    c.start,
                    *c,
                )
            })
            .collect();
        let best = ranked.iter().min_by_key(|(t, s, start, _)| (*t, *s, *start));
        if let Some((t, s, start, candidate)) = best {
            // Two distinct free candidates can never share a start without
            // overlapping, so a full tie here means a contract bug.
            let tied = ranked
                .iter()
                .filter(|(t2, s2, start2, c2)| {
                    t2 == t && s2 == s && start2 == start && !std::ptr::eq(*c2, *candidate)
                })
                .count();
            if tied > 0 {
                return Err(FillError::AmbiguousFill((*key).clone()));
            }
            let interp = candidate
                .interps
                .iter()
                .filter(|i| type_compatible(i.slot_type, slot_type))
                .min_by_key(|i| (usize::from(i.slot_type != slot_type), source_rank(i.source)))
                .expect("compatible interp");
            let source = match &interp.key {
                Some(k) if k == key => interp.source,
                None => FillSource::TypedRecognizer,
                Some(_) => FillSource::PatternPosition,
            };
            fills.push(SlotFill {
                slot_key: key.clone(),
                raw_text: candidate.text.clone(),
                span: Span::new(candidate.start, candidate.end),
                source,
            });
        }
    }

    // Report fills in expected-slot order.
    fills.sort_by_key(|f| expected.iter().position(|k| *k == f.slot_key));
    Ok(fills)
}
