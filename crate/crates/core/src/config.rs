//! Pipeline configuration with reproducible defaults. Every tunable lives
//! here so that a config snapshot inside an artifact pins behavior.

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::sql::TemplateOptions;

/// Per-level confidence thresholds for intent prediction. A prediction at
/// level k requires the best node score at that level to reach `level_k`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Thresholds {
    pub level1: f64,
    pub level2: f64,
    pub level3: f64,
    pub level4: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Thresholds {
            level1: 0.40,
            level2: 0.50,
            level3: 0.65,
            level4: 0.80,
        }
    }
}

impl Thresholds {
    pub fn for_level(&self, level: u8) -> f64 {
        match level {
            1 => self.level1,
            2 => self.level2,
            3 => self.level3,
            4 => self.level4,
            _ => f64::INFINITY,
        }
    }
}

/// Normalized edit distance ceilings for fuzzy matching.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FuzzyConfig {
    /// Alignment of question spans to query literals.
    pub alignment: f64,
    /// Matching raw values against an enumerated column's allowed values.
    pub enumerated: f64,
}

impl Default for FuzzyConfig {
    fn default() -> Self {
        FuzzyConfig {
            alignment: 0.2,
            enumerated: 0.34,
        }
    }
}

/// Candidate scoring weights for level 1 and 2 generation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ShallowWeights {
    pub slot_coverage: f64,
    pub lexical_overlap: f64,
}

impl Default for ShallowWeights {
    fn default() -> Self {
        ShallowWeights {
            slot_coverage: 0.6,
            lexical_overlap: 0.4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    pub tau: Thresholds,
    pub fuzzy: FuzzyConfig,
    pub weights: ShallowWeights,
    /// When set, LIMIT values are slots; by default they are structural
    /// and distinct LIMITs produce distinct level-4 intents.
    pub limit_as_slot: bool,
    /// Training aborts when more than this fraction of dataset lines fail
    /// to parse.
    pub max_error_rate: f64,
    /// Reference date for resolving relative date phrases. Stored resolved
    /// in the artifact as the training clock.
    pub now: Option<NaiveDate>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            tau: Thresholds::default(),
            fuzzy: FuzzyConfig::default(),
            weights: ShallowWeights::default(),
            limit_as_slot: false,
            max_error_rate: 0.1,
            now: None,
        }
    }
}

impl PipelineConfig {
    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    pub fn template_options(&self) -> TemplateOptions {
        TemplateOptions {
            limit_as_slot: self.limit_as_slot,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_match_documented_values() {
        let cfg = PipelineConfig::default();
        assert_eq!(cfg.tau.level4, 0.80);
        assert_eq!(cfg.tau.level3, 0.65);
        assert_eq!(cfg.tau.level2, 0.50);
        assert_eq!(cfg.tau.level1, 0.40);
        assert_eq!(cfg.fuzzy.alignment, 0.2);
        assert_eq!(cfg.fuzzy.enumerated, 0.34);
        assert_eq!(cfg.weights.slot_coverage, 0.6);
        assert_eq!(cfg.weights.lexical_overlap, 0.4);
        assert!(!cfg.limit_as_slot);
    }

    #[test]
    fn partial_json_overrides() {
        let cfg = PipelineConfig::from_json(
            r#"{"tau": {"level1": 0.0}, "limit_as_slot": true, "now": "2020-10-15"}"#,
        )
        .unwrap();
        assert_eq!(cfg.tau.level1, 0.0);
        assert_eq!(cfg.tau.level4, 0.80);
        assert!(cfg.limit_as_slot);
        assert_eq!(
            cfg.now,
            Some(chrono::NaiveDate::from_ymd_opt(2020, 10, 15).unwrap())
        );
    }
}
