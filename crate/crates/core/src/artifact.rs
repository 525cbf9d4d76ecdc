//! The persisted product of training: schema, intent tree, slot catalog,
//! classifier model and config snapshot. Immutable at inference time,
//! self-validating on load, and byte-stable across save/load cycles.

use std::path::Path;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::classifier::ClassifierModel;
use crate::config::PipelineConfig;
use crate::dates::DATE_LAYOUTS;
use crate::intent::IntentTree;
use crate::schema::SchemaDescription;
use crate::slots::SlotCatalog;

pub const ARTIFACT_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainingSummary {
    pub example_count: usize,
    pub leaf_count: usize,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelArtifact {
    pub format_version: u32,
    pub schema: SchemaDescription,
    pub intent_tree: IntentTree,
    pub slot_catalog: SlotCatalog,
    pub classifier: ClassifierModel,
    pub config: PipelineConfig,
    /// Resolved reference date used during training; relative dates in
    /// training questions were interpreted against it.
    pub training_clock: NaiveDate,
    /// The date layout candidate list in effect when this artifact was
    /// built, recorded for reproducibility.
    pub date_layouts: Vec<String>,
    pub summary: TrainingSummary,
}

#[derive(Debug, Error)]
pub enum ArtifactError {
    #[error("cannot read artifact: {0}")]
    Io(#[from] std::io::Error),
    #[error("artifact is not valid JSON: {0}")]
    Parse(String),
    #[error("unsupported artifact format version {found} (expected {ARTIFACT_FORMAT_VERSION})")]
    Version { found: u32 },
    #[error("artifact failed validation:\n{}", .0.join("\n"))]
    Invalid(Vec<String>),
}

impl ModelArtifact {
    pub fn new(
        schema: SchemaDescription,
        intent_tree: IntentTree,
        slot_catalog: SlotCatalog,
        classifier: ClassifierModel,
        config: PipelineConfig,
        training_clock: NaiveDate,
        summary: TrainingSummary,
    ) -> Self {
        ModelArtifact {
            format_version: ARTIFACT_FORMAT_VERSION,
            schema,
            intent_tree,
            slot_catalog,
            classifier,
            config,
            training_clock,
            date_layouts: DATE_LAYOUTS.iter().map(|s| s.to_string()).collect(),
            summary,
        }
    }

    pub fn to_json(&self) -> String {
        let mut out = serde_json::to_string_pretty(self).expect("artifact serializes");
        out.push('\n');
        out
    }

    pub fn from_json(text: &str) -> Result<Self, ArtifactError> {
        let artifact: ModelArtifact =
            serde_json::from_str(text).map_err(|e| ArtifactError::Parse(e.to_string()))?;
        if artifact.format_version != ARTIFACT_FORMAT_VERSION {
            return Err(ArtifactError::Version {
                found: artifact.format_version,
            });
        }
        artifact.validate()?;
        Ok(artifact)
    }

    pub fn save(&self, path: &Path) -> Result<(), ArtifactError> {
        std::fs::write(path, self.to_json())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, ArtifactError> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json(&text)
    }

    /// Structural checks on load: the tree invariants hold, every template
    /// column exists in the schema, and every classifier leaf exists.
    pub fn validate(&self) -> Result<(), ArtifactError> {
        let mut problems: Vec<String> = self
            .intent_tree
            .validate()
            .iter()
            .map(|v| v.to_string())
            .collect();

        for leaf in self.intent_tree.leaves() {
            if let Some(template) = &leaf.template {
                if let Err(violation) = self.schema.check_query(&template.skeleton) {
                    problems.push(format!(
                        "template of leaf {} references unknown schema object: {violation}",
                        leaf.id
                    ));
                }
            }
        }

        for pattern in &self.classifier.patterns {
            if self.intent_tree.node(&pattern.leaf_id).is_none() {
                problems.push(format!(
                    "classifier pattern references missing leaf {}",
                    pattern.leaf_id
                ));
            }
        }

        if problems.is_empty() {
            Ok(())
        } else {
            Err(ArtifactError::Invalid(problems))
        }
    }
}
