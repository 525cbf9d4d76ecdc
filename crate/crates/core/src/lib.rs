//! Natural-language-to-query toolkit.
//!
//! Trains on a small corpus of question/query pairs, discovers a four-level
//! intent tree from the queries, learns slot dictionaries and value
//! formatting rules, and answers new questions by classifying them into an
//! intent and instantiating that intent's query template. Targets can be
//! SQL queries in a restricted dialect or keyword-argument API calls; the
//! latter are mapped to an isomorphic SQL form internally.
//!
//! The main entry points are [`pipeline::train_pipeline`],
//! [`pipeline::evaluate`] and [`pipeline::answer`], all operating on a
//! [`artifact::ModelArtifact`].

pub mod api;
pub mod artifact;
pub mod classifier;
pub mod config;
pub mod dataset;
pub mod dates;
pub mod generate;
pub mod intent;
pub mod pipeline;
pub mod schema;
pub mod slots;
pub mod sql;
pub mod synth;
pub mod text;

pub use config::PipelineConfig;
pub use schema::SchemaDescription;
pub use sql::{parse_sql, serialize, CanonicalQuery};
