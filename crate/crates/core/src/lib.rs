//! Quality-aware decoding and discourse evaluation for document-level
//! machine translation.
//!
//! The crate is organised around the pipeline it serves:
//!
//! - [`model`]: corpora, candidate pools, alignments, human annotations and
//!   their JSON Lines ingestion.
//! - [`metrics`]: sacreBLEU-compatible BLEU and chrF plus a tercom-style
//!   edit rate with per-operation counts.
//! - [`decoding`]: MAP, MBR and QE-reranking selection over candidate pools,
//!   nucleus truncation and a synthetic pool generator.
//! - [`tagger`]: lexicon- and alignment-driven tagging of discourse phenomena.
//! - [`cohesion`]: the lexical cohesion ratio and the utility registry used
//!   by the decoder.
//! - [`evaluation`]: per-phenomenon F1, corpus scores, edit-rate analysis and
//!   human-annotation statistics.
//! - [`scorer`]: a batching, caching client for external neural metrics.

pub mod cli;
pub mod cohesion;
pub mod decoding;
pub mod error;
pub mod evaluation;
pub mod metrics;
pub mod model;
pub mod scorer;
pub mod tagger;
pub mod text;

pub use error::{Error, Result};
