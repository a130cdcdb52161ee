//! Audit how evenly a retrieval system distributes access across a typed
//! document collection.
//!
//! Ranked retrieval decides what users get to see: a document that never
//! makes the top of a result list might as well not exist. This crate
//! measures that effect. It ingests a corpus of typed documents
//! ([`corpus`]), indexes and searches it with BM25 ([`engine`]), takes query
//! sets from an interaction log or synthesizes them with a Zipf popularity
//! profile ([`querylog`]), folds ranked results into per-document
//! retrievability and export events into per-document usefulness
//! ([`retrievability`]), and then quantifies how concentrated those scores
//! are — Gini coefficients, Lorenz curves, distribution statistics
//! ([`inequality`]) — and how much rankings agree across query-set variants
//! — top-k Jaccard, Kendall τ-b, Spearman ρ, rank-biased overlap
//! ([`rankcompare`]).
//!
//! [`commands`] wires these stages into the `retaudit` binary; [`config`]
//! resolves its layered settings and [`report`] writes its output bundles.
//!
//! ```
//! use std::collections::BTreeMap;
//!
//! use retaudit::analyze::Analyzer;
//! use retaudit::corpus::{Category, Corpus, Document};
//! use retaudit::engine::{build_index, search, Bm25Params};
//!
//! # fn main() -> Result<(), Box<dyn std::error::Error>> {
//! let doc = |id: &str, text: &str| Document {
//!     doc_id: id.to_string(),
//!     category: Category::Dataset,
//!     title: text.to_string(),
//!     body: String::new(),
//!     extra: BTreeMap::new(),
//! };
//! let corpus = Corpus::from_documents(vec![
//!     doc("d1", "solar wind plasma"),
//!     doc("d2", "wind turbine wind farm"),
//!     doc("d3", "ocean salinity"),
//! ])?;
//! let index = build_index(&corpus, &Analyzer::new(), None);
//! let hits = search(&index, Bm25Params::default(), &["wind".to_string()], 10)?;
//! assert_eq!(hits[0].doc_id, "d2"); // two occurrences in a short doc
//! assert_eq!(hits.len(), 2); // d3 never matches, so it is never returned
//! # Ok(())
//! # }
//! ```

pub mod analyze;
pub mod commands;
pub mod config;
pub mod corpus;
pub mod engine;
pub mod inequality;
pub mod querylog;
pub mod rankcompare;
pub mod report;
pub mod retrievability;
