//! Accumulation of per-document retrievability and usefulness scores.
//!
//! Retrievability of a document is the weighted number of queries that
//! surface it within a rank cutoff: `r_c(d) = Σ_q w_q · indicator(rank(d,q), c)`.
//! One pass over a batch-search result stream fills a whole sweep of cutoffs
//! at once. Usefulness is the analogous sum over export events:
//! `u(d) = Σ_events w_q · h(q)`, each export carrying an implicit binary
//! relevance of 1.

use std::collections::BTreeMap;
use std::io::Write;

use serde::Serialize;

use crate::corpus::Category;
use crate::engine::RankedResult;
use crate::querylog::ExportEvent;

#[derive(Debug, thiserror::Error)]
pub enum RetrievabilityError {
    #[error("at least one rank cutoff is required")]
    EmptyCutoffs,
    #[error("rank cutoffs must be >= 1")]
    InvalidCutoff,
    #[error("cutoff {cutoff} exceeds the search depth k={k}; scores would be silently truncated")]
    CutoffExceedsK { cutoff: u32, k: usize },
    #[error("{results} results but {weights} weights; every query occurrence needs exactly one weight")]
    WeightMismatch { results: usize, weights: usize },
    #[error("query weights must be finite and >= 0, got {0}")]
    InvalidWeight(f64),
    #[error("cannot merge vectors with different {0}")]
    MergeMismatch(&'static str),
}

/// Rank-cutoff indicator: 1 exactly when `rank <= cutoff` (inclusive).
pub fn indicator(rank: u32, cutoff: u32) -> f64 {
    if rank <= cutoff {
        1.0
    } else {
        0.0
    }
}

/// Per-document retrievability at one cutoff.
///
/// Only positive scores are stored; a document absent from `scores` has
/// r(d) = 0. `collection_size` is carried so downstream statistics can
/// account for the implicit zeros.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RetrievabilityVector {
    pub category: Category,
    pub cutoff: u32,
    pub query_count: u64,
    pub total_weight: f64,
    pub collection_size: usize,
    pub scores: BTreeMap<String, f64>,
}

impl RetrievabilityVector {
    pub fn score(&self, doc_id: &str) -> f64 {
        self.scores.get(doc_id).copied().unwrap_or(0.0)
    }

    /// Documents with positive retrievability.
    pub fn retrieved_count(&self) -> usize {
        self.scores.len()
    }

    pub fn total_score(&self) -> f64 {
        self.scores.values().sum()
    }

    /// Pointwise-add another partial vector from the same run configuration.
    ///
    /// Scores are added in doc_id order, so merging the same partials always
    /// produces identical bytes. Merging partials from a contiguous split of
    /// a result stream reproduces the single-pass totals exactly when
    /// weights are integer-valued; for arbitrary real weights the result is
    /// deterministic but may differ from the single-pass sum in the last
    /// bits, as float addition regroups.
    pub fn merge(&mut self, other: &RetrievabilityVector) -> Result<(), RetrievabilityError> {
        if self.category != other.category {
            return Err(RetrievabilityError::MergeMismatch("categories"));
        }
        if self.cutoff != other.cutoff {
            return Err(RetrievabilityError::MergeMismatch("cutoffs"));
        }
        if self.collection_size != other.collection_size {
            return Err(RetrievabilityError::MergeMismatch("collection sizes"));
        }
        self.query_count += other.query_count;
        self.total_weight += other.total_weight;
        for (doc, &v) in &other.scores {
            *self.scores.entry(doc.clone()).or_insert(0.0) += v;
        }
        Ok(())
    }
}

/// Retrievability vectors for one query run at several cutoffs.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CutoffSweep {
    pub category: Category,
    pub collection_size: usize,
    /// Keyed by cutoff, ascending.
    pub vectors: BTreeMap<u32, RetrievabilityVector>,
}

impl CutoffSweep {
    pub fn cutoffs(&self) -> Vec<u32> {
        self.vectors.keys().copied().collect()
    }

    pub fn vector(&self, cutoff: u32) -> Option<&RetrievabilityVector> {
        self.vectors.get(&cutoff)
    }

    /// Merge a partial sweep over the same cutoffs (see
    /// [`RetrievabilityVector::merge`]).
    pub fn merge(&mut self, other: &CutoffSweep) -> Result<(), RetrievabilityError> {
        if self.cutoffs() != other.cutoffs() {
            return Err(RetrievabilityError::MergeMismatch("cutoffs"));
        }
        for (c, v) in &mut self.vectors {
            v.merge(&other.vectors[c])?;
        }
        Ok(())
    }
}

/// Fold a batch-search result stream into a cutoff sweep.
///
/// `weights[i]` is the weight of `results[i]`; `k` is the search depth the
/// results were produced with, and every cutoff must be ≤ `k` — a deeper
/// cutoff would silently miss hits. A hit at rank ρ credits its weight to
/// every cutoff ≥ ρ, so one pass fills the whole sweep, and each (cutoff,
/// document) slot accumulates in stream order — reordering the stream can
/// change nothing but float-rounding-neutral addition order of equal terms,
/// making the totals independent of result arrival order.
pub fn accumulate(
    results: &[RankedResult],
    weights: &[f64],
    cutoffs: &[u32],
    k: usize,
    category: &Category,
    collection_size: usize,
) -> Result<CutoffSweep, RetrievabilityError> {
    if cutoffs.is_empty() {
        return Err(RetrievabilityError::EmptyCutoffs);
    }
    let mut sorted = cutoffs.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    if sorted[0] == 0 {
        return Err(RetrievabilityError::InvalidCutoff);
    }
    let deepest = *sorted.last().expect("nonempty");
    if deepest as usize > k {
        return Err(RetrievabilityError::CutoffExceedsK { cutoff: deepest, k });
    }
    if weights.len() != results.len() {
        return Err(RetrievabilityError::WeightMismatch {
            results: results.len(),
            weights: weights.len(),
        });
    }
    if let Some(&bad) = weights.iter().find(|w| !(w.is_finite() && **w >= 0.0)) {
        return Err(RetrievabilityError::InvalidWeight(bad));
    }

    let mut maps: Vec<BTreeMap<String, f64>> = vec![BTreeMap::new(); sorted.len()];
    let mut total_weight = 0.0;
    for (result, &w) in results.iter().zip(weights) {
        total_weight += w;
        for hit in &result.hits {
            let first = sorted.partition_point(|&c| c < hit.rank);
            for map in &mut maps[first..] {
                *map.entry(hit.doc_id.clone()).or_insert(0.0) += w;
            }
        }
    }

    let query_count = results.len() as u64;
    let vectors = sorted
        .into_iter()
        .zip(maps)
        .map(|(cutoff, mut scores)| {
            scores.retain(|_, v| *v > 0.0);
            (
                cutoff,
                RetrievabilityVector {
                    category: category.clone(),
                    cutoff,
                    query_count,
                    total_weight,
                    collection_size,
                    scores,
                },
            )
        })
        .collect();
    Ok(CutoffSweep {
        category: category.clone(),
        collection_size,
        vectors,
    })
}

/// Per-document usefulness accumulated from export events.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UsefulnessVector {
    pub category: Category,
    pub collection_size: usize,
    pub event_count: u64,
    pub total_weight: f64,
    /// Positive scores only; absent documents have u(d) = 0.
    pub scores: BTreeMap<String, f64>,
}

impl UsefulnessVector {
    pub fn score(&self, doc_id: &str) -> f64 {
        self.scores.get(doc_id).copied().unwrap_or(0.0)
    }

    pub fn exported_count(&self) -> usize {
        self.scores.len()
    }
}

/// Query-weight source for usefulness.
#[derive(Debug, Clone, Copy)]
pub enum UsefulnessWeights<'a> {
    /// Every event weighs 1.
    Uniform,
    /// An event weighs the search multiplicity of its normalized query text.
    /// Queries absent from the map — including the empty query of exports
    /// that had no originating search — weigh 0 and contribute nothing.
    Popularity(&'a BTreeMap<String, u64>),
}

/// Sum export events into usefulness scores: `u(d) = Σ w_q · h(q)` over the
/// events targeting `d`.
///
/// Every event counts — repeated exports of one document by one query each
/// add their term. `h` maps normalized query text to a difficulty factor;
/// pass `|_| 1.0` for the plain event-count semantics, under which every
/// u(d) is exactly the number of exports of `d`.
pub fn compute_usefulness(
    exports: &[ExportEvent],
    weights: UsefulnessWeights<'_>,
    h: impl Fn(&str) -> f64,
    category: &Category,
    collection_size: usize,
) -> UsefulnessVector {
    let mut scores: BTreeMap<String, f64> = BTreeMap::new();
    let mut total_weight = 0.0;
    for event in exports {
        let w = match weights {
            UsefulnessWeights::Uniform => 1.0,
            UsefulnessWeights::Popularity(m) => {
                m.get(&event.query).copied().unwrap_or(0) as f64
            }
        };
        total_weight += w;
        let term = w * h(&event.query);
        *scores.entry(event.target_doc_id.clone()).or_insert(0.0) += term;
    }
    scores.retain(|_, v| *v > 0.0);
    UsefulnessVector {
        category: category.clone(),
        collection_size,
        event_count: exports.len() as u64,
        total_weight,
        scores,
    }
}

/// Write a score vector as TSV: `doc_id`, `score` (shortest round-trip float
/// form), doc_id ascending.
pub fn write_scores_tsv<W: Write>(
    scores: &BTreeMap<String, f64>,
    mut w: W,
) -> std::io::Result<()> {
    writeln!(w, "doc_id\tscore")?;
    for (doc, score) in scores {
        writeln!(w, "{doc}\t{score}")?;
    }
    Ok(())
}
