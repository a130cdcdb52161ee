//! BM25 inverted index and top-k retrieval.
//!
//! The index maps terms to postings (document, term frequency) and keeps the
//! per-document lengths needed by BM25's length normalization. Documents are
//! addressed internally by a dense ordinal assigned in ascending `doc_id`
//! order, which makes the score tie-break ("higher score first, then doc_id
//! ascending") a plain integer comparison and keeps every ranking fully
//! deterministic — reruns and different worker counts produce identical
//! results, which the audit pipeline depends on.

use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analyze::Analyzer;
use crate::corpus::{Category, Corpus};
use crate::querylog::QuerySet;

/// BM25 free parameters.
///
/// `k1` controls term-frequency saturation, `b` the strength of document
/// length normalization. The defaults (1.2, 0.75) are the values most
/// engines ship with; both can be overridden per run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bm25Params {
    pub k1: f64,
    pub b: f64,
}

impl Default for Bm25Params {
    fn default() -> Self {
        Bm25Params { k1: 1.2, b: 0.75 }
    }
}

impl Bm25Params {
    /// Validated constructor: `k1` must be finite and ≥ 0, `b` in [0, 1].
    pub fn new(k1: f64, b: f64) -> Result<Bm25Params, EngineError> {
        let p = Bm25Params { k1, b };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), EngineError> {
        if !(self.k1.is_finite() && self.k1 >= 0.0 && self.b.is_finite() && (0.0..=1.0).contains(&self.b)) {
            return Err(EngineError::InvalidParams {
                k1: self.k1,
                b: self.b,
            });
        }
        Ok(())
    }
}

#[derive(Debug, thiserror::Error)]
pub enum EngineError {
    #[error("invalid BM25 parameters (need k1 >= 0 and 0 <= b <= 1, got k1={k1}, b={b})")]
    InvalidParams { k1: f64, b: f64 },
    #[error("k must be >= 1")]
    InvalidK,
    #[error("unknown doc_id \"{0}\"")]
    UnknownDocId(String),
    #[error("failed to {action} {path}: {source}")]
    Io {
        action: &'static str,
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path} is not an index file: {message}")]
    BadFormat { path: PathBuf, message: String },
    #[error("index version {found} is not supported (this build reads version {supported})")]
    Version { found: u32, supported: u32 },
    #[error("failed to start a {workers}-worker search pool: {message}")]
    Pool { workers: usize, message: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Posting {
    doc: u32,
    tf: u32,
}

/// Immutable term → postings index over one corpus slice.
#[derive(Debug, Clone)]
pub struct InvertedIndex {
    category: Option<Category>,
    /// Sorted ascending; the position of an id is its internal ordinal.
    doc_ids: Vec<String>,
    doc_len: Vec<u32>,
    avg_doc_length: f64,
    /// Postings are ordered by document ordinal, i.e. by doc_id ascending.
    postings: HashMap<String, Vec<Posting>>,
}

/// Build an index over `corpus`, optionally restricted to one category.
///
/// The indexed text of a document is its title and body joined by a space,
/// tokenized by `analyzer`.
pub fn build_index(
    corpus: &Corpus,
    analyzer: &Analyzer,
    category: Option<&Category>,
) -> InvertedIndex {
    let mut docs: Vec<(&str, Vec<String>)> = corpus
        .documents()
        .iter()
        .filter(|d| category.is_none_or(|c| &d.category == c))
        .map(|d| (d.doc_id.as_str(), analyzer.analyze(&d.index_text())))
        .collect();
    docs.sort_by(|a, b| a.0.cmp(b.0));

    let mut doc_ids = Vec::with_capacity(docs.len());
    let mut doc_len = Vec::with_capacity(docs.len());
    let mut postings: HashMap<String, Vec<Posting>> = HashMap::new();
    let mut total_len: u64 = 0;

    for (ord, (id, tokens)) in docs.into_iter().enumerate() {
        doc_ids.push(id.to_string());
        doc_len.push(tokens.len() as u32);
        total_len += tokens.len() as u64;

        let mut tf: BTreeMap<String, u32> = BTreeMap::new();
        for t in tokens {
            *tf.entry(t).or_insert(0) += 1;
        }
        for (term, count) in tf {
            postings.entry(term).or_default().push(Posting {
                doc: ord as u32,
                tf: count,
            });
        }
    }

    let avg_doc_length = if doc_ids.is_empty() {
        0.0
    } else {
        total_len as f64 / doc_ids.len() as f64
    };

    InvertedIndex {
        category: category.cloned(),
        doc_ids,
        doc_len,
        avg_doc_length,
        postings,
    }
}

impl InvertedIndex {
    pub fn doc_count(&self) -> usize {
        self.doc_ids.len()
    }

    pub fn term_count(&self) -> usize {
        self.postings.len()
    }

    pub fn avg_doc_length(&self) -> f64 {
        self.avg_doc_length
    }

    /// The category this index was restricted to, if any.
    pub fn category(&self) -> Option<&Category> {
        self.category.as_ref()
    }

    /// Number of documents containing `term`.
    pub fn document_frequency(&self, term: &str) -> usize {
        self.postings.get(term).map_or(0, Vec::len)
    }

    /// All indexed doc_ids, ascending. The position of an id is the internal
    /// ordinal used in hits and postings.
    pub fn doc_ids(&self) -> &[String] {
        &self.doc_ids
    }

    pub fn contains_doc(&self, doc_id: &str) -> bool {
        self.ord_of(doc_id).is_some()
    }

    fn ord_of(&self, doc_id: &str) -> Option<u32> {
        self.doc_ids
            .binary_search_by(|id| id.as_str().cmp(doc_id))
            .ok()
            .map(|i| i as u32)
    }

    fn idf(&self, df: usize) -> f64 {
        let n = self.doc_count() as f64;
        let df = df as f64;
        (1.0 + (n - df + 0.5) / (df + 0.5)).ln()
    }

    fn term_score(&self, tf: u32, len: u32, idf: f64, params: Bm25Params) -> f64 {
        let tf = f64::from(tf);
        let norm = 1.0 - params.b + params.b * f64::from(len) / self.avg_doc_length;
        idf * tf * (params.k1 + 1.0) / (tf + params.k1 * norm)
    }
}

/// Score one document against a query.
///
/// The score is the sum over query token occurrences of
/// `idf(t) · tf·(k1+1) / (tf + k1·(1 − b + b·len/avgdl))` with
/// `idf(t) = ln(1 + (N − df + 0.5)/(df + 0.5))`, which is never negative.
/// A repeated query term contributes once per occurrence; terms missing from
/// the document contribute 0.
pub fn bm25_score(
    index: &InvertedIndex,
    params: Bm25Params,
    query: &[String],
    doc_id: &str,
) -> Result<f64, EngineError> {
    params.validate()?;
    let ord = index
        .ord_of(doc_id)
        .ok_or_else(|| EngineError::UnknownDocId(doc_id.to_string()))?;

    let mut score = 0.0;
    for token in query {
        let Some(postings) = index.postings.get(token) else {
            continue;
        };
        let Ok(pos) = postings.binary_search_by(|p| p.doc.cmp(&ord)) else {
            continue;
        };
        let idf = index.idf(postings.len());
        score += index.term_score(postings[pos].tf, index.doc_len[ord as usize], idf, params);
    }
    Ok(score)
}

/// One retrieved document. `rank` is 1-based.
#[derive(Debug, Clone, PartialEq)]
pub struct SearchHit {
    pub rank: u32,
    pub doc_id: String,
    pub score: f64,
}

/// The ranked hits for one query occurrence in a batch run.
#[derive(Debug, Clone, PartialEq)]
pub struct RankedResult {
    /// 1-based position of the query occurrence in the batch.
    pub query_id: u64,
    pub hits: Vec<SearchHit>,
}

/// Retrieve the top `k` documents for a tokenized query.
///
/// Only documents with a strictly positive score are returned, ordered by
/// score descending with ties broken by doc_id ascending. An empty query or
/// a query matching nothing yields an empty hit list.
pub fn search(
    index: &InvertedIndex,
    params: Bm25Params,
    query: &[String],
    k: usize,
) -> Result<Vec<SearchHit>, EngineError> {
    params.validate()?;
    if k == 0 {
        return Err(EngineError::InvalidK);
    }
    let matched = search_ords(index, params, query);
    Ok(matched
        .into_iter()
        .take(k)
        .enumerate()
        .map(|(i, (ord, score))| SearchHit {
            rank: (i + 1) as u32,
            doc_id: index.doc_ids[ord as usize].clone(),
            score,
        })
        .collect())
}

/// All positive-score matches, fully ordered (score desc, ordinal asc).
fn search_ords(index: &InvertedIndex, params: Bm25Params, query: &[String]) -> Vec<(u32, f64)> {
    let mut scores = vec![0.0f64; index.doc_count()];
    let mut touched: Vec<u32> = Vec::new();
    for token in query {
        let Some(postings) = index.postings.get(token) else {
            continue;
        };
        let idf = index.idf(postings.len());
        for p in postings {
            let slot = &mut scores[p.doc as usize];
            if *slot == 0.0 {
                touched.push(p.doc);
            }
            *slot += index.term_score(p.tf, index.doc_len[p.doc as usize], idf, params);
        }
    }
    let mut matched: Vec<(u32, f64)> = touched
        .into_iter()
        .map(|ord| (ord, scores[ord as usize]))
        .filter(|&(_, s)| s > 0.0)
        .collect();
    matched.sort_unstable_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    matched
}

/// Run every query occurrence of a query set and return one result per
/// occurrence, in set order.
///
/// Entries are searched once and their result is repeated per occurrence, so
/// a query listed with multiplicity 3 yields 3 identical [`RankedResult`]s.
/// `workers` sets the degree of parallelism (0 = rayon's default); the output
/// is identical for every worker count.
pub fn batch_search(
    index: &InvertedIndex,
    analyzer: &Analyzer,
    params: Bm25Params,
    queries: &QuerySet,
    k: usize,
    workers: usize,
) -> Result<Vec<RankedResult>, EngineError> {
    params.validate()?;
    if k == 0 {
        return Err(EngineError::InvalidK);
    }

    let tokenized: Vec<Vec<String>> = queries
        .entries
        .iter()
        .map(|e| analyzer.analyze(&e.text))
        .collect();

    let run = || -> Vec<Vec<SearchHit>> {
        tokenized
            .par_iter()
            .map(|tokens| {
                search_ords(index, params, tokens)
                    .into_iter()
                    .take(k)
                    .enumerate()
                    .map(|(i, (ord, score))| SearchHit {
                        rank: (i + 1) as u32,
                        doc_id: index.doc_ids[ord as usize].clone(),
                        score,
                    })
                    .collect()
            })
            .collect()
    };

    let per_entry: Vec<Vec<SearchHit>> = if workers == 0 {
        run()
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build()
            .map_err(|e| EngineError::Pool {
                workers,
                message: e.to_string(),
            })?;
        pool.install(run)
    };

    let total: u64 = queries.entries.iter().map(|e| e.multiplicity).sum();
    let mut out = Vec::with_capacity(total as usize);
    let mut ordinal: u64 = 0;
    for (entry, hits) in queries.entries.iter().zip(per_entry) {
        for _ in 0..entry.multiplicity {
            ordinal += 1;
            out.push(RankedResult {
                query_id: ordinal,
                hits: hits.clone(),
            });
        }
    }
    Ok(out)
}

/// Stream batch results as TSV: `query_ordinal`, `rank`, `doc_id`, `score`
/// (score fixed to 6 decimal places).
pub fn write_results_tsv<W: Write>(results: &[RankedResult], mut w: W) -> std::io::Result<()> {
    writeln!(w, "query_ordinal\trank\tdoc_id\tscore")?;
    for r in results {
        for h in &r.hits {
            writeln!(w, "{}\t{}\t{}\t{:.6}", r.query_id, h.rank, h.doc_id, h.score)?;
        }
    }
    Ok(())
}

const INDEX_FORMAT: &str = "retaudit-index";
const INDEX_VERSION: u32 = 1;

/// On-disk form: a single self-describing JSON document whose leading fields
/// identify the format and version.
#[derive(Serialize, Deserialize)]
struct PersistedIndex {
    format: String,
    version: u32,
    category: Option<Category>,
    avg_doc_length: f64,
    doc_ids: Vec<String>,
    doc_len: Vec<u32>,
    postings: BTreeMap<String, Vec<(u32, u32)>>,
}

impl InvertedIndex {
    /// Serialize deterministically: the same index always produces the same
    /// bytes.
    pub fn save(&self, path: &Path) -> Result<(), EngineError> {
        let persisted = PersistedIndex {
            format: INDEX_FORMAT.to_string(),
            version: INDEX_VERSION,
            category: self.category.clone(),
            avg_doc_length: self.avg_doc_length,
            doc_ids: self.doc_ids.clone(),
            doc_len: self.doc_len.clone(),
            postings: self
                .postings
                .iter()
                .map(|(t, ps)| (t.clone(), ps.iter().map(|p| (p.doc, p.tf)).collect()))
                .collect(),
        };
        let mut json = serde_json::to_string(&persisted).expect("index serializes");
        json.push('\n');
        fs::write(path, json).map_err(|source| EngineError::Io {
            action: "write",
            path: path.to_path_buf(),
            source,
        })
    }

    pub fn load(path: &Path) -> Result<InvertedIndex, EngineError> {
        let contents = fs::read_to_string(path).map_err(|source| EngineError::Io {
            action: "read",
            path: path.to_path_buf(),
            source,
        })?;
        let persisted: PersistedIndex =
            serde_json::from_str(&contents).map_err(|e| EngineError::BadFormat {
                path: path.to_path_buf(),
                message: e.to_string(),
            })?;
        if persisted.format != INDEX_FORMAT {
            return Err(EngineError::BadFormat {
                path: path.to_path_buf(),
                message: format!("unexpected format tag \"{}\"", persisted.format),
            });
        }
        if persisted.version != INDEX_VERSION {
            return Err(EngineError::Version {
                found: persisted.version,
                supported: INDEX_VERSION,
            });
        }
        Ok(InvertedIndex {
            category: persisted.category,
            doc_ids: persisted.doc_ids,
            doc_len: persisted.doc_len,
            avg_doc_length: persisted.avg_doc_length,
            postings: persisted
                .postings
                .into_iter()
                .map(|(t, ps)| {
                    (
                        t,
                        ps.into_iter()
                            .map(|(doc, tf)| Posting { doc, tf })
                            .collect(),
                    )
                })
                .collect(),
        })
    }
}
