//! Interaction-log parsing, query normalization, and query-set construction.
//!
//! A log is a sequence of timestamped search and export events, split per
//! record-type category. From the search events this module builds the two
//! query sets the audit runs on: `Q_r` keeps every occurrence (repeated
//! mode), `Q_u` keeps each distinct normalized text once (unique mode).
//! Export events feed the usefulness side of the audit. When no log exists,
//! query sets can be sampled from corpus statistics (unigrams/bigrams) and
//! expanded into a synthetic log with Zipf-distributed popularity.

use std::collections::{BTreeMap, HashMap};
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Zipf};
use serde::{Deserialize, Serialize};

use crate::analyze::Analyzer;
use crate::corpus::{Category, Corpus, CorpusStats};

#[derive(Debug, thiserror::Error)]
pub enum LogError {
    #[error("failed to read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path} is missing the log header line (expected \"{expected}\")")]
    MissingHeader { path: PathBuf, expected: String },
    #[error("unknown weight scheme \"{0}\" (expected \"uniform\" or \"popularity\")")]
    UnknownScheme(String),
    #[error("cannot synthesize a log from an empty base query set")]
    EmptyBase,
    #[error("Zipf exponent must be a finite value >= 0, got {0}")]
    InvalidZipfExponent(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LogKind {
    Search,
    Export,
}

/// One interaction event, as recorded by the system under audit.
///
/// Timestamps are carried as opaque strings: the audit never orders or
/// filters by time, so parsing them would only add failure modes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LogEntry {
    pub timestamp: String,
    pub kind: LogKind,
    pub category: Category,
    pub raw_query: String,
    pub target_doc_id: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LogFormat {
    Tsv,
    Jsonl,
}

impl LogFormat {
    /// Pick a format from the file extension; anything but `.jsonl`/`.json`
    /// is treated as TSV.
    pub fn from_path(path: &Path) -> LogFormat {
        match path.extension().and_then(|e| e.to_str()) {
            Some("jsonl") | Some("json") => LogFormat::Jsonl,
            _ => LogFormat::Tsv,
        }
    }
}

pub const LOG_TSV_HEADER: &str = "timestamp\tkind\tcategory\tquery\ttarget_doc_id";

/// Parsed log plus everything the run report needs to say about rejected
/// input.
#[derive(Debug, Default)]
pub struct ParsedLog {
    pub entries: Vec<LogEntry>,
    /// Rows that failed validation; counted, never fatal.
    pub invalid_rows: u64,
    /// Category strings outside the standard vocabulary, with row counts.
    /// Such rows are kept (the category is carried verbatim).
    pub unknown_categories: BTreeMap<String, u64>,
}

impl ParsedLog {
    pub fn search_count(&self) -> u64 {
        self.entries
            .iter()
            .filter(|e| e.kind == LogKind::Search)
            .count() as u64
    }

    pub fn export_count(&self) -> u64 {
        self.entries
            .iter()
            .filter(|e| e.kind == LogKind::Export)
            .count() as u64
    }
}

#[derive(Deserialize)]
struct RawLogRow {
    timestamp: String,
    kind: String,
    category: String,
    #[serde(default)]
    query: String,
    #[serde(default)]
    target_doc_id: Option<String>,
}

/// Parse a log file. Invalid rows (wrong field count, unknown kind, a search
/// without a query, an export without a target, malformed JSON) are counted
/// and skipped; only an unreadable file or a missing TSV header is fatal.
///
/// A search row must have an empty `target_doc_id` and an export row a
/// non-empty one — the field identifies exports, so a populated target on a
/// search row means the row was mislabeled and it is rejected rather than
/// guessed at.
pub fn parse_log(path: &Path, format: LogFormat) -> Result<ParsedLog, LogError> {
    let file = File::open(path).map_err(|source| LogError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let reader = BufReader::new(file);

    let mut log = ParsedLog::default();
    let mut saw_header = false;
    for line in reader.lines() {
        let line = line.map_err(|source| LogError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        if line.trim().is_empty() {
            continue;
        }
        if format == LogFormat::Tsv && !saw_header {
            if line != LOG_TSV_HEADER {
                return Err(LogError::MissingHeader {
                    path: path.to_path_buf(),
                    expected: LOG_TSV_HEADER.to_string(),
                });
            }
            saw_header = true;
            continue;
        }

        let raw = match format {
            LogFormat::Tsv => {
                let fields: Vec<&str> = line.split('\t').collect();
                if fields.len() != 5 {
                    log.invalid_rows += 1;
                    continue;
                }
                RawLogRow {
                    timestamp: fields[0].to_string(),
                    kind: fields[1].to_string(),
                    category: fields[2].to_string(),
                    query: fields[3].to_string(),
                    target_doc_id: if fields[4].is_empty() {
                        None
                    } else {
                        Some(fields[4].to_string())
                    },
                }
            }
            LogFormat::Jsonl => match serde_json::from_str::<RawLogRow>(&line) {
                Ok(raw) => raw,
                Err(_) => {
                    log.invalid_rows += 1;
                    continue;
                }
            },
        };

        let kind = match raw.kind.as_str() {
            "search" => LogKind::Search,
            "export" => LogKind::Export,
            _ => {
                log.invalid_rows += 1;
                continue;
            }
        };
        let target = raw.target_doc_id.filter(|t| !t.is_empty());
        let valid = match kind {
            LogKind::Search => !raw.query.trim().is_empty() && target.is_none(),
            LogKind::Export => target.is_some(),
        };
        if !valid {
            log.invalid_rows += 1;
            continue;
        }
        if raw.category.is_empty() {
            log.invalid_rows += 1;
            continue;
        }
        let category = Category::parse(&raw.category);
        if matches!(category, Category::Other(_)) {
            *log.unknown_categories.entry(raw.category).or_insert(0) += 1;
        }
        log.entries.push(LogEntry {
            timestamp: raw.timestamp,
            kind,
            category,
            raw_query: raw.query,
            target_doc_id: target,
        });
    }
    Ok(log)
}

/// Canonical query text: trimmed, lowercased, with internal whitespace runs
/// collapsed to single spaces. Idempotent.
pub fn normalize_query(raw: &str) -> String {
    raw.to_lowercase().split_whitespace().collect::<Vec<_>>().join(" ")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum QueryMode {
    /// Every occurrence kept (`Q_r`).
    Repeated,
    /// Each distinct normalized text once (`Q_u`).
    Unique,
}

impl QueryMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            QueryMode::Repeated => "repeated",
            QueryMode::Unique => "unique",
        }
    }
}

/// Where a query set came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Provenance {
    Log,
    SampledUnigram,
    SampledBigram,
    SyntheticZipf,
}

impl Provenance {
    pub fn as_str(&self) -> &'static str {
        match self {
            Provenance::Log => "log",
            Provenance::SampledUnigram => "sampled-unigram",
            Provenance::SampledBigram => "sampled-bigram",
            Provenance::SyntheticZipf => "synthetic-zipf",
        }
    }
}

/// One normalized query with its occurrence count and weight.
#[derive(Debug, Clone, PartialEq)]
pub struct QueryEntry {
    pub text: String,
    pub multiplicity: u64,
    pub weight: f64,
}

/// A set of queries for one category, either taken from a log or sampled.
///
/// In unique mode every multiplicity is 1 and texts are distinct; in repeated
/// mode the multiplicities sum to the raw search-event count the set was
/// built from. Entry order is first occurrence (log sets) or sampling rank
/// (synthetic sets), and weights are always positive.
#[derive(Debug, Clone, PartialEq)]
pub struct QuerySet {
    pub category: Category,
    pub mode: QueryMode,
    pub provenance: Provenance,
    pub entries: Vec<QueryEntry>,
}

impl QuerySet {
    /// Distinct entries.
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Total occurrences (Σ multiplicity).
    pub fn occurrence_count(&self) -> u64 {
        self.entries.iter().map(|e| e.multiplicity).sum()
    }
}

/// Build `(Q_r, Q_u)` from the search events of one category.
///
/// Queries are grouped by normalized text in first-occurrence order; both
/// sets get uniform weight 1.
pub fn build_query_sets(entries: &[LogEntry], category: &Category) -> (QuerySet, QuerySet) {
    let mut order: Vec<String> = Vec::new();
    let mut counts: HashMap<String, u64> = HashMap::new();
    for e in entries {
        if e.kind != LogKind::Search || &e.category != category {
            continue;
        }
        let text = normalize_query(&e.raw_query);
        match counts.entry(text) {
            std::collections::hash_map::Entry::Occupied(mut o) => *o.get_mut() += 1,
            std::collections::hash_map::Entry::Vacant(v) => {
                order.push(v.key().clone());
                v.insert(1);
            }
        }
    }
    let repeated: Vec<QueryEntry> = order
        .iter()
        .map(|text| QueryEntry {
            text: text.clone(),
            multiplicity: counts[text],
            weight: 1.0,
        })
        .collect();
    let unique: Vec<QueryEntry> = order
        .iter()
        .map(|text| QueryEntry {
            text: text.clone(),
            multiplicity: 1,
            weight: 1.0,
        })
        .collect();
    (
        QuerySet {
            category: category.clone(),
            mode: QueryMode::Repeated,
            provenance: Provenance::Log,
            entries: repeated,
        },
        QuerySet {
            category: category.clone(),
            mode: QueryMode::Unique,
            provenance: Provenance::Log,
            entries: unique,
        },
    )
}

/// How query weights `w_q` are assigned.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum WeightScheme {
    Uniform,
    Popularity,
}

impl WeightScheme {
    pub fn as_str(&self) -> &'static str {
        match self {
            WeightScheme::Uniform => "uniform",
            WeightScheme::Popularity => "popularity",
        }
    }
}

impl std::str::FromStr for WeightScheme {
    type Err = LogError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "uniform" => Ok(WeightScheme::Uniform),
            "popularity" => Ok(WeightScheme::Popularity),
            other => Err(LogError::UnknownScheme(other.to_string())),
        }
    }
}

/// Weight of one entry under a scheme: uniform → 1, popularity → the entry's
/// occurrence count.
///
/// Popularity weighting is meaningful on entries that carry real counts —
/// i.e. repeated-mode sets, or unique sets built by
/// [`popularity_weighted_unique`].
pub fn query_weight(entry: &QueryEntry, scheme: WeightScheme) -> f64 {
    match scheme {
        WeightScheme::Uniform => 1.0,
        WeightScheme::Popularity => entry.multiplicity as f64,
    }
}

/// Turn `Q_r` into a unique-mode set whose weights are the `Q_r`
/// multiplicities, so one weighted pass over it reproduces the repeated run's
/// retrievability totals exactly.
pub fn popularity_weighted_unique(q_r: &QuerySet) -> QuerySet {
    QuerySet {
        category: q_r.category.clone(),
        mode: QueryMode::Unique,
        provenance: q_r.provenance,
        entries: q_r
            .entries
            .iter()
            .map(|e| QueryEntry {
                text: e.text.clone(),
                multiplicity: 1,
                weight: e.multiplicity as f64,
            })
            .collect(),
    }
}

/// One export interaction: a document left the system for a user.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExportEvent {
    /// Normalized query text; empty when the export had no originating query.
    pub query: String,
    pub target_doc_id: String,
    pub category: Category,
}

/// All export events of one category, in log order, with queries normalized.
pub fn extract_exports(entries: &[LogEntry], category: &Category) -> Vec<ExportEvent> {
    entries
        .iter()
        .filter(|e| e.kind == LogKind::Export && &e.category == category)
        .map(|e| ExportEvent {
            query: normalize_query(&e.raw_query),
            target_doc_id: e
                .target_doc_id
                .clone()
                .expect("export entries carry a target"),
            category: category.clone(),
        })
        .collect()
}

fn ranked_terms(counts: impl IntoIterator<Item = (String, u64)>, min_cf: u64, max_n: usize) -> Vec<String> {
    let mut ranked: Vec<(String, u64)> = counts
        .into_iter()
        .filter(|&(_, cf)| cf >= min_cf)
        .collect();
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    ranked.truncate(max_n);
    ranked.into_iter().map(|(t, _)| t).collect()
}

fn unique_set(category: &Category, provenance: Provenance, texts: Vec<String>) -> QuerySet {
    QuerySet {
        category: category.clone(),
        mode: QueryMode::Unique,
        provenance,
        entries: texts
            .into_iter()
            .map(|text| QueryEntry {
                text,
                multiplicity: 1,
                weight: 1.0,
            })
            .collect(),
    }
}

/// Single-term queries: every term whose collection frequency is at least
/// `min_cf`, ordered by frequency descending (ties by term ascending),
/// truncated to the `max_n` most frequent. May be empty.
pub fn sample_unigram_queries(
    stats: &CorpusStats,
    category: &Category,
    min_cf: u64,
    max_n: usize,
) -> QuerySet {
    let texts = ranked_terms(
        stats
            .collection_frequency
            .iter()
            .map(|(t, &cf)| (t.clone(), cf)),
        min_cf,
        max_n,
    );
    unique_set(category, Provenance::SampledUnigram, texts)
}

/// Two-term queries from adjacent token pairs inside each document's token
/// stream, counted corpus-wide and filtered/sorted/truncated exactly like
/// unigram sampling. Each query is the pair joined by a space.
pub fn sample_bigram_queries(
    corpus: &Corpus,
    analyzer: &Analyzer,
    category: &Category,
    min_cf: u64,
    max_n: usize,
) -> QuerySet {
    let mut counts: BTreeMap<String, u64> = BTreeMap::new();
    for doc in corpus.documents() {
        if &doc.category != category {
            continue;
        }
        let tokens = analyzer.analyze(&doc.index_text());
        for pair in tokens.windows(2) {
            *counts.entry(format!("{} {}", pair[0], pair[1])).or_insert(0) += 1;
        }
    }
    let texts = ranked_terms(counts, min_cf, max_n);
    unique_set(category, Provenance::SampledBigram, texts)
}

/// Expand a base query set into `total` query occurrences whose popularity
/// follows a Zipf law: the probability of drawing the base entry at (1-based)
/// position `rank` is proportional to `rank^(-s)`. `s = 0` degenerates to a
/// uniform draw. Deterministic given `seed`; `total = 0` yields an empty
/// repeated set.
pub fn generate_zipf_log(
    base: &QuerySet,
    s: f64,
    total: u64,
    seed: u64,
) -> Result<QuerySet, LogError> {
    if base.is_empty() {
        return Err(LogError::EmptyBase);
    }
    if !s.is_finite() || s < 0.0 {
        return Err(LogError::InvalidZipfExponent(s));
    }
    let n = base.entries.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut counts = vec![0u64; n];
    if s == 0.0 {
        for _ in 0..total {
            counts[rng.random_range(0..n)] += 1;
        }
    } else {
        let dist = Zipf::new(n as f64, s).expect("n >= 1 and s > 0 are valid");
        for _ in 0..total {
            let rank: f64 = dist.sample(&mut rng);
            counts[rank as usize - 1] += 1;
        }
    }
    Ok(QuerySet {
        category: base.category.clone(),
        mode: QueryMode::Repeated,
        provenance: Provenance::SyntheticZipf,
        entries: base
            .entries
            .iter()
            .zip(&counts)
            .filter(|&(_, &c)| c > 0)
            .map(|(e, &c)| QueryEntry {
                text: e.text.clone(),
                multiplicity: c,
                weight: 1.0,
            })
            .collect(),
    })
}

/// Write a query set as TSV with `#`-prefixed provenance headers. `params`
/// adds extra `# key: value` lines (sampling thresholds, seed, skew).
pub fn write_queryset_tsv<W: Write>(
    qs: &QuerySet,
    params: &[(&str, String)],
    mut w: W,
) -> std::io::Result<()> {
    writeln!(w, "# provenance: {}", qs.provenance.as_str())?;
    writeln!(w, "# category: {}", qs.category)?;
    writeln!(w, "# mode: {}", qs.mode.as_str())?;
    for (key, value) in params {
        writeln!(w, "# {key}: {value}")?;
    }
    writeln!(w, "# queries: {}", qs.len())?;
    writeln!(w, "# occurrences: {}", qs.occurrence_count())?;
    writeln!(w, "query\tmultiplicity\tweight")?;
    for e in &qs.entries {
        writeln!(w, "{}\t{}\t{}", e.text, e.multiplicity, e.weight)?;
    }
    Ok(())
}
