//! Typed document collections: ingestion, record categories, and the
//! collection statistics that indexing and query sampling build on.
//!
//! A corpus is an ordered set of documents, each tagged with a record
//! category (publication, dataset, variable, or a custom type). Ingestion
//! reads JSONL or TSV, rejects structural problems loudly (malformed lines
//! and duplicate ids are errors naming the offending line), and tolerates
//! unknown category names by preserving them verbatim and counting them.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::analyze::Analyzer;

/// Record type of a document.
///
/// The three named categories get their own result lists and their own audit
/// rows, mirroring a search system with per-type result pages. Anything else
/// is preserved verbatim under [`Category::Other`] so foreign corpora are not
/// silently dropped.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Category {
    Publication,
    Dataset,
    Variable,
    Other(String),
}

impl Category {
    /// Map a category string to its enum value.
    ///
    /// Matching is exact and lowercase: `"publication"`, `"dataset"`,
    /// `"variable"`. Every other string (including case variants) becomes
    /// [`Category::Other`] carrying the original text.
    pub fn parse(s: &str) -> Category {
        match s {
            "publication" => Category::Publication,
            "dataset" => Category::Dataset,
            "variable" => Category::Variable,
            other => Category::Other(other.to_string()),
        }
    }

    /// Canonical string form, the inverse of [`Category::parse`].
    pub fn as_str(&self) -> &str {
        match self {
            Category::Publication => "publication",
            Category::Dataset => "dataset",
            Category::Variable => "variable",
            Category::Other(name) => name,
        }
    }

    /// Filesystem-safe form used in output file names: anything outside
    /// `[a-z0-9_-]` is replaced by `_`.
    pub fn slug(&self) -> String {
        self.as_str()
            .chars()
            .map(|c| {
                if c.is_ascii_lowercase() || c.is_ascii_digit() || c == '-' || c == '_' {
                    c
                } else {
                    '_'
                }
            })
            .collect()
    }
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl Serialize for Category {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(self.as_str())
    }
}

impl<'de> Deserialize<'de> for Category {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        if s.is_empty() {
            return Err(D::Error::custom("category must be non-empty"));
        }
        Ok(Category::parse(&s))
    }
}

/// One indexed record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Document {
    pub doc_id: String,
    pub category: Category,
    pub title: String,
    /// Abstract, description, or question text. May be empty.
    #[serde(default)]
    pub body: String,
    /// Extra flat string fields carried through ingestion. Not indexed.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub extra: BTreeMap<String, String>,
}

impl Document {
    /// The text that gets indexed: title and body joined by a single space.
    pub fn index_text(&self) -> String {
        let mut s = String::with_capacity(self.title.len() + self.body.len() + 1);
        s.push_str(&self.title);
        s.push(' ');
        s.push_str(&self.body);
        s
    }
}

/// Errors from corpus construction and ingestion.
#[derive(Debug, thiserror::Error)]
pub enum CorpusError {
    #[error("failed to read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: malformed record: {message}")]
    Malformed {
        path: PathBuf,
        line: usize,
        message: String,
    },
    #[error("duplicate doc_id \"{doc_id}\" (record {line})")]
    DuplicateId { doc_id: String, line: usize },
    #[error("{path}: missing or wrong header row (expected \"{expected}\")")]
    MissingHeader { path: PathBuf, expected: &'static str },
}

/// On-disk corpus encodings.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CorpusFormat {
    /// One JSON object per line: `{"id", "type", "title", "body"?, "extra"?}`.
    /// Unknown keys are ignored.
    Jsonl,
    /// Tab-separated with a required `id\ttype\ttitle\tbody` header row.
    Tsv,
}

impl CorpusFormat {
    /// Infer the format from a file extension (`.jsonl` / `.tsv`).
    pub fn from_path(path: &Path) -> Option<CorpusFormat> {
        match path.extension().and_then(|e| e.to_str()) {
            Some("jsonl") => Some(CorpusFormat::Jsonl),
            Some("tsv") => Some(CorpusFormat::Tsv),
            _ => None,
        }
    }
}

/// An immutable, ordered document collection with unique ids.
#[derive(Debug, Clone, Default)]
pub struct Corpus {
    documents: Vec<Document>,
    by_id: HashMap<String, usize>,
    category_counts: BTreeMap<Category, usize>,
}

impl Corpus {
    /// Build a corpus from documents, preserving their order.
    ///
    /// Fails on an empty `doc_id` or a duplicate, naming the offending
    /// record (1-based position).
    pub fn from_documents(documents: Vec<Document>) -> Result<Corpus, CorpusError> {
        let mut by_id = HashMap::with_capacity(documents.len());
        let mut category_counts = BTreeMap::new();
        for (i, doc) in documents.iter().enumerate() {
            if doc.doc_id.is_empty() {
                return Err(CorpusError::Malformed {
                    path: PathBuf::new(),
                    line: i + 1,
                    message: "empty doc_id".to_string(),
                });
            }
            if by_id.insert(doc.doc_id.clone(), i).is_some() {
                return Err(CorpusError::DuplicateId {
                    doc_id: doc.doc_id.clone(),
                    line: i + 1,
                });
            }
            *category_counts.entry(doc.category.clone()).or_insert(0) += 1;
        }
        Ok(Corpus {
            documents,
            by_id,
            category_counts,
        })
    }

    pub fn len(&self) -> usize {
        self.documents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.documents.is_empty()
    }

    pub fn documents(&self) -> &[Document] {
        &self.documents
    }

    pub fn get(&self, doc_id: &str) -> Option<&Document> {
        self.by_id.get(doc_id).map(|&i| &self.documents[i])
    }

    pub fn contains(&self, doc_id: &str) -> bool {
        self.by_id.contains_key(doc_id)
    }

    /// Document counts per category, in category order.
    pub fn category_counts(&self) -> &BTreeMap<Category, usize> {
        &self.category_counts
    }

    /// The categories present, in category order.
    pub fn categories(&self) -> impl Iterator<Item = &Category> {
        self.category_counts.keys()
    }

    /// A new corpus holding only the documents of `category`, in the
    /// original order.
    pub fn filter_category(&self, category: &Category) -> Corpus {
        let documents: Vec<Document> = self
            .documents
            .iter()
            .filter(|d| &d.category == category)
            .cloned()
            .collect();
        // Ids were unique in the parent, so this cannot fail.
        Corpus::from_documents(documents).expect("subset of a valid corpus is valid")
    }
}

/// Non-fatal observations from ingestion.
#[derive(Debug, Clone, Default)]
pub struct IngestReport {
    /// Category strings that did not match a named category, with how often
    /// each appeared. These documents were kept under [`Category::Other`].
    pub unknown_categories: BTreeMap<String, u64>,
}

impl IngestReport {
    fn note_category(&mut self, category: &Category) {
        if let Category::Other(name) = category {
            *self.unknown_categories.entry(name.clone()).or_insert(0) += 1;
        }
    }

    /// Total number of records whose category string was not recognized.
    pub fn unknown_category_records(&self) -> u64 {
        self.unknown_categories.values().sum()
    }
}

#[derive(Deserialize)]
struct RawDoc {
    id: String,
    #[serde(rename = "type")]
    ty: String,
    title: String,
    #[serde(default)]
    body: String,
    #[serde(default)]
    extra: BTreeMap<String, String>,
}

const TSV_HEADER: &str = "id\ttype\ttitle\tbody";

/// Read a corpus file.
///
/// Both formats are line-oriented. Whitespace-only lines are skipped. A
/// malformed line or a duplicate id aborts ingestion with an error naming
/// the line; an unrecognized category never does — the record is kept under
/// [`Category::Other`] and counted in the returned [`IngestReport`].
pub fn ingest_corpus(
    path: &Path,
    format: CorpusFormat,
) -> Result<(Corpus, IngestReport), CorpusError> {
    let file = File::open(path).map_err(|source| CorpusError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let reader = BufReader::new(file);

    let mut documents = Vec::new();
    let mut seen: HashMap<String, usize> = HashMap::new();
    let mut report = IngestReport::default();
    let mut header_checked = false;

    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line.map_err(|source| CorpusError::Io {
            path: path.to_path_buf(),
            source,
        })?;

        if format == CorpusFormat::Tsv && !header_checked {
            if line != TSV_HEADER {
                return Err(CorpusError::MissingHeader {
                    path: path.to_path_buf(),
                    expected: TSV_HEADER,
                });
            }
            header_checked = true;
            continue;
        }
        if line.trim().is_empty() {
            continue;
        }

        let (id, ty, title, body, extra) = match format {
            CorpusFormat::Jsonl => {
                let raw: RawDoc =
                    serde_json::from_str(&line).map_err(|e| CorpusError::Malformed {
                        path: path.to_path_buf(),
                        line: line_no,
                        message: e.to_string(),
                    })?;
                (raw.id, raw.ty, raw.title, raw.body, raw.extra)
            }
            CorpusFormat::Tsv => {
                let fields: Vec<&str> = line.split('\t').collect();
                if fields.len() != 4 {
                    return Err(CorpusError::Malformed {
                        path: path.to_path_buf(),
                        line: line_no,
                        message: format!("expected 4 tab-separated fields, got {}", fields.len()),
                    });
                }
                (
                    fields[0].to_string(),
                    fields[1].to_string(),
                    fields[2].to_string(),
                    fields[3].to_string(),
                    BTreeMap::new(),
                )
            }
        };

        if id.is_empty() {
            return Err(CorpusError::Malformed {
                path: path.to_path_buf(),
                line: line_no,
                message: "empty doc_id".to_string(),
            });
        }
        if ty.is_empty() {
            return Err(CorpusError::Malformed {
                path: path.to_path_buf(),
                line: line_no,
                message: "empty category".to_string(),
            });
        }
        if let Some(first) = seen.insert(id.clone(), line_no) {
            let _ = first;
            return Err(CorpusError::DuplicateId {
                doc_id: id,
                line: line_no,
            });
        }

        let category = Category::parse(&ty);
        report.note_category(&category);
        documents.push(Document {
            doc_id: id,
            category,
            title,
            body,
            extra,
        });
    }

    let corpus = Corpus::from_documents(documents)?;
    Ok((corpus, report))
}

/// Term and length statistics over a corpus.
#[derive(Debug, Clone, Default)]
pub struct CorpusStats {
    pub doc_count: usize,
    pub doc_count_by_category: BTreeMap<Category, usize>,
    /// term → total number of occurrences across all documents.
    pub collection_frequency: BTreeMap<String, u64>,
    /// term → number of documents containing the term at least once.
    pub document_frequency: BTreeMap<String, u64>,
    /// doc_id → token count of the indexed text.
    pub doc_length: HashMap<String, usize>,
    /// Mean token count over all documents (0 for an empty corpus).
    pub avg_doc_length: f64,
}

/// Compute [`CorpusStats`] from the indexed text (title + body) of every
/// document. Deterministic for a given corpus and analyzer.
pub fn corpus_stats(corpus: &Corpus, analyzer: &Analyzer) -> CorpusStats {
    let mut stats = CorpusStats {
        doc_count: corpus.len(),
        doc_count_by_category: corpus.category_counts().clone(),
        ..CorpusStats::default()
    };

    let mut total_len: u64 = 0;
    for doc in corpus.documents() {
        let tokens = analyzer.analyze(&doc.index_text());
        total_len += tokens.len() as u64;
        stats.doc_length.insert(doc.doc_id.clone(), tokens.len());

        let mut per_doc: BTreeMap<&str, u64> = BTreeMap::new();
        for t in &tokens {
            *per_doc.entry(t.as_str()).or_insert(0) += 1;
        }
        for (term, count) in per_doc {
            *stats
                .collection_frequency
                .entry(term.to_string())
                .or_insert(0) += count;
            *stats
                .document_frequency
                .entry(term.to_string())
                .or_insert(0) += 1;
        }
    }

    if !corpus.is_empty() {
        stats.avg_doc_length = total_len as f64 / corpus.len() as f64;
    }
    stats
}
