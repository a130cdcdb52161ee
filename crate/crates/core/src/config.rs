//! Run configuration: defaults, a flat key=value config file, and the
//! CLI-over-file-over-defaults precedence.
//!
//! Every setting can come from three places. The CLI builds a
//! [`ConfigOverlay`] from its flags, layers it over the overlay parsed from
//! `--config` (if given) with [`ConfigOverlay::or`], and resolves the stack
//! into a validated [`RunConfig`].

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::corpus::Category;
use crate::engine::Bm25Params;
use crate::inequality::PopulationMode;
use crate::querylog::WeightScheme;

/// Rank cutoffs swept by default, c = 10…50 in steps of 10 plus 100.
pub const DEFAULT_CUTOFFS: &[u32] = &[10, 20, 30, 40, 50, 100];
/// Default top-k sizes for the Jaccard overlap table.
pub const DEFAULT_JACCARD_K: &[usize] = &[1000, 5000, 10_000, 20_000, 50_000];
pub const DEFAULT_RBO_P: f64 = 0.9;
pub const DEFAULT_MIN_CF: u64 = 2;
pub const DEFAULT_MAX_QUERIES: usize = 1000;
pub const DEFAULT_ZIPF_S: f64 = 1.5;

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("failed to read config {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: expected key=value, got \"{text}\"")]
    Parse {
        path: PathBuf,
        line: usize,
        text: String,
    },
    #[error("{path}:{line}: unknown config key \"{key}\"")]
    UnknownKey {
        path: PathBuf,
        line: usize,
        key: String,
    },
    #[error("invalid {field}: {message}")]
    InvalidValue { field: &'static str, message: String },
    #[error("missing required setting: {0}")]
    Missing(&'static str),
}

/// Fully resolved, validated settings for one run.
#[derive(Debug, Clone, Serialize)]
pub struct RunConfig {
    pub corpus: PathBuf,
    pub log: Option<PathBuf>,
    /// Categories to audit; empty means every category present in the
    /// corpus.
    pub categories: Vec<Category>,
    /// Sorted ascending, deduplicated, all ≥ 1.
    pub cutoffs: Vec<u32>,
    pub bm25: Bm25Params,
    pub weights: WeightScheme,
    pub population: PopulationMode,
    pub rbo_p: f64,
    pub jaccard_k: Vec<usize>,
    pub out: PathBuf,
    pub seed: u64,
    /// Search parallelism; 0 lets the thread pool pick.
    #[serde(skip)]
    pub workers: usize,
    /// Minimum collection frequency for sampled query terms.
    pub min_cf: u64,
    /// Cap on sampled queries per category (split between unigrams and
    /// bigrams).
    pub max_queries: usize,
    /// Skew of the synthetic Zipf query log.
    pub zipf_s: f64,
    /// Occurrences to draw for the synthetic log; 0 means 10× the base set.
    pub zipf_events: u64,
    /// Also write wall-clock timings (kept out of the manifest so reruns
    /// stay byte-identical).
    #[serde(skip)]
    pub emit_timings: bool,
}

/// One layer of optional settings; `None` defers to the next layer down.
#[derive(Debug, Clone, Default)]
pub struct ConfigOverlay {
    pub corpus: Option<PathBuf>,
    pub log: Option<PathBuf>,
    pub categories: Option<Vec<String>>,
    pub cutoffs: Option<Vec<u32>>,
    pub k1: Option<f64>,
    pub b: Option<f64>,
    pub weights: Option<String>,
    pub population: Option<String>,
    pub rbo_p: Option<f64>,
    pub jaccard_k: Option<Vec<usize>>,
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub workers: Option<usize>,
    pub min_cf: Option<u64>,
    pub max_queries: Option<usize>,
    pub zipf_s: Option<f64>,
    pub zipf_events: Option<u64>,
    pub emit_timings: Option<bool>,
}

fn parse_scalar<T: std::str::FromStr>(
    field: &'static str,
    value: &str,
) -> Result<T, ConfigError>
where
    T::Err: std::fmt::Display,
{
    value.parse().map_err(|e| ConfigError::InvalidValue {
        field,
        message: format!("\"{value}\": {e}"),
    })
}

fn parse_list<T: std::str::FromStr>(
    field: &'static str,
    value: &str,
) -> Result<Vec<T>, ConfigError>
where
    T::Err: std::fmt::Display,
{
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| parse_scalar(field, s))
        .collect()
}

impl ConfigOverlay {
    /// Parse a flat `key=value` config file. `#` lines and blank lines are
    /// skipped; keys use the same kebab-case names as the CLI flags; a
    /// repeated key keeps its last value.
    pub fn from_file(path: &Path) -> Result<ConfigOverlay, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let mut overlay = ConfigOverlay::default();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(ConfigError::Parse {
                    path: path.to_path_buf(),
                    line: idx + 1,
                    text: raw.to_string(),
                });
            };
            let key = key.trim();
            let value = value.trim();
            match key {
                "corpus" => overlay.corpus = Some(PathBuf::from(value)),
                "log" => overlay.log = Some(PathBuf::from(value)),
                "categories" => {
                    overlay.categories = Some(
                        value
                            .split(',')
                            .map(str::trim)
                            .filter(|s| !s.is_empty())
                            .map(String::from)
                            .collect(),
                    )
                }
                "cutoffs" => overlay.cutoffs = Some(parse_list("cutoffs", value)?),
                "k1" => overlay.k1 = Some(parse_scalar("k1", value)?),
                "b" => overlay.b = Some(parse_scalar("b", value)?),
                "weights" => overlay.weights = Some(value.to_string()),
                "population" => overlay.population = Some(value.to_string()),
                "rbo-p" => overlay.rbo_p = Some(parse_scalar("rbo-p", value)?),
                "jaccard-k" => overlay.jaccard_k = Some(parse_list("jaccard-k", value)?),
                "out" => overlay.out = Some(PathBuf::from(value)),
                "seed" => overlay.seed = Some(parse_scalar("seed", value)?),
                "workers" => overlay.workers = Some(parse_scalar("workers", value)?),
                "min-cf" => overlay.min_cf = Some(parse_scalar("min-cf", value)?),
                "max-queries" => overlay.max_queries = Some(parse_scalar("max-queries", value)?),
                "zipf-s" => overlay.zipf_s = Some(parse_scalar("zipf-s", value)?),
                "zipf-events" => overlay.zipf_events = Some(parse_scalar("zipf-events", value)?),
                "emit-timings" => overlay.emit_timings = Some(parse_scalar("emit-timings", value)?),
                _ => {
                    return Err(ConfigError::UnknownKey {
                        path: path.to_path_buf(),
                        line: idx + 1,
                        key: key.to_string(),
                    })
                }
            }
        }
        Ok(overlay)
    }

    /// Layer `self` over `lower`: every setting present here wins.
    pub fn or(self, lower: ConfigOverlay) -> ConfigOverlay {
        ConfigOverlay {
            corpus: self.corpus.or(lower.corpus),
            log: self.log.or(lower.log),
            categories: self.categories.or(lower.categories),
            cutoffs: self.cutoffs.or(lower.cutoffs),
            k1: self.k1.or(lower.k1),
            b: self.b.or(lower.b),
            weights: self.weights.or(lower.weights),
            population: self.population.or(lower.population),
            rbo_p: self.rbo_p.or(lower.rbo_p),
            jaccard_k: self.jaccard_k.or(lower.jaccard_k),
            out: self.out.or(lower.out),
            seed: self.seed.or(lower.seed),
            workers: self.workers.or(lower.workers),
            min_cf: self.min_cf.or(lower.min_cf),
            max_queries: self.max_queries.or(lower.max_queries),
            zipf_s: self.zipf_s.or(lower.zipf_s),
            zipf_events: self.zipf_events.or(lower.zipf_events),
            emit_timings: self.emit_timings.or(lower.emit_timings),
        }
    }

    /// Fill unset values with defaults and validate everything.
    pub fn resolve(self) -> Result<RunConfig, ConfigError> {
        let corpus = self.corpus.ok_or(ConfigError::Missing("corpus path"))?;
        let out = self.out.ok_or(ConfigError::Missing("output directory"))?;

        let categories: Vec<Category> = self
            .categories
            .unwrap_or_default()
            .iter()
            .map(|s| {
                if s.is_empty() {
                    Err(ConfigError::InvalidValue {
                        field: "categories",
                        message: "empty category name".to_string(),
                    })
                } else {
                    Ok(Category::parse(s))
                }
            })
            .collect::<Result<_, _>>()?;

        let mut cutoffs = self.cutoffs.unwrap_or_else(|| DEFAULT_CUTOFFS.to_vec());
        cutoffs.sort_unstable();
        cutoffs.dedup();
        if cutoffs.is_empty() {
            return Err(ConfigError::InvalidValue {
                field: "cutoffs",
                message: "at least one cutoff is required".to_string(),
            });
        }
        if cutoffs[0] == 0 {
            return Err(ConfigError::InvalidValue {
                field: "cutoffs",
                message: "cutoffs must be >= 1".to_string(),
            });
        }

        let bm25 = Bm25Params::new(self.k1.unwrap_or(1.2), self.b.unwrap_or(0.75)).map_err(
            |e| ConfigError::InvalidValue {
                field: "k1/b",
                message: e.to_string(),
            },
        )?;

        let weights: WeightScheme = self
            .weights
            .as_deref()
            .unwrap_or("uniform")
            .parse()
            .map_err(|e: crate::querylog::LogError| ConfigError::InvalidValue {
                field: "weights",
                message: e.to_string(),
            })?;

        let population: PopulationMode = self
            .population
            .as_deref()
            .unwrap_or("all-docs")
            .parse()
            .map_err(|e: String| ConfigError::InvalidValue {
                field: "population",
                message: e,
            })?;

        let rbo_p = self.rbo_p.unwrap_or(DEFAULT_RBO_P);
        if !(rbo_p.is_finite() && 0.0 < rbo_p && rbo_p < 1.0) {
            return Err(ConfigError::InvalidValue {
                field: "rbo-p",
                message: format!("{rbo_p} is not strictly between 0 and 1"),
            });
        }

        let mut jaccard_k = self
            .jaccard_k
            .unwrap_or_else(|| DEFAULT_JACCARD_K.to_vec());
        jaccard_k.sort_unstable();
        jaccard_k.dedup();
        if jaccard_k.is_empty() || jaccard_k[0] == 0 {
            return Err(ConfigError::InvalidValue {
                field: "jaccard-k",
                message: "at least one k >= 1 is required".to_string(),
            });
        }

        let zipf_s = self.zipf_s.unwrap_or(DEFAULT_ZIPF_S);
        if !(zipf_s.is_finite() && zipf_s >= 0.0) {
            return Err(ConfigError::InvalidValue {
                field: "zipf-s",
                message: format!("{zipf_s} is not a finite value >= 0"),
            });
        }

        Ok(RunConfig {
            corpus,
            log: self.log,
            categories,
            cutoffs,
            bm25,
            weights,
            population,
            rbo_p,
            jaccard_k,
            out,
            seed: self.seed.unwrap_or(42),
            workers: self.workers.unwrap_or(0),
            min_cf: self.min_cf.unwrap_or(DEFAULT_MIN_CF),
            max_queries: self.max_queries.unwrap_or(DEFAULT_MAX_QUERIES),
            zipf_s,
            zipf_events: self.zipf_events.unwrap_or(0),
            emit_timings: self.emit_timings.unwrap_or(false),
        })
    }
}

impl RunConfig {
    /// The settings echoed into a bundle manifest, keyed by flag name.
    ///
    /// The output directory, worker count, and timing switch are
    /// deliberately absent: they do not influence any computed value, and
    /// echoing them would make otherwise-identical runs produce different
    /// manifests.
    pub fn manifest_echo(&self) -> BTreeMap<String, serde_json::Value> {
        use serde_json::{json, Value};
        let mut echo = BTreeMap::new();
        echo.insert("corpus".to_string(), json!(self.corpus));
        echo.insert(
            "log".to_string(),
            self.log.as_ref().map_or(Value::Null, |p| json!(p)),
        );
        echo.insert(
            "categories".to_string(),
            json!(self
                .categories
                .iter()
                .map(Category::as_str)
                .collect::<Vec<_>>()),
        );
        echo.insert("cutoffs".to_string(), json!(self.cutoffs));
        echo.insert("k1".to_string(), json!(self.bm25.k1));
        echo.insert("b".to_string(), json!(self.bm25.b));
        echo.insert("weights".to_string(), json!(self.weights.as_str()));
        echo.insert("population".to_string(), json!(self.population.as_str()));
        echo.insert("rbo-p".to_string(), json!(self.rbo_p));
        echo.insert("jaccard-k".to_string(), json!(self.jaccard_k));
        echo.insert("seed".to_string(), json!(self.seed));
        echo.insert("min-cf".to_string(), json!(self.min_cf));
        echo.insert("max-queries".to_string(), json!(self.max_queries));
        echo.insert("zipf-s".to_string(), json!(self.zipf_s));
        echo.insert("zipf-events".to_string(), json!(self.zipf_events));
        echo
    }
}
